//! Search for a reversible comb on the environment mapping one purification
//! onto another, by conjugate gradient over the pre/post unitaries.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::{apply_reversible_comb, marginal_residuals, phase_overlap, PurificationInstance, ReversibleComb};
use crate::channels::kraus_from_choi;
use crate::error::{Error, Result};
use crate::higherorder::{sample_discard, EffectFamily, HigherOrderMap, HigherOrderType};
use crate::tensorcore::{derive_seed, expi_hermitian, haar_unitary, rng_from_seed, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConnectorOptions {
    /// Random starts per memory dimension.
    pub restarts: usize,
    /// Memory dimensions `1..=max_memory` are tried.
    pub max_memory: usize,
    pub max_iterations: usize,
    /// Descent stops once the residual falls below this.
    pub target: f64,
    /// Marginal equality required before searching.
    pub marginal_tol: f64,
}

impl Default for ConnectorOptions {
    fn default() -> Self {
        Self {
            restarts: 50,
            max_memory: 4,
            max_iterations: 3000,
            target: 1e-8,
            marginal_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConnectorReport {
    /// Smallest `‖r(ψ₁) − ψ₂‖_F` found.
    pub residual: f64,
    /// The same residual recomputed through the link product.
    pub link_residual: f64,
    pub best_memory: usize,
    pub runs: usize,
    /// `|Tr(U₀†U₁)|/d` when known.
    pub phase_witness: Option<f64>,
}

/// Kraus representation of the environment-only action, for fast evaluation.
struct Problem {
    ds: usize,
    de: usize,
    kraus: Vec<DMatrix<C64>>,
    target: DMatrix<C64>,
}

struct Eval {
    f: f64,
    grad_u: DMatrix<C64>,
    grad_v: DMatrix<C64>,
}

fn kron_identity_left(ds: usize, u: &DMatrix<C64>) -> DMatrix<C64> {
    DMatrix::<C64>::identity(ds, ds).kronecker(u)
}

/// `Tr_S` of an operator on `S ⊗ rest` with `dim S = ds`.
fn trace_first(x: &DMatrix<C64>, ds: usize) -> DMatrix<C64> {
    let k = x.nrows() / ds;
    DMatrix::from_fn(k, k, |a, b| (0..ds).map(|s| x[(s * k + a, s * k + b)]).sum())
}

impl Problem {
    fn new(psi1: &HigherOrderMap, psi2: &HigherOrderMap, ds: usize, de: usize) -> Result<Self> {
        let g1 = psi1.state_channel()?;
        let g2 = psi2.state_channel()?;
        let kraus = kraus_from_choi(&g1, 1e-12)?
            .operators()
            .iter()
            .map(|k| k.data().clone())
            .collect();
        Ok(Self {
            ds,
            de,
            kraus,
            target: g2.choi().data().clone(),
        })
    }

    /// Residual `‖J(r(ψ₁)) − J(ψ₂)‖²` and its Euclidean gradients,
    /// `df = 4 Re Tr(G† dU)` and likewise for `V`.
    fn eval(&self, u: &DMatrix<C64>, v: &DMatrix<C64>, with_grad: bool) -> Eval {
        let (ds, de) = (self.ds, self.de);
        let m = u.nrows() / de;
        let q = ds * de;
        let n = q * m;
        // (I ⊗ U) applied to |s, e, 0⟩
        let u_in = DMatrix::from_fn(n, q, |r, c| {
            let (s, rest) = (r / (de * m), r % (de * m));
            let (s2, e) = (c / de, c % de);
            if s == s2 { u[(rest, e * m)] } else { C64::new(0.0, 0.0) }
        });
        let v_full = kron_identity_left(ds, v);
        let id_m = DMatrix::<C64>::identity(m, m);
        let mut parts = Vec::with_capacity(self.kraus.len());
        let mut choi = DMatrix::<C64>::zeros(q * q, q * q);
        for k in &self.kraus {
            let a = k.kronecker(&id_m);
            let c = &a * &u_in;
            let l_full = &v_full * &c;
            for mm in 0..m {
                let l = DMatrix::from_fn(q, q, |r, col| l_full[(r * m + mm, col)]);
                let vec = DVector::from_column_slice(l.as_slice());
                choi += &vec * vec.adjoint();
            }
            parts.push((a, c, l_full));
        }
        let diff = &choi - &self.target;
        let f = diff.norm_squared();
        if !with_grad {
            return Eval {
                f,
                grad_u: DMatrix::zeros(0, 0),
                grad_v: DMatrix::zeros(0, 0),
            };
        }
        let k = de * m;
        let mut gu = DMatrix::<C64>::zeros(k, k);
        let mut gv = DMatrix::<C64>::zeros(k, k);
        for (a, c, l_full) in &parts {
            let mut r_full = DMatrix::<C64>::zeros(n, q);
            for mm in 0..m {
                let l = DMatrix::from_fn(q, q, |r, col| l_full[(r * m + mm, col)]);
                let rv = &diff * DVector::from_column_slice(l.as_slice());
                let rmat = DMatrix::from_column_slice(q, q, rv.as_slice());
                for r in 0..q {
                    for col in 0..q {
                        r_full[(r * m + mm, col)] = rmat[(r, col)];
                    }
                }
            }
            let r_adj = r_full.adjoint();
            // embed |s e⟩ ↦ |s e 0⟩ on the left of R†
            let mut e0_r = DMatrix::<C64>::zeros(n, n);
            for r in 0..q {
                for col in 0..n {
                    e0_r[(r * m, col)] = r_adj[(r, col)];
                }
            }
            gu += trace_first(&(e0_r * &v_full * a), ds);
            gv += trace_first(&(c * &r_adj), ds);
        }
        Eval {
            f,
            grad_u: gu.adjoint(),
            grad_v: gv.adjoint(),
        }
    }
}

/// Skew-Hermitian `S` with `f(exp(−ηS) U)` decreasing for small `η`.
fn skew_gradient(u: &DMatrix<C64>, grad: &DMatrix<C64>) -> DMatrix<C64> {
    let z = u * grad.adjoint();
    (z.adjoint() - &z) * C64::new(0.5, 0.0)
}

/// `exp(η D) U` for skew-Hermitian `D`.
fn step(u: &DMatrix<C64>, d: &DMatrix<C64>, eta: f64) -> DMatrix<C64> {
    // D = iH with H Hermitian
    expi_hermitian(&(d * C64::new(0.0, -eta))) * u
}

fn inner(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Polak-Ribière conjugate gradient in the Lie algebra, where directions at
/// different points are directly comparable, with adaptive backtracking.
fn descend(p: &Problem, mut u: DMatrix<C64>, mut v: DMatrix<C64>, opts: &ConnectorOptions) -> (f64, DMatrix<C64>, DMatrix<C64>) {
    let goal = opts.target * opts.target;
    let mut e = p.eval(&u, &v, true);
    let mut g = (skew_gradient(&u, &e.grad_u), skew_gradient(&v, &e.grad_v));
    let mut dir = (-&g.0, -&g.1);
    let mut eta = 0.05;
    let mut checkpoint = e.f;
    for it in 1..=opts.max_iterations {
        if e.f <= goal {
            break;
        }
        if inner(&dir.0, &g.0) + inner(&dir.1, &g.1) >= 0.0 {
            dir = (-&g.0, -&g.1);
        }
        let mut accepted = false;
        for _ in 0..40 {
            let (u2, v2) = (step(&u, &dir.0, eta), step(&v, &dir.1, eta));
            if p.eval(&u2, &v2, false).f < e.f {
                u = u2;
                v = v2;
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            break;
        }
        eta *= 1.5;
        e = p.eval(&u, &v, true);
        let g_new = (skew_gradient(&u, &e.grad_u), skew_gradient(&v, &e.grad_v));
        let denom = inner(&g.0, &g.0) + inner(&g.1, &g.1);
        let num = inner(&g_new.0, &(&g_new.0 - &g.0)) + inner(&g_new.1, &(&g_new.1 - &g.1));
        let gamma = if denom > 0.0 { (num / denom).max(0.0) } else { 0.0 };
        dir = (-&g_new.0 + &dir.0 * C64::new(gamma, 0.0), -&g_new.1 + &dir.1 * C64::new(gamma, 0.0));
        g = g_new;
        // stop on stagnation
        if it % 200 == 0 {
            if checkpoint - e.f < 1e-4 * checkpoint && e.f > 1e-6 {
                break;
            }
            checkpoint = e.f;
        }
    }
    (e.f.max(0.0).sqrt(), u, v)
}

/// Smallest distance from `ψ₂` to `r(ψ₁)` over reversible combs `r` on the
/// last pair (the environment) of states on `[system, environment]`.
/// Does not check marginals.
pub fn connector_residual_states(
    psi1: &HigherOrderMap,
    psi2: &HigherOrderMap,
    opts: &ConnectorOptions,
    seed: u64,
) -> Result<ConnectorReport> {
    let typ = psi1.target();
    if !psi1.is_state() || psi2.target() != typ || typ.len() != 2 {
        return Err(Error::TypeMismatch("connector search needs two states on [system, environment]".into()));
    }
    if opts.restarts == 0 || opts.max_memory == 0 {
        return Err(Error::Precondition("at least one restart and memory dimension".into()));
    }
    let (ds, de) = (typ.dims()[0], typ.dims()[1]);
    let problem = Problem::new(psi1, psi2, ds, de)?;
    let jobs: Vec<(usize, usize)> = (1..=opts.max_memory)
        .flat_map(|m| (0..opts.restarts).map(move |r| (m, r)))
        .collect();
    let results: Vec<(f64, usize, DMatrix<C64>, DMatrix<C64>)> = jobs
        .par_iter()
        .map(|&(m, r)| {
            let mut rng = rng_from_seed(derive_seed(seed, m as u64, r as u64));
            let u = haar_unitary(&mut rng, de * m);
            let v = haar_unitary(&mut rng, de * m);
            let (res, u, v) = descend(&problem, u, v, opts);
            (res, m, u, v)
        })
        .collect();
    // first minimum in job order, independent of scheduling
    let (residual, best_memory, u, v) = results
        .into_iter()
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .expect("at least one job");
    let env = HigherOrderType::new(vec![de])?;
    let comb = ReversibleComb::new(u, v, env, best_memory, 1e-8)?;
    let link_residual = apply_reversible_comb(&comb, psi1, &[1])?.distance(psi2)?;
    Ok(ConnectorReport {
        residual,
        link_residual,
        best_memory,
        runs: jobs.len(),
        phase_witness: None,
    })
}

/// [`connector_residual_states`] on an instance, after confirming equal marginals.
pub fn connector_residual(inst: &PurificationInstance, opts: &ConnectorOptions, seed: u64) -> Result<ConnectorReport> {
    let env = HigherOrderType::new(vec![inst.d()])?;
    let effects = (0..8)
        .map(|i| sample_discard(&env, EffectFamily::ProcessMatrix, derive_seed(seed, 0xA7, i)))
        .collect::<Result<Vec<_>>>()?;
    let (gap, dep) = marginal_residuals(inst.psi1(), inst.psi2(), &effects)?;
    if gap.max(dep) > opts.marginal_tol {
        return Err(Error::Precondition(format!("marginals differ by {gap:.3e}")));
    }
    let mut report = connector_residual_states(inst.psi1(), inst.psi2(), opts, seed)?;
    report.phase_witness = Some(phase_overlap(inst.u0().data(), inst.u1().data()));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::purification::{find_counterexample_instance, pure_preparation, shift_unitary};
    use crate::tensorcore::haar_state;

    fn pair(d: usize) -> HigherOrderType {
        HigherOrderType::new(vec![d, d]).unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let typ = pair(2);
        let psi1 = pure_preparation(&haar_state(&mut rng_from_seed(1), 4), &typ).unwrap();
        let psi2 = crate::higherorder::random_nonsignalling_state(&typ, 2).unwrap();
        let p = Problem::new(&psi1, &psi2, 2, 2).unwrap();
        let mut rng = rng_from_seed(3);
        let (u, v) = (haar_unitary(&mut rng, 4), haar_unitary(&mut rng, 4));
        let e = p.eval(&u, &v, true);
        let h = 1e-6;
        for (i, j) in [(0, 0), (1, 3), (2, 1)] {
            for dir in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
                let mut du = DMatrix::<C64>::zeros(4, 4);
                du[(i, j)] = dir;
                let fp = p.eval(&(&u + &du * C64::new(h, 0.0)), &v, false).f;
                let fm = p.eval(&(&u - &du * C64::new(h, 0.0)), &v, false).f;
                let numeric = (fp - fm) / (2.0 * h);
                let analytic = 4.0 * (e.grad_u.adjoint() * &du).trace().re;
                assert!((numeric - analytic).abs() < 1e-6 * (1.0 + numeric.abs()), "U {numeric} {analytic}");
                let fp = p.eval(&u, &(&v + &du * C64::new(h, 0.0)), false).f;
                let fm = p.eval(&u, &(&v - &du * C64::new(h, 0.0)), false).f;
                let numeric = (fp - fm) / (2.0 * h);
                let analytic = 4.0 * (e.grad_v.adjoint() * &du).trace().re;
                assert!((numeric - analytic).abs() < 1e-6 * (1.0 + numeric.abs()), "V {numeric} {analytic}");
            }
        }
    }

    #[test]
    fn fast_path_agrees_with_link_product() {
        let typ = pair(2);
        let psi1 = pure_preparation(&haar_state(&mut rng_from_seed(4), 4), &typ).unwrap();
        let env = HigherOrderType::new(vec![2]).unwrap();
        let r = ReversibleComb::random(&env, 3, 5).unwrap();
        let psi2 = apply_reversible_comb(&r, &psi1, &[1]).unwrap();
        let p = Problem::new(&psi1, &psi2, 2, 2).unwrap();
        let e = p.eval(r.pre().data(), r.post().data(), false);
        assert!(e.f < 1e-24);
    }

    #[test]
    fn planted_connector_is_found() {
        let typ = pair(2);
        let psi1 = pure_preparation(&haar_state(&mut rng_from_seed(6), 4), &typ).unwrap();
        let env = HigherOrderType::new(vec![2]).unwrap();
        let r = ReversibleComb::random(&env, 2, 7).unwrap();
        let psi2 = apply_reversible_comb(&r, &psi1, &[1]).unwrap();
        let opts = ConnectorOptions { restarts: 4, max_memory: 2, ..Default::default() };
        let rep = connector_residual_states(&psi1, &psi2, &opts, 8).unwrap();
        assert!(rep.residual < 1e-6, "{rep:?}");
        assert!((rep.link_residual - rep.residual).abs() < 1e-8);
    }

    #[test]
    fn counterexample_is_not_connected() {
        let inst = find_counterexample_instance(2, 1).unwrap();
        let opts = ConnectorOptions { restarts: 3, max_memory: 2, ..Default::default() };
        let rep = connector_residual(&inst, &opts, 2).unwrap();
        assert!(rep.residual > 1e-2, "{rep:?}");
        assert_eq!(rep.phase_witness, Some(0.0));
    }

    #[test]
    fn phase_equal_pair_is_connected() {
        // same construction with U₁ = e^{iθ} U₀ gives identical states
        let d = 2;
        let typ = pair(d);
        let u0 = shift_unitary(d);
        let v = DVector::from_vec(vec![C64::new(0.8f64.sqrt(), 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.2f64.sqrt(), 0.0)]);
        let phi0 = DMatrix::<C64>::identity(d, d).kronecker(&u0) * &v;
        let phi1 = DMatrix::<C64>::identity(d, d).kronecker(&(u0 * C64::from_polar(1.0, 0.4))) * &v;
        let p1 = pure_preparation(phi0.as_slice(), &typ).unwrap();
        let p2 = pure_preparation(phi1.as_slice(), &typ).unwrap();
        let opts = ConnectorOptions { restarts: 2, max_memory: 1, ..Default::default() };
        let rep = connector_residual_states(&p1, &p2, &opts, 1).unwrap();
        assert!(rep.residual < 1e-6, "{rep:?}");
    }
}
