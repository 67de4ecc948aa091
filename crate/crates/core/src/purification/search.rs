//! Candidate pairs of purifications generated by two unitaries.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{equal_marginals, pure_preparation, state_from_kraus, PurificationInstance};
use crate::channels::default_systems;
use crate::error::{Error, Result};
use crate::higherorder::{sample_discard, EffectFamily, HigherOrderMap, HigherOrderType};
use crate::tensorcore::{derive_seed, eig_normal, rng_from_seed, C64};

/// Families in search order.
///
/// * `incoherent-control`: the first state prepares `(I ⊗ U₀)|χ⟩`; the second
///   measures the system input and prepares `(I ⊗ U_a)|χ⟩` on outcome `a`.
/// * `coherent-control`: the second state prepares `Σ √λ_k |k⟩ ⊗ U_k|e_k⟩`,
///   choosing the unitary coherently by the Schmidt index.
pub const FAMILIES: [&str; 2] = ["incoherent-control", "coherent-control"];

const MARGINAL_TOL: f64 = 1e-9;
const EFFECT_SAMPLES: usize = 12;

/// Cyclic shift `|k⟩ ↦ |k+1 mod d⟩`.
pub fn shift_unitary(d: usize) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |r, c| C64::new(((c + 1) % d == r) as u8 as f64, 0.0))
}

/// First certified instance for `U₀ = I`, `U₁ = shift`.
pub fn find_counterexample_instance(d: usize, seed: u64) -> Result<PurificationInstance> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!("purification search needs d ≥ 2, got {d}")));
    }
    find_instance(&DMatrix::identity(d, d), &shift_unitary(d), seed)
}

/// Schmidt weights `∝ 2^{-k}`, redrawn from `seed` when they make the
/// controlled state non-extremal.
fn schmidt_weights(delta: &[C64], attempt: u64, seed: u64) -> Vec<f64> {
    let d = delta.len();
    let raw: Vec<f64> = if attempt == 0 {
        (0..d).map(|k| 0.5f64.powi(k as i32)).collect()
    } else {
        let mut rng = rng_from_seed(derive_seed(seed, 0x5C, attempt));
        (0..d).map(|_| rng.random_range(0.1..1.0)).collect()
    };
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// `Σ_k √λ_k |k⟩ ⊗ U_{c(k)} |e_k⟩` with `c` picking the unitary per Schmidt index.
fn schmidt_vector(lambda: &[f64], basis: &DMatrix<C64>, pick: impl Fn(usize) -> DMatrix<C64>) -> Vec<C64> {
    let d = lambda.len();
    let mut v = DVector::<C64>::zeros(d * d);
    for k in 0..d {
        let e = pick(k) * basis.column(k);
        for j in 0..d {
            v[k * d + j] += e[j] * lambda[k].sqrt();
        }
    }
    v.as_slice().to_vec()
}

fn candidate(family: &str, u0: &DMatrix<C64>, u1: &DMatrix<C64>, lambda: &[f64], basis: &DMatrix<C64>) -> Result<(HigherOrderMap, HigherOrderMap)> {
    let d = u0.nrows();
    let typ = HigherOrderType::new(vec![d, d])?;
    let unitary = |a: usize| if a == 0 { u0.clone() } else { u1.clone() };
    let phi0 = schmidt_vector(lambda, basis, |_| u0.clone());
    let psi1 = pure_preparation(&phi0, &typ)?;
    let psi2 = match family {
        "incoherent-control" => {
            let phi1 = schmidt_vector(lambda, basis, |_| u1.clone());
            let q = d * d;
            let ops = (0..q)
                .map(|i| {
                    let phi = if i / d == 0 { &phi0 } else { &phi1 };
                    DMatrix::from_fn(q, q, |r, c| if c == i { phi[r] } else { C64::new(0.0, 0.0) })
                })
                .collect();
            let (ins, outs) = default_systems(typ.dims(), typ.dims())?;
            state_from_kraus(ops, ins, outs, &typ)?
        }
        "coherent-control" => pure_preparation(&schmidt_vector(lambda, basis, |k| unitary(k.min(1))), &typ)?,
        other => return Err(Error::Precondition(format!("unknown family {other}"))),
    };
    Ok((psi1, psi2))
}

/// Searches [`FAMILIES`] for the first pair that is deterministic, extremal,
/// non-signalling and has equal system marginals.
pub fn find_instance(u0: &DMatrix<C64>, u1: &DMatrix<C64>, seed: u64) -> Result<PurificationInstance> {
    let d = u0.nrows();
    let delta = u0.adjoint() * u1;
    let (eigs, basis) = eig_normal(&delta);
    let env = HigherOrderType::new(vec![d])?;
    let effects = (0..EFFECT_SAMPLES)
        .map(|i| sample_discard(&env, EffectFamily::ProcessMatrix, derive_seed(seed, 0xEF, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut tried = Vec::new();
    for family in FAMILIES {
        for attempt in 0..4 {
            let lambda = schmidt_weights(&eigs, attempt, seed);
            let label = format!("{family}#{attempt}");
            let outcome = candidate(family, u0, u1, &lambda, &basis).and_then(|(p1, p2)| {
                PurificationInstance::new(u0.clone(), u1.clone(), family, p1, p2, MARGINAL_TOL)
            });
            match outcome {
                Ok(inst) if equal_marginals(&inst, &effects)? < MARGINAL_TOL => return Ok(inst),
                Ok(_) => tried.push(format!("{label}: marginals differ")),
                Err(Error::Precondition(m)) if m.contains("global phase") => return Err(Error::Precondition(m)),
                Err(e) => tried.push(format!("{label}: {e}")),
            }
        }
    }
    Err(Error::SearchExhausted(tried))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::higherorder::is_nonsignalling;

    #[test]
    fn qubit_instance_is_certified() {
        let inst = find_counterexample_instance(2, 1).unwrap();
        assert_eq!(inst.family(), "incoherent-control");
        assert!(inst.phase_witness() < 1e-12);
        let g = inst.psi2().state_channel().unwrap();
        let parties = vec![("p0.b".to_string(), "p0.t".to_string()), ("p1.b".to_string(), "p1.t".to_string())];
        assert!(is_nonsignalling(&g, &parties, 1e-10).unwrap());
    }

    #[test]
    fn qutrit_instance_exists() {
        let inst = find_counterexample_instance(3, 2).unwrap();
        assert_eq!(inst.d(), 3);
    }

    #[test]
    fn phase_equal_unitaries_are_rejected() {
        let u = shift_unitary(2);
        let r = find_instance(&u, &(u.clone() * C64::from_polar(1.0, 0.7)), 0);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn search_is_reproducible() {
        let a = find_counterexample_instance(2, 9).unwrap();
        let b = find_counterexample_instance(2, 9).unwrap();
        assert_eq!(a, b);
        let back = PurificationInstance::from_json(&a.to_json(), 1e-9).unwrap();
        assert_eq!(back, a);
    }
}
