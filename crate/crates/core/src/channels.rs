//! First-order quantum theory in Choi form.
//!
//! Choi convention: `J(f) = Σ_ij |i⟩⟨j| ⊗ f(|i⟩⟨j|)`, input factor first and
//! unnormalised, so a CPTP map has `Tr_out J = I_in` and `tr J = d_in`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensorcore::{
    eigh, haar_unitary, singular_values, link_product, rng_from_seed, ComplexMatrix, MatrixJson, WireSystem, C64,
    ONE, ZERO,
};

#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    choi: ComplexMatrix,
    in_sys: WireSystem,
    out_sys: WireSystem,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    operators: Vec<ComplexMatrix>,
    in_sys: WireSystem,
    out_sys: WireSystem,
}

/// Input wires `i0, i1, ..` and output wires `o0, o1, ..`.
pub fn default_systems(in_dims: &[usize], out_dims: &[usize]) -> Result<(WireSystem, WireSystem)> {
    Ok((
        WireSystem::numbered("i", in_dims)?,
        WireSystem::numbered("o", out_dims)?,
    ))
}

impl Channel {
    /// Wraps a Choi matrix whose system is `in_sys ++ out_sys` (any factor order).
    pub fn from_choi(choi: ComplexMatrix, in_sys: WireSystem, out_sys: WireSystem) -> Result<Self> {
        let full = in_sys.concat(&out_sys)?;
        let choi = if choi.system() == &full {
            choi
        } else {
            choi.permute_systems(full.labels())?
        };
        if choi.system() != &full {
            return Err(Error::TypeMismatch("Choi wires differ from in/out systems".into()));
        }
        Ok(Self {
            choi,
            in_sys,
            out_sys,
        })
    }

    /// Wraps raw Choi data laid out as `in_sys ⊗ out_sys`.
    pub fn from_choi_data(data: DMatrix<C64>, in_sys: WireSystem, out_sys: WireSystem) -> Result<Self> {
        let full = in_sys.concat(&out_sys)?;
        Self::from_choi(ComplexMatrix::square(data, full)?, in_sys, out_sys)
    }

    pub fn identity(in_sys: WireSystem, out_sys: WireSystem) -> Result<Self> {
        if in_sys.dims() != out_sys.dims() {
            return Err(Error::ShapeMismatch("identity needs equal in/out dims".into()));
        }
        let d = in_sys.dim();
        let k = ComplexMatrix::new(DMatrix::identity(d, d), out_sys.clone(), in_sys.clone())?;
        choi_from_kraus(&KrausSet::new(vec![k], in_sys, out_sys)?)
    }

    /// Identity channel on a single wire of dimension `d` with default labels.
    pub fn identity_dim(d: usize) -> Result<Self> {
        let (i, o) = default_systems(&[d], &[d])?;
        Self::identity(i, o)
    }

    /// Discards the input and prepares `sigma` (given as data on the output system).
    pub fn discard_prepare(in_sys: WireSystem, out_sys: WireSystem, sigma: &DMatrix<C64>) -> Result<Self> {
        if sigma.nrows() != out_sys.dim() {
            return Err(Error::ShapeMismatch("prepared state".into()));
        }
        let din = in_sys.dim();
        let data = DMatrix::<C64>::identity(din, din).kronecker(sigma);
        Self::from_choi_data(data, in_sys, out_sys)
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn in_sys(&self) -> &WireSystem {
        &self.in_sys
    }

    pub fn out_sys(&self) -> &WireSystem {
        &self.out_sys
    }

    pub fn in_dim(&self) -> usize {
        self.in_sys.dim()
    }

    pub fn out_dim(&self) -> usize {
        self.out_sys.dim()
    }

    /// Same data with new wire labels.
    pub fn relabeled(&self, in_sys: WireSystem, out_sys: WireSystem) -> Result<Self> {
        if in_sys.dims() != self.in_sys.dims() || out_sys.dims() != self.out_sys.dims() {
            return Err(Error::ShapeMismatch("relabel changes dims".into()));
        }
        Self::from_choi_data(self.choi.data().clone(), in_sys, out_sys)
    }

    /// Frobenius distance between Choi matrices (positional).
    pub fn distance(&self, other: &Channel) -> Result<f64> {
        self.choi.frobenius_distance(&other.choi)
    }

    /// `‖Tr_out J − I_in‖_F`.
    pub fn trace_preservation_defect(&self) -> f64 {
        let reduced = self
            .choi
            .partial_trace(self.out_sys.labels())
            .expect("output labels are on the Choi");
        let d = self.in_dim();
        (reduced.data() - DMatrix::<C64>::identity(d, d)).norm()
    }

    /// `next ∘ self`; wires matched positionally.
    pub fn then(&self, next: &Channel) -> Result<Channel> {
        if self.out_sys.dims() != next.in_sys.dims() {
            return Err(Error::ShapeMismatch("composition wires".into()));
        }
        let mid: Vec<String> = (0..self.out_sys.len()).map(|k| format!("__mid{k}")).collect();
        let a_in: Vec<String> = self.in_sys.labels().iter().map(|l| format!("__a.{l}")).collect();
        let b_out: Vec<String> = next.out_sys.labels().iter().map(|l| format!("__b.{l}")).collect();
        let a = self.choi.relabel(&[a_in.clone(), mid.clone()].concat())?;
        let b = next.choi.relabel(&[mid.clone(), b_out.clone()].concat())?;
        let linked = link_product(&a, &b, &mid)?;
        Self::from_choi_data(linked.into_data(), self.in_sys.clone(), next.out_sys.clone())
    }

    /// Parallel composition; the label sets must be disjoint.
    pub fn tensor(&self, other: &Channel) -> Result<Channel> {
        let in_sys = self.in_sys.concat(&other.in_sys)?;
        let out_sys = self.out_sys.concat(&other.out_sys)?;
        let prod = self.choi.tensor_product(&other.choi)?;
        Self::from_choi(prod, in_sys, out_sys)
    }

    /// Affine combination Σ wᵢ fᵢ; all terms must share wires.
    pub fn combination(terms: &[(f64, &Channel)]) -> Result<Channel> {
        let (_, first) = terms.first().ok_or(Error::Precondition("empty combination".into()))?;
        let mut acc = DMatrix::<C64>::zeros(first.choi.dim(), first.choi.dim());
        for (w, c) in terms {
            if c.choi.system() != first.choi.system() {
                return Err(Error::TypeMismatch("combination of channels on different wires".into()));
            }
            acc += c.choi.data() * C64::new(*w, 0.0);
        }
        Self::from_choi_data(acc, first.in_sys.clone(), first.out_sys.clone())
    }

    pub fn to_json(&self) -> ChannelJson {
        ChannelJson {
            r#in: self.in_sys.clone(),
            out: self.out_sys.clone(),
            choi: self.choi.to_json(),
        }
    }

    pub fn from_json(j: &ChannelJson) -> Result<Self> {
        Self::from_choi(ComplexMatrix::from_json(&j.choi)?, j.r#in.clone(), j.out.clone())
    }
}

/// `{in: WireSystem, out: WireSystem, choi: matrix JSON}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelJson {
    pub r#in: WireSystem,
    pub out: WireSystem,
    pub choi: MatrixJson,
}

impl KrausSet {
    pub fn new(operators: Vec<ComplexMatrix>, in_sys: WireSystem, out_sys: WireSystem) -> Result<Self> {
        for k in &operators {
            if k.data().nrows() != out_sys.dim() || k.data().ncols() != in_sys.dim() {
                return Err(Error::ShapeMismatch(format!(
                    "Kraus operator {}x{} for a {}→{} map",
                    k.data().nrows(),
                    k.data().ncols(),
                    in_sys.dim(),
                    out_sys.dim()
                )));
            }
        }
        Ok(Self {
            operators,
            in_sys,
            out_sys,
        })
    }

    /// Builds a Kraus set from raw `out × in` matrices.
    pub fn from_data(ops: Vec<DMatrix<C64>>, in_sys: WireSystem, out_sys: WireSystem) -> Result<Self> {
        let operators = ops
            .into_iter()
            .map(|k| ComplexMatrix::new(k, out_sys.clone(), in_sys.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(operators, in_sys, out_sys)
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn in_sys(&self) -> &WireSystem {
        &self.in_sys
    }

    pub fn out_sys(&self) -> &WireSystem {
        &self.out_sys
    }

    /// `‖Σ Kᵢ†Kᵢ − I‖_F`.
    pub fn completeness_defect(&self) -> f64 {
        let d = self.in_sys.dim();
        let mut acc = DMatrix::<C64>::zeros(d, d);
        for k in &self.operators {
            acc += k.data().adjoint() * k.data();
        }
        (acc - DMatrix::identity(d, d)).norm()
    }
}

/// `J = Σ_k |K_k⟫⟪K_k|` with `|K⟫ = Σ_i |i⟩ ⊗ K|i⟩`.
pub fn choi_from_kraus(k: &KrausSet) -> Result<Channel> {
    let (din, dout) = (k.in_sys.dim(), k.out_sys.dim());
    let n = din * dout;
    let mut acc = DMatrix::<C64>::zeros(n, n);
    for op in &k.operators {
        let m = op.data();
        let v = nalgebra::DVector::from_fn(n, |r, _| m[(r % dout, r / dout)]);
        acc += &v * v.adjoint();
    }
    Channel::from_choi_data(acc, k.in_sys.clone(), k.out_sys.clone())
}

/// Minimal Kraus set from the eigendecomposition of the Choi matrix;
/// eigenvalues at or below `tol` are discarded.
pub fn kraus_from_choi(c: &Channel, tol: f64) -> Result<KrausSet> {
    let (vals, vecs) = eigh(c.choi.data());
    let min = vals.first().copied().unwrap_or(0.0);
    if min < -tol || c.choi.hermiticity_defect() > tol {
        return Err(Error::NotPsd(min));
    }
    let (din, dout) = (c.in_dim(), c.out_dim());
    let ops = vals
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, &l)| l > tol)
        .map(|(idx, &l)| {
            let s = l.sqrt();
            DMatrix::from_fn(dout, din, |a, i| vecs[(i * dout + a, idx)] * s)
        })
        .collect();
    KrausSet::from_data(ops, c.in_sys.clone(), c.out_sys.clone())
}

pub fn is_cptp(c: &Channel, tol: f64) -> bool {
    c.choi.is_psd(tol) && c.trace_preservation_defect() <= tol
}

/// `f(ρ) = Tr_in[(ρᵀ ⊗ I) J]`.
pub fn apply_channel(c: &Channel, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let out = apply_channel_data(c, rho.data())?;
    ComplexMatrix::square(out, c.out_sys.clone())
}

pub(crate) fn apply_channel_data(c: &Channel, rho: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let (din, dout) = (c.in_dim(), c.out_dim());
    if rho.nrows() != din || rho.ncols() != din {
        return Err(Error::ShapeMismatch(format!(
            "state of dimension {} for channel input {din}",
            rho.nrows()
        )));
    }
    let j = c.choi.data();
    Ok(DMatrix::from_fn(dout, dout, |a, b| {
        let mut s = ZERO;
        for i in 0..din {
            for k in 0..din {
                s += rho[(k, i)] * j[(k * dout + a, i * dout + b)];
            }
        }
        s
    }))
}

/// ρ ↦ tr(ρ)·I/d.
pub fn depolarizing_channel(d: usize) -> Result<Channel> {
    if d < 1 {
        return Err(Error::InvalidDimension(format!("depolarizing dimension {d}")));
    }
    let (i, o) = default_systems(&[d], &[d])?;
    let sigma = DMatrix::<C64>::identity(d, d) / C64::new(d as f64, 0.0);
    Channel::discard_prepare(i, o, &sigma)
}

/// ρ ↦ UρU†.
pub fn unitary_channel(u: &ComplexMatrix) -> Result<Channel> {
    let defect = u.unitarity_defect();
    if defect > 1e-9 {
        return Err(Error::NotUnitary(defect));
    }
    let d = u.data().nrows();
    let (i, o) = default_systems(&[d], &[d])?;
    let k = KrausSet::from_data(vec![u.data().clone()], i, o)?;
    choi_from_kraus(&k)
}

/// Choi's criterion: `{Kᵢ†Kⱼ}` linearly independent (all m² singular values above `tol`).
pub fn is_extremal_kraus(k: &KrausSet, tol: f64) -> Result<bool> {
    if k.is_empty() {
        return Err(Error::EmptyKraus);
    }
    let m = k.len();
    let din = k.in_sys.dim();
    if m * m > din * din {
        return Ok(false);
    }
    let mut cols = Vec::with_capacity(m * m);
    for a in &k.operators {
        for b in &k.operators {
            let p = a.data().adjoint() * b.data();
            cols.push(nalgebra::DVector::from_iterator(din * din, p.iter().cloned()));
        }
    }
    let stacked = DMatrix::from_columns(&cols);
    Ok(singular_values(&stacked).iter().all(|&s| s > tol))
}

/// States whose projectors span the operator space on `d` dimensions.
pub(crate) fn spanning_states(d: usize) -> Vec<Vec<C64>> {
    let mut out = Vec::with_capacity(d * d);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for k in 0..d {
        let mut v = vec![ZERO; d];
        v[k] = ONE;
        out.push(v);
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let mut v = vec![ZERO; d];
            v[j] = C64::new(s, 0.0);
            v[k] = C64::new(s, 0.0);
            out.push(v.clone());
            v[k] = C64::new(0.0, s);
            out.push(v);
        }
    }
    out
}

/// Returns σ when `c` outputs the same σ on an operator-spanning set of input states.
pub fn is_constant_preparation(c: &Channel, tol: f64) -> Option<ComplexMatrix> {
    if !is_cptp(c, tol) {
        return None;
    }
    let d = c.in_dim();
    let mixed = DMatrix::<C64>::identity(d, d) / C64::new(d as f64, 0.0);
    let sigma = apply_channel_data(c, &mixed).ok()?;
    for v in spanning_states(d) {
        let rho = DMatrix::from_fn(d, d, |i, j| v[i] * v[j].conj());
        let out = apply_channel_data(c, &rho).ok()?;
        if (&out - &sigma).norm() > tol {
            return None;
        }
    }
    ComplexMatrix::square(sigma, c.out_sys.clone()).ok()
}

/// Largest eigenvalue at least `1 − tol`.
pub fn is_pure_state(rho: &ComplexMatrix, tol: f64) -> bool {
    rho.max_eigenvalue() >= 1.0 - tol
}

/// Stinespring sampling: a Haar isometry `in → out ⊗ env` with the environment traced out.
pub fn random_cptp(in_d: usize, out_d: usize, env_d: usize, seed: u64) -> Result<Channel> {
    if in_d < 1 || out_d < 1 || env_d < 1 {
        return Err(Error::InvalidDimension(format!("{in_d}→{out_d} with env {env_d}")));
    }
    if out_d * env_d < in_d {
        return Err(Error::InvalidDimension(format!(
            "no isometry from {in_d} into {out_d}x{env_d}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let u = haar_unitary(&mut rng, out_d * env_d);
    let ops = (0..env_d)
        .map(|e| DMatrix::from_fn(out_d, in_d, |a, i| u[(a * env_d + e, i)]))
        .collect();
    let (i, o) = default_systems(&[in_d], &[out_d])?;
    choi_from_kraus(&KrausSet::from_data(ops, i, o)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensorcore::{random_density, random_unitary, DEFAULT_TOL};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn pauli(name: char) -> DMatrix<C64> {
        let i = C64::new(0.0, 1.0);
        match name {
            'I' => DMatrix::identity(2, 2),
            'X' => DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            'Y' => DMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO]),
            'Z' => DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
            _ => unreachable!(),
        }
    }

    fn qubit_sys() -> (WireSystem, WireSystem) {
        default_systems(&[2], &[2]).unwrap()
    }

    #[test]
    fn identity_choi_is_unnormalised_bell() {
        let id = Channel::identity_dim(2).unwrap();
        let mut expected = DMatrix::<C64>::zeros(4, 4);
        for (r, cc) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            expected[(r, cc)] = ONE;
        }
        assert_eq!(id.choi().data(), &expected);
        assert!((id.choi().trace() - c(2.0)).norm() < 1e-15);
    }

    #[test]
    fn measure_prepare_kraus_gives_product_choi() {
        // K_i = |φ⟩⟨i| gives I ⊗ |φ⟩⟨φ|
        let phi = [c(0.6), C64::new(0.0, 0.8)];
        let (i, o) = qubit_sys();
        let ops = (0..2)
            .map(|k| DMatrix::from_fn(2, 2, |a, b| if b == k { phi[a] } else { ZERO }))
            .collect();
        let ch = choi_from_kraus(&KrausSet::from_data(ops, i, o).unwrap()).unwrap();
        let proj = DMatrix::from_fn(2, 2, |a, b| phi[a] * phi[b].conj());
        let expected = DMatrix::<C64>::identity(2, 2).kronecker(&proj);
        assert!((ch.choi().data() - expected).norm() < 1e-15);
    }

    #[test]
    fn depolarizing_kraus_sum_matches_closed_form() {
        let (i, o) = qubit_sys();
        let ops = ['I', 'X', 'Y', 'Z'].iter().map(|&p| pauli(p) * c(0.5)).collect();
        let ch = choi_from_kraus(&KrausSet::from_data(ops, i, o).unwrap()).unwrap();
        let expected = DMatrix::<C64>::identity(4, 4) * c(0.5);
        assert!((ch.choi().data() - &expected).norm() < 1e-15);
        assert!((depolarizing_channel(2).unwrap().choi().data() - expected).norm() < 1e-15);
        let k = kraus_from_choi(&ch, DEFAULT_TOL).unwrap();
        assert_eq!(k.len(), 4);
    }

    #[test]
    fn unitary_channel_has_single_kraus() {
        let u = random_unitary(3, 8).unwrap();
        let ch = unitary_channel(&u).unwrap();
        let k = kraus_from_choi(&ch, DEFAULT_TOL).unwrap();
        assert_eq!(k.len(), 1);
        // proportional to U: |tr(U†K)| = d
        let overlap = (u.data().adjoint() * k.operators()[0].data()).trace().norm();
        assert!((overlap - 3.0).abs() < 1e-10);
        assert!(is_extremal_kraus(&k, DEFAULT_TOL).unwrap());
    }

    #[test]
    fn kraus_round_trip_on_random_channels() {
        for seed in 0..20 {
            let ch = random_cptp(2 + seed as usize % 2, 2, 3, seed).unwrap();
            let back = choi_from_kraus(&kraus_from_choi(&ch, 1e-12).unwrap()).unwrap();
            assert!(ch.distance(&back).unwrap() < 1e-9);
        }
    }

    #[test]
    fn kraus_from_choi_rejects_non_psd() {
        let (i, o) = qubit_sys();
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(-1.0), c(1.0), c(1.0)]));
        let ch = Channel::from_choi_data(m, i, o).unwrap();
        assert!(matches!(kraus_from_choi(&ch, DEFAULT_TOL), Err(Error::NotPsd(_))));
    }

    #[test]
    fn cptp_checks() {
        assert!(is_cptp(&Channel::identity_dim(2).unwrap(), DEFAULT_TOL));
        let (i, o) = qubit_sys();
        let unnormalised = Channel::from_choi_data(DMatrix::identity(4, 4), i, o).unwrap();
        assert!(!is_cptp(&unnormalised, DEFAULT_TOL));
        let u = random_unitary(2, 4).unwrap();
        assert!(is_cptp(&unitary_channel(&u).unwrap(), DEFAULT_TOL));
    }

    #[test]
    fn apply_matches_direct_conjugation() {
        let rho = random_density(3, 1).unwrap();
        let id = Channel::identity_dim(3).unwrap();
        assert!((apply_channel(&id, &rho).unwrap().data() - rho.data()).norm() < 1e-15);

        let dep = depolarizing_channel(3).unwrap();
        let out = apply_channel(&dep, &rho).unwrap();
        assert!((out.data() - DMatrix::<C64>::identity(3, 3) / c(3.0)).norm() < 1e-15);

        let u = random_unitary(3, 2).unwrap();
        let direct = u.data() * rho.data() * u.data().adjoint();
        let via = apply_channel(&unitary_channel(&u).unwrap(), &rho).unwrap();
        assert!((via.data() - direct).norm() < 1e-12);

        let wrong = random_density(2, 1).unwrap();
        assert!(matches!(apply_channel(&id, &wrong), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn depolarizing_edge_cases() {
        let d1 = depolarizing_channel(1).unwrap();
        assert!(d1.distance(&Channel::identity_dim(1).unwrap()).unwrap() < 1e-15);
        assert!(depolarizing_channel(0).is_err());
        let d = depolarizing_channel(3).unwrap();
        assert!(d.then(&d).unwrap().distance(&d).unwrap() < 1e-14);
    }

    #[test]
    fn pauli_x_flips_ground_state() {
        let x = ComplexMatrix::square(pauli('X'), WireSystem::single("u", 2).unwrap()).unwrap();
        let ch = unitary_channel(&x).unwrap();
        let zero = ComplexMatrix::projector(&[ONE, ZERO], WireSystem::single("i0", 2).unwrap()).unwrap();
        let out = apply_channel(&ch, &zero).unwrap();
        assert!((out.data()[(1, 1)] - ONE).norm() < 1e-15);
        let not_unitary = x.scale_real(2.0);
        assert!(matches!(unitary_channel(&not_unitary), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn extremality_examples() {
        let (i, o) = qubit_sys();
        let mixture = vec![pauli('I') * c(0.5f64.sqrt()), pauli('Z') * c(0.5f64.sqrt())];
        let k = KrausSet::from_data(mixture, i.clone(), o.clone()).unwrap();
        assert!(!is_extremal_kraus(&k, DEFAULT_TOL).unwrap());

        let phi = [c(0.0), c(1.0)];
        let ops = (0..2)
            .map(|k| DMatrix::from_fn(2, 2, |a, b| if b == k { phi[a] } else { ZERO }))
            .collect();
        let k = KrausSet::from_data(ops, i.clone(), o.clone()).unwrap();
        assert!(is_extremal_kraus(&k, DEFAULT_TOL).unwrap());

        let empty = KrausSet::new(vec![], i, o).unwrap();
        assert!(matches!(is_extremal_kraus(&empty, DEFAULT_TOL), Err(Error::EmptyKraus)));
    }

    #[test]
    fn constant_preparation_detection() {
        let (i, o) = qubit_sys();
        let phi = DMatrix::from_row_slice(2, 2, &[c(0.5), c(0.5), c(0.5), c(0.5)]);
        let prep = Channel::discard_prepare(i, o, &phi).unwrap();
        let got = is_constant_preparation(&prep, DEFAULT_TOL).unwrap();
        assert!((got.data() - &phi).norm() < 1e-14);
        assert!(is_constant_preparation(&Channel::identity_dim(2).unwrap(), DEFAULT_TOL).is_none());
    }

    #[test]
    fn random_cptp_properties() {
        let ch = random_cptp(2, 2, 1, 17).unwrap();
        assert_eq!(kraus_from_choi(&ch, DEFAULT_TOL).unwrap().len(), 1);
        for seed in 0..10 {
            let ch = random_cptp(3, 2, 4, seed).unwrap();
            assert!(is_cptp(&ch, DEFAULT_TOL));
            assert_eq!(ch, random_cptp(3, 2, 4, seed).unwrap());
        }
        assert!(random_cptp(0, 2, 2, 1).is_err());
        assert!(random_cptp(4, 1, 2, 1).is_err());
    }

    #[test]
    fn composition_agrees_with_sequential_application() {
        let f = random_cptp(2, 3, 2, 1).unwrap();
        let g = random_cptp(3, 2, 2, 2).unwrap();
        let gf = f.then(&g).unwrap();
        let rho = random_density(2, 3).unwrap();
        let direct = apply_channel(&g, &apply_channel(&f, &rho).unwrap().relabel(&["i0"]).unwrap()).unwrap();
        let via = apply_channel(&gf, &rho).unwrap();
        assert!((direct.data() - via.data()).norm() < 1e-12);
    }

    #[test]
    fn channel_json_round_trip() {
        let ch = random_cptp(2, 2, 2, 5).unwrap();
        let text = serde_json::to_string(&ch.to_json()).unwrap();
        let back = Channel::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, ch);
        assert!(text.starts_with("{\"in\":"));
    }
}
