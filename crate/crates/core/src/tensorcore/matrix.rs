use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::linalg::eigh;
use super::wires::WireSystem;
use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default tolerance shared by the Hermiticity and eigenvalue checks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Dense complex matrix whose row and column indices are labelled
/// multipartite systems.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    data: DMatrix<C64>,
    rows: WireSystem,
    cols: WireSystem,
}

impl ComplexMatrix {
    pub fn new(data: DMatrix<C64>, rows: WireSystem, cols: WireSystem) -> Result<Self> {
        if data.nrows() != rows.dim() || data.ncols() != cols.dim() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} data for {}x{} systems",
                data.nrows(),
                data.ncols(),
                rows.dim(),
                cols.dim()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { data, rows, cols })
    }

    /// Operator on `system` (rows and columns share the system).
    pub fn square(data: DMatrix<C64>, system: WireSystem) -> Result<Self> {
        Self::new(data, system.clone(), system)
    }

    pub(crate) fn square_unchecked(data: DMatrix<C64>, system: WireSystem) -> Self {
        debug_assert_eq!(data.nrows(), system.dim());
        Self {
            data,
            rows: system.clone(),
            cols: system,
        }
    }

    pub fn identity(system: WireSystem) -> Self {
        let d = system.dim();
        Self::square_unchecked(DMatrix::identity(d, d), system)
    }

    pub fn zeros(system: WireSystem) -> Self {
        let d = system.dim();
        Self::square_unchecked(DMatrix::zeros(d, d), system)
    }

    /// 1x1 matrix on the trivial system.
    pub fn scalar(z: C64) -> Self {
        Self::square_unchecked(DMatrix::from_element(1, 1, z), WireSystem::trivial())
    }

    /// Projector |v><v| on `system`.
    pub fn projector(v: &[C64], system: WireSystem) -> Result<Self> {
        if v.len() != system.dim() {
            return Err(Error::ShapeMismatch("vector length".into()));
        }
        let d = v.len();
        let data = DMatrix::from_fn(d, d, |i, j| v[i] * v[j].conj());
        Self::square(data, system)
    }

    pub fn data(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<C64> {
        self.data
    }

    pub fn rows(&self) -> &WireSystem {
        &self.rows
    }

    pub fn cols(&self) -> &WireSystem {
        &self.cols
    }

    /// The row system; for square operators this is the system the operator acts on.
    pub fn system(&self) -> &WireSystem {
        &self.rows
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_square_system(&self) -> bool {
        self.rows == self.cols
    }

    fn require_square(&self) -> Result<()> {
        if self.is_square_system() {
            Ok(())
        } else {
            Err(Error::NotSquare)
        }
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            data: self.data.adjoint(),
            rows: self.cols.clone(),
            cols: self.rows.clone(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            data: self.data.transpose(),
            rows: self.cols.clone(),
            cols: self.rows.clone(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            data: &self.data * s,
            rows: self.rows.clone(),
            cols: self.cols.clone(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// Same data, different labels (dims must agree factor by factor).
    pub fn relabel<S: Into<String> + Clone>(&self, labels: &[S]) -> Result<Self> {
        self.require_square()?;
        let sys = self.rows.with_labels(labels.to_vec())?;
        Ok(Self::square_unchecked(self.data.clone(), sys))
    }

    pub fn map_labels(&self, f: impl Fn(&str) -> String) -> Result<Self> {
        let rows = self.rows.map_labels(&f)?;
        let cols = self.cols.map_labels(&f)?;
        Ok(Self {
            data: self.data.clone(),
            rows,
            cols,
        })
    }

    /// Reinterprets the data over a different factorisation of the same total dimension.
    pub fn reshape_system(&self, system: WireSystem) -> Result<Self> {
        self.require_square()?;
        if system.dim() != self.dim() {
            return Err(Error::ShapeMismatch("reshape changes total dimension".into()));
        }
        Ok(Self::square_unchecked(self.data.clone(), system))
    }

    /// Kronecker product; labels concatenate and must not collide.
    pub fn tensor_product(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        let rows = self.rows.concat(&other.rows)?;
        let cols = self.cols.concat(&other.cols)?;
        Ok(Self {
            data: self.data.kronecker(&other.data),
            rows,
            cols,
        })
    }

    /// Traces out the named factors; remaining labels keep their order.
    pub fn partial_trace<S: AsRef<str>>(&self, over: &[S]) -> Result<ComplexMatrix> {
        self.require_square()?;
        for l in over {
            if !self.rows.contains(l.as_ref()) {
                return Err(Error::UnknownLabel(l.as_ref().to_string()));
            }
        }
        let kept = self.rows.without(over);
        let kept_off = self.rows.offsets(kept.labels())?;
        let traced_off = self.rows.offsets(over)?;
        let dk = kept_off.len();
        let data = DMatrix::from_fn(dk, dk, |i, j| {
            let (oi, oj) = (kept_off[i], kept_off[j]);
            traced_off
                .iter()
                .map(|&t| self.data[(oi + t, oj + t)])
                .sum()
        });
        Ok(Self::square_unchecked(data, kept))
    }

    /// Reorders the tensor factors so that they appear in `order`.
    pub fn permute_systems<S: AsRef<str>>(&self, order: &[S]) -> Result<ComplexMatrix> {
        self.require_square()?;
        if order.len() != self.rows.len() {
            return Err(Error::InvalidPermutation);
        }
        for (i, l) in order.iter().enumerate() {
            if !self.rows.contains(l.as_ref())
                || order[..i].iter().any(|x| x.as_ref() == l.as_ref())
            {
                return Err(Error::InvalidPermutation);
            }
        }
        let new_sys = self.rows.select(order)?;
        let map = self.rows.offsets(order)?;
        let d = map.len();
        let data = DMatrix::from_fn(d, d, |i, j| self.data[(map[i], map[j])]);
        Ok(Self::square_unchecked(data, new_sys))
    }

    /// Partial transpose on the named factors.
    pub fn partial_transpose<S: AsRef<str>>(&self, over: &[S]) -> Result<ComplexMatrix> {
        self.require_square()?;
        let kept = self.rows.without(over);
        let kept_off = self.rows.offsets(kept.labels())?;
        let t_off = self.rows.offsets(over)?;
        let mut data = self.data.clone();
        for &ki in &kept_off {
            for &kj in &kept_off {
                for &ti in &t_off {
                    for &tj in &t_off {
                        data[(ki + ti, kj + tj)] = self.data[(ki + tj, kj + ti)];
                    }
                }
            }
        }
        Ok(Self::square_unchecked(data, self.rows.clone()))
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.data - self.data.adjoint()).norm()
    }

    /// Ascending eigenvalues and eigenvectors (columns) of the Hermitian part.
    pub fn eigh(&self) -> (Vec<f64>, DMatrix<C64>) {
        eigh(&self.data)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigh().0.first().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigh().0.last().copied().unwrap_or(0.0)
    }

    /// Hermitian within `tol` and smallest eigenvalue at least `-tol`.
    pub fn is_psd(&self, tol: f64) -> bool {
        self.is_square_system() && self.hermiticity_defect() <= tol && self.min_eigenvalue() >= -tol
    }

    pub fn frobenius_distance(&self, other: &ComplexMatrix) -> Result<f64> {
        if self.data.shape() != other.data.shape() {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.data.shape(),
                other.data.shape()
            )));
        }
        Ok((&self.data - &other.data).norm())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn unitarity_defect(&self) -> f64 {
        let n = self.data.nrows();
        if n != self.data.ncols() {
            return f64::INFINITY;
        }
        (&self.data * self.data.adjoint() - DMatrix::identity(n, n)).norm()
    }

    /// Matrix product; the inner systems must agree in dimension.
    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols.dim() != other.rows.dim() {
            return Err(Error::ShapeMismatch("inner dimensions differ".into()));
        }
        Ok(Self {
            data: &self.data * &other.data,
            rows: self.rows.clone(),
            cols: other.cols.clone(),
        })
    }

    fn zip_with(&self, other: &ComplexMatrix, f: impl Fn(&DMatrix<C64>, &DMatrix<C64>) -> DMatrix<C64>) -> Result<ComplexMatrix> {
        if self.data.shape() != other.data.shape() {
            return Err(Error::ShapeMismatch("elementwise operands".into()));
        }
        Ok(Self {
            data: f(&self.data, &other.data),
            rows: self.rows.clone(),
            cols: self.cols.clone(),
        })
    }

    pub fn try_add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Σ_ij a_ij b_ij, i.e. tr(aᵀ b).
    pub fn transpose_pairing(&self, other: &ComplexMatrix) -> Result<C64> {
        if self.data.shape() != other.data.shape() {
            return Err(Error::ShapeMismatch("pairing operands".into()));
        }
        Ok(self.data.iter().zip(other.data.iter()).map(|(a, b)| a * b).sum())
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_add(rhs).expect("shape mismatch in matrix addition")
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_sub(rhs).expect("shape mismatch in matrix subtraction")
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("shape mismatch in matrix product")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn qubit(label: &str) -> WireSystem {
        WireSystem::single(label, 2).unwrap()
    }

    fn bell() -> ComplexMatrix {
        let s = 0.5f64.sqrt();
        let v = [c(s), c(0.0), c(0.0), c(s)];
        let sys = WireSystem::new(vec![2, 2], vec!["a", "b"]).unwrap();
        ComplexMatrix::projector(&v, sys).unwrap()
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let i2 = ComplexMatrix::identity(qubit("a"));
        let i2b = ComplexMatrix::identity(qubit("b"));
        let p = i2.tensor_product(&i2b).unwrap();
        assert_eq!(p.data(), &DMatrix::<C64>::identity(4, 4));
        assert_eq!(p.system().labels(), &["a", "b"]);
    }

    #[test]
    fn tensor_of_basis_projectors() {
        let p0 = ComplexMatrix::projector(&[c(1.0), c(0.0)], qubit("a")).unwrap();
        let p1 = ComplexMatrix::projector(&[c(0.0), c(1.0)], qubit("b")).unwrap();
        let p = p0.tensor_product(&p1).unwrap();
        let expected = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(0.0),
            c(1.0),
            c(0.0),
            c(0.0),
        ]));
        assert_eq!(p.data(), &expected);
    }

    #[test]
    fn tensor_rejects_label_collision() {
        let a = ComplexMatrix::identity(qubit("a"));
        assert!(matches!(a.tensor_product(&a), Err(Error::LabelCollision(_))));
    }

    #[test]
    fn bell_marginals_are_maximally_mixed() {
        let b = bell();
        for l in ["a", "b"] {
            let r = b.partial_trace(&[l]).unwrap();
            let half = DMatrix::<C64>::identity(2, 2) * c(0.5);
            assert!((r.data() - half).norm() < 1e-15);
        }
        let full = b.partial_trace(&["a", "b"]).unwrap();
        assert_eq!(full.dim(), 1);
        assert!((full.data()[(0, 0)] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn partial_trace_unknown_label() {
        assert!(matches!(
            bell().partial_trace(&["z"]),
            Err(Error::UnknownLabel(_))
        ));
    }

    #[test]
    fn swap_leaves_bell_state_unchanged() {
        let b = bell();
        let s = b.permute_systems(&["b", "a"]).unwrap();
        assert_eq!(s.data(), b.data());
        assert_eq!(s.system().labels(), &["b", "a"]);
        assert!(matches!(
            b.permute_systems(&["a", "a"]),
            Err(Error::InvalidPermutation)
        ));
    }

    #[test]
    fn psd_basics() {
        assert!(ComplexMatrix::identity(qubit("a")).is_psd(DEFAULT_TOL));
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(-1.0)]));
        assert!(!ComplexMatrix::square(m, qubit("a")).unwrap().is_psd(DEFAULT_TOL));
    }

    #[test]
    fn frobenius_of_identity_against_zero() {
        let i = ComplexMatrix::identity(qubit("a"));
        let z = ComplexMatrix::zeros(qubit("a"));
        assert!((i.frobenius_distance(&z).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(i.frobenius_distance(&i).unwrap(), 0.0);
        let big = ComplexMatrix::identity(WireSystem::single("x", 3).unwrap());
        assert!(matches!(
            i.frobenius_distance(&big),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn new_rejects_nan() {
        let m = DMatrix::from_element(1, 1, C64::new(f64::NAN, 0.0));
        assert!(matches!(
            ComplexMatrix::square(m, WireSystem::trivial()),
            Err(Error::NonFinite)
        ));
    }
}
