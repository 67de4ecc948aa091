use nalgebra::DMatrix;

use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Choi-level composition: `Tr_C[(a^{T_C} ⊗ 1)(1 ⊗ b)]` over the shared wires `common`.
///
/// The result lives on a's remaining wires followed by b's remaining wires.
/// With an empty `common` this is the tensor product.
pub fn link_product<S: AsRef<str>>(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    common: &[S],
) -> Result<ComplexMatrix> {
    if !a.is_square_system() || !b.is_square_system() {
        return Err(Error::NotSquare);
    }
    let (sa, sb) = (a.system(), b.system());
    for l in common {
        let l = l.as_ref();
        let da = sa.dim_of(l)?;
        let db = sb.dim_of(l)?;
        if da != db {
            return Err(Error::ShapeMismatch(format!("wire `{l}`: {da} vs {db}")));
        }
    }
    let x_sys = sa.without(common);
    let y_sys = sb.without(common);
    let out_sys = x_sys.concat(&y_sys)?;

    let ax = sa.offsets(x_sys.labels())?;
    let ac = sa.offsets(common)?;
    let bc = sb.offsets(common)?;
    let by = sb.offsets(y_sys.labels())?;
    let (dx, dc, dy) = (ax.len(), ac.len(), by.len());

    // P[(x,x'),(c,c')] = a[(x,c),(x',c')],  Q[(c,c'),(y,y')] = b[(c,y),(c',y')]
    let ad = a.data();
    let bd = b.data();
    let p = DMatrix::from_fn(dx * dx, dc * dc, |r, k| {
        let (x, xp) = (r / dx, r % dx);
        let (c, cp) = (k / dc, k % dc);
        ad[(ax[x] + ac[c], ax[xp] + ac[cp])]
    });
    let q = DMatrix::from_fn(dc * dc, dy * dy, |k, s| {
        let (c, cp) = (k / dc, k % dc);
        let (y, yp) = (s / dy, s % dy);
        bd[(bc[c] + by[y], bc[cp] + by[yp])]
    });
    let r = super::linalg::matmul(&p, &q);
    let d = dx * dy;
    let data = DMatrix::<C64>::from_fn(d, d, |i, j| {
        let (x, y) = (i / dy, i % dy);
        let (xp, yp) = (j / dy, j % dy);
        r[(x * dx + xp, y * dy + yp)]
    });
    ComplexMatrix::square(data, out_sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensorcore::{random_density, WireSystem};

    #[test]
    fn empty_link_is_tensor_product() {
        let a = random_density(2, 1).unwrap().relabel(&["a"]).unwrap();
        let b = random_density(3, 2).unwrap().relabel(&["b"]).unwrap();
        let l = link_product(&a, &b, &[] as &[&str]).unwrap();
        let t = a.tensor_product(&b).unwrap();
        assert!(l.frobenius_distance(&t).unwrap() < 1e-14);
    }

    #[test]
    fn full_link_is_transpose_pairing() {
        let a = random_density(4, 3).unwrap().relabel(&["a"]).unwrap();
        let b = random_density(4, 4).unwrap().relabel(&["a"]).unwrap();
        let l = link_product(&a, &b, &["a"]).unwrap();
        let expected = a.transpose_pairing(&b).unwrap();
        assert!((l.data()[(0, 0)] - expected).norm() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = ComplexMatrix::identity(WireSystem::single("a", 2).unwrap());
        let b = ComplexMatrix::identity(WireSystem::single("a", 3).unwrap());
        assert!(matches!(
            link_product(&a, &b, &["a"]),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            link_product(&a, &a, &["z"]),
            Err(Error::UnknownLabel(_))
        ));
    }
}
