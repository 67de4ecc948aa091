use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::matrix::{ComplexMatrix, C64};
use super::wires::WireSystem;
use crate::error::{Error, Result};

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a base seed with a stream tag and an index into an independent seed.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_dim(d: usize) -> Result<()> {
    if d < 1 {
        Err(Error::InvalidDimension(format!("requested dimension {d}")))
    } else {
        Ok(())
    }
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar unitary: QR of a Ginibre matrix with the phases of diag(R) divided out.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<C64> {
    let g = ginibre(rng, d, d);
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..d {
            u[(i, j)] *= phase;
        }
    }
    u
}

pub fn haar_density<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<C64> {
    let g = ginibre(rng, d, d);
    let m = &g * g.adjoint();
    let t = m.trace();
    m / t
}

/// Haar-distributed pure state vector.
pub fn haar_state<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<C64> {
    let g = ginibre(rng, d, 1);
    let n = g.norm();
    g.iter().map(|z| z / n).collect()
}

pub fn random_unitary(d: usize, seed: u64) -> Result<ComplexMatrix> {
    check_dim(d)?;
    let u = haar_unitary(&mut rng_from_seed(seed), d);
    ComplexMatrix::square(u, WireSystem::single("u", d)?)
}

pub fn random_density(d: usize, seed: u64) -> Result<ComplexMatrix> {
    check_dim(d)?;
    let rho = haar_density(&mut rng_from_seed(seed), d);
    ComplexMatrix::square(rho, WireSystem::single("rho", d)?)
}
