//! Dense complex linear algebra over labelled multipartite systems.

mod json;
mod linalg;
mod link;
mod matrix;
mod random;
mod wires;

pub use json::MatrixJson;
pub use link::link_product;
pub use matrix::{ComplexMatrix, C64, DEFAULT_TOL};
pub(crate) use linalg::{
    eig_normal, eigh, expi_hermitian, lstsq_real, singular_values,
};
pub use random::{
    derive_seed, ginibre, haar_density, haar_state, haar_unitary, random_density, random_unitary,
    rng_from_seed, SeededRng,
};
pub use wires::WireSystem;

/// Real-valued 1 as a complex scalar.
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);
