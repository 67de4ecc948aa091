//! Numerical verification toolkit for the hyper-decoherence of quantum boxes
//! (second-order quantum operations under the non-signalling tensor) onto
//! ordinary quantum theory.
//!
//! Every object is a finite-dimensional complex matrix: channels and
//! supermaps are stored as Choi matrices (input factor first, unnormalised),
//! and composition is the link product.

pub mod channels;
pub mod error;
pub mod higherorder;
pub mod hyperdec;
pub mod purification;
pub mod tensorcore;

pub use error::{Error, Result};
