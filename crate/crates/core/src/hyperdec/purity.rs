//! Purity co-preservation: a state whose decohered image is pure was already pure.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{
    apply_channel_data, default_systems, is_constant_preparation, is_cptp, is_extremal_kraus,
    is_pure_state, kraus_from_choi, random_cptp, unitary_channel, Channel,
};
use crate::error::{Error, Result};
use crate::tensorcore::{derive_seed, haar_state, random_unitary, rng_from_seed, ComplexMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PurityVerdict {
    /// The image at the maximally mixed input is mixed; nothing to check.
    Vacuous,
    Pass,
    Fail,
}

/// For the state-channel `g`: if `g(I/d)` is pure within `tol`, `g` must be a
/// constant preparation of that state and extremal.
///
/// The structural checks run at `√tol`: a channel within `ε` of a
/// preparation has an image impure only at order `ε`, while its Choi
/// eigenvalues and outputs move at order `√ε` at worst.
pub fn check_purity_copreservation(g: &Channel, tol: f64) -> Result<PurityVerdict> {
    if !is_cptp(g, tol.max(1e-9)) {
        return Err(Error::NotCptp);
    }
    let d = g.in_dim();
    let mixed = DMatrix::<C64>::identity(d, d) / C64::new(d as f64, 0.0);
    let image = ComplexMatrix::square(apply_channel_data(g, &mixed)?, g.out_sys().clone())?;
    if !is_pure_state(&image, tol) {
        return Ok(PurityVerdict::Vacuous);
    }
    let loose = tol.sqrt();
    let constant = match is_constant_preparation(g, loose) {
        Some(sigma) => is_pure_state(&sigma, loose),
        None => false,
    };
    let extremal = is_extremal_kraus(&kraus_from_choi(g, loose)?, loose)?;
    Ok(if constant && extremal { PurityVerdict::Pass } else { PurityVerdict::Fail })
}

/// Tallies of a randomized co-preservation search.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PuritySearchReport {
    pub checked: usize,
    pub pure_images: usize,
    pub passes: usize,
    pub failures: usize,
    /// Indices of failing channels, for replay via [`purity_search_channel`].
    pub failing_indices: Vec<usize>,
}

/// The `index`-th channel of the search: exact preparations, preparations
/// perturbed by a log-uniform weight of noise, unitaries and generic CPTP
/// maps, on dimension 2 or 3.
pub fn purity_search_channel(index: usize, seed: u64) -> Result<Channel> {
    let s = derive_seed(seed, 0x9A, index as u64);
    let mut rng = rng_from_seed(s);
    let d = 2 + index % 2;
    let (i, o) = default_systems(&[d], &[d])?;
    let prep = |rng: &mut _| -> Result<Channel> {
        let v = haar_state(rng, d);
        let psi = DMatrix::from_fn(d, d, |a, b| v[a] * v[b].conj());
        Channel::discard_prepare(i.clone(), o.clone(), &psi)
    };
    match (index / 2) % 4 {
        0 => prep(&mut rng),
        1 => {
            let p = prep(&mut rng)?;
            let noise = random_cptp(d, d, rng.random_range(1..=d * d), derive_seed(s, 1, 0))?;
            let eps = 10f64.powf(rng.random_range(-12.0..=0.0));
            Channel::combination(&[(1.0 - eps, &p), (eps, &noise)])
        }
        2 => unitary_channel(&random_unitary(d, derive_seed(s, 2, 0))?),
        _ => random_cptp(d, d, rng.random_range(1..=d * d), derive_seed(s, 3, 0)),
    }
}

/// Runs [`check_purity_copreservation`] on `count` search channels.
pub fn purity_search(count: usize, seed: u64, tol: f64) -> Result<PuritySearchReport> {
    let verdicts = (0..count)
        .into_par_iter()
        .map(|i| check_purity_copreservation(&purity_search_channel(i, seed)?, tol))
        .collect::<Result<Vec<_>>>()?;
    let mut report = PuritySearchReport {
        checked: count,
        ..Default::default()
    };
    for (i, v) in verdicts.into_iter().enumerate() {
        match v {
            PurityVerdict::Vacuous => {}
            PurityVerdict::Pass => {
                report.pure_images += 1;
                report.passes += 1;
            }
            PurityVerdict::Fail => {
                report.pure_images += 1;
                report.failures += 1;
                report.failing_indices.push(i);
            }
        }
    }
    Ok(report)
}
