use std::path::PathBuf;

use serde::Serialize;

/// Largest accepted `Π d_k²` per type unless large runs are allowed.
pub const MAX_TOTAL_DIM: usize = 64;

pub const DEFAULT_SEED: u64 = 7;
pub const SEED_ENV: &str = "QBOX_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Idempotence,
    BackwardsSignalling,
    Purity,
    Maxmix,
    Equivalence,
    NoSuperluminal,
    AffineDecomposition,
    Purification,
    All,
}

impl Suite {
    /// Every concrete suite, in the order `all` runs them.
    pub const ORDER: [Suite; 8] = [
        Suite::Idempotence,
        Suite::BackwardsSignalling,
        Suite::Purity,
        Suite::Maxmix,
        Suite::Equivalence,
        Suite::NoSuperluminal,
        Suite::AffineDecomposition,
        Suite::Purification,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Idempotence => "idempotence",
            Suite::BackwardsSignalling => "backwards-signalling",
            Suite::Purity => "purity",
            Suite::Maxmix => "maxmix",
            Suite::Equivalence => "equivalence",
            Suite::NoSuperluminal => "no-superluminal",
            Suite::AffineDecomposition => "affine-decomposition",
            Suite::Purification => "purification",
            Suite::All => "all",
        }
    }

    pub fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => Suite::ORDER.to_vec(),
            s => vec![s],
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("computation error: {0}")]
    Core(#[from] qbox_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub suite: Suite,
    pub dims: Vec<Vec<usize>>,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub allow_large: bool,
    pub timings: bool,
    /// Replaces hypdec by a non-idempotent map in the idempotence suite.
    pub planted_defect: bool,
    /// Purification instance to re-verify instead of searching.
    pub instance: Option<PathBuf>,
}

impl SuiteConfig {
    pub fn new(suite: Suite, dims: Vec<Vec<usize>>, trials: usize, seed: u64) -> Self {
        Self {
            suite,
            dims,
            trials,
            seed,
            tol: 1e-9,
            out: None,
            allow_large: false,
            timings: false,
            planted_defect: false,
            instance: None,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.trials == 0 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(CliError::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.dims.is_empty() {
            return Err(CliError::Config("at least one --dims entry is required".into()));
        }
        for dims in &self.dims {
            if dims.is_empty() {
                return Err(CliError::Config("a --dims entry has no pairs".into()));
            }
            if dims.contains(&0) {
                return Err(CliError::Config(format!("zero dimension in {dims:?}")));
            }
            let total = total_dim(dims);
            if total > MAX_TOTAL_DIM && !self.allow_large {
                return Err(CliError::Config(format!(
                    "type {dims:?} has total wire dimension {total} > {MAX_TOTAL_DIM}; pass --allow-large to run it"
                )));
            }
        }
        Ok(())
    }
}

/// `Π d_k²`, the dimension of all wires of a type.
pub fn total_dim(dims: &[usize]) -> usize {
    dims.iter().map(|d| d.saturating_mul(*d)).fold(1usize, |a, b| a.saturating_mul(b))
}

/// Parses `"2,3"` into `[2, 3]`; the empty string gives no pairs.
pub fn parse_dims(s: &str) -> Result<Vec<usize>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("bad dimension {p:?}: {e}")))
        .collect()
}

/// `QBOX_SEED` if set, else the built-in default.
pub fn default_seed() -> Result<u64, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}
