use std::time::Instant;

use qbox_core::channels::{unitary_channel, Channel};
use qbox_core::higherorder::{
    controlled_not, decompose_channel, decompose_nonsignalling, random_nonsignalling_channel,
    random_nonsignalling_state, reconstruction_residual, sample_discard, verify_no_superluminal,
    EffectFamily, HigherOrderMap, HigherOrderType, Partition,
};
use qbox_core::hyperdec::{
    check_purity_copreservation, hypdec_map, idempotence_residual, purity_search,
    strictness_gap, verify_equivalence_roundtrip, verify_idempotent, verify_maxmix_preserved,
    verify_no_backwards_signalling, PurityVerdict,
};
use qbox_core::purification::{
    apply_reversible_comb, connector_residual, connector_residual_states, equal_marginals,
    find_counterexample_instance, is_extremal_state, ConnectorOptions, PurificationInstance,
    PurificationInstanceJson, ReversibleComb,
};
use qbox_core::tensorcore::{derive_seed, haar_state, random_unitary, rng_from_seed, ComplexMatrix};
use qbox_core::Error;

use crate::config::{CliError, Suite, SuiteConfig};
use crate::report::{CheckResult, SuiteReport};

const IDEMPOTENCE: &str = "axiom 1: hypdec is idempotent";
const STRICTNESS: &str = "hypdec differs from the identity supermap";
const BACKWARDS: &str = "axiom 2: no backwards signalling";
const PURITY: &str = "axiom 3: purity co-preservation";
const MAXMIX: &str = "axiom 4: maximal mixedness preserved";
const EQUIVALENCE: &str = "split category of hypdec is equivalent to CPTP";
const SUPERLUMINAL: &str = "no superluminal signalling via QBox states";
const AFFINE: &str = "non-signalling channels are affine combinations of local channels";
const PURIFICATION: &str = "purifications in QBox are not unique";

/// Pinned thresholds; checks without one use the configured tolerance.
const IDEMPOTENCE_TOL: f64 = 1e-10;
const MAXMIX_TOL: f64 = 1e-12;
const DECOMPOSITION_TOL: f64 = 1e-8;
const STRICTNESS_GAP: f64 = 0.5;
const PROBE_SEPARATION: f64 = 1e-3;
const CONNECTOR_GAP: f64 = 1e-2;
const PLANTED_TOL: f64 = 1e-6;
const MAX_MEMORY: usize = 4;

fn tag(dims: &[usize]) -> String {
    let parts: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
    format!("[{}]", parts.join(","))
}

/// Runs the configured suite and returns its report. Errors only for invalid
/// configurations or failures of the numerical machinery itself.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut checks = Vec::new();
    for suite in cfg.suite.expand() {
        let idx = Suite::ORDER.iter().position(|s| *s == suite).expect("concrete suite") as u64;
        checks.extend(run_one(suite, cfg, derive_seed(cfg.seed, 0x5017E, idx))?);
    }
    let mut report = SuiteReport::new(cfg, checks);
    if cfg.timings {
        report.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    Ok(report)
}

fn run_one(suite: Suite, cfg: &SuiteConfig, seed: u64) -> Result<Vec<CheckResult>, CliError> {
    let name = suite.name();
    let mut out = Vec::new();
    let per_dims = |i: usize| derive_seed(seed, 0xD1, i as u64);
    match suite {
        Suite::Idempotence => {
            for dims in &cfg.dims {
                let typ = HigherOrderType::new(dims.clone())?;
                let residual = if cfg.planted_defect {
                    idempotence_residual(&bottom_rotation(&typ, seed)?)?
                } else {
                    verify_idempotent(&hypdec_map(&typ))?
                };
                out.push(CheckResult::upper(format!("{name}/idempotent{}", tag(dims)), IDEMPOTENCE, residual, IDEMPOTENCE_TOL));
                if dims.iter().any(|&d| d >= 2) {
                    out.push(CheckResult::lower(
                        format!("{name}/strictness{}", tag(dims)),
                        STRICTNESS,
                        strictness_gap(&typ)?,
                        STRICTNESS_GAP,
                    ));
                }
            }
        }
        Suite::BackwardsSignalling => {
            for (i, dims) in cfg.dims.iter().enumerate() {
                let h = hypdec_map(&HigherOrderType::new(dims.clone())?);
                let r = verify_no_backwards_signalling(&h, cfg.trials, per_dims(i))?;
                out.push(CheckResult::upper(format!("{name}/composite-is-prep-discard{}", tag(dims)), BACKWARDS, r.prep_discard, cfg.tol));
                out.push(CheckResult::upper(format!("{name}/composite-independent-of-effect{}", tag(dims)), BACKWARDS, r.spread, cfg.tol));
            }
        }
        Suite::Purity => {
            let mut analytic_failures = 0;
            for d in [2, 3] {
                let v = haar_state(&mut rng_from_seed(derive_seed(seed, 0xA1, d as u64)), d);
                let (i, o) = qbox_core::channels::default_systems(&[d], &[d])?;
                let phi = ComplexMatrix::projector(&v, o.clone())?;
                let g = Channel::discard_prepare(i, o, phi.data())?;
                if check_purity_copreservation(&g, cfg.tol)? != PurityVerdict::Pass {
                    analytic_failures += 1;
                }
            }
            out.push(CheckResult::none(format!("{name}/analytic-preparation"), PURITY, analytic_failures));
            let report = purity_search(100 * cfg.trials, seed, cfg.tol)?;
            out.push(CheckResult::none(format!("{name}/random-search-failures"), PURITY, report.failures));
            out.push(CheckResult::lower(format!("{name}/random-search-pure-images"), PURITY, report.pure_images as f64, 0.0));
        }
        Suite::Maxmix => {
            for dims in &cfg.dims {
                let (fixed, image) = verify_maxmix_preserved(&HigherOrderType::new(dims.clone())?)?;
                out.push(CheckResult::upper(format!("{name}/fixed-by-hypdec{}", tag(dims)), MAXMIX, fixed, MAXMIX_TOL));
                out.push(CheckResult::upper(format!("{name}/image-is-maximally-mixed{}", tag(dims)), MAXMIX, image, MAXMIX_TOL));
            }
        }
        Suite::Equivalence => {
            for (i, dims) in cfg.dims.iter().enumerate() {
                let r = verify_equivalence_roundtrip(dims, cfg.trials, per_dims(i))?;
                let t = tag(dims);
                out.push(CheckResult::upper(format!("{name}/f-after-g{t}"), EQUIVALENCE, r.fg, cfg.tol));
                out.push(CheckResult::upper(format!("{name}/g-after-f{t}"), EQUIVALENCE, r.gf, cfg.tol));
                out.push(CheckResult::upper(format!("{name}/composition{t}"), EQUIVALENCE, r.composition, cfg.tol));
                out.push(CheckResult::upper(format!("{name}/tensor{t}"), EQUIVALENCE, r.tensor, cfg.tol));
                out.push(CheckResult::upper(format!("{name}/identity{t}"), EQUIVALENCE, r.identity, MAXMIX_TOL));
                out.push(CheckResult::upper(format!("{name}/faithfulness{t}"), EQUIVALENCE, r.faithfulness, cfg.tol));
                out.push(CheckResult::lower(format!("{name}/probe-separation{t}"), EQUIVALENCE, r.probe_separation, PROBE_SEPARATION));
            }
        }
        Suite::NoSuperluminal => {
            for (i, dims) in cfg.dims.iter().enumerate() {
                let dims = if dims.len() >= 2 { dims.clone() } else { vec![dims[0], dims[0]] };
                let typ = HigherOrderType::new(dims.clone())?;
                let n = typ.len();
                let kept: Vec<usize> = (0..n - 1).collect();
                let far = typ.select(&[n - 1])?;
                let s = per_dims(i);
                let mut worst = 0.0f64;
                for t in 0..cfg.trials as u64 {
                    let state = random_nonsignalling_state(&typ, derive_seed(s, 1, t))?;
                    let w1 = sample_discard(&far, EffectFamily::ProcessMatrix, derive_seed(s, 2, t))?;
                    let w2 = sample_discard(&far, EffectFamily::ProcessMatrix, derive_seed(s, 3, t))?;
                    worst = worst.max(verify_no_superluminal(&state, &kept, &w1, &w2, cfg.tol)?);
                }
                out.push(CheckResult::upper(format!("{name}/reduced-state-independent{}", tag(&dims)), SUPERLUMINAL, worst, cfg.tol));
            }
        }
        Suite::AffineDecomposition => {
            for (i, dims) in cfg.dims.iter().enumerate() {
                let s = per_dims(i);
                let mut worst = 0.0f64;
                for t in 0..cfg.trials as u64 {
                    let n = random_nonsignalling_channel(dims, 3, derive_seed(s, 1, t))?;
                    let terms = decompose_nonsignalling(&n)?;
                    worst = worst.max(reconstruction_residual(&n, &terms)?);
                }
                out.push(CheckResult::upper(format!("{name}/reconstruction{}", tag(dims)), AFFINE, worst, DECOMPOSITION_TOL));
            }
            let parties: Partition = (0..2).map(|k| (format!("i{k}"), format!("o{k}"))).collect();
            let rejected = matches!(decompose_channel(&controlled_not(), &parties, cfg.tol), Err(Error::Signalling(_)));
            out.push(CheckResult::none(format!("{name}/cnot-rejected"), AFFINE, usize::from(!rejected)));
        }
        Suite::Purification => {
            for inst in purification_instances(cfg, seed)? {
                out.extend(purification_checks(&inst, cfg, seed)?);
            }
        }
        Suite::All => unreachable!("expanded before dispatch"),
    }
    Ok(out)
}

/// `g ↦ g ∘ V` for a random unitary `V` on every bottom: deterministic but
/// not idempotent.
fn bottom_rotation(typ: &HigherOrderType, seed: u64) -> Result<HigherOrderMap, Error> {
    let d = typ.dim();
    let v = unitary_channel(&random_unitary(d, seed)?)?;
    let id = Channel::identity_dim(d)?;
    HigherOrderMap::comb(typ.clone(), typ.clone(), &v, &id, &[])
}

fn purification_instances(cfg: &SuiteConfig, seed: u64) -> Result<Vec<PurificationInstance>, CliError> {
    if let Some(path) = &cfg.instance {
        let text = std::fs::read_to_string(path)?;
        let j: PurificationInstanceJson =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("instance {}: {e}", path.display())))?;
        return Ok(vec![PurificationInstance::from_json(&j, cfg.tol)?]);
    }
    let mut ds: Vec<usize> = Vec::new();
    for dims in &cfg.dims {
        if !ds.contains(&dims[0]) {
            ds.push(dims[0]);
        }
    }
    ds.into_iter()
        .filter(|&d| d >= 2)
        .map(|d| Ok(find_counterexample_instance(d, seed)?))
        .collect()
}

fn purification_checks(inst: &PurificationInstance, cfg: &SuiteConfig, seed: u64) -> Result<Vec<CheckResult>, CliError> {
    let name = Suite::Purification.name();
    let d = inst.d();
    let t = format!("[d={d}]");
    let env = HigherOrderType::new(vec![d])?;
    let effects = (0..cfg.trials.max(8) as u64)
        .map(|i| sample_discard(&env, EffectFamily::ProcessMatrix, derive_seed(seed, 0xEE, i)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = vec![CheckResult::upper(format!("{name}/marginal-equality{t}"), PURIFICATION, equal_marginals(inst, &effects)?, cfg.tol)];
    let non_extremal = [inst.psi1(), inst.psi2()]
        .iter()
        .map(|p| is_extremal_state(p, cfg.tol))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|e| !e)
        .count();
    out.push(CheckResult::none(format!("{name}/both-extremal{t}"), PURIFICATION, non_extremal));

    let opts = ConnectorOptions {
        restarts: cfg.trials,
        max_memory: MAX_MEMORY,
        ..Default::default()
    };
    let rep = connector_residual(inst, &opts, derive_seed(seed, 0xC0, d as u64))?;
    out.push(CheckResult::lower(format!("{name}/connector-residual{t}"), PURIFICATION, rep.residual, CONNECTOR_GAP));
    out.push(CheckResult::upper(
        format!("{name}/connector-link-agreement{t}"),
        PURIFICATION,
        (rep.link_residual - rep.residual).abs(),
        cfg.tol.max(1e-8),
    ));
    out.push(CheckResult::upper(format!("{name}/phase-witness{t}"), PURIFICATION, inst.phase_witness(), 1.0 - 1e-6));

    let mut planted = 0.0f64;
    for m in 1..=MAX_MEMORY {
        let r = ReversibleComb::random(&env, m, derive_seed(seed, 0xB0, m as u64))?;
        let target = apply_reversible_comb(&r, inst.psi1(), &[1])?;
        let opts = ConnectorOptions {
            restarts: 4,
            max_memory: m,
            ..Default::default()
        };
        let rep = connector_residual_states(inst.psi1(), &target, &opts, derive_seed(seed, 0xB1, m as u64))?;
        planted = planted.max(rep.residual);
    }
    out.push(CheckResult::upper(format!("{name}/planted-connectors-found{t}"), PURIFICATION, planted, PLANTED_TOL));
    Ok(out)
}

/// The certified instance for dimension `d` as pretty JSON.
pub fn export_instance(d: usize, seed: u64) -> Result<Vec<u8>, CliError> {
    let inst = find_counterexample_instance(d, seed)?;
    let mut out = serde_json::to_vec_pretty(&inst.to_json()).map_err(|e| CliError::Config(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}
