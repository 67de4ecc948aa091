use serde::Serialize;
use serde_json::value::RawValue;

use crate::config::SuiteConfig;

/// Whether the residual must stay below or rise above the threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Upper,
    Lower,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub anchor: &'static str,
    pub residual: f64,
    pub threshold: f64,
    pub bound: Bound,
    pub pass: bool,
}

impl CheckResult {
    pub fn upper(name: impl Into<String>, anchor: &'static str, residual: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            anchor,
            residual,
            threshold,
            bound: Bound::Upper,
            pass: residual.is_finite() && residual < threshold,
        }
    }

    pub fn lower(name: impl Into<String>, anchor: &'static str, residual: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            anchor,
            residual,
            threshold,
            bound: Bound::Lower,
            pass: residual.is_finite() && residual > threshold,
        }
    }

    /// A count of failures that must be zero, reported as `count < 0.5`.
    pub fn none(name: impl Into<String>, anchor: &'static str, failures: usize) -> Self {
        Self::upper(name, anchor, failures as f64, 0.5)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub suite: String,
    pub dims: Vec<Vec<usize>>,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub checks: Vec<CheckResult>,
    pub wall_time_s: Option<f64>,
}

impl SuiteReport {
    pub fn new(cfg: &SuiteConfig, checks: Vec<CheckResult>) -> Self {
        Self {
            suite: cfg.suite.name().to_string(),
            dims: cfg.dims.clone(),
            trials: cfg.trials,
            seed: cfg.seed,
            tol: cfg.tol,
            checks,
            wall_time_s: None,
        }
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failing(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Text,
}

/// Six significant digits in scientific notation; non-finite values become `null`.
fn sci(x: f64) -> Box<RawValue> {
    let s = if x.is_finite() { format!("{x:.5e}") } else { "null".to_string() };
    RawValue::from_string(s).expect("formatted float is valid JSON")
}

#[derive(Serialize)]
struct ParamsJson<'a> {
    dims: &'a [Vec<usize>],
    trials: usize,
    seed: u64,
    tol: Box<RawValue>,
}

#[derive(Serialize)]
struct CheckJson<'a> {
    name: &'a str,
    anchor: &'a str,
    residual: Box<RawValue>,
    threshold: Box<RawValue>,
    bound: Bound,
    pass: bool,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    suite: &'a str,
    version: &'static str,
    params: ParamsJson<'a>,
    checks: Vec<CheckJson<'a>>,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_s: Option<Box<RawValue>>,
}

pub fn emit_report(r: &SuiteReport, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let j = ReportJson {
                suite: &r.suite,
                version: env!("CARGO_PKG_VERSION"),
                params: ParamsJson {
                    dims: &r.dims,
                    trials: r.trials,
                    seed: r.seed,
                    tol: sci(r.tol),
                },
                checks: r
                    .checks
                    .iter()
                    .map(|c| CheckJson {
                        name: &c.name,
                        anchor: c.anchor,
                        residual: sci(c.residual),
                        threshold: sci(c.threshold),
                        bound: c.bound,
                        pass: c.pass,
                    })
                    .collect(),
                pass: r.pass(),
                wall_time_s: r.wall_time_s.map(sci),
            };
            let mut out = serde_json::to_vec_pretty(&j).expect("report serialises");
            out.push(b'\n');
            out
        }
        Format::Text => {
            let mut s = String::new();
            for c in &r.checks {
                let op = match c.bound {
                    Bound::Upper => "<",
                    Bound::Lower => ">",
                };
                s.push_str(&format!(
                    "{} {} residual={:.5e} {op} {:.5e} [{}]\n",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.residual,
                    c.threshold,
                    c.anchor
                ));
            }
            s.push_str(&format!(
                "{} {} ({} checks, {} failing)\n",
                if r.pass() { "PASS" } else { "FAIL" },
                r.suite,
                r.checks.len(),
                r.failing().count()
            ));
            if let Some(t) = r.wall_time_s {
                s.push_str(&format!("wall time {t:.3} s\n"));
            }
            s.into_bytes()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Suite;

    fn sample() -> SuiteReport {
        let cfg = SuiteConfig::new(Suite::Idempotence, vec![vec![2]], 1, 7);
        SuiteReport::new(
            &cfg,
            vec![
                CheckResult::upper("a", "anchor", 1.234567e-11, 1e-10),
                CheckResult::lower("b", "anchor", 0.25, 0.5),
            ],
        )
    }

    #[test]
    fn json_is_parseable_with_stable_keys() {
        let out = String::from_utf8(emit_report(&sample(), Format::Json)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["pass"], false);
        assert_eq!(v["checks"][0]["pass"], true);
        assert!(out.contains("\"residual\": 1.23457e-11"));
        let keys: Vec<_> = ["\"suite\"", "\"version\"", "\"params\"", "\"checks\"", "\"pass\""]
            .iter()
            .map(|k| out.find(k).unwrap())
            .collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        assert!(!out.contains("wall_time_s"));
    }

    #[test]
    fn text_has_one_line_per_check() {
        let out = String::from_utf8(emit_report(&sample(), Format::Text)).unwrap();
        assert!(out.lines().next().unwrap().starts_with("PASS a"));
        assert!(out.lines().nth(1).unwrap().starts_with("FAIL b"));
    }

    #[test]
    fn non_finite_residual_fails() {
        let c = CheckResult::upper("x", "a", f64::NAN, 1.0);
        assert!(!c.pass);
    }
}
