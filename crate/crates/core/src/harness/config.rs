//! TOML experiment configuration. Unknown keys anywhere are rejected.
//!
//! ```toml
//! epsilon = 1e-3
//! delta = 0.1
//! trials = 500
//! master_seed = 7
//! workers = 0            # 0: one per available core
//!
//! [problem]
//! name = "anisotropic_quadratic"
//! d = 10
//! mu = 0.1
//! L = 1.0
//! start_gap = 1.0        # or x0 = [...]
//!
//! [overrides]            # optional; otherwise the schedule supplies both
//! T = 20000
//! alpha = 1e-3
//!
//! [output]
//! dir = "results"
//! stem = "sc_run"
//! formats = ["json", "csv"]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};
use crate::oracles::{suite, ProblemSpec, Regime};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: String,
    pub d: Option<usize>,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub mu: Option<f64>,
    /// Smallest positive eigenvalue of `singular_quadratic`.
    pub nu: Option<f64>,
    pub curvature: Option<f64>,
    pub weight: Option<f64>,
    /// Diagonal of the generic `quadratic` member.
    pub spectrum: Option<Vec<f64>>,
    pub x0: Option<Vec<f64>>,
    /// Start on the ray `x* + s·1` at this initial gap.
    pub start_gap: Option<f64>,
    /// Level-set radius supplied by hand for members without an analytic
    /// one. Bounds computed from it are conditional on its correctness.
    #[serde(rename = "R")]
    pub radius: Option<f64>,
}

impl ProblemConfig {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            d: None,
            l: None,
            mu: None,
            nu: None,
            curvature: None,
            weight: None,
            spectrum: None,
            x0: None,
            start_gap: None,
            radius: None,
        }
    }

    fn require_d(&self) -> Result<usize> {
        self.d
            .ok_or_else(|| ZoError::Config(format!("problem '{}' needs d", self.name)))
    }

    fn reject_unused(&self, allowed: &[&str]) -> Result<()> {
        let given = [
            ("d", self.d.is_some()),
            ("L", self.l.is_some()),
            ("mu", self.mu.is_some()),
            ("nu", self.nu.is_some()),
            ("curvature", self.curvature.is_some()),
            ("weight", self.weight.is_some()),
            ("spectrum", self.spectrum.is_some()),
        ];
        for (key, present) in given {
            if present && !allowed.contains(&key) {
                return Err(ZoError::Config(format!(
                    "parameter '{key}' does not apply to problem '{}'",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Instantiates the suite member and places the starting point.
    pub fn build(&self) -> Result<ProblemSpec> {
        let problem = match self.name.as_str() {
            "quad1d" => {
                self.reject_unused(&[])?;
                suite::quad1d()
            }
            "isotropic_quadratic" => {
                self.reject_unused(&["d", "curvature"])?;
                suite::isotropic_quadratic(self.require_d()?, self.curvature.unwrap_or(1.0))?
            }
            "anisotropic_quadratic" => {
                self.reject_unused(&["d", "mu", "L"])?;
                let mu = self
                    .mu
                    .ok_or_else(|| ZoError::Config("anisotropic_quadratic needs mu".into()))?;
                suite::anisotropic_quadratic(self.require_d()?, mu, self.l.unwrap_or(1.0))?
            }
            "singular_quadratic" => {
                self.reject_unused(&["d", "nu", "L"])?;
                let l = self.l.unwrap_or(1.0);
                suite::singular_quadratic(self.require_d()?, self.nu.unwrap_or(0.5 * l), l)?
            }
            "quadratic" => {
                self.reject_unused(&["spectrum"])?;
                let spectrum = self
                    .spectrum
                    .clone()
                    .ok_or_else(|| ZoError::Config("quadratic needs spectrum".into()))?;
                suite::quadratic("quadratic", spectrum)?
            }
            "log_sum_exp" => {
                self.reject_unused(&["d"])?;
                suite::log_sum_exp(self.require_d()?)?
            }
            "cosine_regularized" => {
                self.reject_unused(&["d", "weight"])?;
                suite::cosine_regularized(self.require_d()?, self.weight.unwrap_or(1.0))?
            }
            other => return Err(ZoError::UnknownProblem(other.to_string())),
        };
        if let Some(r) = self.radius {
            if !(r.is_finite() && r >= 0.0) {
                return Err(ZoError::Config("R must be nonnegative".into()));
            }
        }
        match (&self.x0, self.start_gap) {
            (Some(_), Some(_)) => Err(ZoError::Config(
                "give either x0 or start_gap, not both".into(),
            )),
            (Some(x0), None) => problem.with_x0(x0.clone()),
            (None, Some(gap)) => problem.with_initial_gap(gap),
            (None, None) => Ok(problem),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(rename = "T")]
    pub horizon: Option<u64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        }
    }
}

fn default_formats() -> Vec<ReportFormat> {
    vec![ReportFormat::Json, ReportFormat::Csv]
}

fn default_stem() -> String {
    "montecarlo".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Falls back to the `ZOGD_OUT_DIR` environment variable, then `.`.
    pub dir: Option<PathBuf>,
    #[serde(default = "default_stem")]
    pub stem: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<ReportFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            stem: default_stem(),
            formats: default_formats(),
        }
    }
}

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ZOGD_OUT_DIR";

/// `explicit`, else `$ZOGD_OUT_DIR`, else the current directory.
pub fn resolve_out_dir(explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from("."),
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    /// Defaults to the problem's own regime.
    pub regime: Option<Regime>,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub overrides: Overrides,
    /// Worker threads; 0 picks the available parallelism.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_true")]
    pub check_events: bool,
    #[serde(default = "default_true")]
    pub check_pathwise: bool,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn new(problem: ProblemConfig, epsilon: f64, delta: f64, trials: u64) -> Self {
        Self {
            problem,
            regime: None,
            epsilon,
            delta,
            trials,
            master_seed: 0,
            overrides: Overrides::default(),
            workers: 0,
            check_events: true,
            check_pathwise: true,
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| ZoError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ZoError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            ZoError::Config(msg) => ZoError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(ZoError::Config("trials must be at least 1".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(ZoError::Config("epsilon must be positive".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ZoError::Config("delta must lie in (0, 1)".into()));
        }
        if let Some(t) = self.overrides.horizon {
            if t < 1 {
                return Err(ZoError::Config("override T must be at least 1".into()));
            }
        }
        if let Some(a) = self.overrides.alpha {
            if !(a.is_finite() && a > 0.0) {
                return Err(ZoError::Config("override alpha must be positive".into()));
            }
        }
        if self.output.formats.is_empty() {
            return Err(ZoError::Config("output.formats must not be empty".into()));
        }
        Ok(())
    }

    pub fn worker_count(&self) -> usize {
        if self.workers > 0 {
            self.workers
        } else {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
epsilon = 1e-3
delta = 0.1
trials = 3
master_seed = 9

[problem]
name = "anisotropic_quadratic"
d = 4
mu = 0.25
L = 1.0

[overrides]
T = 50
"#;

    #[test]
    fn parses_sample() {
        let cfg = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.overrides.horizon, Some(50));
        assert_eq!(cfg.output.formats.len(), 2);
        let p = cfg.problem.build().unwrap();
        assert_eq!(p.dim(), 4);
        assert!((p.initial_gap().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = SAMPLE.replace("trials = 3", "trials = 3\ntrails = 4");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&bad),
            Err(ZoError::Config(_))
        ));
        let bad = SAMPLE.replace("mu = 0.25", "mu = 0.25\nmuu = 1");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(ExperimentConfig::from_toml_str(&SAMPLE.replace("trials = 3", "trials = 0")).is_err());
        assert!(ExperimentConfig::from_toml_str(&SAMPLE.replace("delta = 0.1", "delta = 1.0")).is_err());
    }

    #[test]
    fn problem_parameters_must_apply() {
        let mut p = ProblemConfig::named("cosine_regularized");
        p.d = Some(3);
        p.mu = Some(0.1);
        assert!(p.build().is_err());
        p.mu = None;
        assert!(p.build().is_ok());
        assert!(matches!(
            ProblemConfig::named("rosenbrock").build(),
            Err(ZoError::UnknownProblem(_))
        ));
    }

    #[test]
    fn explicit_start() {
        let mut p = ProblemConfig::named("isotropic_quadratic");
        p.d = Some(2);
        p.x0 = Some(vec![2.0, 0.0]);
        assert_eq!(p.build().unwrap().initial_gap(), Some(2.0));
        p.start_gap = Some(1.0);
        assert!(p.build().is_err());
    }
}
