//! Experiment configuration, read from TOML and echoed into the JSON summary.

use std::path::Path;

use bpre_core::offspring::{EnvironmentModel, OffspringFamily};
use bpre_core::walk::{IncrementLaw, StableParams};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Largest p/n accepted without a warning.
pub const P_OVER_N_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ReducedLaw,
    MinimaLaw,
    SurvivalAsymptotics,
    TSmall,
    WConstancy,
    Harmonicity,
    LimitLawRoutes,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::ReducedLaw => "reduced-law",
            ExperimentKind::MinimaLaw => "minima-law",
            ExperimentKind::SurvivalAsymptotics => "survival-asymptotics",
            ExperimentKind::TSmall => "t-small",
            ExperimentKind::WConstancy => "w-constancy",
            ExperimentKind::Harmonicity => "harmonicity",
            ExperimentKind::LimitLawRoutes => "limit-law-routes",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IncrementSpec {
    LatticeSsrw,
    Gaussian {
        #[serde(default = "one")]
        sigma: f64,
    },
    ExactStable {
        alpha: f64,
        #[serde(default)]
        beta: f64,
        #[serde(default = "half")]
        scale: f64,
    },
    TwoSidedPareto {
        alpha: f64,
        #[serde(default = "half")]
        right_weight: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

impl IncrementSpec {
    pub fn build(&self) -> Result<IncrementLaw<f64>> {
        Ok(match *self {
            IncrementSpec::LatticeSsrw => IncrementLaw::LatticeSsrw,
            IncrementSpec::Gaussian { sigma } => IncrementLaw::gaussian(sigma)?,
            IncrementSpec::ExactStable { alpha, beta, scale } => {
                IncrementLaw::exact_stable(StableParams::new(alpha, beta, scale)?)
            }
            IncrementSpec::TwoSidedPareto { alpha, right_weight } => {
                IncrementLaw::two_sided_pareto(alpha, right_weight)?
            }
        })
    }
}

impl Default for IncrementSpec {
    fn default() -> Self {
        IncrementSpec::Gaussian { sigma: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSpec {
    #[serde(default)]
    pub increments: IncrementSpec,
    #[serde(default = "geometric")]
    pub offspring: OffspringFamily<f64>,
}

fn geometric() -> OffspringFamily<f64> {
    OffspringFamily::Geometric
}

impl Default for EnvironmentSpec {
    fn default() -> Self {
        EnvironmentSpec { increments: IncrementSpec::default(), offspring: geometric() }
    }
}

impl EnvironmentSpec {
    pub fn model(&self) -> Result<EnvironmentModel<f64>> {
        Ok(EnvironmentModel::iid(self.increments.build()?, self.offspring))
    }
}

/// How p is chosen for each n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PRule {
    /// One p per entry of the n grid.
    List { values: Vec<u64> },
    /// p = floor(n^gamma).
    Power { gamma: f64 },
}

impl PRule {
    pub fn p_for(&self, index: usize, n: u64) -> Result<u64> {
        match self {
            PRule::List { values } => values
                .get(index)
                .copied()
                .ok_or_else(|| HarnessError::Config(format!("p list has no entry for n grid position {index}"))),
            PRule::Power { gamma } => {
                if !(*gamma > 0.0 && *gamma < 1.0) {
                    return Err(HarnessError::Config(format!("power rule needs gamma in (0,1), got {gamma}")));
                }
                Ok(((n as f64).powf(*gamma).floor() as u64).max(1))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// (n, p) pairs and the warnings raised while forming them.
pub type NpPairs = (Vec<(u64, u64)>, Vec<String>);

/// All experiment settings. Fields not used by an experiment are ignored;
/// absent optional fields take experiment-specific defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub environment: EnvironmentSpec,
    #[serde(default)]
    pub n_grid: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_rule: Option<PRule>,
    /// Replicate budget: per n for population experiments, environments for
    /// survival asymptotics, MC paths elsewhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<u64>,
    /// Population replicas per environment (M).
    #[serde(default = "default_replicas")]
    pub replicas_per_environment: u64,
    /// Keep simulating in fixed blocks until this many survivors are seen.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_survivors: Option<u64>,
    #[serde(default = "default_min_survivors")]
    pub min_survivors: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_grid: Option<Vec<u64>>,
    /// Use exact lattice formulas instead of Monte Carlo where possible.
    #[serde(default)]
    pub exact: bool,
    /// Series truncation K for V and U.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<u64>,
    /// Spacing and extent of the V / U tabulation grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_max: Option<f64>,
    /// Points at which harmonicity residuals are checked.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_points: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap_resamples: Option<usize>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
    /// Write every replicate, not only survivors.
    #[serde(default)]
    pub write_all_observations: bool,
}

fn default_seed() -> u64 {
    1
}

fn default_replicas() -> u64 {
    1
}

fn default_min_survivors() -> u64 {
    500
}

/// Pass/fail thresholds; absent values take experiment defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks: Option<f64>,
    /// Absolute tolerance for profile or route comparisons.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_band: Option<f64>,
    #[serde(default = "default_true")]
    pub require_decreasing: bool,
    /// The two n values whose ratio should agree within `relative`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plateau_pair: Option<(u64, u64)>,
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    /// A config with defaults for `kind` and nothing else set.
    pub fn new(kind: ExperimentKind) -> Self {
        Self::from_toml(&format!("experiment = \"{}\"", kind.name())).expect("minimal config parses")
    }

    /// (n, p) pairs from the n grid and the p rule, with a warning for each
    /// pair with p/n above [`P_OVER_N_LIMIT`].
    pub fn np_pairs(&self) -> Result<NpPairs> {
        let rule = self.p_rule.clone().unwrap_or(PRule::Power { gamma: 0.5 });
        let mut pairs = Vec::with_capacity(self.n_grid.len());
        let mut warnings = Vec::new();
        for (i, &n) in self.n_grid.iter().enumerate() {
            let p = rule.p_for(i, n)?;
            if p > n {
                return Err(HarnessError::Config(format!("p = {p} exceeds n = {n}")));
            }
            if p as f64 / n as f64 > P_OVER_N_LIMIT {
                warnings.push(format!("p/n = {p}/{n} exceeds {P_OVER_N_LIMIT}; p should be small against n"));
            }
            pairs.push((n, p));
        }
        Ok((pairs, warnings))
    }

    pub fn x_grid_or_default(&self) -> Vec<f64> {
        self.x_grid.clone().unwrap_or_else(|| bpre_core::limit_law::DEFAULT_X_GRID.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let cfg = ExperimentConfig::from_toml(
            r#"
experiment = "reduced-law"
seed = 7
n_grid = [512, 2048]
p_rule = { kind = "power", gamma = 0.5 }
target_survivors = 100

[environment]
increments = { kind = "gaussian", sigma = 1.0 }
offspring = { kind = "geometric" }

[thresholds]
ks = 0.15
"#,
        )
        .unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::ReducedLaw);
        assert_eq!(cfg.np_pairs().unwrap().0, vec![(512, 22), (2048, 45)]);
        assert_eq!(cfg.thresholds.ks, Some(0.15));
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_unknown_fields_and_warns_on_large_p() {
        assert!(ExperimentConfig::from_toml("experiment = \"harmonicity\"\nbogus = 1").is_err());
        let mut cfg = ExperimentConfig::new(ExperimentKind::ReducedLaw);
        cfg.n_grid = vec![100];
        cfg.p_rule = Some(PRule::List { values: vec![50] });
        assert_eq!(cfg.np_pairs().unwrap().1.len(), 1);
    }
}
