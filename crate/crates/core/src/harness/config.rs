use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::TaskParams;
use crate::error::{Error, Result};
use crate::features::{self, linspace};
use crate::metrics::DEFAULT_ALPHA;
use crate::solver::{MctsConfig, SolverSpec};
use crate::surrogate::RegressorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    Exp1,
    Exp2,
    Exp3,
    Exp4,
    Toy,
    Custom,
}

impl ExperimentId {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::Exp1 => "exp1",
            ExperimentId::Exp2 => "exp2",
            ExperimentId::Exp3 => "exp3",
            ExperimentId::Exp4 => "exp4",
            ExperimentId::Toy => "toy",
            ExperimentId::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.to_ascii_lowercase().as_str() {
            "exp1" => ExperimentId::Exp1,
            "exp2" => ExperimentId::Exp2,
            "exp3" => ExperimentId::Exp3,
            "exp4" => ExperimentId::Exp4,
            "toy" => ExperimentId::Toy,
            "custom" => ExperimentId::Custom,
            _ => return None,
        })
    }
}

impl std::fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which solvers a sweep axis is applied to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppliesTo {
    /// Task and every solver, trusted included.
    #[default]
    All,
    /// Candidate solvers only; the trusted solver keeps its own setting.
    Candidates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub feature: String,
    pub values: Vec<f64>,
    #[serde(default)]
    pub applies_to: AppliesTo,
}

impl SweepAxis {
    pub fn new(feature: &str, values: Vec<f64>) -> Self {
        SweepAxis {
            feature: feature.to_string(),
            values,
            applies_to: AppliesTo::All,
        }
    }

    pub fn candidates_only(feature: &str, values: Vec<f64>) -> Self {
        SweepAxis {
            applies_to: AppliesTo::Candidates,
            ..Self::new(feature, values)
        }
    }
}

/// Where the trusted solver's distribution comes from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrustedSource {
    /// Simulate the trusted solver at each sweep point.
    #[default]
    Simulation,
    /// Predict it with a surrogate model.
    Surrogate,
}

/// How the global reward range is obtained for direct-simulation runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RangeSource {
    /// Trusted-solver means across the sweep's tasks.
    #[default]
    TrustedMeans,
    /// Means of every simulated distribution, trusted and candidates.
    AllMeans,
    Fixed { r_low: f64, r_high: f64 },
}

/// Offline surrogate training settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub grid: Vec<SweepAxis>,
    pub n_episodes: usize,
    #[serde(default)]
    pub regressor: RegressorConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub id: ExperimentId,
    /// Bundled network name (`small`, `medium`) or a path to a network file.
    pub network: String,
    pub params: TaskParams,
    pub trusted: SolverSpec,
    pub candidates: Vec<SolverSpec>,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
    pub n_episodes: usize,
    pub master_seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub trusted_source: TrustedSource,
    #[serde(default)]
    pub range: RangeSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surrogate: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainingConfig>,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Reduced iteration and episode counts that finish in minutes.
    Desk,
    /// The published parameter table.
    Full,
}

fn mcts(label: &str, depth: usize, exploration: f64, iterations: usize) -> SolverSpec {
    SolverSpec::mcts(label, MctsConfig::new(depth, exploration, iterations))
}

impl ExperimentConfig {
    /// Built-in configuration for one of the reference experiments.
    /// `Custom` has no preset.
    pub fn preset(id: ExperimentId, scale: Scale) -> Option<Self> {
        let desk = scale == Scale::Desk;
        let n_episodes = if desk { 100 } else { 1000 };
        let its = |full: usize| if desk { 100 } else { full };
        let search_params = TaskParams {
            p_trans: 0.7,
            discount: 0.95,
            rwd_exit: 2000.0,
            rwd_caught: -2000.0,
            rwd_sense: -100.0,
            max_steps: 50,
            ..Default::default()
        };
        let cfg = match id {
            ExperimentId::Exp1 => ExperimentConfig {
                id,
                network: "small".into(),
                params: TaskParams::default(),
                trusted: mcts("trusted-d9", 9, 1000.0, 100),
                candidates: vec![mcts("mcts", 1, 1000.0, 100)],
                sweep: vec![SweepAxis::candidates_only("d_mcts", linspace(1.0, 10.0, 10))],
                n_episodes,
                master_seed: 0,
                alpha: DEFAULT_ALPHA,
                trusted_source: TrustedSource::Simulation,
                range: RangeSource::AllMeans,
                surrogate: None,
                training: None,
            },
            ExperimentId::Exp2 => ExperimentConfig {
                id,
                network: "medium".into(),
                params: TaskParams {
                    discount: 0.95,
                    max_steps: 150,
                    ..Default::default()
                },
                trusted: mcts("trusted-d25", 25, 2000.0, its(1000)),
                candidates: vec![mcts("mcts", 1, 2000.0, its(1000))],
                sweep: vec![SweepAxis::candidates_only(
                    "d_mcts",
                    (0..10).map(|i| (1 + 3 * i) as f64).collect(),
                )],
                n_episodes,
                master_seed: 0,
                alpha: DEFAULT_ALPHA,
                trusted_source: TrustedSource::Simulation,
                range: RangeSource::AllMeans,
                surrogate: None,
                training: None,
            },
            ExperimentId::Exp3 => ExperimentConfig {
                id,
                network: "small".into(),
                params: search_params,
                trusted: mcts("trusted-d8", 8, 1000.0, its(1000)),
                candidates: vec![mcts("d3", 3, 1000.0, its(1000)), mcts("d1", 1, 1000.0, its(1000))],
                sweep: vec![SweepAxis::new("p_trans", linspace(0.0, 1.0, 21))],
                n_episodes,
                master_seed: 0,
                alpha: DEFAULT_ALPHA,
                trusted_source: TrustedSource::Surrogate,
                range: RangeSource::TrustedMeans,
                surrogate: None,
                training: None,
            },
            ExperimentId::Exp4 => ExperimentConfig {
                id,
                network: "small".into(),
                params: search_params,
                trusted: mcts("trusted-d8", 8, 1000.0, its(1000)),
                candidates: vec![mcts("d3", 3, 1000.0, its(1000)), mcts("d1", 1, 1000.0, its(1000))],
                sweep: vec![
                    SweepAxis::new("p_trans", linspace(0.0, 1.0, 11)),
                    SweepAxis::new("e_mcts", linspace(10.0, 1000.0, 5)),
                ],
                n_episodes: if desk { 50 } else { 1000 },
                master_seed: 0,
                alpha: DEFAULT_ALPHA,
                trusted_source: TrustedSource::Surrogate,
                range: RangeSource::TrustedMeans,
                surrogate: None,
                training: None,
            },
            ExperimentId::Toy => ExperimentConfig {
                id,
                network: "small".into(),
                params: TaskParams::default(),
                trusted: SolverSpec::random("trusted"),
                candidates: vec![SolverSpec::random("candidate")],
                sweep: vec![SweepAxis::new("x", linspace(0.0, 1.0, 21))],
                n_episodes: 2,
                master_seed: 0,
                alpha: DEFAULT_ALPHA,
                trusted_source: TrustedSource::Simulation,
                range: RangeSource::Fixed { r_low: 0.0, r_high: 5.0 },
                surrogate: None,
                training: None,
            },
            ExperimentId::Custom => return None,
        };
        Some(cfg)
    }

    /// The training grid used by the built-in surrogate experiments.
    pub fn default_training(&self) -> Option<TrainingConfig> {
        let grid = match self.id {
            ExperimentId::Exp3 => vec![SweepAxis::new("p_trans", linspace(0.0, 1.0, 11))],
            ExperimentId::Exp4 => vec![
                SweepAxis::new("p_trans", linspace(0.0, 1.0, 6)),
                SweepAxis::new("e_mcts", linspace(10.0, 1000.0, 4)),
            ],
            _ => return None,
        };
        Some(TrainingConfig {
            grid,
            n_episodes: self.n_episodes,
            regressor: RegressorConfig::default(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::json("experiment config", e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.candidates.is_empty() {
            return bad("no candidate solvers".into());
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        let mut labels = std::collections::HashSet::new();
        for spec in &self.candidates {
            spec.validate()?;
            if spec.label == self.trusted.label {
                return bad(format!("candidate label `{}` equals the trusted label", spec.label));
            }
            if !labels.insert(spec.label.as_str()) {
                return bad(format!("duplicate candidate label `{}`", spec.label));
            }
        }
        self.trusted.validate()?;
        if self.id == ExperimentId::Toy {
            return Ok(());
        }
        self.params.validate()?;
        if self.n_episodes < 2 {
            return Err(Error::TooFewEpisodes {
                required: 2,
                got: self.n_episodes,
            });
        }
        for axis in self.sweep.iter().chain(self.training.iter().flat_map(|t| &t.grid)) {
            features::check_name(&axis.feature)?;
            if axis.values.is_empty() {
                return bad(format!("sweep over {} has no values", axis.feature));
            }
        }
        if let RangeSource::Fixed { r_low, r_high } = self.range {
            crate::metrics::RewardRange::new(r_low, r_high)?;
        }
        if self.trusted_source == TrustedSource::Surrogate
            && self.surrogate.is_none()
            && self.training.is_none()
        {
            return Err(Error::MissingSurrogate(self.id.to_string()));
        }
        Ok(())
    }
}
