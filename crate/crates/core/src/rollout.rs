//! Episode simulation and empirical reward distributions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{self, Action, JointState, RoadNet, Status, TaskParams};
use crate::error::{Error, Result};
use crate::metrics::SIGMA_FLOOR;
use crate::seed;
use crate::solver::{self, SolverSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Exited,
    Caught,
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    /// Discounted return, with the step-`k` reward weighted by `discount^k`.
    pub ret: f64,
    pub steps: usize,
    pub outcome: Outcome,
}

/// One step of a simulated episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceStep {
    pub step: usize,
    pub state: JointState,
    pub action: Action,
    pub next: JointState,
    pub reward: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub exited: usize,
    pub caught: usize,
    pub truncated: usize,
}

impl OutcomeCounts {
    pub fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Exited => self.exited += 1,
            Outcome::Caught => self.caught += 1,
            Outcome::Truncated => self.truncated += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.exited + self.caught + self.truncated
    }
}

/// Mean and standard deviation of a return distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSummary {
    pub mean: f64,
    pub std: f64,
}

impl GaussianSummary {
    pub fn new(mean: f64, std: f64) -> Self {
        GaussianSummary { mean, std }
    }

    /// Same summary with the std raised to at least [`SIGMA_FLOOR`].
    pub fn floored(self) -> Self {
        GaussianSummary {
            mean: self.mean,
            std: self.std.max(SIGMA_FLOOR),
        }
    }
}

/// Empirical distribution of episode returns for one solver on one task.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardDist {
    pub label: String,
    pub samples: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std: f64,
    pub outcomes: OutcomeCounts,
}

#[derive(Serialize, Deserialize)]
struct RewardDistRecord {
    label: String,
    mean: f64,
    std: f64,
    n: usize,
    outcomes: OutcomeCounts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<Vec<f64>>,
}

impl RewardDist {
    pub fn from_episodes(label: impl Into<String>, episodes: &[EpisodeResult]) -> Result<Self> {
        let mut outcomes = OutcomeCounts::default();
        for ep in episodes {
            outcomes.record(ep.outcome);
        }
        Self::from_samples(label, episodes.iter().map(|e| e.ret).collect(), outcomes)
    }

    pub fn from_samples(label: impl Into<String>, samples: Vec<f64>, outcomes: OutcomeCounts) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::TooFewEpisodes {
                required: 2,
                got: samples.len(),
            });
        }
        let (mean, std) = mean_std(&samples);
        Ok(RewardDist {
            label: label.into(),
            samples,
            mean,
            std,
            outcomes,
        })
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    /// The floored (mean, std) pair used by the quality metric.
    pub fn summary(&self) -> GaussianSummary {
        GaussianSummary::new(self.mean, self.std).floored()
    }

    pub fn to_json(&self, include_samples: bool) -> String {
        let record = RewardDistRecord {
            label: self.label.clone(),
            mean: self.mean,
            std: self.std,
            n: self.n(),
            outcomes: self.outcomes,
            samples: include_samples.then(|| self.samples.clone()),
        };
        serde_json::to_string_pretty(&record).expect("reward distribution serializes")
    }

    /// Parses the JSON form. Files written without samples come back with an
    /// empty `samples` vector.
    pub fn from_json(text: &str) -> Result<Self> {
        let r: RewardDistRecord =
            serde_json::from_str(text).map_err(|e| Error::json("reward distribution", e))?;
        Ok(RewardDist {
            label: r.label,
            samples: r.samples.unwrap_or_default(),
            mean: r.mean,
            std: r.std,
            outcomes: r.outcomes,
        })
    }
}

/// Mean and n-1 standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn validate_inputs(params: &TaskParams, spec: &SolverSpec) -> Result<()> {
    params.validate()?;
    spec.validate()
}

/// Simulates one episode from the network's start positions.
pub fn run_episode(net: &RoadNet, params: &TaskParams, spec: &SolverSpec, seed: u64) -> Result<EpisodeResult> {
    run_episode_traced(net, params, spec, seed, |_| {})
}

/// [`run_episode`], reporting every step to `observe`.
pub fn run_episode_traced(
    net: &RoadNet,
    params: &TaskParams,
    spec: &SolverSpec,
    seed: u64,
    mut observe: impl FnMut(&TraceStep),
) -> Result<EpisodeResult> {
    validate_inputs(params, spec)?;
    let (mut env_rng, mut plan_rng) = seed::episode_rngs(seed);
    let mut state = net.initial_state();
    let mut ret = 0.0;
    let mut weight = 1.0;
    let mut steps = 0;
    while !state.is_terminal() {
        if steps == params.max_steps {
            state = state.truncated();
            break;
        }
        let action = solver::plan_action(&state, net, params, spec, &mut plan_rng)?;
        let next = env::sample_transition(&state, action, net, params, &mut env_rng)?;
        let r = env::reward(&state, action, &next, params);
        observe(&TraceStep {
            step: steps,
            state,
            action,
            next,
            reward: r,
        });
        ret += weight * r;
        weight *= params.discount;
        steps += 1;
        state = next;
    }
    let outcome = match state.status {
        Status::Exited => Outcome::Exited,
        Status::Caught => Outcome::Caught,
        Status::Truncated => Outcome::Truncated,
        Status::Running => unreachable!("loop exits only on terminal states"),
    };
    Ok(EpisodeResult { ret, steps, outcome })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// Runs `n_episodes` episodes, episode `i` seeded by `seed::derive(master_seed, i)`.
pub fn reward_distribution(
    net: &RoadNet,
    params: &TaskParams,
    spec: &SolverSpec,
    n_episodes: usize,
    master_seed: u64,
) -> Result<RewardDist> {
    reward_distribution_with(net, params, spec, n_episodes, master_seed, Execution::Parallel)
}

pub fn reward_distribution_with(
    net: &RoadNet,
    params: &TaskParams,
    spec: &SolverSpec,
    n_episodes: usize,
    master_seed: u64,
    execution: Execution,
) -> Result<RewardDist> {
    if n_episodes < 2 {
        return Err(Error::TooFewEpisodes {
            required: 2,
            got: n_episodes,
        });
    }
    validate_inputs(params, spec)?;
    let episode = |i: usize| run_episode(net, params, spec, seed::derive(master_seed, i as u64));
    let episodes: Vec<EpisodeResult> = match execution {
        Execution::Serial => (0..n_episodes).map(episode).collect::<Result<_>>()?,
        Execution::Parallel => (0..n_episodes).into_par_iter().map(episode).collect::<Result<_>>()?,
    };
    RewardDist::from_episodes(spec.label.clone(), &episodes)
}
