//! Experiment runner: sweeps task/solver parameters, scores every candidate
//! solver against the trusted one and records a reproducible manifest.

mod config;
mod output;
pub mod toy;

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use config::{
    AppliesTo, ExperimentConfig, ExperimentId, RangeSource, Scale, SweepAxis, TrainingConfig, TrustedSource,
};
pub use output::{csv_header, format_float, to_csv, to_json, write_outputs, Format, CSV_COLUMNS};

use crate::env::{RoadNet, TaskParams};
use crate::error::{Error, Result};
use crate::features::{self, TaskFeatures};
use crate::metrics::{self, RewardRange};
use crate::rollout::{self, GaussianSummary, OutcomeCounts, RewardDist};
use crate::seed;
use crate::solver::SolverSpec;
use crate::surrogate::{self, FitReport, SurrogateModel};

/// One candidate solver scored at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: ExperimentId,
    pub sweep: Vec<(String, f64)>,
    pub label: String,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    pub outcomes: OutcomeCounts,
    /// Trusted-solver summary the row was scored against.
    pub trusted: GaussianSummary,
    pub range: RewardRange,
    pub hellinger_sq: f64,
    pub q: f64,
    pub xq: f64,
}

impl ResultRow {
    pub fn sweep_value(&self, feature: &str) -> Option<f64> {
        self.sweep.iter().find(|(k, _)| k == feature).map(|&(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkInfo {
    pub name: String,
    pub source: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrustedEntry {
    pub sweep: Vec<(String, f64)>,
    pub mean: f64,
    pub std: f64,
    pub source: TrustedSource,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub extrapolated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurrogateInfo {
    /// File the model was loaded from, if it was not trained in this run.
    pub path: Option<String>,
    pub sha256: String,
    pub report: Option<FitReport>,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub experiment: ExperimentId,
    pub code_version: String,
    pub config: ExperimentConfig,
    pub seed_scheme: String,
    pub network: Option<NetworkInfo>,
    pub reward_range: RewardRange,
    pub trusted: Vec<TrustedEntry>,
    pub surrogate: Option<SurrogateInfo>,
    pub csv_columns: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub manifest: Manifest,
    /// Surrogate trained during this run, if any.
    pub trained_surrogate: Option<SurrogateModel>,
}

pub const SEED_SCHEME: &str = "episode i of solver L at sweep values v: \
    splitmix64 chain over (master_seed, fnv1a(L), bits(v)...), then mixed with i; \
    ChaCha8 stream 0 drives the environment, stream 1 the planner";

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Resolves a bundled network name or a file path.
pub fn load_network(spec: &str) -> Result<(RoadNet, NetworkInfo)> {
    let (net, source, bytes) = match RoadNet::bundled_source(spec) {
        Some(text) => (RoadNet::from_json(text)?, format!("bundled:{spec}"), text.as_bytes().to_vec()),
        None => {
            let bytes = std::fs::read(spec).map_err(|e| Error::io(spec, e))?;
            let text = String::from_utf8_lossy(&bytes);
            (RoadNet::from_json(&text)?, spec.to_string(), bytes)
        }
    };
    let info = NetworkInfo {
        name: net.name().to_string(),
        source,
        sha256: sha256_hex(&bytes),
    };
    Ok((net, info))
}

struct SweepPoint {
    all: TaskFeatures,
    trusted_key: TaskFeatures,
}

fn sweep_points(config: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    let axes: Vec<(String, Vec<f64>)> = config
        .sweep
        .iter()
        .map(|a| (a.feature.clone(), a.values.clone()))
        .collect();
    let shared: Vec<bool> = config.sweep.iter().map(|a| a.applies_to == AppliesTo::All).collect();
    features::grid(&axes)?
        .into_iter()
        .map(|all| {
            let (schema, values) = all
                .schema
                .iter()
                .zip(&all.values)
                .zip(&shared)
                .filter(|(_, &s)| s)
                .map(|((k, &v), _)| (k.clone(), v))
                .unzip();
            Ok(SweepPoint {
                trusted_key: TaskFeatures::new(schema, values)?,
                all,
            })
        })
        .collect()
}

fn pairs(f: &TaskFeatures) -> Vec<(String, f64)> {
    f.schema.iter().cloned().zip(f.values.iter().copied()).collect()
}

fn instantiate(
    base: &TaskParams,
    solver: &SolverSpec,
    features: &TaskFeatures,
) -> Result<(TaskParams, SolverSpec)> {
    let mut params = base.clone();
    let mut solver = solver.clone();
    features.apply(&mut params, &mut solver)?;
    params.validate()?;
    solver.validate()?;
    Ok((params, solver))
}

fn simulate(
    net: &RoadNet,
    base: &TaskParams,
    solver: &SolverSpec,
    point: &TaskFeatures,
    config: &ExperimentConfig,
) -> Result<RewardDist> {
    let (params, spec) = instantiate(base, solver, point)?;
    let seed = seed::derive_point(config.master_seed, &solver.label, &point.values);
    rollout::reward_distribution(net, &params, &spec, config.n_episodes, seed)
}

/// Feature vector for the surrogate, picked by name from a sweep point.
fn surrogate_features(model: &SurrogateModel, point: &TaskFeatures) -> Result<TaskFeatures> {
    let values = model
        .schema
        .iter()
        .map(|name| {
            point
                .schema
                .iter()
                .position(|k| k == name)
                .map(|i| point.values[i])
                .ok_or_else(|| Error::SchemaMismatch {
                    expected: model.schema.clone(),
                    got: point.schema.clone(),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    TaskFeatures::new(model.schema.clone(), values)
}

/// Trains the trusted-solver surrogate described by `training`.
pub fn train_surrogate(
    net: &RoadNet,
    config: &ExperimentConfig,
    training: &TrainingConfig,
) -> Result<SurrogateModel> {
    let axes: Vec<(String, Vec<f64>)> = training
        .grid
        .iter()
        .map(|a| (a.feature.clone(), a.values.clone()))
        .collect();
    let grid = features::grid(&axes)?;
    let data = surrogate::build_training_set(
        net,
        &config.params,
        &config.trusted,
        &grid,
        training.n_episodes,
        seed::derive_str(config.master_seed, "surrogate-training"),
    )?;
    SurrogateModel::fit(&data, &training.regressor)
}

/// Runs an experiment end to end.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let csv_keys: Vec<String> = config.sweep.iter().map(|a| a.feature.clone()).collect();
    if config.id == ExperimentId::Toy {
        let rows = toy::run(config)?;
        let manifest = Manifest {
            experiment: config.id,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            seed_scheme: "none (analytic)".into(),
            network: None,
            reward_range: RewardRange::with_width(toy::TOY_WIDTHS[0])?,
            trusted: rows
                .iter()
                .filter(|r| r.range.width() == toy::TOY_WIDTHS[0])
                .map(|r| TrustedEntry {
                    sweep: r.sweep.clone(),
                    mean: r.trusted.mean,
                    std: r.trusted.std,
                    source: TrustedSource::Simulation,
                    extrapolated: false,
                })
                .collect(),
            surrogate: None,
            csv_columns: csv_header(&["x".to_string()]),
        };
        return Ok(ExperimentResult {
            rows,
            manifest,
            trained_surrogate: None,
        });
    }

    let (net, net_info) = load_network(&config.network)?;
    let points = sweep_points(config)?;

    // Candidate distributions, one per (point, candidate).
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..config.candidates.len()).map(move |c| (p, c)))
        .collect();
    let candidate_dists: Vec<RewardDist> = jobs
        .par_iter()
        .map(|&(p, c)| simulate(&net, &config.params, &config.candidates[c], &points[p].all, config))
        .collect::<Result<_>>()?;

    // Trusted summaries, one per point (shared across points with equal keys).
    let mut trusted_model: Option<SurrogateModel> = None;
    let mut trained = false;
    let mut surrogate_info = None;
    let trusted: Vec<(GaussianSummary, bool)> = match config.trusted_source {
        TrustedSource::Simulation => {
            let mut keys: Vec<&TaskFeatures> = Vec::new();
            for p in &points {
                if !keys.contains(&&p.trusted_key) {
                    keys.push(&p.trusted_key);
                }
            }
            let dists: Vec<RewardDist> = keys
                .par_iter()
                .map(|k| simulate(&net, &config.params, &config.trusted, k, config))
                .collect::<Result<_>>()?;
            points
                .iter()
                .map(|p| {
                    let i = keys.iter().position(|k| **k == p.trusted_key).unwrap();
                    (dists[i].summary(), false)
                })
                .collect()
        }
        TrustedSource::Surrogate => {
            let model = match (&config.surrogate, &config.training) {
                (Some(path), _) => {
                    let model = SurrogateModel::load(path)?;
                    surrogate_info = Some(SurrogateInfo {
                        path: Some(path.display().to_string()),
                        sha256: sha256_hex(model.to_json().as_bytes()),
                        report: model.report,
                    });
                    model
                }
                (None, Some(training)) => {
                    trained = true;
                    let model = train_surrogate(&net, config, training)?;
                    surrogate_info = Some(SurrogateInfo {
                        path: None,
                        sha256: sha256_hex(model.to_json().as_bytes()),
                        report: model.report,
                    });
                    model
                }
                (None, None) => return Err(Error::MissingSurrogate(config.id.to_string())),
            };
            let preds = points
                .iter()
                .map(|p| {
                    let pred = model.predict_detailed(&surrogate_features(&model, &p.all)?)?;
                    Ok((pred.summary, pred.extrapolated))
                })
                .collect::<Result<Vec<_>>>()?;
            trusted_model = Some(model);
            preds
        }
    };

    let range = match config.range {
        RangeSource::Fixed { r_low, r_high } => RewardRange::new(r_low, r_high)?,
        RangeSource::TrustedMeans => match &trusted_model {
            Some(model) => model.reward_range.ok_or(Error::DegenerateRange)?,
            None => metrics::reward_range(&trusted.iter().map(|(s, _)| s.mean).collect::<Vec<_>>())?,
        },
        RangeSource::AllMeans => {
            let mut means: Vec<f64> = trusted.iter().map(|(s, _)| s.mean).collect();
            means.extend(candidate_dists.iter().map(|d| d.mean));
            if let Some(r) = trusted_model.as_ref().and_then(|m| m.reward_range) {
                means.extend([r.r_low, r.r_high]);
            }
            metrics::reward_range(&means)?
        }
    };

    let mut rows = jobs
        .iter()
        .zip(&candidate_dists)
        .map(|(&(p, c), dist)| {
            let (trusted_summary, _) = trusted[p];
            let sq = metrics::solver_quality(&trusted_summary, &dist.summary(), &range, config.alpha)?;
            Ok(ResultRow {
                experiment: config.id,
                sweep: pairs(&points[p].all),
                label: config.candidates[c].label.clone(),
                mean: dist.mean,
                std: dist.std,
                n: dist.n(),
                outcomes: dist.outcomes,
                trusted: trusted_summary,
                range,
                hellinger_sq: sq.hellinger_sq,
                q: sq.q,
                xq: sq.xq,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        let va = a.sweep.iter().map(|(_, v)| v);
        let vb = b.sweep.iter().map(|(_, v)| v);
        va.zip(vb)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.label.cmp(&b.label))
    });

    let manifest = Manifest {
        experiment: config.id,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        seed_scheme: SEED_SCHEME.into(),
        network: Some(net_info),
        reward_range: range,
        trusted: points
            .iter()
            .zip(&trusted)
            .map(|(p, (s, extrapolated))| TrustedEntry {
                sweep: pairs(&p.all),
                mean: s.mean,
                std: s.std,
                source: config.trusted_source,
                extrapolated: *extrapolated,
            })
            .collect(),
        surrogate: surrogate_info,
        csv_columns: csv_header(&csv_keys),
    };
    Ok(ExperimentResult {
        rows,
        manifest,
        trained_surrogate: if trained { trusted_model } else { None },
    })
}

/// Convenience for callers holding a config file path.
pub fn run_experiment_file(path: impl AsRef<Path>) -> Result<ExperimentResult> {
    run_experiment(&ExperimentConfig::load(path)?)
}
