//! Surrogate model of the trusted solver: predicts the mean and standard
//! deviation of its return distribution from task/solver features, so that
//! candidate solvers can be scored on tasks the trusted solver never ran.

mod knn;
mod mlp;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use knn::KNearest;
pub use mlp::{Activation, Layer, Mlp, MlpConfig};

use crate::env::{RoadNet, TaskParams};
use crate::error::{Error, Result};
use crate::features::{self, TaskFeatures};
use crate::metrics::{self, RewardRange, SIGMA_FLOOR};
use crate::rollout::{self, GaussianSummary};
use crate::seed;
use crate::solver::SolverSpec;

pub const MODEL_VERSION: u32 = 1;

/// Minimum number of rows accepted by [`SurrogateModel::fit`].
pub const MIN_TRAINING_ROWS: usize = 4;

/// One observed trusted-solver distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRow {
    pub features: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub schema: Vec<String>,
    pub rows: Vec<TrainingRow>,
}

impl TrainingSet {
    /// Trusted-solver means across the training tasks, as a reward range.
    pub fn reward_range(&self) -> Result<RewardRange> {
        let means: Vec<f64> = self.rows.iter().map(|r| r.mean).collect();
        metrics::reward_range(&means)
    }
}

/// Runs the trusted solver at every grid point and records its (mean, std).
///
/// Each point's episodes are seeded from `master_seed` and the point's
/// feature values, so duplicate points produce identical rows.
pub fn build_training_set(
    net: &RoadNet,
    params_template: &TaskParams,
    trusted: &SolverSpec,
    grid: &[TaskFeatures],
    n_episodes: usize,
    master_seed: u64,
) -> Result<TrainingSet> {
    let first = grid
        .first()
        .ok_or_else(|| Error::InvalidArgument("training grid is empty".into()))?;
    let schema = first.schema.clone();
    for name in &schema {
        features::check_name(name)?;
    }
    let mut rows = Vec::with_capacity(grid.len());
    for point in grid {
        if point.schema != schema {
            return Err(Error::SchemaMismatch {
                expected: schema.clone(),
                got: point.schema.clone(),
            });
        }
        let mut params = params_template.clone();
        let mut solver = trusted.clone();
        point.apply(&mut params, &mut solver)?;
        let seed = seed::derive_point(master_seed, &trusted.label, &point.values);
        let dist = rollout::reward_distribution(net, &params, &solver, n_episodes, seed)?;
        rows.push(TrainingRow {
            features: point.values.clone(),
            mean: dist.mean,
            std: dist.std,
        });
    }
    Ok(TrainingSet { schema, rows })
}

/// Affine map to zero mean and unit spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub offset: f64,
    pub scale: f64,
}

impl Scaling {
    pub const IDENTITY: Scaling = Scaling { offset: 0.0, scale: 1.0 };

    /// Fitted to the population mean and std; a constant column gets scale 1.
    pub fn fit(xs: impl Iterator<Item = f64> + Clone) -> Self {
        let n = xs.clone().count() as f64;
        let offset = xs.clone().sum::<f64>() / n;
        let var = xs.map(|x| (x - offset).powi(2)).sum::<f64>() / n;
        let scale = if var.sqrt() > 1e-12 * offset.abs().max(1.0) { var.sqrt() } else { 1.0 };
        Scaling { offset, scale }
    }

    pub fn standardize(&self, x: f64) -> f64 {
        (x - self.offset) / self.scale
    }

    pub fn destandardize(&self, z: f64) -> f64 {
        z * self.scale + self.offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScaling {
    pub mean: Scaling,
    pub std: Scaling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regressor {
    Mlp(Mlp),
    KNearest(KNearest),
}

impl Regressor {
    fn predict(&self, x: &[f64]) -> f64 {
        match self {
            Regressor::Mlp(m) => m.predict(x),
            Regressor::KNearest(k) => k.predict(x),
        }
    }
}

/// Which regressor family to train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegressorConfig {
    Mlp(MlpConfig),
    KNearest { k: usize },
}

impl Default for RegressorConfig {
    fn default() -> Self {
        RegressorConfig::Mlp(MlpConfig::default())
    }
}

impl RegressorConfig {
    fn train(&self, xs: &[Vec<f64>], ys: &[f64], seed_offset: u64) -> Result<Regressor> {
        match self {
            RegressorConfig::Mlp(cfg) => {
                let seed = cfg.seed.wrapping_add(seed_offset);
                let mut mlp = Mlp::new(xs[0].len(), &cfg.hidden, seed);
                mlp.train(xs, ys, cfg);
                if !mlp.is_finite() {
                    return Err(Error::InvalidArgument("MLP training diverged".into()));
                }
                Ok(Regressor::Mlp(mlp))
            }
            RegressorConfig::KNearest { k } => {
                if *k == 0 {
                    return Err(Error::InvalidArgument("k must be at least 1".into()));
                }
                Ok(Regressor::KNearest(KNearest::new(*k, xs.to_vec(), ys.to_vec())))
            }
        }
    }
}

/// In-sample root-mean-square errors, in reward units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub rows: usize,
    pub rmse_mean: f64,
    pub rmse_std: f64,
}

/// A surrogate prediction together with whether it extrapolates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub summary: GaussianSummary,
    /// Some feature lies outside the training data's per-feature bounds.
    pub extrapolated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateModel {
    pub version: u32,
    pub schema: Vec<String>,
    pub feature_scaling: Vec<Scaling>,
    pub target_scaling: TargetScaling,
    pub mean_regressor: Regressor,
    pub std_regressor: Regressor,
    /// Per-feature (min, max) seen in training.
    pub feature_bounds: Vec<(f64, f64)>,
    /// Trusted-solver reward range over the training tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_range: Option<RewardRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<FitReport>,
}

impl SurrogateModel {
    pub fn fit(data: &TrainingSet, config: &RegressorConfig) -> Result<Self> {
        let rows = &data.rows;
        if rows.len() < MIN_TRAINING_ROWS {
            return Err(Error::InvalidArgument(format!(
                "surrogate needs at least {MIN_TRAINING_ROWS} training rows, got {}",
                rows.len()
            )));
        }
        let width = data.schema.len();
        if width == 0 || rows.iter().any(|r| r.features.len() != width) {
            return Err(Error::InvalidArgument("training rows do not match the schema".into()));
        }
        if rows
            .iter()
            .any(|r| !(r.mean.is_finite() && r.std.is_finite()) || r.features.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::NonFinite("training data"));
        }

        let feature_scaling: Vec<Scaling> = (0..width)
            .map(|j| Scaling::fit(rows.iter().map(move |r| r.features[j])))
            .collect();
        let feature_bounds = (0..width)
            .map(|j| {
                rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                    (lo.min(r.features[j]), hi.max(r.features[j]))
                })
            })
            .collect();
        // Neighbour averaging is scale-equivariant, and raw targets let k=1
        // reproduce training rows exactly.
        let target_scaling = match config {
            RegressorConfig::KNearest { .. } => TargetScaling {
                mean: Scaling::IDENTITY,
                std: Scaling::IDENTITY,
            },
            RegressorConfig::Mlp(_) => TargetScaling {
                mean: Scaling::fit(rows.iter().map(|r| r.mean)),
                std: Scaling::fit(rows.iter().map(|r| r.std)),
            },
        };
        let xs: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.features.iter().zip(&feature_scaling).map(|(&x, s)| s.standardize(x)).collect())
            .collect();
        let mean_ys: Vec<f64> = rows.iter().map(|r| target_scaling.mean.standardize(r.mean)).collect();
        let std_ys: Vec<f64> = rows.iter().map(|r| target_scaling.std.standardize(r.std)).collect();

        let mut model = SurrogateModel {
            version: MODEL_VERSION,
            schema: data.schema.clone(),
            feature_scaling,
            target_scaling,
            mean_regressor: config.train(&xs, &mean_ys, 0)?,
            std_regressor: config.train(&xs, &std_ys, 1)?,
            feature_bounds,
            reward_range: data.reward_range().ok(),
            report: None,
        };

        let n = rows.len() as f64;
        let (mut se_mean, mut se_std) = (0.0, 0.0);
        for r in rows {
            let (m, s) = model.raw_predict(&r.features);
            se_mean += (m - r.mean).powi(2);
            se_std += (s.max(0.0) - r.std).powi(2);
        }
        model.report = Some(FitReport {
            rows: rows.len(),
            rmse_mean: (se_mean / n).sqrt(),
            rmse_std: (se_std / n).sqrt(),
        });
        Ok(model)
    }

    fn raw_predict(&self, values: &[f64]) -> (f64, f64) {
        let x: Vec<f64> = values
            .iter()
            .zip(&self.feature_scaling)
            .map(|(&v, s)| s.standardize(v))
            .collect();
        (
            self.target_scaling.mean.destandardize(self.mean_regressor.predict(&x)),
            self.target_scaling.std.destandardize(self.std_regressor.predict(&x)),
        )
    }

    fn check_schema(&self, features: &TaskFeatures) -> Result<()> {
        if features.schema != self.schema {
            return Err(Error::SchemaMismatch {
                expected: self.schema.clone(),
                got: features.schema.clone(),
            });
        }
        Ok(())
    }

    /// Predicted trusted-solver summary, std clamped to [`SIGMA_FLOOR`].
    pub fn predict(&self, features: &TaskFeatures) -> Result<GaussianSummary> {
        Ok(self.predict_detailed(features)?.summary)
    }

    pub fn predict_detailed(&self, features: &TaskFeatures) -> Result<Prediction> {
        self.check_schema(features)?;
        let (mean, std) = self.raw_predict(&features.values);
        let extrapolated = features
            .values
            .iter()
            .zip(&self.feature_bounds)
            .any(|(&v, &(lo, hi))| v < lo || v > hi);
        Ok(Prediction {
            summary: GaussianSummary::new(mean, std.max(SIGMA_FLOOR)),
            extrapolated,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            version: u32,
        }
        let header: Header = serde_json::from_str(text).map_err(|e| Error::json("surrogate model", e))?;
        if header.version != MODEL_VERSION {
            return Err(Error::UnsupportedVersion(header.version));
        }
        let model: SurrogateModel =
            serde_json::from_str(text).map_err(|e| Error::json("surrogate model", e))?;
        let width = model.schema.len();
        if model.feature_scaling.len() != width || model.feature_bounds.len() != width {
            return Err(Error::InvalidArgument("surrogate model scaling does not match schema".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(rows: &[(f64, f64, f64)]) -> TrainingSet {
        TrainingSet {
            schema: vec!["p_trans".into()],
            rows: rows
                .iter()
                .map(|&(x, mean, std)| TrainingRow { features: vec![x], mean, std })
                .collect(),
        }
    }

    fn features(x: f64) -> TaskFeatures {
        TaskFeatures::single("p_trans", x).unwrap()
    }

    #[test]
    fn constant_targets_predict_constant() {
        let data = set(&[(0.0, 50.0, 5.0), (0.3, 50.0, 5.0), (0.6, 50.0, 5.0), (1.0, 50.0, 5.0)]);
        let knn = SurrogateModel::fit(&data, &RegressorConfig::KNearest { k: 2 }).unwrap();
        let mlp = SurrogateModel::fit(&data, &RegressorConfig::default()).unwrap();
        for x in [0.0, 0.45, 0.9, 1.5] {
            let p = knn.predict(&features(x)).unwrap();
            assert!((p.mean - 50.0).abs() < 1e-6 && (p.std - 5.0).abs() < 1e-6);
            let p = mlp.predict(&features(x)).unwrap();
            assert!((p.mean - 50.0).abs() <= 0.02 * 50.0, "{p:?}");
            assert!((p.std - 5.0).abs() <= 0.02 * 5.0, "{p:?}");
        }
    }

    #[test]
    fn knn_memorizes_linear_targets() {
        let data = set(&[(0.0, 0.0, 1.0), (0.25, 10.0, 2.0), (0.5, 20.0, 3.0), (0.75, 30.0, 4.0), (1.0, 40.0, 5.0)]);
        let model = SurrogateModel::fit(&data, &RegressorConfig::KNearest { k: 1 }).unwrap();
        for row in &data.rows {
            let p = model.predict(&features(row.features[0])).unwrap();
            assert_eq!((p.mean, p.std), (row.mean, row.std));
        }
        assert_eq!(model.report.unwrap().rmse_mean, 0.0);
    }

    #[test]
    fn too_few_rows() {
        let data = set(&[(0.0, 0.0, 1.0), (0.5, 1.0, 1.0), (1.0, 2.0, 1.0)]);
        assert!(SurrogateModel::fit(&data, &RegressorConfig::KNearest { k: 1 }).is_err());
    }

    #[test]
    fn schema_mismatch_and_extrapolation() {
        let data = set(&[(0.0, 0.0, 1.0), (0.25, 10.0, 2.0), (0.5, 20.0, 3.0), (0.75, 30.0, 4.0)]);
        let model = SurrogateModel::fit(&data, &RegressorConfig::KNearest { k: 1 }).unwrap();
        let wrong = TaskFeatures::single("e_mcts", 1.0).unwrap();
        assert!(matches!(model.predict(&wrong), Err(Error::SchemaMismatch { .. })));
        let far = model.predict_detailed(&features(3.0)).unwrap();
        assert!(far.extrapolated);
        assert!(far.summary.mean.is_finite());
        assert!(!model.predict_detailed(&features(0.3)).unwrap().extrapolated);
    }

    #[test]
    fn negative_std_prediction_is_clamped() {
        let data = set(&[(0.0, 0.0, 0.0), (0.25, 0.0, 0.0), (0.5, 0.0, 0.0), (0.75, 0.0, 0.0)]);
        let model = SurrogateModel::fit(&data, &RegressorConfig::KNearest { k: 1 }).unwrap();
        assert_eq!(model.predict(&features(0.1)).unwrap().std, SIGMA_FLOOR);
    }

    #[test]
    fn version_mismatch_and_truncation_fail_to_load() {
        let data = set(&[(0.0, 0.0, 1.0), (0.25, 10.0, 2.0), (0.5, 20.0, 3.0), (0.75, 30.0, 4.0)]);
        let model = SurrogateModel::fit(&data, &RegressorConfig::KNearest { k: 1 }).unwrap();
        let json = model.to_json();
        assert!(matches!(
            SurrogateModel::from_json(&json.replacen("\"version\": 1", "\"version\": 2", 1)),
            Err(Error::UnsupportedVersion(2))
        ));
        assert!(SurrogateModel::from_json(&json[..json.len() / 2]).is_err());
        assert_eq!(SurrogateModel::from_json(&json).unwrap(), model);
    }
}
