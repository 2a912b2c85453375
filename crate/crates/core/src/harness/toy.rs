//! Analytic two-solver example: fixed (mean, std) curves over a generic
//! parameter `x`, scored under three reward-range widths.

use std::f64::consts::PI;

use crate::error::Result;
use crate::metrics::{self, RewardRange};
use crate::rollout::{GaussianSummary, OutcomeCounts};

use super::{ExperimentConfig, ResultRow};

/// Range widths, from "large" to "tiny".
pub const TOY_WIDTHS: [f64; 3] = [5.0, 0.05, 0.005];

/// Points of interest: equal means (A), candidate worse and noisier (B),
/// candidate better but noisier (C).
pub const POINT_A: f64 = 0.0;
pub const POINT_B: f64 = 0.75;
pub const POINT_C: f64 = 0.25;

pub fn trusted_curve(x: f64) -> GaussianSummary {
    GaussianSummary::new(2.0 - x, 0.1 + 0.1 * x)
}

pub fn candidate_curve(x: f64) -> GaussianSummary {
    GaussianSummary::new(2.0 - x + 0.4 * (2.0 * PI * x).sin(), 0.3)
}

fn width_label(width: f64) -> String {
    format!("range={width}")
}

pub(super) fn run(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let xs: Vec<f64> = config
        .sweep
        .first()
        .map(|a| a.values.clone())
        .unwrap_or_else(|| vec![POINT_A, POINT_C, POINT_B]);
    let mut rows = Vec::new();
    for &x in &xs {
        let trusted = trusted_curve(x);
        let candidate = candidate_curve(x);
        for width in TOY_WIDTHS {
            let range = RewardRange::with_width(width)?;
            let sq = metrics::solver_quality(&trusted, &candidate, &range, config.alpha)?;
            rows.push(ResultRow {
                experiment: config.id,
                sweep: vec![("x".to_string(), x)],
                label: width_label(width),
                mean: candidate.mean,
                std: candidate.std,
                n: 0,
                outcomes: OutcomeCounts::default(),
                trusted,
                range,
                hellinger_sq: sq.hellinger_sq,
                q: sq.q,
                xq: sq.xq,
            });
        }
    }
    Ok(rows)
}
