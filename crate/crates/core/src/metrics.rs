//! Solver-quality (xQ) and outcome-assessment (xO) self-confidence metrics.
//!
//! The quality score compares a candidate solver's return distribution `C`
//! against a trusted solver's `T`, both summarized as Gaussians:
//!
//! ```text
//! H²  = 1 - sqrt(2 σT σC / (σT² + σC²)) · exp(-¼ (μT - μC)² / (σT² + σC²))
//! q   = sgn(μC - μT) · (|μC - μT| / (rH - rL))^α · sqrt(H²)
//! xQ  = 2 / (1 + exp(-q / 5))
//! ```
//!
//! `xQ` lies in (0, 2) and equals 1 when the means coincide.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rollout::GaussianSummary;

/// Lower bound applied to standard deviations before comparing distributions.
pub const SIGMA_FLOOR: f64 = 1e-9;

/// Default weight of the mean-gap term relative to the Hellinger term.
pub const DEFAULT_ALPHA: f64 = 0.5;

/// Spread of trusted-solver mean returns over a family of tasks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardRange {
    pub r_low: f64,
    pub r_high: f64,
}

impl RewardRange {
    pub fn new(r_low: f64, r_high: f64) -> Result<Self> {
        if !(r_low.is_finite() && r_high.is_finite()) {
            return Err(Error::NonFinite("reward range"));
        }
        if r_high <= r_low {
            return Err(Error::DegenerateRange);
        }
        Ok(RewardRange { r_low, r_high })
    }

    /// A range of the given width, anchored at zero.
    pub fn with_width(width: f64) -> Result<Self> {
        Self::new(0.0, width)
    }

    pub fn width(&self) -> f64 {
        self.r_high - self.r_low
    }
}

/// Every intermediate quantity of one quality evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqResult {
    pub hellinger_sq: f64,
    /// `μ_candidate - μ_trusted`.
    pub delta_mu: f64,
    /// `|delta_mu|` over the reward-range width.
    pub f: f64,
    pub q: f64,
    pub xq: f64,
}

fn check_finite(s: &GaussianSummary, what: &'static str) -> Result<()> {
    if s.mean.is_finite() && s.std.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Squared Hellinger distance between two normal distributions.
pub fn hellinger_sq(p: &GaussianSummary, q: &GaussianSummary) -> Result<f64> {
    check_finite(p, "distribution p")?;
    check_finite(q, "distribution q")?;
    let (sp, sq) = (p.std.max(SIGMA_FLOOR), q.std.max(SIGMA_FLOOR));
    let var_sum = sp * sp + sq * sq;
    let dm = p.mean - q.mean;
    let bc = (2.0 * sp * sq / var_sum).sqrt() * (-0.25 * dm * dm / var_sum).exp();
    Ok((1.0 - bc).clamp(0.0, 1.0))
}

/// Maps the signed quality `q` into (0, 2).
pub fn squash(q: f64) -> f64 {
    2.0 / (1.0 + (-q / 5.0).exp())
}

/// Scores `candidate` against `trusted` on the global scale `range`.
pub fn solver_quality(
    trusted: &GaussianSummary,
    candidate: &GaussianSummary,
    range: &RewardRange,
    alpha: f64,
) -> Result<SqResult> {
    if range.r_high <= range.r_low {
        return Err(Error::DegenerateRange);
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    let h2 = hellinger_sq(trusted, candidate)?;
    let delta_mu = candidate.mean - trusted.mean;
    let f = delta_mu.abs() / range.width();
    let sign = if delta_mu > 0.0 {
        1.0
    } else if delta_mu < 0.0 {
        -1.0
    } else {
        0.0
    };
    let q = sign * f.powf(alpha) * h2.sqrt();
    Ok(SqResult {
        hellinger_sq: h2,
        delta_mu,
        f,
        q,
        xq: squash(q),
    })
}

/// Range of trusted-solver mean returns across training tasks.
pub fn reward_range(training_means: &[f64]) -> Result<RewardRange> {
    if training_means.len() < 2 {
        return Err(Error::DegenerateRange);
    }
    if training_means.iter().any(|m| !m.is_finite()) {
        return Err(Error::NonFinite("training means"));
    }
    let lo = training_means.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = training_means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    RewardRange::new(lo, hi)
}

/// Outcome assessment from first-order partial moments about `r_star`:
/// `(UPM - LPM) / (UPM + LPM)`, in [-1, 1].
pub fn outcome_assessment(samples: &[f64], r_star: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("outcome assessment needs at least one sample".into()));
    }
    if !r_star.is_finite() || samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("outcome samples"));
    }
    let n = samples.len() as f64;
    let upm = samples.iter().map(|&r| (r - r_star).max(0.0)).sum::<f64>() / n;
    let lpm = samples.iter().map(|&r| (r_star - r).max(0.0)).sum::<f64>() / n;
    if upm + lpm == 0.0 {
        return Ok(0.0);
    }
    Ok((upm - lpm) / (upm + lpm))
}
