//! Named scalar task/solver parameters that sweeps and surrogates vary.

use serde::{Deserialize, Serialize};

use crate::env::TaskParams;
use crate::error::{Error, Result};
use crate::solver::SolverSpec;

/// Feature names understood by [`apply`]. Aliases map onto the same field.
pub const KNOWN_FEATURES: &[&str] = &[
    "p_trans",
    "discount",
    "rwd_exit",
    "rwd_caught",
    "rwd_sense",
    "max_steps",
    "e_mcts",
    "exploration",
    "d_mcts",
    "depth",
    "its_mcts",
    "iterations",
];

/// A point in feature space, values ordered by `schema`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFeatures {
    pub schema: Vec<String>,
    pub values: Vec<f64>,
}

impl TaskFeatures {
    pub fn new(schema: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if schema.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} feature names but {} values",
                schema.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature values"));
        }
        Ok(TaskFeatures { schema, values })
    }

    pub fn single(name: &str, value: f64) -> Result<Self> {
        Self::new(vec![name.to_string()], vec![value])
    }

    /// Writes every feature into the task parameters and solver.
    pub fn apply(&self, params: &mut TaskParams, solver: &mut SolverSpec) -> Result<()> {
        for (name, &value) in self.schema.iter().zip(&self.values) {
            apply(name, value, params, solver)?;
        }
        Ok(())
    }
}

fn positive_integer(name: &str, value: f64) -> Result<usize> {
    if value >= 1.0 && value.fract() == 0.0 && value.is_finite() {
        Ok(value as usize)
    } else {
        Err(Error::InvalidArgument(format!("{name} must be a positive integer, got {value}")))
    }
}

pub fn check_name(name: &str) -> Result<()> {
    if KNOWN_FEATURES.contains(&name) {
        Ok(())
    } else {
        Err(Error::UnknownFeature(name.to_string()))
    }
}

/// Sets one named feature. Solver features are ignored for non-MCTS solvers.
pub fn apply(name: &str, value: f64, params: &mut TaskParams, solver: &mut SolverSpec) -> Result<()> {
    check_name(name)?;
    match name {
        "p_trans" => params.p_trans = value,
        "discount" => params.discount = value,
        "rwd_exit" => params.rwd_exit = value,
        "rwd_caught" => params.rwd_caught = value,
        "rwd_sense" => params.rwd_sense = value,
        "max_steps" => params.max_steps = positive_integer(name, value)?,
        _ => {
            let Some(cfg) = solver.mcts_config_mut() else {
                return Ok(());
            };
            match name {
                "e_mcts" | "exploration" => cfg.exploration = value,
                "d_mcts" | "depth" => cfg.depth = positive_integer(name, value)?,
                "its_mcts" | "iterations" => cfg.iterations = positive_integer(name, value)?,
                _ => unreachable!("name checked above"),
            }
        }
    }
    Ok(())
}

/// Cartesian product of per-feature value lists, first feature varying slowest.
pub fn grid(axes: &[(String, Vec<f64>)]) -> Result<Vec<TaskFeatures>> {
    for (name, values) in axes {
        check_name(name)?;
        if values.is_empty() {
            return Err(Error::InvalidArgument(format!("sweep over {name} has no values")));
        }
    }
    let schema: Vec<String> = axes.iter().map(|(n, _)| n.clone()).collect();
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for (_, values) in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    points
        .into_iter()
        .map(|values| TaskFeatures::new(schema.clone(), values))
        .collect()
}

/// `count` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::MctsConfig;

    #[test]
    fn applies_task_and_solver_fields() {
        let mut params = TaskParams::default();
        let mut solver = SolverSpec::mcts("s", MctsConfig::new(3, 10.0, 10));
        let f = TaskFeatures::new(vec!["p_trans".into(), "e_mcts".into(), "d_mcts".into()], vec![0.25, 500.0, 8.0]).unwrap();
        f.apply(&mut params, &mut solver).unwrap();
        assert_eq!(params.p_trans, 0.25);
        let cfg = solver.mcts_config().unwrap();
        assert_eq!((cfg.exploration, cfg.depth), (500.0, 8));
    }

    #[test]
    fn rejects_unknown_and_fractional() {
        let mut params = TaskParams::default();
        let mut solver = SolverSpec::mcts("s", MctsConfig::new(3, 10.0, 10));
        assert!(matches!(apply("speed", 1.0, &mut params, &mut solver), Err(Error::UnknownFeature(_))));
        assert!(apply("d_mcts", 2.5, &mut params, &mut solver).is_err());
    }

    #[test]
    fn grid_order() {
        let g = grid(&[("p_trans".into(), vec![0.0, 1.0]), ("e_mcts".into(), vec![10.0, 20.0, 30.0])]).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g[1].values, vec![0.0, 20.0]);
        assert_eq!(g[3].values, vec![1.0, 10.0]);
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace(0.0, 1.0, 11);
        assert_eq!(v.len(), 11);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[10], 1.0);
        assert!((v[3] - 0.3).abs() < 1e-15);
    }
}
