//! Solver-quality self-confidence for MDP planners.
//!
//! The crate simulates a pursuit-evasion escort task on a road network,
//! plans with Monte-Carlo tree search, collects empirical return
//! distributions and scores candidate solvers against a trusted one. A
//! surrogate regressor stands in for the trusted solver on unseen tasks.

pub mod env;
pub mod error;
pub mod features;
pub mod harness;
pub mod metrics;
pub mod rollout;
pub mod seed;
pub mod solver;
pub mod surrogate;

pub use env::{Action, JointState, NodeId, PursuerPolicy, RoadNet, Status, TaskParams};
pub use error::{Error, Result};
pub use features::TaskFeatures;
pub use harness::{run_experiment, ExperimentConfig, ExperimentId, ExperimentResult, ResultRow, Scale};
pub use metrics::{hellinger_sq, outcome_assessment, reward_range, solver_quality, RewardRange, SqResult};
pub use rollout::{reward_distribution, run_episode, EpisodeResult, GaussianSummary, Outcome, RewardDist};
pub use solver::{plan_action, MctsConfig, SolverKind, SolverSpec};
pub use surrogate::{RegressorConfig, SurrogateModel, TrainingSet};
