//! Policy providers behind a single "choose an action for this state" call.
//!
//! The MCTS planner is plain UCT over an explicit tree whose chance layer is
//! built from sampled transitions: every decision node keeps one edge per
//! legal action, and each edge keeps the successor states it has seen so far.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{self, Action, JointState, RoadNet, TaskParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RolloutPolicy {
    #[default]
    UniformRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MctsConfig {
    /// Maximum lookahead in steps, tree and rollout combined.
    pub depth: usize,
    /// UCB exploration constant, on the raw reward scale unless
    /// `normalize_rewards` is set.
    pub exploration: f64,
    /// Simulations per call to the planner.
    pub iterations: usize,
    #[serde(default)]
    pub rollout_policy: RolloutPolicy,
    /// Divide rewards by `rwd_exit - rwd_caught` inside the search.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub normalize_rewards: bool,
}

impl MctsConfig {
    pub fn new(depth: usize, exploration: f64, iterations: usize) -> Self {
        MctsConfig {
            depth,
            exploration,
            iterations,
            rollout_policy: RolloutPolicy::UniformRandom,
            normalize_rewards: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::InvalidSolver("depth must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidSolver("iterations must be at least 1".into()));
        }
        if !(self.exploration >= 0.0 && self.exploration.is_finite()) {
            return Err(Error::InvalidSolver("exploration must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverKind {
    Mcts(MctsConfig),
    Random,
    /// Steps along a shortest path to the exit, ignoring the pursuer.
    GreedyToExit,
}

/// A labeled solver configuration.
///
/// Serializes flat, e.g.
/// `{"kind":"mcts","depth":9,"exploration":1000.0,"iterations":100,"label":"d9"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub label: String,
    #[serde(flatten)]
    pub kind: SolverKind,
}

impl SolverSpec {
    pub fn mcts(label: impl Into<String>, config: MctsConfig) -> Self {
        SolverSpec {
            label: label.into(),
            kind: SolverKind::Mcts(config),
        }
    }

    pub fn random(label: impl Into<String>) -> Self {
        SolverSpec {
            label: label.into(),
            kind: SolverKind::Random,
        }
    }

    pub fn greedy(label: impl Into<String>) -> Self {
        SolverSpec {
            label: label.into(),
            kind: SolverKind::GreedyToExit,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.label.trim().is_empty() {
            return Err(Error::InvalidSolver("label must be nonempty".into()));
        }
        match &self.kind {
            SolverKind::Mcts(cfg) => cfg.validate(),
            SolverKind::Random | SolverKind::GreedyToExit => Ok(()),
        }
    }

    pub fn mcts_config(&self) -> Option<&MctsConfig> {
        match &self.kind {
            SolverKind::Mcts(cfg) => Some(cfg),
            _ => None,
        }
    }

    pub fn mcts_config_mut(&mut self) -> Option<&mut MctsConfig> {
        match &mut self.kind {
            SolverKind::Mcts(cfg) => Some(cfg),
            _ => None,
        }
    }
}

/// Chooses the action `spec` would take in `state`.
pub fn plan_action<R: Rng + ?Sized>(
    state: &JointState,
    net: &RoadNet,
    params: &TaskParams,
    spec: &SolverSpec,
    rng: &mut R,
) -> Result<Action> {
    if state.is_terminal() {
        return Err(Error::TerminalState);
    }
    match &spec.kind {
        SolverKind::Mcts(cfg) => Ok(search(state, net, params, cfg, rng)?.action),
        SolverKind::Random => {
            let legal = env::actions(state, net);
            Ok(legal[rng.random_range(0..legal.len())])
        }
        SolverKind::GreedyToExit => {
            let nbrs = net.neighbors(state.ugv);
            let best = (0..nbrs.len())
                .min_by_key(|&i| net.exit_distance(nbrs[i]))
                .expect("connected graph has no isolated nodes");
            Ok(Action::MoveTo(best))
        }
    }
}

/// Visit count and mean backed-up return of one root action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionStats {
    pub action: Action,
    pub visits: u32,
    pub mean: f64,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub action: Action,
    pub root: Vec<ActionStats>,
    pub nodes: usize,
}

struct Edge {
    action: Action,
    visits: u32,
    value_sum: f64,
    children: Vec<(JointState, usize)>,
}

impl Edge {
    fn mean(&self) -> f64 {
        self.value_sum / self.visits as f64
    }
}

struct Node {
    state: JointState,
    visits: u32,
    edges: Vec<Edge>,
}

struct Tree<'a> {
    net: &'a RoadNet,
    params: &'a TaskParams,
    config: &'a MctsConfig,
    reward_scale: f64,
    nodes: Vec<Node>,
}

impl<'a> Tree<'a> {
    fn new(net: &'a RoadNet, params: &'a TaskParams, config: &'a MctsConfig) -> Self {
        let reward_scale = if config.normalize_rewards {
            1.0 / (params.rwd_exit - params.rwd_caught)
        } else {
            1.0
        };
        Tree {
            net,
            params,
            config,
            reward_scale,
            nodes: Vec::new(),
        }
    }

    fn add_node(&mut self, state: JointState) -> usize {
        let edges = env::actions(&state, self.net)
            .into_iter()
            .map(|action| Edge {
                action,
                visits: 0,
                value_sum: 0.0,
                children: Vec::new(),
            })
            .collect();
        self.nodes.push(Node {
            state,
            visits: 0,
            edges,
        });
        self.nodes.len() - 1
    }

    /// Unvisited edges first (lowest index), then UCB1 with lowest-index ties.
    fn select(&self, node: usize) -> usize {
        let node = &self.nodes[node];
        if let Some(i) = node.edges.iter().position(|e| e.visits == 0) {
            return i;
        }
        let log_n = (node.visits as f64).ln();
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, e) in node.edges.iter().enumerate() {
            let score = e.mean() + self.config.exploration * (log_n / e.visits as f64).sqrt();
            if score > best_score {
                best = i;
                best_score = score;
            }
        }
        best
    }

    fn step<R: Rng + ?Sized>(&self, state: &JointState, action: Action, rng: &mut R) -> (JointState, f64) {
        let next = env::sample_transition(state, action, self.net, self.params, rng)
            .expect("tree only holds legal actions of running states");
        let r = env::reward(state, action, &next, self.params) * self.reward_scale;
        (next, r)
    }

    fn simulate<R: Rng + ?Sized>(&mut self, node: usize, depth: usize, rng: &mut R) -> f64 {
        let state = self.nodes[node].state;
        if state.is_terminal() || depth >= self.config.depth {
            return 0.0;
        }
        let edge = self.select(node);
        let action = self.nodes[node].edges[edge].action;
        let (next, r) = self.step(&state, action, rng);
        let known = self.nodes[node].edges[edge]
            .children
            .iter()
            .find(|(s, _)| *s == next)
            .map(|&(_, c)| c);
        let future = match known {
            Some(child) => self.simulate(child, depth + 1, rng),
            None => {
                let child = self.add_node(next);
                self.nodes[node].edges[edge].children.push((next, child));
                self.rollout(next, depth + 1, rng)
            }
        };
        let ret = r + self.params.discount * future;
        let n = &mut self.nodes[node];
        n.visits += 1;
        n.edges[edge].visits += 1;
        n.edges[edge].value_sum += ret;
        ret
    }

    fn rollout<R: Rng + ?Sized>(&self, mut state: JointState, mut depth: usize, rng: &mut R) -> f64 {
        let mut ret = 0.0;
        let mut weight = 1.0;
        while !state.is_terminal() && depth < self.config.depth {
            let action = match self.config.rollout_policy {
                RolloutPolicy::UniformRandom => {
                    let degree = self.net.degree(state.ugv);
                    let i = rng.random_range(0..=degree);
                    if i == degree { Action::Stay } else { Action::MoveTo(i) }
                }
            };
            let (next, r) = self.step(&state, action, rng);
            ret += weight * r;
            weight *= self.params.discount;
            state = next;
            depth += 1;
        }
        ret
    }
}

/// Runs `config.iterations` UCT simulations from `state` and returns the
/// root action with the highest mean return (lowest index on ties).
pub fn search<R: Rng + ?Sized>(
    state: &JointState,
    net: &RoadNet,
    params: &TaskParams,
    config: &MctsConfig,
    rng: &mut R,
) -> Result<SearchResult> {
    if state.is_terminal() {
        return Err(Error::TerminalState);
    }
    config.validate()?;
    let mut tree = Tree::new(net, params, config);
    let root = tree.add_node(*state);
    for _ in 0..config.iterations {
        tree.simulate(root, 0, rng);
    }
    let stats: Vec<ActionStats> = tree.nodes[root]
        .edges
        .iter()
        .map(|e| ActionStats {
            action: e.action,
            visits: e.visits,
            mean: if e.visits == 0 { f64::NAN } else { e.mean() },
        })
        .collect();
    let mut best: Option<&ActionStats> = None;
    for s in stats.iter().filter(|s| s.visits > 0) {
        if best.is_none_or(|b| s.mean > b.mean) {
            best = Some(s);
        }
    }
    Ok(SearchResult {
        action: best.expect("at least one iteration ran").action,
        nodes: tree.nodes.len(),
        root: stats,
    })
}
