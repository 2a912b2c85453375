//! Road networks, task parameters and the fully observable pursuit-evasion MDP.
//!
//! The UGV tries to reach the exit node while a stochastic pursuer wanders the
//! same graph. Both agents move simultaneously; the UGV is caught when the two
//! share a node after the move.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;

const SMALL_NET: &str = include_str!("../data/small_13.json");
const MEDIUM_NET: &str = include_str!("../data/medium_45.json");

/// An undirected road network with designated start and exit nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RoadNetFile", into = "RoadNetFile")]
pub struct RoadNet {
    name: String,
    adjacency: Vec<Vec<NodeId>>,
    ugv_start: NodeId,
    pursuer_start: NodeId,
    exit_node: NodeId,
    exit_distance: Vec<usize>,
}

/// On-disk layout of a road network.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoadNetFile {
    pub name: String,
    pub node_count: usize,
    pub edges: Vec<[NodeId; 2]>,
    pub ugv_start: NodeId,
    pub pursuer_start: NodeId,
    pub exit_node: NodeId,
}

impl TryFrom<RoadNetFile> for RoadNet {
    type Error = Error;

    fn try_from(file: RoadNetFile) -> Result<Self> {
        RoadNet::from_edges(
            file.name,
            file.node_count,
            &file.edges,
            file.ugv_start,
            file.pursuer_start,
            file.exit_node,
        )
    }
}

impl From<RoadNet> for RoadNetFile {
    fn from(net: RoadNet) -> Self {
        let edges = net
            .adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| u < v).map(move |&v| [u, v]))
            .collect();
        RoadNetFile {
            node_count: net.node_count(),
            name: net.name,
            edges,
            ugv_start: net.ugv_start,
            pursuer_start: net.pursuer_start,
            exit_node: net.exit_node,
        }
    }
}

impl RoadNet {
    /// Builds a network from an undirected edge list. Duplicate edges are merged.
    pub fn from_edges(
        name: impl Into<String>,
        node_count: usize,
        edges: &[[NodeId; 2]],
        ugv_start: NodeId,
        pursuer_start: NodeId,
        exit_node: NodeId,
    ) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidNetwork("node_count must be positive".into()));
        }
        let mut adjacency = vec![Vec::new(); node_count];
        for &[u, v] in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::InvalidNetwork(format!(
                    "edge [{u}, {v}] references a node outside 0..{node_count}"
                )));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
            nbrs.dedup();
        }
        Self::from_adjacency(name, adjacency, ugv_start, pursuer_start, exit_node)
    }

    /// Builds a network from per-node neighbor lists, which must be symmetric.
    pub fn from_adjacency(
        name: impl Into<String>,
        mut adjacency: Vec<Vec<NodeId>>,
        ugv_start: NodeId,
        pursuer_start: NodeId,
        exit_node: NodeId,
    ) -> Result<Self> {
        let n = adjacency.len();
        if n == 0 {
            return Err(Error::InvalidNetwork("node_count must be positive".into()));
        }
        for (u, nbrs) in adjacency.iter_mut().enumerate() {
            nbrs.sort_unstable();
            if nbrs.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidNetwork(format!("node {u} lists a neighbor twice")));
            }
            if let Some(&v) = nbrs.iter().find(|&&v| v >= n) {
                return Err(Error::InvalidNetwork(format!("node {u} has out-of-range neighbor {v}")));
            }
            if nbrs.contains(&u) {
                return Err(Error::InvalidNetwork(format!("self-loop at node {u}")));
            }
        }
        for (u, nbrs) in adjacency.iter().enumerate() {
            for &v in nbrs {
                if adjacency[v].binary_search(&u).is_err() {
                    return Err(Error::InvalidNetwork(format!(
                        "asymmetric adjacency: {v} in adj[{u}] but {u} not in adj[{v}]"
                    )));
                }
            }
        }
        for (what, id) in [("ugv_start", ugv_start), ("pursuer_start", pursuer_start), ("exit_node", exit_node)] {
            if id >= n {
                return Err(Error::InvalidNetwork(format!("{what} {id} is not a node")));
            }
        }
        if ugv_start == pursuer_start {
            return Err(Error::InvalidNetwork("ugv_start and pursuer_start coincide".into()));
        }
        let exit_distance = bfs_distances(&adjacency, exit_node);
        if exit_distance.contains(&usize::MAX) {
            return Err(Error::InvalidNetwork("graph is not connected".into()));
        }
        Ok(RoadNet {
            name: name.into(),
            adjacency,
            ugv_start,
            pursuer_start,
            exit_node,
            exit_distance,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: RoadNetFile =
            serde_json::from_str(text).map_err(|e| Error::json("network file", e))?;
        file.try_into()
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// The bundled 13-node network.
    pub fn small() -> Self {
        Self::from_json(SMALL_NET).expect("bundled small network is valid")
    }

    /// The bundled 45-node network.
    pub fn medium() -> Self {
        Self::from_json(MEDIUM_NET).expect("bundled medium network is valid")
    }

    /// Looks up a bundled network by name (`small`, `small-13`, `medium`, `medium-45`).
    pub fn bundled(name: &str) -> Option<Self> {
        match name {
            "small" | "small-13" => Some(Self::small()),
            "medium" | "medium-45" => Some(Self::medium()),
            _ => None,
        }
    }

    /// Raw JSON text of a bundled network, for hashing into run manifests.
    pub fn bundled_source(name: &str) -> Option<&'static str> {
        match name {
            "small" | "small-13" => Some(SMALL_NET),
            "medium" | "medium-45" => Some(MEDIUM_NET),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node].len()
    }

    pub fn ugv_start(&self) -> NodeId {
        self.ugv_start
    }

    pub fn pursuer_start(&self) -> NodeId {
        self.pursuer_start
    }

    pub fn exit_node(&self) -> NodeId {
        self.exit_node
    }

    /// Hop count from `node` to the exit.
    pub fn exit_distance(&self, node: NodeId) -> usize {
        self.exit_distance[node]
    }

    pub fn initial_state(&self) -> JointState {
        JointState::new(self.ugv_start, self.pursuer_start, self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&RoadNetFile::from(self.clone())).expect("network serializes")
    }
}

fn bfs_distances(adjacency: &[Vec<NodeId>], source: NodeId) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adjacency.len()];
    let mut queue = VecDeque::from([source]);
    dist[source] = 0;
    while let Some(u) = queue.pop_front() {
        for &v in &adjacency[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// How the pursuer moves each step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PursuerPolicy {
    /// Uniform over neighbors of the current node.
    #[default]
    RandomWalk,
    /// Uniform over neighbors plus the current node.
    LazyRandomWalk,
    /// Never moves.
    Stationary,
}

/// Parameters of one escort task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskParams {
    /// Probability that an attempted UGV move reaches the intended neighbor.
    pub p_trans: f64,
    pub discount: f64,
    pub rwd_exit: f64,
    pub rwd_caught: f64,
    /// Charged on every non-terminal step, staying in place included.
    pub rwd_sense: f64,
    pub max_steps: usize,
    #[serde(default)]
    pub pursuer: PursuerPolicy,
}

impl Default for TaskParams {
    fn default() -> Self {
        TaskParams {
            p_trans: 0.7,
            discount: 0.9,
            rwd_exit: 2000.0,
            rwd_caught: -2000.0,
            rwd_sense: -200.0,
            max_steps: 50,
            pursuer: PursuerPolicy::RandomWalk,
        }
    }
}

impl TaskParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("p_trans", self.p_trans),
            ("discount", self.discount),
            ("rwd_exit", self.rwd_exit),
            ("rwd_caught", self.rwd_caught),
            ("rwd_sense", self.rwd_sense),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("{name} must be finite")));
        }
        if !(0.0..=1.0).contains(&self.p_trans) {
            return Err(Error::InvalidParams(format!("p_trans {} outside [0, 1]", self.p_trans)));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::InvalidParams(format!("discount {} outside (0, 1]", self.discount)));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidParams("max_steps must be at least 1".into()));
        }
        if !(self.rwd_caught < 0.0 && 0.0 < self.rwd_exit) {
            return Err(Error::InvalidParams(
                "rewards must satisfy rwd_caught < 0 < rwd_exit".into(),
            ));
        }
        Ok(())
    }

    /// Lowest possible episode return: sensing every step, then caught.
    pub fn min_return(&self) -> f64 {
        self.rwd_caught + self.rwd_sense.min(0.0) * self.max_steps as f64
    }

    /// Highest possible episode return.
    pub fn max_return(&self) -> f64 {
        self.rwd_exit + self.rwd_sense.max(0.0) * self.max_steps as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Exited,
    Caught,
    Truncated,
}

impl Status {
    pub fn is_terminal(self) -> bool {
        self != Status::Running
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JointState {
    pub ugv: NodeId,
    pub pursuer: NodeId,
    pub status: Status,
}

impl JointState {
    /// Places both agents and derives the status from their positions.
    pub fn new(ugv: NodeId, pursuer: NodeId, net: &RoadNet) -> Self {
        let status = if ugv == pursuer {
            Status::Caught
        } else if ugv == net.exit_node {
            Status::Exited
        } else {
            Status::Running
        };
        JointState { ugv, pursuer, status }
    }

    pub fn is_terminal(&self) -> bool {
        self.status.is_terminal()
    }

    /// The same positions marked as cut off by the horizon.
    pub fn truncated(self) -> Self {
        JointState {
            status: Status::Truncated,
            ..self
        }
    }
}

/// A UGV action: head for the `i`-th neighbor (in sorted order) or stay put.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    MoveTo(usize),
    Stay,
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Action::MoveTo(i) => write!(f, "move({i})"),
            Action::Stay => f.write_str("stay"),
        }
    }
}

/// Legal actions in `state`: one move per neighbor of the UGV, then `Stay`.
/// Terminal states have none.
pub fn actions(state: &JointState, net: &RoadNet) -> Vec<Action> {
    if state.is_terminal() {
        return Vec::new();
    }
    (0..net.degree(state.ugv))
        .map(Action::MoveTo)
        .chain(std::iter::once(Action::Stay))
        .collect()
}

fn check_action(state: &JointState, action: Action, net: &RoadNet) -> Result<()> {
    if state.is_terminal() {
        return Err(Error::TerminalState);
    }
    match action {
        Action::MoveTo(i) if i >= net.degree(state.ugv) => Err(Error::InvalidAction),
        _ => Ok(()),
    }
}

/// Where the UGV ends up after `action`, with probabilities. Zero-mass
/// outcomes are omitted.
pub fn ugv_marginal(
    ugv: NodeId,
    action: Action,
    net: &RoadNet,
    params: &TaskParams,
) -> Vec<(NodeId, f64)> {
    let nbrs = net.neighbors(ugv);
    match action {
        Action::Stay => vec![(ugv, 1.0)],
        Action::MoveTo(i) if nbrs.len() == 1 => vec![(nbrs[i], 1.0)],
        Action::MoveTo(i) => {
            let slip = (1.0 - params.p_trans) / (nbrs.len() - 1) as f64;
            nbrs.iter()
                .enumerate()
                .map(|(j, &v)| (v, if j == i { params.p_trans } else { slip }))
                .filter(|&(_, p)| p > 0.0)
                .collect()
        }
    }
}

/// Where the pursuer ends up after one step.
pub fn pursuer_marginal(pursuer: NodeId, net: &RoadNet, params: &TaskParams) -> Vec<(NodeId, f64)> {
    let nbrs = net.neighbors(pursuer);
    match params.pursuer {
        PursuerPolicy::Stationary => vec![(pursuer, 1.0)],
        PursuerPolicy::RandomWalk => {
            let p = 1.0 / nbrs.len() as f64;
            nbrs.iter().map(|&v| (v, p)).collect()
        }
        PursuerPolicy::LazyRandomWalk => {
            let p = 1.0 / (nbrs.len() + 1) as f64;
            nbrs.iter()
                .copied()
                .chain(std::iter::once(pursuer))
                .map(|v| (v, p))
                .collect()
        }
    }
}

/// Full joint next-state distribution of taking `action` in `state`.
pub fn transition_dist(
    state: &JointState,
    action: Action,
    net: &RoadNet,
    params: &TaskParams,
) -> Result<Vec<(JointState, f64)>> {
    check_action(state, action, net)?;
    let ugv = ugv_marginal(state.ugv, action, net, params);
    let pursuer = pursuer_marginal(state.pursuer, net, params);
    Ok(ugv
        .iter()
        .flat_map(|&(u, pu)| {
            pursuer
                .iter()
                .map(move |&(v, pv)| (JointState::new(u, v, net), pu * pv))
        })
        .collect())
}

fn sample_marginal<R: Rng + ?Sized>(outcomes: &[(NodeId, f64)], rng: &mut R) -> NodeId {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(node, p) in outcomes {
        acc += p;
        if u < acc {
            return node;
        }
    }
    outcomes.last().expect("marginal is never empty").0
}

/// Draws one successor of `state` under `action`.
///
/// Consumes exactly two uniform draws (UGV first, then pursuer) so that
/// callers sharing a stream stay in lockstep.
pub fn sample_transition<R: Rng + ?Sized>(
    state: &JointState,
    action: Action,
    net: &RoadNet,
    params: &TaskParams,
    rng: &mut R,
) -> Result<JointState> {
    check_action(state, action, net)?;
    let ugv = sample_marginal(&ugv_marginal(state.ugv, action, net, params), rng);
    let pursuer = sample_marginal(&pursuer_marginal(state.pursuer, net, params), rng);
    Ok(JointState::new(ugv, pursuer, net))
}

/// Reward for the step `state --action--> next`.
pub fn reward(_state: &JointState, _action: Action, next: &JointState, params: &TaskParams) -> f64 {
    match next.status {
        Status::Exited => params.rwd_exit,
        Status::Caught => params.rwd_caught,
        Status::Running | Status::Truncated => params.rwd_sense,
    }
}
