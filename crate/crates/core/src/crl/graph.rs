use std::collections::{HashMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NomaError, Result};
use crate::units::{dbm_to_mw, energy_units, is_off, units_to_mw};

pub type NodeId = usize;
pub type EdgeId = usize;

/// Smallest weight kept after renormalization.
const WEIGHT_FLOOR: f64 = 1e-280;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    /// Remaining energy in integer micro-(mW·frame).
    pub energy: u64,
    /// 1-based layer; frame `t` decisions leave layer `t`, the terminal is `T + 2`.
    pub layer: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    /// Index into the power set.
    pub action: usize,
    /// Layer of `from`.
    pub layer: usize,
    pub weight: f64,
}

/// Per-device layered DAG over (remaining energy, frame).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub source: NodeId,
    pub terminal: NodeId,
    pub frames: usize,
    pub levels_dbm: Vec<f64>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
    /// `layer_edges[k]` holds the edges leaving layer `k + 1`.
    layer_edges: Vec<Vec<EdgeId>>,
}

/// The closed-form node/edge/path counts quoted for these graphs, next to
/// what the construction actually produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFormulas {
    pub frames: usize,
    pub levels: usize,
    pub formula_nodes: u64,
    pub formula_edges: u64,
    pub formula_paths: u64,
    pub actual_nodes: usize,
    pub actual_edges: usize,
    pub actual_paths: u128,
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

impl GraphFormulas {
    pub fn for_graph(tg: &TransitionGraph) -> Self {
        let t = tg.frames as u64;
        let p = tg.levels_dbm.len() as u64;
        GraphFormulas {
            frames: tg.frames,
            levels: tg.levels_dbm.len(),
            formula_nodes: 2 + t * p,
            formula_edges: p * (p * (t - 1) + t + 3) / 2,
            formula_paths: binomial(t + p - 1, t),
            actual_nodes: tg.nodes.len(),
            actual_edges: tg.edges.len(),
            actual_paths: tg.count_paths(),
        }
    }
}

impl TransitionGraph {
    /// Builds the reachable graph from `(budget, 1)`, merging nodes with
    /// equal remaining energy in a layer. Layer `T + 1` closes to the
    /// terminal through an off-action edge. All weights start at 1.
    pub fn build(budget_mw: f64, levels_dbm: &[f64], frames: usize) -> Result<Self> {
        if !(budget_mw >= 0.0) || !budget_mw.is_finite() {
            return Err(NomaError::InvalidConfig(format!(
                "energy budget must be non-negative, got {budget_mw}"
            )));
        }
        if frames == 0 {
            return Err(NomaError::InvalidConfig("at least one frame required".into()));
        }
        let off = levels_dbm
            .iter()
            .position(|&p| is_off(p))
            .ok_or_else(|| NomaError::InvalidConfig("power set has no off level".into()))?;
        let costs: Vec<u64> = levels_dbm.iter().map(|&p| energy_units(dbm_to_mw(p))).collect();

        let mut tg = TransitionGraph {
            nodes: vec![Node {
                energy: energy_units(budget_mw),
                layer: 1,
            }],
            edges: Vec::new(),
            source: 0,
            terminal: 0,
            frames,
            levels_dbm: levels_dbm.to_vec(),
            out_edges: vec![Vec::new()],
            in_edges: vec![Vec::new()],
            layer_edges: vec![Vec::new(); frames + 1],
        };
        let mut frontier = vec![0usize];
        for layer in 1..=frames {
            let mut index: HashMap<u64, NodeId> = HashMap::new();
            let mut next = Vec::new();
            for &u in &frontier {
                let e = tg.nodes[u].energy;
                for (action, &c) in costs.iter().enumerate() {
                    if c > e {
                        continue;
                    }
                    let v = *index.entry(e - c).or_insert_with(|| {
                        next.push(tg.nodes.len());
                        tg.push_node(Node {
                            energy: e - c,
                            layer: layer + 1,
                        })
                    });
                    tg.push_edge(u, v, action, layer);
                }
            }
            frontier = next;
        }
        let terminal = tg.push_node(Node {
            energy: 0,
            layer: frames + 2,
        });
        tg.terminal = terminal;
        for &u in &frontier {
            tg.push_edge(u, terminal, off, frames + 1);
        }
        Ok(tg)
    }

    fn push_node(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        self.out_edges.push(Vec::new());
        self.in_edges.push(Vec::new());
        self.nodes.len() - 1
    }

    fn push_edge(&mut self, from: NodeId, to: NodeId, action: usize, layer: usize) {
        let id = self.edges.len();
        self.edges.push(Edge {
            from,
            to,
            action,
            layer,
            weight: 1.0,
        });
        self.out_edges[from].push(id);
        self.in_edges[to].push(id);
        self.layer_edges[layer - 1].push(id);
    }

    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.out_edges[node]
    }

    pub fn in_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.in_edges[node]
    }

    /// Edges leaving layer `layer` (1-based, up to `T + 1`).
    pub fn layer_edges(&self, layer: usize) -> &[EdgeId] {
        &self.layer_edges[layer - 1]
    }

    pub fn num_layers(&self) -> usize {
        self.frames + 1
    }

    pub fn action_cost_mw(&self, edge: EdgeId) -> f64 {
        dbm_to_mw(self.levels_dbm[self.edges[edge].action])
    }

    pub fn energy_mw(&self, node: NodeId) -> f64 {
        units_to_mw(self.nodes[node].energy)
    }

    /// Power levels chosen in frames `1..=T` along `path`.
    pub fn path_levels(&self, path: &[EdgeId]) -> Vec<usize> {
        path.iter()
            .take(self.frames)
            .map(|&e| self.edges[e].action)
            .collect()
    }

    pub fn path_cost_mw(&self, path: &[EdgeId]) -> f64 {
        path.iter().map(|&e| self.action_cost_mw(e)).sum()
    }

    /// Nodes ordered by layer, which is a topological order.
    fn topological(&self) -> Vec<NodeId> {
        let mut order: Vec<NodeId> = (0..self.nodes.len()).collect();
        order.sort_by_key(|&v| (self.nodes[v].layer, v));
        order
    }

    /// Number of s-t paths.
    pub fn count_paths(&self) -> u128 {
        let mut count = vec![0u128; self.nodes.len()];
        count[self.terminal] = 1;
        for v in self.topological().into_iter().rev() {
            if v == self.terminal {
                continue;
            }
            count[v] = self.out_edges[v].iter().map(|&e| count[self.edges[e].to]).sum();
        }
        count[self.source]
    }

    /// Every s-t path, for brute-force checks on small graphs.
    pub fn enumerate_paths(&self, limit: usize) -> Option<Vec<Vec<EdgeId>>> {
        let mut out = Vec::new();
        let mut stack = Vec::new();
        if self.walk(self.source, &mut stack, &mut out, limit) {
            Some(out)
        } else {
            None
        }
    }

    fn walk(&self, v: NodeId, stack: &mut Vec<EdgeId>, out: &mut Vec<Vec<EdgeId>>, limit: usize) -> bool {
        if v == self.terminal {
            if out.len() == limit {
                return false;
            }
            out.push(stack.clone());
            return true;
        }
        for &e in &self.out_edges[v] {
            stack.push(e);
            let ok = self.walk(self.edges[e].to, stack, out, limit);
            stack.pop();
            if !ok {
                return false;
            }
        }
        true
    }

    /// Divides each layer's weights by the layer maximum. Path probabilities
    /// are unchanged since every path crosses every layer once.
    pub fn renormalize_layers(&mut self) {
        for layer in &self.layer_edges {
            let max = layer
                .iter()
                .map(|&e| self.edges[e].weight)
                .fold(0.0f64, f64::max);
            if max > 0.0 && max.is_finite() {
                for &e in layer {
                    let w = &mut self.edges[e].weight;
                    *w = (*w / max).max(WEIGHT_FLOOR);
                }
            }
        }
    }

    pub fn reset_weights(&mut self) {
        for e in &mut self.edges {
            e.weight = 1.0;
        }
    }
}

/// Edge-covering s-t paths, one per edge before deduplication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringPaths {
    pub paths: Vec<Vec<EdgeId>>,
    /// How many paths contain each edge.
    pub cover_count: Vec<u32>,
}

impl CoveringPaths {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// For each edge `(u, v)`: a shortest s→u path, the edge, and a shortest
/// v→t path. Both shortest-path trees come from one BFS each.
pub fn covering_paths(tg: &TransitionGraph) -> Result<CoveringPaths> {
    let n = tg.nodes.len();
    let mut pred: Vec<Option<EdgeId>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[tg.source] = true;
    let mut queue = VecDeque::from([tg.source]);
    while let Some(u) = queue.pop_front() {
        for &e in tg.out_edges(u) {
            let v = tg.edges[e].to;
            if !seen[v] {
                seen[v] = true;
                pred[v] = Some(e);
                queue.push_back(v);
            }
        }
    }
    let mut succ: Vec<Option<EdgeId>> = vec![None; n];
    let mut seen_back = vec![false; n];
    seen_back[tg.terminal] = true;
    queue.push_back(tg.terminal);
    while let Some(v) = queue.pop_front() {
        for &e in tg.in_edges(v) {
            let u = tg.edges[e].from;
            if !seen_back[u] {
                seen_back[u] = true;
                succ[u] = Some(e);
                queue.push_back(u);
            }
        }
    }

    let mut index: HashMap<Vec<EdgeId>, usize> = HashMap::new();
    let mut paths = Vec::new();
    for (id, edge) in tg.edges.iter().enumerate() {
        if !seen[edge.from] || !seen_back[edge.to] {
            return Err(NomaError::GraphInvariant(format!(
                "edge {id} is not on any s-t path"
            )));
        }
        let mut path = Vec::with_capacity(tg.num_layers());
        let mut u = edge.from;
        while let Some(e) = pred[u] {
            path.push(e);
            u = tg.edges[e].from;
        }
        path.reverse();
        path.push(id);
        let mut v = edge.to;
        while let Some(e) = succ[v] {
            path.push(e);
            v = tg.edges[e].to;
        }
        if !index.contains_key(&path) {
            index.insert(path.clone(), paths.len());
            paths.push(path);
        }
    }
    let mut cover_count = vec![0u32; tg.edges.len()];
    for p in &paths {
        for &e in p {
            cover_count[e] += 1;
        }
    }
    Ok(CoveringPaths { paths, cover_count })
}

/// `B(v)`: total weight of v→t paths.
pub fn backward_weights(tg: &TransitionGraph) -> Vec<f64> {
    let mut b = vec![0.0; tg.nodes.len()];
    b[tg.terminal] = 1.0;
    for v in tg.topological().into_iter().rev() {
        if v == tg.terminal {
            continue;
        }
        b[v] = tg
            .out_edges(v)
            .iter()
            .map(|&e| tg.edges[e].weight * b[tg.edges[e].to])
            .sum();
    }
    b
}

/// `F(v)`: total weight of s→v paths.
pub fn forward_weights(tg: &TransitionGraph) -> Vec<f64> {
    let mut f = vec![0.0; tg.nodes.len()];
    f[tg.source] = 1.0;
    for v in tg.topological() {
        if v == tg.source {
            continue;
        }
        f[v] = tg
            .in_edges(v)
            .iter()
            .map(|&e| tg.edges[e].weight * f[tg.edges[e].from])
            .sum();
    }
    f
}

/// Marginal probability that a sampled path uses each edge under the
/// γ-mixture of uniform-over-cover and weight-proportional sampling.
pub fn edge_probabilities(tg: &TransitionGraph, cover: &CoveringPaths, gamma: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(NomaError::InvalidConfig(format!("gamma {gamma} outside [0, 1]")));
    }
    let b = backward_weights(tg);
    let f = forward_weights(tg);
    let total = b[tg.source];
    let c = cover.len() as f64;
    let mut q = Vec::with_capacity(tg.edges.len());
    for (id, e) in tg.edges.iter().enumerate() {
        let exploit = f[e.from] * e.weight * b[e.to] / total;
        let explore = if c > 0.0 {
            cover.cover_count[id] as f64 / c
        } else {
            0.0
        };
        let p = (1.0 - gamma) * exploit + gamma * explore;
        if !(p > 0.0) {
            return Err(NomaError::ZeroProbability { edge: id });
        }
        q.push(p);
    }
    Ok(q)
}

/// Draws one s-t path. `backward` must come from [`backward_weights`] on
/// the current weights.
pub fn sample_path<R: Rng + ?Sized>(
    tg: &TransitionGraph,
    cover: &CoveringPaths,
    backward: &[f64],
    gamma: f64,
    rng: &mut R,
) -> Vec<EdgeId> {
    if !cover.is_empty() && rng.gen::<f64>() < gamma {
        return cover.paths[rng.gen_range(0..cover.len())].clone();
    }
    let mut path = Vec::with_capacity(tg.num_layers());
    let mut v = tg.source;
    while v != tg.terminal {
        let out = tg.out_edges(v);
        let mut x = rng.gen::<f64>() * backward[v];
        let mut chosen = *out.last().expect("non-terminal node has an out edge");
        for &e in out {
            let mass = tg.edges[e].weight * backward[tg.edges[e].to];
            if x < mass {
                chosen = e;
                break;
            }
            x -= mass;
        }
        path.push(chosen);
        v = tg.edges[chosen].to;
    }
    path
}

/// Heaviest s-t path (ties to the lower edge id, i.e. the lower power).
pub fn most_probable_path(tg: &TransitionGraph) -> Vec<EdgeId> {
    let mut best = vec![0.0f64; tg.nodes.len()];
    let mut choice: Vec<Option<EdgeId>> = vec![None; tg.nodes.len()];
    best[tg.terminal] = 1.0;
    for v in tg.topological().into_iter().rev() {
        if v == tg.terminal {
            continue;
        }
        for &e in tg.out_edges(v) {
            let val = tg.edges[e].weight * best[tg.edges[e].to];
            if choice[v].is_none() || val > best[v] {
                best[v] = val;
                choice[v] = Some(e);
            }
        }
    }
    let mut path = Vec::new();
    let mut v = tg.source;
    while let Some(e) = choice[v] {
        path.push(e);
        v = tg.edges[e].to;
    }
    path
}

/// Exponential-weights update with implicit exploration:
/// `w(e) ← w(e)·exp(η·(β + r_e·1{e ∈ path}) / q(e))` on every edge.
/// `layer_rewards[k]` is the reward of layer `k + 1`.
pub fn update_weights(
    tg: &mut TransitionGraph,
    path: &[EdgeId],
    layer_rewards: &[f64],
    q: &[f64],
    beta: f64,
    eta: f64,
) -> Result<()> {
    let mut on_path = vec![false; tg.edges.len()];
    for &e in path {
        on_path[e] = true;
    }
    for (id, edge) in tg.edges.iter_mut().enumerate() {
        if !(q[id] > 0.0) {
            return Err(NomaError::ZeroProbability { edge: id });
        }
        let r = if on_path[id] {
            layer_rewards.get(edge.layer - 1).copied().unwrap_or(0.0)
        } else {
            0.0
        };
        let estimate = (beta + r) / q[id];
        edge.weight *= (eta * estimate).exp();
    }
    Ok(())
}
