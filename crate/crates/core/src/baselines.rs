//! Reference policies: tabular Q-learning over the same (energy, frame)
//! decision graph the CRL learner uses, and a fixed max-power schedule.
//! Both are scored with frame matching exactly like CRL.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::crl::{EdgeId, NodeId, TransitionGraph};
use crate::error::{NomaError, Result};
use crate::matching::fm_frame;
use crate::scenario::{Scenario, ScenarioStream};
use crate::units::energy_units;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TqlParams {
    pub alpha: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
}

impl Default for TqlParams {
    fn default() -> Self {
        TqlParams {
            alpha: 0.5,
            epsilon_start: 0.2,
            epsilon_end: 0.01,
        }
    }
}

impl TqlParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(NomaError::InvalidConfig("alpha must lie in (0, 1]".into()));
        }
        let unit = 0.0..=1.0;
        if !unit.contains(&self.epsilon_start)
            || !unit.contains(&self.epsilon_end)
            || self.epsilon_end > self.epsilon_start
        {
            return Err(NomaError::InvalidConfig(
                "need 0 <= epsilon_end <= epsilon_start <= 1".into(),
            ));
        }
        Ok(())
    }

    /// Linear annealing over the episode index.
    pub fn epsilon(&self, episode: usize, episodes: usize) -> f64 {
        if episodes <= 1 {
            return self.epsilon_start;
        }
        let frac = episode as f64 / (episodes - 1) as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

/// Q-values indexed by transition-graph edge: one entry per legal
/// (state, action) pair and nothing else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub values: Vec<f64>,
    pub alpha: f64,
}

impl QTable {
    pub fn new(graph: &TransitionGraph, alpha: f64) -> Self {
        QTable {
            values: vec![0.0; graph.edges.len()],
            alpha,
        }
    }

    /// `max_a Q(state, a)`; 0 at the terminal.
    pub fn max_at(&self, graph: &TransitionGraph, node: NodeId) -> f64 {
        graph
            .out_edges(node)
            .iter()
            .map(|&e| self.values[e])
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
            .unwrap_or(0.0)
    }

    /// Greedy action; ties go to the lowest power.
    pub fn greedy(&self, graph: &TransitionGraph, node: NodeId) -> EdgeId {
        let mut best: Option<EdgeId> = None;
        for &e in graph.out_edges(node) {
            let better = match best {
                None => true,
                Some(b) => {
                    let (ve, vb) = (self.values[e], self.values[b]);
                    ve > vb || (ve == vb && graph.edges[e].action < graph.edges[b].action)
                }
            };
            if better {
                best = Some(e);
            }
        }
        best.expect("state has at least one legal action")
    }
}

/// ε-greedy choice among the legal actions at `node`.
pub fn tql_act<R: Rng + ?Sized>(
    q: &QTable,
    graph: &TransitionGraph,
    node: NodeId,
    epsilon: f64,
    rng: &mut R,
) -> EdgeId {
    let legal = graph.out_edges(node);
    if rng.gen::<f64>() < epsilon {
        legal[rng.gen_range(0..legal.len())]
    } else {
        q.greedy(graph, node)
    }
}

/// Undiscounted one-step update: `Q ← Q + α(r + max Q(s′,·) − Q)`.
pub fn tql_update(q: &mut QTable, graph: &TransitionGraph, edge: EdgeId, reward: f64) {
    let next = q.max_at(graph, graph.edges[edge].to);
    let v = &mut q.values[edge];
    *v += q.alpha * (reward + next - *v);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TqlRun {
    /// Delivered packets per episode (the learning curve).
    pub curve: Vec<usize>,
    /// Sum of per-frame rewards per episode; identical for every device.
    pub episode_reward: Vec<f64>,
    /// Delivered by the greedy policy on each episode's realization, before
    /// that episode's updates.
    pub greedy_delivered: Vec<usize>,
    /// Largest per-device energy spend seen in any episode.
    pub max_energy_spent: f64,
    /// Largest single-frame delivered count seen in any episode.
    pub max_frame_delivered: usize,
    pub tables: Vec<QTable>,
}

impl TqlRun {
    /// Learning curve as CSV: one row per episode.
    pub fn write_curve_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["episode", "delivered", "greedy_delivered", "reward_per_device"])?;
        for (k, ((d, g), r)) in self
            .curve
            .iter()
            .zip(&self.greedy_delivered)
            .zip(&self.episode_reward)
            .enumerate()
        {
            w.write_record([(k + 1).to_string(), d.to_string(), g.to_string(), r.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn tql_train<R: Rng + ?Sized>(
    stream: &ScenarioStream,
    params: &TqlParams,
    episodes: usize,
    rng: &mut R,
) -> Result<TqlRun> {
    params.validate()?;
    let cfg = &stream.base.config;
    let graph = TransitionGraph::build(cfg.energy_budget_mw, &cfg.power_levels_dbm, cfg.num_frames)?;
    let m = cfg.num_devices;
    let mut tables = vec![QTable::new(&graph, params.alpha); m];
    let mut run = TqlRun {
        curve: Vec::with_capacity(episodes),
        episode_reward: Vec::with_capacity(episodes),
        greedy_delivered: Vec::with_capacity(episodes),
        max_energy_spent: 0.0,
        max_frame_delivered: 0,
        tables: Vec::new(),
    };
    let capacity = cfg.frame_capacity() as f64;
    for ep in 0..episodes {
        let scenario = stream.round(ep + 1)?;
        run.greedy_delivered.push(greedy_delivered(&scenario, &graph, &tables));
        let eps = params.epsilon(ep, episodes);
        let mut nodes = vec![graph.source; m];
        let mut spent = vec![0.0; m];
        let mut delivered = 0;
        let mut reward_sum = 0.0;
        for t in 0..scenario.num_frames() {
            let edges: Vec<EdgeId> = (0..m)
                .map(|i| tql_act(&tables[i], &graph, nodes[i], eps, rng))
                .collect();
            let powers: Vec<f64> = edges.iter().map(|&e| graph.action_cost_mw(e)).collect();
            let served = fm_frame(&scenario, t, &powers).served_total;
            let reward = served as f64 / capacity;
            run.max_frame_delivered = run.max_frame_delivered.max(served);
            delivered += served;
            reward_sum += reward;
            for i in 0..m {
                tql_update(&mut tables[i], &graph, edges[i], reward);
                spent[i] += powers[i];
                nodes[i] = graph.edges[edges[i]].to;
            }
        }
        run.max_energy_spent = spent.iter().copied().fold(run.max_energy_spent, f64::max);
        run.curve.push(delivered);
        run.episode_reward.push(reward_sum);
    }
    run.tables = tables;
    Ok(run)
}

fn greedy_delivered(scenario: &Scenario, graph: &TransitionGraph, tables: &[QTable]) -> usize {
    let mut nodes = vec![graph.source; tables.len()];
    let mut total = 0;
    for t in 0..scenario.num_frames() {
        let edges: Vec<EdgeId> = tables
            .iter()
            .zip(&nodes)
            .map(|(q, &v)| q.greedy(graph, v))
            .collect();
        let powers: Vec<f64> = edges.iter().map(|&e| graph.action_cost_mw(e)).collect();
        total += fm_frame(scenario, t, &powers).served_total;
        for (v, e) in nodes.iter_mut().zip(&edges) {
            *v = graph.edges[*e].to;
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxPowerResult {
    pub delivered: usize,
    pub energy_spent: Vec<f64>,
    pub max_frame_delivered: usize,
}

/// Every device transmits at the top power level in every frame until its
/// budget can no longer cover a full-power frame; frame matching groups.
pub fn max_power_baseline(scenario: &Scenario) -> MaxPowerResult {
    let cfg = &scenario.config;
    let top = cfg.level_mw(cfg.max_level());
    let top_units = energy_units(top);
    let mut remaining = vec![energy_units(cfg.energy_budget_mw); cfg.num_devices];
    let mut spent = vec![0.0; cfg.num_devices];
    let mut delivered = 0;
    let mut max_frame_delivered = 0;
    for t in 0..cfg.num_frames {
        let powers: Vec<f64> = remaining
            .iter_mut()
            .zip(spent.iter_mut())
            .map(|(r, s)| {
                if top_units > 0 && *r >= top_units {
                    *r -= top_units;
                    *s += top;
                    top
                } else {
                    0.0
                }
            })
            .collect();
        let served = fm_frame(scenario, t, &powers).served_total;
        max_frame_delivered = max_frame_delivered.max(served);
        delivered += served;
    }
    MaxPowerResult {
        delivered,
        energy_spent: spent,
        max_frame_delivered,
    }
}
