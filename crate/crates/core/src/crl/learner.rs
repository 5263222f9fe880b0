use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::{
    backward_weights, covering_paths, edge_probabilities, most_probable_path, sample_path,
    update_weights, CoveringPaths, EdgeId, TransitionGraph,
};
use crate::config::NetworkConfig;
use crate::error::{NomaError, Result};
use crate::matching::{fm_frame, FrameMatchResult};
use crate::scenario::{Scenario, ScenarioStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrlParams {
    /// Probability of sampling uniformly from the covering paths.
    pub gamma: f64,
    /// Implicit-exploration bias in the reward estimate.
    pub beta: f64,
    pub eta: f64,
}

impl Default for CrlParams {
    fn default() -> Self {
        CrlParams {
            gamma: 0.5,
            beta: 0.01,
            eta: 0.00075,
        }
    }
}

impl CrlParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(NomaError::InvalidConfig("gamma must lie in (0, 1]".into()));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(NomaError::InvalidConfig("beta must lie in (0, 1]".into()));
        }
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(NomaError::InvalidConfig("eta must be positive".into()));
        }
        Ok(())
    }
}

/// One device's learner: its transition graph and covering paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrlAgent {
    pub graph: TransitionGraph,
    pub cover: CoveringPaths,
}

impl CrlAgent {
    pub fn new(config: &NetworkConfig) -> Result<Self> {
        let graph = TransitionGraph::build(
            config.energy_budget_mw,
            &config.power_levels_dbm,
            config.num_frames,
        )?;
        let cover = covering_paths(&graph)?;
        Ok(CrlAgent { graph, cover })
    }

    pub fn probabilities(&self, gamma: f64) -> Result<Vec<f64>> {
        edge_probabilities(&self.graph, &self.cover, gamma)
    }

    /// Per-frame power levels of the heaviest path.
    pub fn greedy_levels(&self) -> Vec<usize> {
        self.graph.path_levels(&most_probable_path(&self.graph))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundResult {
    pub paths: Vec<Vec<EdgeId>>,
    /// `levels[device][frame]`, indices into the power set.
    pub levels: Vec<Vec<usize>>,
    pub matches: Vec<FrameMatchResult>,
    /// Per-frame reward in `[0, 1]`, shared by all devices.
    pub rewards: Vec<f64>,
    pub delivered: usize,
    /// Energy committed by each device's path, mW·frame.
    pub energy_spent: Vec<f64>,
}

/// Plays fixed per-device level schedules through frame matching.
pub fn play_levels(scenario: &Scenario, levels: &[Vec<usize>]) -> Vec<FrameMatchResult> {
    let cfg = &scenario.config;
    (0..scenario.num_frames())
        .map(|t| {
            let powers: Vec<f64> = levels.iter().map(|l| cfg.level_mw(l[t])).collect();
            fm_frame(scenario, t, &powers)
        })
        .collect()
}

/// One learning round: every device samples a path, frame matching scores
/// the joint action frame by frame, and every edge weight is updated.
pub fn crl_round<R: Rng + ?Sized>(
    scenario: &Scenario,
    agents: &mut [CrlAgent],
    params: &CrlParams,
    rng: &mut R,
) -> Result<RoundResult> {
    if agents.len() != scenario.num_devices() {
        return Err(NomaError::InvalidConfig(format!(
            "{} agents for {} devices",
            agents.len(),
            scenario.num_devices()
        )));
    }
    let mut probs = Vec::with_capacity(agents.len());
    let mut paths = Vec::with_capacity(agents.len());
    for agent in agents.iter() {
        let q = agent.probabilities(params.gamma)?;
        let b = backward_weights(&agent.graph);
        paths.push(sample_path(&agent.graph, &agent.cover, &b, params.gamma, rng));
        probs.push(q);
    }
    let levels: Vec<Vec<usize>> = agents
        .iter()
        .zip(&paths)
        .map(|(a, p)| a.graph.path_levels(p))
        .collect();
    let matches = play_levels(scenario, &levels);
    let capacity = scenario.config.frame_capacity() as f64;
    let rewards: Vec<f64> = matches
        .iter()
        .map(|m| m.served_total as f64 / capacity)
        .collect();
    // The closing layer carries no reward.
    let mut layer_rewards = rewards.clone();
    layer_rewards.push(0.0);
    let mut energy_spent = Vec::with_capacity(agents.len());
    for ((agent, path), q) in agents.iter_mut().zip(&paths).zip(&probs) {
        energy_spent.push(agent.graph.path_cost_mw(path));
        update_weights(&mut agent.graph, path, &layer_rewards, q, params.beta, params.eta)?;
        agent.graph.renormalize_layers();
    }
    let delivered = matches.iter().map(|m| m.served_total).sum();
    Ok(RoundResult {
        paths,
        levels,
        matches,
        rewards,
        delivered,
        energy_spent,
    })
}

/// Trace of a multi-round run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrlRun {
    pub rounds: Vec<RoundResult>,
    /// Delivered by each round's heaviest paths on that round's realization,
    /// taken before the round's update.
    pub greedy_delivered: Vec<usize>,
    pub agents: Vec<CrlAgent>,
}

pub fn run_crl<R: Rng + ?Sized>(
    stream: &ScenarioStream,
    params: &CrlParams,
    rounds: usize,
    rng: &mut R,
) -> Result<CrlRun> {
    params.validate()?;
    let agent = CrlAgent::new(&stream.base.config)?;
    let mut agents = vec![agent; stream.base.num_devices()];
    let mut trace = Vec::with_capacity(rounds);
    let mut greedy_delivered = Vec::with_capacity(rounds);
    for k in 1..=rounds {
        let scenario = stream.round(k)?;
        let greedy: Vec<Vec<usize>> = agents.iter().map(CrlAgent::greedy_levels).collect();
        greedy_delivered.push(
            play_levels(&scenario, &greedy)
                .iter()
                .map(|m| m.served_total)
                .sum(),
        );
        trace.push(crl_round(&scenario, &mut agents, params, rng)?);
    }
    Ok(CrlRun {
        rounds: trace,
        greedy_delivered,
        agents,
    })
}

/// Writes one JSON object per round, one round per line.
pub fn write_round_log<W: Write>(rounds: &[RoundResult], mut writer: W) -> Result<()> {
    for (k, round) in rounds.iter().enumerate() {
        let mut value = serde_json::to_value(round)?;
        value["round"] = serde_json::json!(k + 1);
        serde_json::to_writer(&mut writer, &value)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}
