//! Experiment front door: single runs, parameter sweeps and the
//! JSON-lines environment service.

mod env;
mod stats;
mod sweep;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{max_power_baseline, tql_train, TqlRun};
use crate::config::ExperimentConfig;
use crate::crl::{run_crl, CrlRun, GraphFormulas, TransitionGraph};
use crate::error::{NomaError, Result};
use crate::opt::solve_offline;
use crate::rng::{stream, Purpose};
use crate::scenario::{Scenario, ScenarioStream};

pub use env::{serve, Action, EnvSession, Reply, Request, StepOutcome};
pub use stats::{mean, mean_ci95, paired_t_test, MeanCi};
pub use sweep::{run_sweep, summarize, SummaryRow, SweepOutput, SweepParam, SweepRow, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Crl,
    Tql,
    FmMax,
    Opt,
}

impl Algo {
    pub const ALL: [Algo; 4] = [Algo::Crl, Algo::Tql, Algo::FmMax, Algo::Opt];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Crl => "crl",
            Algo::Tql => "tql",
            Algo::FmMax => "fm-max",
            Algo::Opt => "opt",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = NomaError;

    fn from_str(s: &str) -> Result<Self> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| NomaError::UnknownAlgorithm(s.to_string()))
    }
}

/// Outcome of one algorithm on one seeded scenario.
///
/// `delivered` is the mean total over the evaluation realizations, which are
/// the realizations of the last `eval_window` rounds for every algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub algo: Algo,
    pub seed: u64,
    pub delivered: f64,
    /// Per evaluation realization, in round order.
    pub per_realization: Vec<usize>,
    /// For the learners: what the sampled (exploring) policy delivered on
    /// the same realizations.
    pub played: Option<Vec<usize>>,
    /// False only for an OPT solve stopped by its time limit.
    pub proven_optimal: bool,
    /// Largest per-device energy spend over every trace of the run, mW·frame.
    pub max_energy_spent: f64,
    /// Largest single-frame delivered count over every trace of the run.
    pub max_frame_delivered: usize,
    pub eval_rounds: (usize, usize),
    pub runtime_s: f64,
}

impl ResultRecord {
    /// Copy with the wall-clock field zeroed, for determinism comparisons.
    pub fn without_runtime(&self) -> Self {
        ResultRecord {
            runtime_s: 0.0,
            ..self.clone()
        }
    }
}

/// Builds the scenario stream a run of `cfg` with `seed` uses.
pub fn scenario_stream(cfg: &ExperimentConfig, seed: u64) -> Result<ScenarioStream> {
    let base = Scenario::generate(&cfg.network, &cfg.radio, &cfg.traffic, seed)?;
    Ok(ScenarioStream::new(base, cfg.traffic, cfg.run.fresh_realizations))
}

/// Full learning history of a run, for the learners.
#[derive(Debug, Clone)]
pub enum Trace {
    Crl(CrlRun),
    Tql(TqlRun),
    None,
}

pub fn run(algo: Algo, cfg: &ExperimentConfig, seed: u64) -> Result<ResultRecord> {
    run_traced(algo, cfg, seed).map(|(record, _)| record)
}

pub fn run_traced(algo: Algo, cfg: &ExperimentConfig, seed: u64) -> Result<(ResultRecord, Trace)> {
    cfg.validate()?;
    let started = Instant::now();
    let stream_ = scenario_stream(cfg, seed)?;
    let window = cfg.eval_rounds();
    let eval: Vec<usize> = window.clone().collect();
    let mut record = ResultRecord {
        algo,
        seed,
        delivered: 0.0,
        per_realization: Vec::new(),
        played: None,
        proven_optimal: true,
        max_energy_spent: 0.0,
        max_frame_delivered: 0,
        eval_rounds: (*window.start(), *window.end()),
        runtime_s: 0.0,
    };
    let trace = match algo {
        Algo::Crl => {
            let mut rng = stream(seed, Purpose::Learner, 0);
            let trace = run_crl(&stream_, &cfg.crl, cfg.run.rounds, &mut rng)?;
            record.per_realization = eval.iter().map(|&k| trace.greedy_delivered[k - 1]).collect();
            record.played = Some(eval.iter().map(|&k| trace.rounds[k - 1].delivered).collect());
            for round in &trace.rounds {
                for &e in &round.energy_spent {
                    record.max_energy_spent = record.max_energy_spent.max(e);
                }
                for m in &round.matches {
                    record.max_frame_delivered = record.max_frame_delivered.max(m.served_total);
                }
            }
            for agent in &trace.agents {
                let path = crate::crl::most_probable_path(&agent.graph);
                record.max_energy_spent = record.max_energy_spent.max(agent.graph.path_cost_mw(&path));
            }
            Trace::Crl(trace)
        }
        Algo::Tql => {
            let mut rng = stream(seed, Purpose::Learner, 1);
            let trace = tql_train(&stream_, &cfg.tql, cfg.run.rounds, &mut rng)?;
            record.per_realization = eval.iter().map(|&k| trace.greedy_delivered[k - 1]).collect();
            record.played = Some(eval.iter().map(|&k| trace.curve[k - 1]).collect());
            record.max_energy_spent = trace.max_energy_spent;
            record.max_frame_delivered = trace.max_frame_delivered;
            Trace::Tql(trace)
        }
        Algo::FmMax => {
            for &k in &eval {
                let scenario = stream_.round(k)?;
                let result = max_power_baseline(&scenario);
                record.per_realization.push(result.delivered);
                for e in result.energy_spent {
                    record.max_energy_spent = record.max_energy_spent.max(e);
                }
                record.max_frame_delivered = record.max_frame_delivered.max(result.max_frame_delivered);
            }
            Trace::None
        }
        Algo::Opt => {
            for &k in &eval {
                let scenario = stream_.round(k)?;
                let solution = solve_offline(&scenario, &cfg.opt)?;
                record.per_realization.push(solution.objective);
                record.proven_optimal &= solution.proven_optimal;
                for i in 0..scenario.num_devices() {
                    record.max_energy_spent = record.max_energy_spent.max(solution.assignment.energy_spent(i));
                }
                for t in 0..scenario.num_frames() {
                    let n = crate::sinr::count_delivered(&solution.assignment.frames[t], &scenario, t)?.count;
                    record.max_frame_delivered = record.max_frame_delivered.max(n);
                }
            }
            Trace::None
        }
    };
    record.delivered = mean(&record.per_realization.iter().map(|&d| d as f64).collect::<Vec<_>>());
    record.runtime_s = started.elapsed().as_secs_f64();
    Ok((record, trace))
}

/// Formula-predicted and constructed sizes of the transition graph for `cfg`.
pub fn graph_report(cfg: &ExperimentConfig) -> Result<GraphFormulas> {
    let n = &cfg.network;
    let tg = TransitionGraph::build(n.energy_budget_mw, &n.power_levels_dbm, n.num_frames)?;
    Ok(GraphFormulas::for_graph(&tg))
}
