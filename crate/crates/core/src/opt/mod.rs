//! Exact offline optimum at desk scale.
//!
//! With a finite power set and groups of at most `G`, every resource block
//! has finitely many jointly decodable (device, power) configurations, so
//! the offline problem becomes a set packing with per-device energy rows.
//! [`solve_offline`] hands it to the HiGHS MILP solver or to a native
//! depth-first branch and bound; [`brute_force_tiny`] enumerates raw
//! per-device decisions as an independent cross-check; [`export_ilp`]
//! writes the packing as an LP file.

mod bnb;
mod brute;
mod configs;
mod lp;
#[cfg(feature = "highs")]
mod milp;

use serde::{Deserialize, Serialize};

use crate::error::Result;
#[cfg(not(feature = "highs"))]
use crate::error::NomaError;
use crate::scenario::Scenario;
use crate::sinr::{Assignment, Choice};

pub use brute::{brute_force_tiny, BRUTE_FORCE_LIMIT};
pub use configs::{enumerate_configs, SlotConfig};
pub use lp::{export_ilp, write_ilp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    /// LP-based branch and cut from HiGHS on the configuration model.
    Highs,
    /// The native branch and bound.
    BranchAndBound,
}

impl Default for Solver {
    fn default() -> Self {
        if cfg!(feature = "highs") {
            Solver::Highs
        } else {
            Solver::BranchAndBound
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptParams {
    pub solver: Solver,
    /// Maximum number of configurations enumerated per frame.
    pub config_cap: usize,
    pub time_limit_s: f64,
    /// Bound-based pruning; disabling it is only useful for cross-checks.
    pub pruning: bool,
}

impl Default for OptParams {
    fn default() -> Self {
        OptParams {
            solver: Solver::default(),
            config_cap: 1_000_000,
            time_limit_s: 60.0,
            pruning: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptSolution {
    pub objective: usize,
    pub assignment: Assignment,
    /// Chosen configurations, per frame.
    pub certificate: Vec<Vec<SlotConfig>>,
    /// False when the time limit stopped the search early.
    pub proven_optimal: bool,
    /// Search nodes explored by the native branch and bound; 0 for HiGHS.
    pub nodes: u64,
}

impl OptSolution {
    fn from_configs(
        scenario: &Scenario,
        chosen: impl IntoIterator<Item = SlotConfig>,
        proven_optimal: bool,
        nodes: u64,
    ) -> Self {
        let cfg = &scenario.config;
        let mut assignment = Assignment::idle(cfg.num_devices, cfg.num_frames);
        let mut certificate = vec![Vec::new(); cfg.num_frames];
        let mut objective = 0;
        for c in chosen {
            for &(d, level) in &c.members {
                assignment.frames[c.frame].choices[d] = Some(Choice {
                    slot: c.slot,
                    power_mw: cfg.level_mw(level),
                });
            }
            objective += c.value();
            certificate[c.frame].push(c);
        }
        for frame in &mut certificate {
            frame.sort_by_key(|c| c.slot);
        }
        OptSolution {
            objective,
            assignment,
            certificate,
            proven_optimal,
            nodes,
        }
    }
}

/// Maximum number of delivered packets over the horizon, with hindsight.
pub fn solve_offline(scenario: &Scenario, params: &OptParams) -> Result<OptSolution> {
    match params.solver {
        Solver::BranchAndBound => bnb::solve(scenario, params),
        #[cfg(feature = "highs")]
        Solver::Highs => milp::solve(scenario, params),
        #[cfg(not(feature = "highs"))]
        Solver::Highs => Err(NomaError::InvalidConfig(
            "this build has no HiGHS support; use solver = \"branch-and-bound\"".into(),
        )),
    }
}
