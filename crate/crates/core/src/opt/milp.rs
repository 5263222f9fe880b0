use std::collections::HashMap;

use highs::{ColProblem, HighsModelStatus, Sense};

use super::configs::{enumerate_configs, SlotConfig};
use super::{OptParams, OptSolution};
use crate::error::{NomaError, Result};
use crate::scenario::Scenario;
use crate::units::energy_units;

/// Solves the configuration model with HiGHS. Energy rows are stated in
/// integer energy units so that no rounding can admit an over-budget plan.
pub(super) fn solve(scenario: &Scenario, params: &OptParams) -> Result<OptSolution> {
    let cfg = &scenario.config;
    let budget = energy_units(cfg.energy_budget_mw);
    let level_units: Vec<u64> = (0..cfg.num_levels()).map(|l| energy_units(cfg.level_mw(l))).collect();

    let mut configs: Vec<SlotConfig> = Vec::new();
    for t in 0..cfg.num_frames {
        for slot in enumerate_configs(scenario, t, params.config_cap)? {
            configs.extend(
                slot.into_iter()
                    .filter(|c| c.members.iter().all(|&(_, l)| level_units[l] <= budget)),
            );
        }
    }
    if configs.is_empty() {
        return Ok(OptSolution::from_configs(scenario, Vec::new(), true, 0));
    }

    let mut problem = ColProblem::default();
    let mut block_rows = HashMap::new();
    let mut serve_rows = HashMap::new();
    let mut energy_rows = HashMap::new();
    for c in &configs {
        block_rows
            .entry((c.frame, c.slot))
            .or_insert_with(|| problem.add_row(..=1.0));
        for &(d, _) in &c.members {
            serve_rows
                .entry((c.frame, d))
                .or_insert_with(|| problem.add_row(..=1.0));
            energy_rows
                .entry(d)
                .or_insert_with(|| problem.add_row(..=budget as f64));
        }
    }
    for c in &configs {
        let mut entries = vec![(block_rows[&(c.frame, c.slot)], 1.0)];
        for &(d, level) in &c.members {
            entries.push((serve_rows[&(c.frame, d)], 1.0));
            entries.push((energy_rows[&d], level_units[level] as f64));
        }
        problem.add_integer_column(c.value() as f64, 0.0..=1.0, entries);
    }

    let mut model = problem.optimise(Sense::Maximise);
    model.make_quiet();
    model.set_option("threads", 1);
    model.set_option("random_seed", 0);
    model.set_option("mip_rel_gap", 0.0);
    // The objective is integral, so any gap below one is closed.
    model.set_option("mip_abs_gap", 0.999);
    model.set_option("time_limit", params.time_limit_s.max(0.0));
    let solved = model
        .try_solve()
        .map_err(|s| NomaError::Solver(format!("HiGHS failed: {s:?}")))?;

    let proven = match solved.status() {
        HighsModelStatus::Optimal => true,
        HighsModelStatus::ReachedTimeLimit | HighsModelStatus::ReachedIterationLimit => false,
        other => return Err(NomaError::Solver(format!("HiGHS returned {other:?}"))),
    };
    let solution = solved.get_solution();
    let chosen: Vec<SlotConfig> = configs
        .into_iter()
        .zip(solution.columns())
        .filter(|(_, &x)| x > 0.5)
        .map(|(c, _)| c)
        .collect();
    let result = OptSolution::from_configs(scenario, chosen, proven, 0);
    result.assignment.check_energy(cfg.energy_budget_mw)?;
    Ok(result)
}
