use serde::{Deserialize, Serialize};

use crate::error::{NomaError, Result};
use crate::scenario::Scenario;
use crate::sinr::rank_cmp;

/// A jointly decodable group on one resource block.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlotConfig {
    pub frame: usize,
    pub slot: usize,
    /// `(device, power level)`, sorted by device.
    pub members: Vec<(usize, usize)>,
}

impl SlotConfig {
    pub fn value(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, device: usize) -> bool {
        self.members.iter().any(|&(d, _)| d == device)
    }
}

#[derive(Clone, Copy)]
struct Item {
    device: usize,
    level: usize,
    received: f64,
    threshold: f64,
}

/// All non-empty feasible configurations of every slot of `frame`.
///
/// Candidates are (device, on-level) pairs that meet their threshold alone.
/// Sorting them by SIC rank lets a configuration be grown weakest-first:
/// each newcomer only has to clear the load already in the group, and each
/// (set, powers) combination is produced exactly once.
pub fn enumerate_configs(scenario: &Scenario, frame: usize, cap: usize) -> Result<Vec<Vec<SlotConfig>>> {
    let cfg = &scenario.config;
    let mut out = Vec::with_capacity(cfg.num_slots);
    let mut total = 0usize;
    for slot in 0..cfg.num_slots {
        let gains = scenario.slot_gains(frame, slot);
        let mut items = Vec::new();
        for (device, &gain) in gains.iter().enumerate() {
            if !scenario.task(device, frame).allows(slot) {
                continue;
            }
            let threshold = scenario.threshold(device, frame);
            for level in cfg.on_levels() {
                let received = cfg.level_mw(level) * gain;
                if received >= threshold {
                    items.push(Item {
                        device,
                        level,
                        received,
                        threshold,
                    });
                }
            }
        }
        items.sort_by(|a, b| rank_cmp(a.received, a.device, b.received, b.device));
        let mut slot_configs = Vec::new();
        let mut chain = Vec::new();
        grow(
            &items,
            0,
            0.0,
            &mut chain,
            cfg.group_cap,
            &mut slot_configs,
            &mut total,
            cap,
        )?;
        out.push(
            slot_configs
                .into_iter()
                .map(|mut members: Vec<(usize, usize)>| {
                    members.sort_unstable();
                    SlotConfig {
                        frame,
                        slot,
                        members,
                    }
                })
                .collect(),
        );
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn grow(
    items: &[Item],
    start: usize,
    load: f64,
    chain: &mut Vec<(usize, usize)>,
    group_cap: usize,
    out: &mut Vec<Vec<(usize, usize)>>,
    total: &mut usize,
    cap: usize,
) -> Result<()> {
    for (k, item) in items.iter().enumerate().skip(start) {
        if chain.iter().any(|&(d, _)| d == item.device) {
            continue;
        }
        if item.received < item.threshold * (1.0 + load) {
            continue;
        }
        chain.push((item.device, item.level));
        *total += 1;
        if *total > cap {
            return Err(NomaError::TooLarge(format!(
                "more than {cap} slot configurations in one frame"
            )));
        }
        out.push(chain.clone());
        if chain.len() < group_cap {
            grow(items, k + 1, load + item.received, chain, group_cap, out, total, cap)?;
        }
        chain.pop();
    }
    Ok(())
}
