use crate::error::{NomaError, Result};
use crate::scenario::Scenario;
use crate::sinr::{count_delivered, Choice, FrameAssignment};
use crate::units::energy_units;

/// Largest decision space [`brute_force_tiny`] will walk.
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

/// One joint decision for a frame: delivered count and per-device energy.
struct Outcome {
    delivered: usize,
    cost: Vec<u64>,
}

/// Every joint per-device choice of one frame that respects the group cap.
fn frame_outcomes(scenario: &Scenario, frame: usize, options: &[Vec<Option<(usize, usize)>>]) -> Result<Vec<Outcome>> {
    let cfg = &scenario.config;
    let m = cfg.num_devices;
    let mut out = Vec::new();
    let mut pick = vec![0usize; m];
    loop {
        let mut fa = FrameAssignment::idle(m);
        let mut cost = vec![0u64; m];
        let mut per_slot = vec![0usize; cfg.num_slots];
        for i in 0..m {
            if let Some((slot, level)) = options[i][pick[i]] {
                let mw = cfg.level_mw(level);
                fa.choices[i] = Some(Choice { slot, power_mw: mw });
                cost[i] = energy_units(mw);
                per_slot[slot] += 1;
            }
        }
        // Over-subscribed slots are infeasible outright here.
        if per_slot.iter().all(|&k| k <= cfg.group_cap) {
            let delivered = count_delivered(&fa, scenario, frame)?.count;
            out.push(Outcome { delivered, cost });
        }
        let mut i = 0;
        loop {
            if i == m {
                return Ok(out);
            }
            pick[i] += 1;
            if pick[i] < options[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}

fn walk(frames: &[Vec<Outcome>], t: usize, remaining: &mut [u64], acc: usize, best: &mut usize) {
    if t == frames.len() {
        *best = (*best).max(acc);
        return;
    }
    for o in &frames[t] {
        if o.cost.iter().zip(remaining.iter()).any(|(c, r)| c > r) {
            continue;
        }
        for (r, c) in remaining.iter_mut().zip(&o.cost) {
            *r -= c;
        }
        walk(frames, t + 1, remaining, acc + o.delivered, best);
        for (r, c) in remaining.iter_mut().zip(&o.cost) {
            *r += c;
        }
    }
}

/// Exhaustive maximum over every per-device, per-frame (slot, power) choice.
pub fn brute_force_tiny(scenario: &Scenario) -> Result<usize> {
    let cfg = &scenario.config;
    let on: Vec<usize> = cfg.on_levels().collect();
    let mut options = Vec::with_capacity(cfg.num_frames);
    let mut space = 1f64;
    for t in 0..cfg.num_frames {
        let mut per_device = Vec::with_capacity(cfg.num_devices);
        for i in 0..cfg.num_devices {
            let task = scenario.task(i, t);
            let mut opts = vec![None];
            for slot in 0..cfg.num_slots {
                if task.allows(slot) {
                    opts.extend(on.iter().map(|&l| Some((slot, l))));
                }
            }
            space *= opts.len() as f64;
            per_device.push(opts);
        }
        options.push(per_device);
    }
    if space > BRUTE_FORCE_LIMIT {
        return Err(NomaError::TooLarge(format!(
            "brute force over {space:.3e} decisions exceeds {BRUTE_FORCE_LIMIT:e}"
        )));
    }
    let frames = (0..cfg.num_frames)
        .map(|t| frame_outcomes(scenario, t, &options[t]))
        .collect::<Result<Vec<_>>>()?;
    let mut remaining = vec![energy_units(cfg.energy_budget_mw); cfg.num_devices];
    let mut best = 0;
    walk(&frames, 0, &mut remaining, 0, &mut best);
    Ok(best)
}
