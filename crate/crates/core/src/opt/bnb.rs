use std::collections::HashMap;
use std::time::{Duration, Instant};

use super::configs::{enumerate_configs, SlotConfig};
use super::{OptParams, OptSolution};
use crate::error::{NomaError, Result};
use crate::scenario::Scenario;
use crate::units::{energy_units, units_to_mw};

struct Packed {
    mask: u64,
    value: u32,
    /// `(device, energy units)`.
    costs: Vec<(usize, u64)>,
    config: SlotConfig,
}

/// Exact set packing over the slots of one frame, memoized on the devices
/// already used. Only options with positive value are kept.
struct PackDp {
    /// Per slot `(mask, value, config index)`, best-first.
    slots: Vec<Vec<(u64, f64, usize)>>,
    /// Devices that appear in slots `>= j`.
    relevant_after: Vec<u64>,
    /// Largest option value available in slots `>= j`, summed.
    value_after: Vec<f64>,
    memo: HashMap<(usize, u64), f64>,
}

const EPS: f64 = 1e-7;

impl PackDp {
    fn new(mut slots: Vec<Vec<(u64, f64, usize)>>) -> Self {
        for s in &mut slots {
            s.retain(|o| o.1 > EPS);
            s.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.2.cmp(&b.2)));
        }
        let n = slots.len();
        let mut relevant_after = vec![0u64; n + 1];
        let mut value_after = vec![0.0; n + 1];
        for j in (0..n).rev() {
            relevant_after[j] = relevant_after[j + 1] | slots[j].iter().fold(0, |a, o| a | o.0);
            value_after[j] = value_after[j + 1] + slots[j].first().map_or(0.0, |o| o.1);
        }
        PackDp {
            slots,
            relevant_after,
            value_after,
            memo: HashMap::new(),
        }
    }

    /// Best packing of slots `slot..` avoiding the devices in `used`.
    fn best(&mut self, slot: usize, used: u64) -> f64 {
        if slot == self.slots.len() {
            return 0.0;
        }
        let key = (slot, used & self.relevant_after[slot]);
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let ceiling = self.value_after[slot];
        let rest = self.value_after[slot + 1];
        let mut best = self.best(slot + 1, used);
        for k in 0..self.slots[slot].len() {
            if best >= ceiling - EPS {
                break;
            }
            let (mask, value, _) = self.slots[slot][k];
            if mask & used != 0 || value + rest <= best + EPS {
                continue;
            }
            best = best.max(value + self.best(slot + 1, used | mask));
        }
        self.memo.insert(key, best);
        best
    }

    /// One maximizing packing from the empty state, as `(slot, config index)`.
    fn argmax(&mut self) -> Vec<(usize, usize)> {
        let mut used = 0u64;
        let mut picks = Vec::new();
        for slot in 0..self.slots.len() {
            let target = self.best(slot, used);
            if self.best(slot + 1, used) >= target - EPS {
                continue;
            }
            for k in 0..self.slots[slot].len() {
                let (mask, value, idx) = self.slots[slot][k];
                if mask & used == 0 && value + self.best(slot + 1, used | mask) >= target - EPS {
                    picks.push((slot, idx));
                    used |= mask;
                    break;
                }
            }
        }
        picks
    }
}

/// Builds a packing DP over `configs` with per-config values from `value`;
/// configs failing `keep` are left out.
fn pack_dp(
    configs: &[Vec<Packed>],
    value: impl Fn(&Packed) -> f64,
    keep: impl Fn(&Packed) -> bool,
) -> PackDp {
    PackDp::new(
        configs
            .iter()
            .map(|slot| {
                slot.iter()
                    .enumerate()
                    .filter(|(_, c)| keep(c))
                    .map(|(k, c)| (c.mask, value(c), k))
                    .collect()
            })
            .collect(),
    )
}

fn adjusted(c: &Packed, lambda: &[f64]) -> f64 {
    c.value as f64 - c.costs.iter().map(|&(d, u)| lambda[d] * units_to_mw(u)).sum::<f64>()
}

/// Frame-by-frame packing of affordable configs under the given values.
/// Returns the delivered total and the chosen `(frame, slot, config)`.
fn myopic(configs: &[Vec<Vec<Packed>>], budget: u64, lambda: &[f64]) -> (u32, Vec<(usize, usize, usize)>) {
    let m = lambda.len();
    let mut energy = vec![budget; m];
    let mut total = 0;
    let mut chosen = Vec::new();
    for (t, frame) in configs.iter().enumerate() {
        let mut dp = pack_dp(
            frame,
            |c| adjusted(c, lambda),
            |c| c.costs.iter().all(|&(d, u)| energy[d] >= u),
        );
        for (j, k) in dp.argmax() {
            let c = &frame[j][k];
            for &(d, u) in &c.costs {
                energy[d] -= u;
            }
            total += c.value;
            chosen.push((t, j, k));
        }
    }
    (total, chosen)
}

/// Multipliers for the per-device energy rows by projected subgradient
/// descent on the Lagrangian dual, stopping early once the dual bound
/// meets `lower`.
fn multipliers(configs: &[Vec<Vec<Packed>>], caps_mw: &[f64], lower: u32, iterations: usize) -> Vec<f64> {
    let m = caps_mw.len();
    let mut lambda = vec![0.0; m];
    let mut best_lambda = lambda.clone();
    let mut best_dual = f64::INFINITY;
    let mut mu = 1.0;
    let mut stall = 0;
    for _ in 0..iterations {
        let mut spend = vec![0.0; m];
        let mut dual: f64 = lambda.iter().zip(caps_mw).map(|(l, c)| l * c).sum();
        for frame in configs {
            let mut dp = pack_dp(frame, |c| adjusted(c, &lambda), |_| true);
            dual += dp.best(0, 0);
            for (j, k) in dp.argmax() {
                for &(d, u) in &frame[j][k].costs {
                    spend[d] += units_to_mw(u);
                }
            }
        }
        if dual < best_dual - EPS {
            best_dual = dual;
            best_lambda.clone_from(&lambda);
            stall = 0;
        } else {
            stall += 1;
            if stall >= 5 {
                mu /= 2.0;
                stall = 0;
            }
        }
        if (best_dual + EPS).floor() <= lower as f64 {
            break;
        }
        let g: Vec<f64> = caps_mw.iter().zip(&spend).map(|(c, s)| c - s).collect();
        let norm2: f64 = g.iter().map(|x| x * x).sum();
        if norm2 <= 0.0 || mu < 1e-4 {
            break;
        }
        let step = mu * (dual - lower as f64).max(1.0) / norm2;
        for (l, gd) in lambda.iter_mut().zip(&g) {
            *l = (*l - step * gd).max(0.0);
        }
    }
    best_lambda
}

struct Search {
    configs: Vec<Vec<Vec<Packed>>>,
    /// Energy-free packing per frame.
    plain: Vec<PackDp>,
    /// Energy-priced packing per frame.
    priced: Vec<PackDp>,
    lambda: Vec<f64>,
    future_plain: Vec<f64>,
    future_priced: Vec<f64>,
    /// Most energy a device could spend in frames `t..`, per device.
    need: Vec<Vec<u64>>,
    energy: Vec<u64>,
    chosen: Vec<(usize, usize, usize)>,
    best_value: u32,
    best_choice: Vec<(usize, usize, usize)>,
    table: HashMap<(usize, Vec<u64>), u32>,
    pruning: bool,
    deadline: Instant,
    aborted: bool,
    nodes: u64,
}

impl Search {
    fn state_key(&self, frame: usize) -> (usize, Vec<u64>) {
        let key = self
            .energy
            .iter()
            .zip(&self.need[frame])
            .map(|(&e, &n)| e.min(n))
            .collect();
        (frame, key)
    }

    /// Upper bound on what slots `slot..` of `frame` and all later frames
    /// can still add: the smaller of the energy-free packing bound and the
    /// energy-priced one plus the price of the energy still available.
    fn bound(&mut self, frame: usize, slot: usize, used: u64) -> u32 {
        let plain = self.plain[frame].best(slot, used) + self.future_plain[frame + 1];
        let credit: f64 = self
            .energy
            .iter()
            .zip(&self.need[frame])
            .zip(&self.lambda)
            .map(|((&e, &n), l)| l * units_to_mw(e.min(n)))
            .sum();
        let priced = self.priced[frame].best(slot, used) + self.future_priced[frame + 1] + credit;
        (plain.min(priced) + EPS).floor().max(0.0) as u32
    }

    fn dfs(&mut self, frame: usize, slot: usize, used: u64, acc: u32) {
        self.nodes += 1;
        if self.nodes.is_multiple_of(1024) && Instant::now() > self.deadline {
            self.aborted = true;
        }
        if self.aborted {
            return;
        }
        if frame == self.configs.len() {
            if acc > self.best_value {
                self.best_value = acc;
                self.best_choice = self.chosen.clone();
            }
            return;
        }
        if slot == self.configs[frame].len() {
            self.frame_boundary(frame + 1, acc);
            return;
        }
        // Children: every affordable disjoint config, then leaving the slot empty.
        let mut children: Vec<(u32, usize)> = Vec::new();
        for k in 0..self.configs[frame][slot].len() {
            let (mask, value, affordable) = {
                let c = &self.configs[frame][slot][k];
                let ok = c.costs.iter().all(|&(d, u)| self.energy[d] >= u);
                (c.mask, c.value, ok)
            };
            if mask & used != 0 || !affordable {
                continue;
            }
            let score = value + self.bound(frame, slot + 1, used | mask);
            if !self.pruning || acc + score > self.best_value {
                children.push((score, k));
            }
        }
        children.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for (score, k) in children {
            if self.pruning && acc + score <= self.best_value {
                continue;
            }
            let value = self.configs[frame][slot][k].value;
            let mask = self.configs[frame][slot][k].mask;
            for i in 0..self.configs[frame][slot][k].costs.len() {
                let (d, u) = self.configs[frame][slot][k].costs[i];
                self.energy[d] -= u;
            }
            self.chosen.push((frame, slot, k));
            self.dfs(frame, slot + 1, used | mask, acc + value);
            self.chosen.pop();
            for i in 0..self.configs[frame][slot][k].costs.len() {
                let (d, u) = self.configs[frame][slot][k].costs[i];
                self.energy[d] += u;
            }
            if self.aborted {
                return;
            }
        }
        if !self.pruning || acc + self.bound(frame, slot + 1, used) > self.best_value {
            self.dfs(frame, slot + 1, used, acc);
        }
    }

    fn frame_boundary(&mut self, frame: usize, acc: u32) {
        if frame == self.configs.len() || !self.pruning {
            self.dfs(frame, 0, 0, acc);
            return;
        }
        let key = self.state_key(frame);
        if let Some(&ub) = self.table.get(&key) {
            if acc + ub <= self.best_value {
                return;
            }
        }
        self.dfs(frame, 0, 0, acc);
        if !self.aborted {
            // Every completion below was either explored or pruned against
            // the incumbent, so none beats it.
            let ub = self.best_value.saturating_sub(acc);
            let entry = self.table.entry(key).or_insert(ub);
            *entry = (*entry).min(ub);
        }
    }
}

/// Drops configurations whose member set is also available at
/// component-wise lower energy. Such configs can never be needed.
fn pareto(configs: Vec<Packed>) -> Vec<Packed> {
    let mut by_mask: HashMap<u64, Vec<Packed>> = HashMap::new();
    for c in configs {
        by_mask.entry(c.mask).or_default().push(c);
    }
    let mut out = Vec::new();
    for (_, group) in by_mask {
        for (i, c) in group.iter().enumerate() {
            let dominated = group.iter().enumerate().any(|(j, o)| {
                j != i
                    && o.costs.iter().zip(&c.costs).all(|(a, b)| a.1 <= b.1)
                    && o.costs.iter().zip(&c.costs).any(|(a, b)| a.1 < b.1)
            });
            if !dominated {
                out.push(Packed {
                    mask: c.mask,
                    value: c.value,
                    costs: c.costs.clone(),
                    config: c.config.clone(),
                });
            }
        }
    }
    out
}

/// Depth-first branch and bound over per-frame packings, bounded by a
/// per-frame packing relaxation and a Lagrangian relaxation of the energy rows.
pub(super) fn solve(scenario: &Scenario, params: &OptParams) -> Result<OptSolution> {
    let cfg = &scenario.config;
    let m = cfg.num_devices;
    if m > 64 {
        return Err(NomaError::TooLarge(format!(
            "exact solver supports at most 64 devices, got {m}"
        )));
    }
    let budget = energy_units(cfg.energy_budget_mw);
    let level_units: Vec<u64> = (0..cfg.num_levels()).map(|l| energy_units(cfg.level_mw(l))).collect();

    let mut configs = Vec::with_capacity(cfg.num_frames);
    for t in 0..cfg.num_frames {
        let per_slot = enumerate_configs(scenario, t, params.config_cap)?;
        let mut slots = Vec::with_capacity(per_slot.len());
        for slot_configs in per_slot {
            let packed: Vec<Packed> = slot_configs
                .into_iter()
                .map(|c| Packed {
                    mask: c.members.iter().fold(0u64, |acc, &(d, _)| acc | 1 << d),
                    value: c.members.len() as u32,
                    costs: c.members.iter().map(|&(d, l)| (d, level_units[l])).collect(),
                    config: c,
                })
                .filter(|p| p.costs.iter().all(|&(_, u)| u <= budget))
                .collect();
            let mut packed = pareto(packed);
            packed.sort_by(|a, b| {
                b.value
                    .cmp(&a.value)
                    .then_with(|| {
                        let ca: u64 = a.costs.iter().map(|c| c.1).sum();
                        let cb: u64 = b.costs.iter().map(|c| c.1).sum();
                        ca.cmp(&cb)
                    })
                    .then_with(|| a.config.members.cmp(&b.config.members))
            });
            slots.push(packed);
        }
        configs.push(slots);
    }

    let t_count = configs.len();
    // Energy beyond what a device could possibly spend in frames t.. is
    // irrelevant to the rest of the search.
    let mut need = vec![vec![0u64; m]; t_count + 1];
    for t in (0..t_count).rev() {
        let mut frame_max = vec![0u64; m];
        for slot in &configs[t] {
            for c in slot {
                for &(d, u) in &c.costs {
                    frame_max[d] = frame_max[d].max(u);
                }
            }
        }
        for d in 0..m {
            need[t][d] = need[t + 1][d] + frame_max[d];
        }
    }

    let mut plain: Vec<PackDp> = configs
        .iter()
        .map(|f| pack_dp(f, |c| c.value as f64, |_| true))
        .collect();
    let mut future_plain = vec![0.0; t_count + 1];
    for t in (0..t_count).rev() {
        future_plain[t] = future_plain[t + 1] + plain[t].best(0, 0);
    }

    let zero = vec![0.0; m];
    let (mut best_value, mut best_choice) = myopic(&configs, budget, &zero);
    let mut lambda = zero;
    if params.pruning && (future_plain[0] + EPS).floor() as u32 > best_value {
        let caps: Vec<f64> = need[0].iter().map(|&n| units_to_mw(n.min(budget))).collect();
        lambda = multipliers(&configs, &caps, best_value, 60);
        let (v, c) = myopic(&configs, budget, &lambda);
        if v > best_value {
            best_value = v;
            best_choice = c;
        }
    }
    let mut priced: Vec<PackDp> = configs
        .iter()
        .map(|f| pack_dp(f, |c| adjusted(c, &lambda), |_| true))
        .collect();
    let mut future_priced = vec![0.0; t_count + 1];
    for t in (0..t_count).rev() {
        future_priced[t] = future_priced[t + 1] + priced[t].best(0, 0);
    }
    if !params.pruning {
        best_value = 0;
        best_choice.clear();
    }

    let mut search = Search {
        configs,
        plain,
        priced,
        lambda,
        future_plain,
        future_priced,
        need,
        energy: vec![budget; m],
        chosen: Vec::new(),
        best_value,
        best_choice,
        table: HashMap::new(),
        pruning: params.pruning,
        deadline: Instant::now() + Duration::from_secs_f64(params.time_limit_s.max(0.0)),
        aborted: false,
        nodes: 0,
    };
    search.dfs(0, 0, 0, 0);

    let chosen = search
        .best_choice
        .iter()
        .map(|&(t, j, k)| search.configs[t][j][k].config.clone());
    Ok(OptSolution::from_configs(
        scenario,
        chosen,
        !search.aborted,
        search.nodes,
    ))
}
