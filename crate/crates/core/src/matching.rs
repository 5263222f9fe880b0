//! Online frame matching: slots arrive one at a time and each is greedily
//! filled with a NOMA group of at most `G` not-yet-served devices.
//!
//! Within a slot, candidates are scanned from the weakest received power
//! upward and admitted while `p·g ≥ θ·(1 + Y)`, where `Y` is the received
//! power already admitted. The first `G` admitted devices form the group.

use serde::{Deserialize, Serialize};

use crate::scenario::{PacketTask, Scenario};
use crate::sinr::{rank_cmp, Choice, FrameAssignment};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameMatchResult {
    /// Devices served in each slot (0-based slots).
    pub groups: Vec<Vec<usize>>,
    pub served_total: usize,
    pub unserved: Vec<usize>,
}

impl FrameMatchResult {
    /// The matched devices as a frame assignment at their chosen powers.
    pub fn to_assignment(&self, powers: &[f64]) -> FrameAssignment {
        let mut fa = FrameAssignment::idle(powers.len());
        for (slot, group) in self.groups.iter().enumerate() {
            for &d in group {
                fa.choices[d] = Some(Choice {
                    slot,
                    power_mw: powers[d],
                });
            }
        }
        fa
    }
}

/// Devices with an edge to `slot`: unserved, transmitting, in-window and
/// able to meet their threshold alone.
pub fn neighbors(
    slot: usize,
    slot_gains: &[f64],
    powers: &[f64],
    tasks: &[PacketTask],
    unserved: &[bool],
    capacity_hz: f64,
) -> Vec<usize> {
    (0..powers.len())
        .filter(|&i| {
            unserved[i]
                && powers[i] > 0.0
                && tasks[i].allows(slot)
                && powers[i] * slot_gains[i] >= tasks[i].threshold(capacity_hz)
        })
        .collect()
}

/// Greedy admission over one slot's neighbors. `thresholds` is indexed by device.
pub fn greedy_slot(
    neighbors: &[usize],
    slot_gains: &[f64],
    powers: &[f64],
    thresholds: &[f64],
    group_cap: usize,
) -> Vec<usize> {
    let received = |i: usize| powers[i] * slot_gains[i];
    let mut order = neighbors.to_vec();
    order.sort_by(|&a, &b| rank_cmp(received(a), a, received(b), b));
    let mut admitted = Vec::with_capacity(group_cap.min(order.len()));
    let mut load = 0.0;
    for i in order {
        if admitted.len() == group_cap {
            break;
        }
        let s = received(i);
        if s >= thresholds[i] * (1.0 + load) {
            admitted.push(i);
            load += s;
        }
    }
    admitted
}

/// Frame matching driven one slot at a time. The matcher never sees a
/// slot's gains before [`reveal`](Self::reveal) is called for it.
#[derive(Debug, Clone)]
pub struct OnlineMatcher<'a> {
    powers: &'a [f64],
    tasks: Vec<PacketTask>,
    thresholds: Vec<f64>,
    unserved: Vec<bool>,
    group_cap: usize,
    capacity_hz: f64,
    next_slot: usize,
    groups: Vec<Vec<usize>>,
}

impl<'a> OnlineMatcher<'a> {
    pub fn new(tasks: Vec<PacketTask>, powers: &'a [f64], group_cap: usize, capacity_hz: f64) -> Self {
        let thresholds = tasks.iter().map(|t| t.threshold(capacity_hz)).collect();
        OnlineMatcher {
            powers,
            unserved: vec![true; tasks.len()],
            tasks,
            thresholds,
            group_cap,
            capacity_hz,
            next_slot: 0,
            groups: Vec::new(),
        }
    }

    /// Decides the next slot irrevocably from its gains alone.
    pub fn reveal(&mut self, slot_gains: &[f64]) -> &[usize] {
        let slot = self.next_slot;
        let nbrs = neighbors(
            slot,
            slot_gains,
            self.powers,
            &self.tasks,
            &self.unserved,
            self.capacity_hz,
        );
        let group = greedy_slot(&nbrs, slot_gains, self.powers, &self.thresholds, self.group_cap);
        for &d in &group {
            self.unserved[d] = false;
        }
        self.groups.push(group);
        self.next_slot += 1;
        self.groups.last().unwrap()
    }

    pub fn finish(self) -> FrameMatchResult {
        let served_total = self.groups.iter().map(Vec::len).sum();
        let unserved = (0..self.unserved.len()).filter(|&i| self.unserved[i]).collect();
        FrameMatchResult {
            groups: self.groups,
            served_total,
            unserved,
        }
    }
}

/// Runs frame matching over all slots of `frame` with fixed per-device powers (mW).
pub fn fm_frame(scenario: &Scenario, frame: usize, powers: &[f64]) -> FrameMatchResult {
    let tasks = (0..scenario.num_devices())
        .map(|i| *scenario.task(i, frame))
        .collect();
    let mut matcher = OnlineMatcher::new(
        tasks,
        powers,
        scenario.config.group_cap,
        scenario.config.slot_capacity_hz(),
    );
    for slot in 0..scenario.num_slots() {
        matcher.reveal(scenario.slot_gains(frame, slot));
    }
    matcher.finish()
}
