//! SIC ordering, interference, SINR/rate and the delivered-packet counter.
//!
//! Devices sharing a resource block are decoded strongest received power
//! first. A member is interfered by every co-channel member ranked below it,
//! whether or not that member decodes. Ties in received power rank the lower
//! device id as weaker.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Constraint, NomaError, Result};
use crate::scenario::Scenario;

pub fn sinr(power_mw: f64, gain: f64, interference: f64) -> f64 {
    power_mw * gain / (1.0 + interference)
}

/// Achievable rate in bits/s over `bandwidth_hz`.
pub fn rate(power_mw: f64, gain: f64, interference: f64, bandwidth_hz: f64) -> f64 {
    bandwidth_hz * (1.0 + sinr(power_mw, gain, interference)).log2()
}

/// SINR a packet of `length_bits` needs in one slot of `capacity_hz = W·τ`.
pub fn threshold(length_bits: u64, capacity_hz: f64) -> f64 {
    (length_bits as f64 / capacity_hz).exp2() - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub device: usize,
    pub power_mw: f64,
    pub gain: f64,
    pub length_bits: u64,
}

impl Member {
    pub fn received(&self) -> f64 {
        self.power_mw * self.gain
    }
}

/// Total order used for SIC ranking: ascending received power, then device id.
pub fn rank_cmp(a_received: f64, a_device: usize, b_received: f64, b_device: usize) -> Ordering {
    a_received
        .total_cmp(&b_received)
        .then(a_device.cmp(&b_device))
}

/// Devices transmitting on one resource block, held in decode order
/// (strongest first).
#[derive(Debug, Clone, PartialEq)]
pub struct SlotGroup {
    pub slot: usize,
    members: Vec<Member>,
}

impl SlotGroup {
    pub fn new(slot: usize, mut members: Vec<Member>) -> Self {
        members.sort_by(|a, b| rank_cmp(b.received(), b.device, a.received(), a.device));
        SlotGroup { slot, members }
    }

    /// Members in decode order.
    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Interference seen by `device`: received power of all weaker members.
    pub fn interference_for(&self, device: usize) -> Result<f64> {
        let pos = self
            .members
            .iter()
            .position(|m| m.device == device)
            .ok_or(NomaError::NotInGroup { device })?;
        Ok(self.members[pos + 1..].iter().map(Member::received).sum())
    }

    /// Interference for every member, aligned with [`members`](Self::members).
    pub fn interference(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.members.len()];
        let mut below = 0.0;
        for (k, m) in self.members.iter().enumerate().rev() {
            out[k] = below;
            below += m.received();
        }
        out
    }
}

/// Which members decode, aligned with the group's decode order.
///
/// Member `i` succeeds iff `p_i·g_i ≥ (2^(L_i/(W·τ)) − 1)·(1 + I_i)`.
pub fn slot_success_flags(group: &SlotGroup, capacity_hz: f64) -> Vec<bool> {
    group
        .members
        .iter()
        .zip(group.interference())
        .map(|(m, i)| m.received() >= threshold(m.length_bits, capacity_hz) * (1.0 + i))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Choice {
    /// 0-based slot index.
    pub slot: usize,
    pub power_mw: f64,
}

/// Slot/power decisions of every device for one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameAssignment {
    pub choices: Vec<Option<Choice>>,
}

impl FrameAssignment {
    pub fn idle(num_devices: usize) -> Self {
        FrameAssignment {
            choices: vec![None; num_devices],
        }
    }

    pub fn energy(&self, device: usize) -> f64 {
        self.choices[device].map_or(0.0, |c| c.power_mw)
    }
}

/// Decisions over the whole horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub frames: Vec<FrameAssignment>,
}

impl Assignment {
    pub fn idle(num_devices: usize, num_frames: usize) -> Self {
        Assignment {
            frames: vec![FrameAssignment::idle(num_devices); num_frames],
        }
    }

    pub fn energy_spent(&self, device: usize) -> f64 {
        self.frames.iter().map(|f| f.energy(device)).sum()
    }

    /// Checks every device against the energy budget.
    pub fn check_energy(&self, budget_mw: f64) -> Result<()> {
        let m = self.frames.first().map_or(0, |f| f.choices.len());
        for i in 0..m {
            let spent = self.energy_spent(i);
            // Budgets are compared in the same integer units the graphs use.
            if crate::units::energy_units(spent) > crate::units::energy_units(budget_mw) {
                return Err(NomaError::violation(
                    i,
                    Constraint::Energy,
                    format!("spent {spent:.3} mW·frame of {budget_mw}"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delivery {
    pub count: usize,
    pub success: Vec<bool>,
}

/// Scores one frame. Slots chosen by more than `G` devices only decode the
/// `G` strongest; the rest still transmit and interfere but fail.
pub fn count_delivered(
    assignment: &FrameAssignment,
    scenario: &Scenario,
    frame: usize,
) -> Result<Delivery> {
    let m = scenario.num_devices();
    let n = scenario.num_slots();
    if assignment.choices.len() != m {
        return Err(NomaError::InvalidConfig(format!(
            "assignment covers {} devices, scenario has {m}",
            assignment.choices.len()
        )));
    }
    let mut per_slot: Vec<Vec<Member>> = vec![Vec::new(); n];
    for (i, choice) in assignment.choices.iter().enumerate() {
        let Some(c) = choice else { continue };
        let task = scenario.task(i, frame);
        if c.slot >= n || !task.allows(c.slot) {
            let detail = if task.has_packet() {
                format!(
                    "slot {} outside window {}..{}",
                    c.slot + 1,
                    task.arrival,
                    task.deadline
                )
            } else {
                "no packet this frame".to_string()
            };
            return Err(NomaError::violation(i, Constraint::Window, detail));
        }
        if !(c.power_mw >= 0.0) || !c.power_mw.is_finite() {
            return Err(NomaError::violation(i, Constraint::Rate, "invalid power"));
        }
        per_slot[c.slot].push(Member {
            device: i,
            power_mw: c.power_mw,
            gain: scenario.gain(frame, i, c.slot),
            length_bits: task.length_bits,
        });
    }
    let cap = scenario.config.group_cap;
    let capacity = scenario.config.slot_capacity_hz();
    let mut success = vec![false; m];
    for (j, members) in per_slot.into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let group = SlotGroup::new(j, members);
        for (k, (member, ok)) in group
            .members()
            .iter()
            .zip(slot_success_flags(&group, capacity))
            .enumerate()
        {
            success[member.device] = ok && k < cap;
        }
    }
    Ok(Delivery {
        count: success.iter().filter(|&&s| s).count(),
        success,
    })
}

/// Total delivered over all frames, after checking the energy budget.
pub fn count_assignment(assignment: &Assignment, scenario: &Scenario) -> Result<usize> {
    assignment.check_energy(scenario.config.energy_budget_mw)?;
    let mut total = 0;
    for (t, frame) in assignment.frames.iter().enumerate() {
        total += count_delivered(frame, scenario, t)?.count;
    }
    Ok(total)
}
