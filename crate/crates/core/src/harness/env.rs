use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Constraint, NomaError, Result};
use crate::scenario::Scenario;
use crate::sinr::{count_delivered, Choice, FrameAssignment};
use crate::units::{energy_units, units_to_mw};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "lowercase", deny_unknown_fields)]
pub enum Request {
    /// Starts an episode. A seed builds a new scenario; without one the next
    /// realization of the current scenario is drawn.
    Reset {
        #[serde(default)]
        seed: Option<u64>,
    },
    Step { actions: Vec<Action> },
    Close,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Action {
    /// 0-based, the index into `state`.
    pub device: usize,
    /// 1-based slot, or null to stay silent.
    #[serde(default)]
    pub slot: Option<usize>,
    /// `"<level>dbm"` from the power set, or `"off"`.
    pub power: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceState {
    pub gains: Vec<f64>,
    pub served: Vec<bool>,
    pub energy: f64,
    pub arrival: usize,
    pub deadline: usize,
    pub frame: usize,
    pub episode: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    pub ok: bool,
    pub state: Vec<DeviceState>,
    pub reward: f64,
    pub frame: usize,
    pub done: bool,
    /// Reward summed over the episode so far.
    pub cumulative: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub assignment: FrameAssignment,
    pub delivered: usize,
    pub done: bool,
}

/// One environment session. Frames are 1-based; `frame == T + 1` once the
/// episode is over.
#[derive(Debug, Clone)]
pub struct EnvSession {
    pub config: ExperimentConfig,
    base: Option<Scenario>,
    scenario: Option<Scenario>,
    frame: usize,
    remaining: Vec<u64>,
    served: Vec<bool>,
    episode: u64,
    cumulative: usize,
}

impl EnvSession {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        Ok(EnvSession {
            config,
            base: None,
            scenario: None,
            frame: 1,
            remaining: Vec::new(),
            served: Vec::new(),
            episode: 0,
            cumulative: 0,
        })
    }

    pub fn scenario(&self) -> Option<&Scenario> {
        self.scenario.as_ref()
    }

    pub fn frame(&self) -> usize {
        self.frame
    }

    pub fn episode(&self) -> u64 {
        self.episode
    }

    pub fn cumulative(&self) -> usize {
        self.cumulative
    }

    pub fn remaining_mw(&self, device: usize) -> f64 {
        units_to_mw(self.remaining[device])
    }

    pub fn done(&self) -> bool {
        self.scenario
            .as_ref()
            .is_none_or(|s| self.frame > s.num_frames())
    }

    pub fn reset(&mut self, seed: Option<u64>) -> Result<()> {
        let cfg = &self.config;
        match (seed, &self.base) {
            (Some(_), _) | (None, None) => {
                let seed = seed.unwrap_or(0);
                let base = Scenario::generate(&cfg.network, &cfg.radio, &cfg.traffic, seed)?;
                self.scenario = Some(base.clone());
                self.base = Some(base);
                self.episode = 0;
            }
            (None, Some(base)) => {
                self.episode += 1;
                self.scenario = Some(base.realization(self.episode, &cfg.traffic)?);
            }
        }
        let m = cfg.network.num_devices;
        self.frame = 1;
        self.remaining = vec![energy_units(cfg.network.energy_budget_mw); m];
        self.served = vec![false; m];
        self.cumulative = 0;
        Ok(())
    }

    /// Validates the actions against the current frame without changing the
    /// session.
    pub fn assignment(&self, actions: &[Action]) -> Result<(FrameAssignment, Vec<u64>)> {
        let scenario = self
            .scenario
            .as_ref()
            .ok_or_else(|| NomaError::Protocol("no episode in progress; send reset".into()))?;
        if self.done() {
            return Err(NomaError::Protocol("episode finished; send reset".into()));
        }
        let cfg = &scenario.config;
        let t = self.frame - 1;
        let mut fa = FrameAssignment::idle(cfg.num_devices);
        let mut cost = vec![0u64; cfg.num_devices];
        let mut seen = vec![false; cfg.num_devices];
        for a in actions {
            let i = a.device;
            if i >= cfg.num_devices {
                return Err(NomaError::Protocol(format!(
                    "device {i} out of range 0..{}",
                    cfg.num_devices
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(NomaError::violation(i, Constraint::OneSlot, "device listed twice"));
            }
            let level = parse_power(&a.power, cfg)
                .ok_or_else(|| NomaError::Protocol(format!("device {i}: unknown power `{}`", a.power)))?;
            let mw = cfg.level_mw(level);
            let slot = match (a.slot, mw > 0.0) {
                (_, false) => continue,
                (None, true) => {
                    return Err(NomaError::violation(
                        i,
                        Constraint::PowerWithoutSlot,
                        format!("power {} without a slot", a.power),
                    ))
                }
                (Some(j), true) => j,
            };
            if slot == 0 || slot > cfg.num_slots {
                return Err(NomaError::violation(
                    i,
                    Constraint::Window,
                    format!("slot {slot} outside 1..={}", cfg.num_slots),
                ));
            }
            let task = scenario.task(i, t);
            if !task.allows(slot - 1) {
                return Err(NomaError::violation(
                    i,
                    Constraint::Window,
                    format!(
                        "slot {slot} outside window {}..{} (length {} bits)",
                        task.arrival, task.deadline, task.length_bits
                    ),
                ));
            }
            let units = energy_units(mw);
            if units > self.remaining[i] {
                return Err(NomaError::violation(
                    i,
                    Constraint::Energy,
                    format!("needs {mw:.3} mW, {:.3} mW left", units_to_mw(self.remaining[i])),
                ));
            }
            cost[i] = units;
            fa.choices[i] = Some(Choice {
                slot: slot - 1,
                power_mw: mw,
            });
        }
        Ok((fa, cost))
    }

    pub fn step(&mut self, actions: &[Action]) -> Result<StepOutcome> {
        let (assignment, cost) = self.assignment(actions)?;
        let scenario = self.scenario.as_ref().expect("checked by assignment");
        let delivery = count_delivered(&assignment, scenario, self.frame - 1)?;
        for (r, c) in self.remaining.iter_mut().zip(&cost) {
            *r -= c;
        }
        self.served = delivery.success;
        self.cumulative += delivery.count;
        self.frame += 1;
        Ok(StepOutcome {
            assignment,
            delivered: delivery.count,
            done: self.done(),
        })
    }

    pub fn state(&self) -> Vec<DeviceState> {
        let Some(scenario) = &self.scenario else {
            return Vec::new();
        };
        let n = scenario.num_slots();
        let active = !self.done();
        (0..scenario.num_devices())
            .map(|i| {
                let (gains, arrival, deadline) = if active {
                    let t = self.frame - 1;
                    let task = scenario.task(i, t);
                    let gains = (0..n).map(|j| scenario.gain(t, i, j)).collect();
                    (gains, task.arrival, task.deadline)
                } else {
                    (vec![0.0; n], 0, 0)
                };
                DeviceState {
                    gains,
                    served: self.served.clone(),
                    energy: units_to_mw(self.remaining[i]),
                    arrival,
                    deadline,
                    frame: self.frame,
                    episode: self.episode,
                }
            })
            .collect()
    }

    fn reply(&self, ok: bool, reward: f64, error: Option<String>) -> Reply {
        Reply {
            ok,
            state: self.state(),
            reward,
            frame: self.frame,
            done: self.done(),
            cumulative: self.cumulative as f64,
            error,
        }
    }

    /// Answers one request; the flag is false once the session should end.
    pub fn handle(&mut self, request: Request) -> (Reply, bool) {
        match request {
            Request::Reset { seed } => match self.reset(seed) {
                Ok(()) => (self.reply(true, 0.0, None), true),
                Err(e) => (self.reply(false, 0.0, Some(e.to_string())), true),
            },
            Request::Step { actions } => match self.step(&actions) {
                Ok(out) => (self.reply(true, out.delivered as f64, None), true),
                Err(e) => (self.reply(false, 0.0, Some(e.to_string())), true),
            },
            Request::Close => (self.reply(true, 0.0, None), false),
        }
    }

    /// Answers one raw protocol line.
    pub fn handle_line(&mut self, line: &str) -> (Reply, bool) {
        match serde_json::from_str::<Request>(line) {
            Ok(request) => self.handle(request),
            Err(e) => (
                self.reply(false, 0.0, Some(format!("malformed request: {e}"))),
                true,
            ),
        }
    }
}

fn parse_power(s: &str, cfg: &crate::config::NetworkConfig) -> Option<usize> {
    let s = s.trim().to_ascii_lowercase();
    if s == "off" {
        return Some(cfg.off_level());
    }
    let value: f64 = s.strip_suffix("dbm").unwrap_or(&s).trim().parse().ok()?;
    cfg.level_of(value)
}

/// Speaks the JSON-lines protocol until `close` or end of input.
pub fn serve<R: BufRead, W: Write>(config: &ExperimentConfig, reader: R, mut writer: W) -> Result<()> {
    let mut session = EnvSession::new(config.clone())?;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (reply, more) = session.handle_line(&line);
        serde_json::to_writer(&mut writer, &reply)?;
        writer.write_all(b"\n")?;
        writer.flush()?;
        if !more {
            break;
        }
    }
    Ok(())
}
