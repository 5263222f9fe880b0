//! Reproducible problem instances: device placement, frame-synchronized
//! traffic and Rayleigh-faded, noise-normalized channel gains.

use std::borrow::Cow;
use std::ops::Range;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::config::{NetworkConfig, RadioParams, TrafficSpec};
use crate::error::{NomaError, Result};
use crate::rng::{derive_seed, stream, Purpose};
use crate::units::noise_floor_dbm;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

/// One device's packet in one frame. Slot indices are 1-based here, as on
/// the wire: the usable slots are `arrival..deadline`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketTask {
    pub length_bits: u64,
    pub arrival: usize,
    pub deadline: usize,
}

impl PacketTask {
    pub fn has_packet(&self) -> bool {
        self.length_bits > 0
    }

    /// Usable slots as a 0-based range.
    pub fn window(&self) -> Range<usize> {
        self.arrival.saturating_sub(1)..self.deadline.saturating_sub(1)
    }

    pub fn allows(&self, slot: usize) -> bool {
        self.has_packet() && self.window().contains(&slot)
    }

    /// SINR the packet needs to fit one slot: `2^(L/(W·τ)) − 1`.
    pub fn threshold(&self, capacity_hz: f64) -> f64 {
        (self.length_bits as f64 / capacity_hz).exp2() - 1.0
    }
}

/// Path loss in dB at `dist_km`, clamped below at the configured minimum distance.
pub fn path_loss_db(dist_km: f64, radio: &RadioParams) -> f64 {
    let d = dist_km.max(radio.min_distance_km);
    radio.pathloss_intercept_db
        + radio.pathloss_slope_db * d.log10()
        + radio.antenna_gain_db
        + radio.penetration_loss_db
}

/// Linear noise power in mW over the configured bandwidth.
pub fn noise_mw(config: &NetworkConfig, radio: &RadioParams) -> f64 {
    let dbm = noise_floor_dbm(radio.noise_psd_dbm_hz, config.bandwidth_hz, radio.noise_figure_db);
    10f64.powf(dbm / 10.0)
}

/// Noise-normalized gain for a transmit power given in mW.
pub fn normalized_gain(fading: f64, dist_km: f64, config: &NetworkConfig, radio: &RadioParams) -> f64 {
    fading * 10f64.powf(-path_loss_db(dist_km, radio) / 10.0) / noise_mw(config, radio)
}

fn distance_km(p: &Position, side_m: f64) -> f64 {
    let c = side_m / 2.0;
    (p.x - c).hypot(p.y - c) / 1000.0
}

/// Draws one frame of gains, laid out slot-major: `gains[slot * M + device]`.
///
/// Fading is a unit-mean exponential draw per (device, slot).
pub fn draw_channel_gains<R: Rng + ?Sized>(
    config: &NetworkConfig,
    radio: &RadioParams,
    positions: &[Position],
    rng: &mut R,
) -> Vec<f64> {
    let m = config.num_devices;
    let mut gains = Vec::with_capacity(config.num_slots * m);
    for _slot in 0..config.num_slots {
        for p in positions.iter().take(m) {
            let fading: f64 = Exp1.sample(rng);
            // Exp1 can return exactly 0 with vanishing probability; gains must stay positive.
            let fading = fading.max(f64::MIN_POSITIVE);
            gains.push(normalized_gain(fading, distance_km(p, config.area_side_m), config, radio));
        }
    }
    gains
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioDoc")]
pub struct Scenario {
    pub config: NetworkConfig,
    pub radio: RadioParams,
    pub positions: Vec<Position>,
    /// `traffic[device][frame]`.
    pub traffic: Vec<Vec<PacketTask>>,
    pub seed: u64,
    #[serde(skip)]
    gains: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    config: NetworkConfig,
    radio: RadioParams,
    positions: Vec<Position>,
    traffic: Vec<Vec<PacketTask>>,
    seed: u64,
}

impl TryFrom<ScenarioDoc> for Scenario {
    type Error = NomaError;

    fn try_from(doc: ScenarioDoc) -> Result<Self> {
        Scenario::assemble(doc.config, doc.radio, doc.positions, doc.traffic, doc.seed)
    }
}

impl Scenario {
    /// Builds a scenario from explicit parts, regenerating gains from `seed`.
    pub fn assemble(
        config: NetworkConfig,
        radio: RadioParams,
        positions: Vec<Position>,
        traffic: Vec<Vec<PacketTask>>,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        radio.validate()?;
        let m = config.num_devices;
        let n = config.num_slots;
        if positions.len() != m {
            return Err(NomaError::InvalidConfig(format!(
                "expected {m} positions, got {}",
                positions.len()
            )));
        }
        if traffic.len() != m || traffic.iter().any(|t| t.len() != config.num_frames) {
            return Err(NomaError::InvalidConfig(
                "traffic must hold one task per device per frame".into(),
            ));
        }
        for (i, tasks) in traffic.iter().enumerate() {
            for task in tasks {
                if task.arrival < 1 || task.arrival >= task.deadline || task.deadline > n + 1 {
                    return Err(NomaError::violation(
                        i,
                        crate::error::Constraint::Window,
                        format!("window {}..{} outside 1..={}", task.arrival, task.deadline, n + 1),
                    ));
                }
            }
        }
        let gains = (0..config.num_frames)
            .map(|t| {
                let mut rng = stream(seed, Purpose::Fading, t as u64);
                draw_channel_gains(&config, &radio, &positions, &mut rng)
            })
            .collect();
        Ok(Scenario {
            config,
            radio,
            positions,
            traffic,
            seed,
            gains,
        })
    }

    /// Generates a full instance. Identical inputs give identical scenarios.
    pub fn generate(
        config: &NetworkConfig,
        radio: &RadioParams,
        traffic: &TrafficSpec,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let side = config.area_side_m;
        let mut rng = stream(seed, Purpose::Placement, 0);
        let positions = (0..config.num_devices)
            .map(|_| Position {
                x: rng.gen::<f64>() * side,
                y: rng.gen::<f64>() * side,
            })
            .collect();
        Self::with_positions(config, radio, traffic, seed, positions)
    }

    fn with_positions(
        config: &NetworkConfig,
        radio: &RadioParams,
        spec: &TrafficSpec,
        seed: u64,
        positions: Vec<Position>,
    ) -> Result<Self> {
        spec.validate()?;
        let traffic = draw_traffic(config, spec, seed);
        Self::assemble(config.clone(), radio.clone(), positions, traffic, seed)
    }

    /// The `round`-th realization: same placement, fresh traffic and fading.
    /// Round 0 is the scenario itself.
    pub fn realization(&self, round: u64, spec: &TrafficSpec) -> Result<Scenario> {
        if round == 0 {
            return Ok(self.clone());
        }
        Self::with_positions(
            &self.config,
            &self.radio,
            spec,
            derive_seed(self.seed, round),
            self.positions.clone(),
        )
    }

    pub fn num_devices(&self) -> usize {
        self.config.num_devices
    }

    pub fn num_slots(&self) -> usize {
        self.config.num_slots
    }

    pub fn num_frames(&self) -> usize {
        self.config.num_frames
    }

    /// Normalized gain of `device` on slot `slot` (0-based) in frame `frame` (0-based).
    pub fn gain(&self, frame: usize, device: usize, slot: usize) -> f64 {
        self.gains[frame][slot * self.config.num_devices + device]
    }

    /// All devices' gains on one slot.
    pub fn slot_gains(&self, frame: usize, slot: usize) -> &[f64] {
        let m = self.config.num_devices;
        &self.gains[frame][slot * m..(slot + 1) * m]
    }

    pub fn task(&self, device: usize, frame: usize) -> &PacketTask {
        &self.traffic[device][frame]
    }

    pub fn threshold(&self, device: usize, frame: usize) -> f64 {
        self.task(device, frame).threshold(self.config.slot_capacity_hz())
    }

    pub fn distance_km(&self, device: usize) -> f64 {
        distance_km(&self.positions[device], self.config.area_side_m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Replaces one frame's gains. Test helper for hand-built instances.
    pub fn set_gain(&mut self, frame: usize, device: usize, slot: usize, gain: f64) {
        let m = self.config.num_devices;
        self.gains[frame][slot * m + device] = gain;
    }
}

fn draw_traffic(config: &NetworkConfig, spec: &TrafficSpec, seed: u64) -> Vec<Vec<PacketTask>> {
    let n = config.num_slots;
    let span = spec.l_max_kbits - spec.l_min_kbits + 1;
    let mut traffic = vec![Vec::with_capacity(config.num_frames); config.num_devices];
    for t in 0..config.num_frames {
        let mut rng = stream(seed, Purpose::Traffic, t as u64);
        for tasks in traffic.iter_mut() {
            // Lengths are drawn by inverse CDF from one uniform so that the same
            // seed gives pointwise larger packets for a larger l_max.
            let u: f64 = rng.gen();
            let kbits = spec.l_min_kbits + ((u * span as f64) as u64).min(span - 1);
            let arrival = rng.gen_range(1..=n);
            let deadline = rng.gen_range(arrival + 1..=n + 1);
            tasks.push(PacketTask {
                length_bits: kbits * 1000,
                arrival,
                deadline,
            });
        }
    }
    traffic
}

/// Round-indexed source of realizations shared by the learners.
#[derive(Debug, Clone)]
pub struct ScenarioStream {
    pub base: Scenario,
    pub traffic: TrafficSpec,
    pub fresh: bool,
}

impl ScenarioStream {
    pub fn new(base: Scenario, traffic: TrafficSpec, fresh: bool) -> Self {
        ScenarioStream {
            base,
            traffic,
            fresh,
        }
    }

    /// A stream that replays `base` every round.
    pub fn fixed(base: Scenario) -> Self {
        ScenarioStream {
            base,
            traffic: TrafficSpec::default(),
            fresh: false,
        }
    }

    /// Realization used in round `round` (1-based).
    pub fn round(&self, round: usize) -> Result<Cow<'_, Scenario>> {
        if self.fresh {
            Ok(Cow::Owned(self.base.realization(round as u64, &self.traffic)?))
        } else {
            Ok(Cow::Borrowed(&self.base))
        }
    }
}
