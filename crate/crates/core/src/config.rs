//! Network, radio, traffic and experiment configuration.
//!
//! Configuration files are TOML with `[network]`, `[radio]` and `[traffic]`
//! sections plus the algorithm sections `[crl]`, `[tql]`, `[opt]` and `[run]`.
//! Every section and every field is optional and falls back to the
//! reference settings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::TqlParams;
use crate::crl::CrlParams;
use crate::error::{NomaError, Result};
use crate::opt::OptParams;
use crate::units::{dbm_to_mw, is_off};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub num_devices: usize,
    pub num_slots: usize,
    pub num_frames: usize,
    pub group_cap: usize,
    pub bandwidth_hz: f64,
    /// Sorted ascending; exactly one entry is the off level.
    pub power_levels_dbm: Vec<f64>,
    /// Per-device energy over the whole horizon, in mW·frame units.
    pub energy_budget_mw: f64,
    pub area_side_m: f64,
    pub slot_duration_s: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            num_devices: 20,
            num_slots: 5,
            num_frames: 5,
            group_cap: 2,
            bandwidth_hz: 40_000.0,
            power_levels_dbm: vec![-100.0, 17.0, 21.0, 23.0],
            energy_budget_mw: 500.0,
            area_side_m: 20.0,
            slot_duration_s: 1.0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(NomaError::InvalidConfig(m.to_string()));
        if self.num_devices == 0 {
            return bad("num_devices must be >= 1");
        }
        if self.num_slots == 0 {
            return bad("num_slots must be >= 1");
        }
        if self.num_frames == 0 {
            return bad("num_frames must be >= 1");
        }
        if self.group_cap == 0 || self.group_cap > self.num_devices {
            return bad("group_cap must satisfy 1 <= G <= M");
        }
        if !(self.bandwidth_hz > 0.0) || !self.bandwidth_hz.is_finite() {
            return bad("bandwidth must be positive");
        }
        if !(self.slot_duration_s > 0.0) {
            return bad("slot duration must be positive");
        }
        if self.power_levels_dbm.is_empty() {
            return bad("power set is empty");
        }
        if self.power_levels_dbm.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("power levels must be strictly ascending");
        }
        if self.power_levels_dbm.iter().filter(|&&p| is_off(p)).count() != 1 {
            return bad("power set must contain exactly one off level");
        }
        if !(self.energy_budget_mw >= 0.0) || !self.energy_budget_mw.is_finite() {
            return bad("energy budget must be non-negative");
        }
        if !(self.area_side_m > 0.0) || !self.area_side_m.is_finite() {
            return bad("area side must be positive");
        }
        Ok(())
    }

    pub fn num_levels(&self) -> usize {
        self.power_levels_dbm.len()
    }

    pub fn level_mw(&self, level: usize) -> f64 {
        dbm_to_mw(self.power_levels_dbm[level])
    }

    pub fn off_level(&self) -> usize {
        self.power_levels_dbm
            .iter()
            .position(|&p| is_off(p))
            .expect("validated power set has an off level")
    }

    /// Highest level in the power set.
    pub fn max_level(&self) -> usize {
        self.power_levels_dbm.len() - 1
    }

    /// Transmit levels, i.e. everything except the off level.
    pub fn on_levels(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_levels()).filter(move |&l| !is_off(self.power_levels_dbm[l]))
    }

    /// Bits a slot can carry per unit of spectral efficiency, `W·τ`.
    pub fn slot_capacity_hz(&self) -> f64 {
        self.bandwidth_hz * self.slot_duration_s
    }

    /// Per-frame cap on delivered packets, `min(M, N·G)`.
    pub fn frame_capacity(&self) -> usize {
        self.num_devices.min(self.num_slots * self.group_cap)
    }

    /// Looks up a power level by dBm value.
    pub fn level_of(&self, dbm: f64) -> Option<usize> {
        self.power_levels_dbm
            .iter()
            .position(|&p| (p - dbm).abs() < 1e-9 || (is_off(p) && is_off(dbm)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams {
    pub carrier_freq_mhz: f64,
    pub pathloss_intercept_db: f64,
    pub pathloss_slope_db: f64,
    pub antenna_gain_db: f64,
    pub penetration_loss_db: f64,
    pub noise_figure_db: f64,
    pub noise_psd_dbm_hz: f64,
    pub min_distance_km: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            carrier_freq_mhz: 900.0,
            pathloss_intercept_db: 120.9,
            pathloss_slope_db: 37.6,
            antenna_gain_db: -4.0,
            penetration_loss_db: 10.0,
            noise_figure_db: 5.0,
            noise_psd_dbm_hz: -174.0,
            min_distance_km: 0.001,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_distance_km > 0.0) {
            return Err(NomaError::InvalidConfig(
                "min_distance_km must be positive".into(),
            ));
        }
        if !(self.noise_psd_dbm_hz < 0.0) {
            return Err(NomaError::InvalidConfig(
                "noise_psd_dbm_hz must be negative".into(),
            ));
        }
        Ok(())
    }
}

/// Packet length bounds in kilobits; lengths are drawn uniformly in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficSpec {
    pub l_min_kbits: u64,
    pub l_max_kbits: u64,
}

impl Default for TrafficSpec {
    fn default() -> Self {
        TrafficSpec {
            l_min_kbits: 100,
            l_max_kbits: 200,
        }
    }
}

impl TrafficSpec {
    pub fn validate(&self) -> Result<()> {
        if self.l_min_kbits > self.l_max_kbits {
            return Err(NomaError::InvalidConfig(format!(
                "l_min ({}) exceeds l_max ({})",
                self.l_min_kbits, self.l_max_kbits
            )));
        }
        Ok(())
    }
}

/// How rounds/episodes are run and evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunParams {
    /// CRL rounds, TQL episodes.
    pub rounds: usize,
    /// Number of trailing rounds whose realizations are scored.
    pub eval_window: usize,
    /// Draw fresh traffic and fading every round (positions stay fixed).
    pub fresh_realizations: bool,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            rounds: 50,
            eval_window: 10,
            fresh_realizations: true,
        }
    }
}

/// Everything needed to run any algorithm on a seeded scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub radio: RadioParams,
    #[serde(default)]
    pub traffic: TrafficSpec,
    #[serde(default)]
    pub crl: CrlParams,
    #[serde(default)]
    pub tql: TqlParams,
    #[serde(default)]
    pub opt: OptParams,
    #[serde(default)]
    pub run: RunParams,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.radio.validate()?;
        self.traffic.validate()?;
        self.crl.validate()?;
        self.tql.validate()?;
        if self.run.eval_window == 0 {
            return Err(NomaError::InvalidConfig("eval_window must be >= 1".into()));
        }
        Ok(())
    }

    /// Rounds whose realizations are scored, 1-based and inclusive.
    pub fn eval_rounds(&self) -> std::ops::RangeInclusive<usize> {
        let last = self.run.rounds.max(1);
        let first = last.saturating_sub(self.run.eval_window - 1).max(1);
        first..=last
    }
}
