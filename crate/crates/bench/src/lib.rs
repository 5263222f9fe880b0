//! Shared fixtures for the benchmarks.

use noma_core::{ExperimentConfig, Scenario};

/// The reference configuration with `devices` devices and `slots` slots.
pub fn sized(devices: usize, slots: usize, group_cap: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.network.num_devices = devices;
    cfg.network.num_slots = slots;
    cfg.network.group_cap = group_cap;
    cfg
}

pub fn scenario(cfg: &ExperimentConfig, seed: u64) -> Scenario {
    Scenario::generate(&cfg.network, &cfg.radio, &cfg.traffic, seed).expect("valid benchmark configuration")
}

/// Every device at the top power level.
pub fn full_power(cfg: &ExperimentConfig) -> Vec<f64> {
    let n = &cfg.network;
    vec![n.level_mw(n.max_level()); n.num_devices]
}
