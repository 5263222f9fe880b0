#![allow(dead_code)]

use noma_core::{NetworkConfig, PacketTask, Position, RadioParams, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LEVELS: [f64; 4] = [-100.0, 17.0, 21.0, 23.0];

pub fn config(m: usize, n: usize, t: usize, g: usize, levels: &[f64], budget: f64) -> NetworkConfig {
    NetworkConfig {
        num_devices: m,
        num_slots: n,
        num_frames: t,
        group_cap: g,
        power_levels_dbm: levels.to_vec(),
        energy_budget_mw: budget,
        ..NetworkConfig::default()
    }
}

/// A scenario with the given tasks whose gains are then overwritten by `gain`.
pub fn hand_built(
    cfg: NetworkConfig,
    traffic: Vec<Vec<PacketTask>>,
    gain: impl Fn(usize, usize, usize) -> f64,
) -> Scenario {
    let m = cfg.num_devices;
    let (n, t) = (cfg.num_slots, cfg.num_frames);
    let positions = vec![Position { x: 5.0, y: 5.0 }; m];
    let mut s = Scenario::assemble(cfg, RadioParams::default(), positions, traffic, 0).unwrap();
    for f in 0..t {
        for i in 0..m {
            for j in 0..n {
                s.set_gain(f, i, j, gain(f, i, j));
            }
        }
    }
    s
}

/// Random small instance whose received powers straddle the decoding
/// thresholds, so that grouping, power and energy choices all matter.
pub fn random_tiny(seed: u64, max_m: usize, max_n: usize, max_t: usize) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(1..=max_m);
    let n = rng.gen_range(1..=max_n);
    let t = rng.gen_range(1..=max_t);
    let g = rng.gen_range(1..=m);
    let levels: &[f64] = if rng.gen_bool(0.5) { &LEVELS[..3] } else { &LEVELS[..2] };
    // Between one and a few top-power transmissions per device.
    let budget = rng.gen_range(40.0..400.0);
    let traffic = (0..m)
        .map(|_| {
            (0..t)
                .map(|_| {
                    let arrival = rng.gen_range(1..=n);
                    let deadline = rng.gen_range(arrival + 1..=n + 1);
                    PacketTask {
                        length_bits: rng.gen_range(100..=200) * 1000,
                        arrival,
                        deadline,
                    }
                })
                .collect()
        })
        .collect();
    let gains: Vec<f64> = (0..t * m * n).map(|_| 10f64.powf(rng.gen_range(-2.0..1.5))).collect();
    hand_built(config(m, n, t, g, levels, budget), traffic, |f, i, j| {
        gains[(f * m + i) * n + j]
    })
}

pub fn always(n: usize) -> PacketTask {
    PacketTask {
        length_bits: 100_000,
        arrival: 1,
        deadline: n + 1,
    }
}
