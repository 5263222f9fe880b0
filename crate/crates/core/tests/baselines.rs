mod common;

use common::{always, config, hand_built, LEVELS};
use noma_core::baselines::{max_power_baseline, tql_train, TqlParams};
use noma_core::harness::scenario_stream;
use noma_core::{ExperimentConfig, ScenarioStream};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn tql_learns_the_single_device_case() {
    let cfg = config(1, 1, 3, 1, &LEVELS, 500.0);
    let stream = ScenarioStream::fixed(hand_built(cfg, vec![vec![always(1); 3]], |_, _, _| 1e3));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let run = tql_train(&stream, &TqlParams::default(), 300, &mut rng).unwrap();
    assert_eq!(run.curve.len(), 300);
    assert_eq!(*run.greedy_delivered.last().unwrap(), 3);
    assert!(run.max_energy_spent <= 500.0 + 1e-9);
}

#[test]
fn tql_respects_budgets_at_reference_size() {
    let cfg = ExperimentConfig::default();
    let stream = scenario_stream(&cfg, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let run = tql_train(&stream, &cfg.tql, 50, &mut rng).unwrap();
    assert!(run.max_energy_spent <= cfg.network.energy_budget_mw + 1e-9);
    assert!(run.max_frame_delivered <= cfg.network.frame_capacity());
    for (delivered, reward) in run.curve.iter().zip(&run.episode_reward) {
        let cap = cfg.network.frame_capacity() as f64;
        assert!((reward * cap - *delivered as f64).abs() < 1e-9);
    }
}

#[test]
fn max_power_spends_what_it_can_afford() {
    let cfg = ExperimentConfig::default();
    let s = scenario_stream(&cfg, 2).unwrap().base;
    let r = max_power_baseline(&s);
    let top = cfg.network.level_mw(cfg.network.max_level());
    for &e in &r.energy_spent {
        // Two full-power frames fit in 500, a third does not.
        assert!((e - 2.0 * top).abs() < 1e-6, "{e}");
    }
    assert!(r.max_frame_delivered <= cfg.network.frame_capacity());

    let mut broke = cfg.clone();
    broke.network.energy_budget_mw = 0.0;
    let s = scenario_stream(&broke, 2).unwrap().base;
    assert_eq!(max_power_baseline(&s).delivered, 0);
}
