use std::io::Cursor;

use noma_core::harness::{serve, Action, EnvSession, Reply, Request};
use noma_core::sinr::count_delivered;
use noma_core::ExperimentConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.network.num_devices = 6;
    cfg.network.num_slots = 3;
    cfg.network.num_frames = 4;
    cfg
}

fn powers(cfg: &ExperimentConfig) -> Vec<String> {
    let mut p = vec!["off".to_string()];
    p.extend(cfg.network.power_levels_dbm[1..].iter().map(|l| format!("{l}dbm")));
    p
}

/// Random actions that stay inside windows and budgets.
fn legal_actions(session: &EnvSession, rng: &mut ChaCha8Rng, names: &[String]) -> Vec<Action> {
    let s = session.scenario().unwrap();
    let t = session.frame() - 1;
    (0..s.num_devices())
        .map(|i| {
            let task = s.task(i, t);
            let slots: Vec<usize> = task.window().filter(|&j| j < s.num_slots()).collect();
            let level = rng.gen_range(0..names.len());
            let mw = s.config.level_mw(level);
            if slots.is_empty() || level == 0 || mw > session.remaining_mw(i) + 1e-9 {
                return Action { device: i, slot: None, power: "off".into() };
            }
            Action {
                device: i,
                slot: Some(slots[rng.gen_range(0..slots.len())] + 1),
                power: names[level].clone(),
            }
        })
        .collect()
}

#[test]
fn replayed_episodes_match_the_delivery_count() {
    let cfg = cfg();
    let names = powers(&cfg);
    let mut session = EnvSession::new(cfg.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for episode in 0..20 {
        session.reset(if episode == 0 { Some(42) } else { None }).unwrap();
        assert_eq!(session.episode(), episode);
        let mut total = 0;
        while !session.done() {
            let actions = legal_actions(&session, &mut rng, &names);
            let t = session.frame() - 1;
            let out = session.step(&actions).unwrap();
            let scenario = session.scenario().unwrap();
            assert_eq!(out.delivered, count_delivered(&out.assignment, scenario, t).unwrap().count);
            total += out.delivered;
        }
        assert_eq!(session.cumulative(), total);
        for i in 0..cfg.network.num_devices {
            assert!(session.remaining_mw(i) >= -1e-9);
        }
    }
}

#[test]
fn seeded_resets_are_reproducible() {
    let mut a = EnvSession::new(cfg()).unwrap();
    let mut b = EnvSession::new(cfg()).unwrap();
    a.reset(Some(9)).unwrap();
    b.reset(Some(9)).unwrap();
    assert_eq!(a.state(), b.state());
    a.reset(None).unwrap();
    b.reset(Some(10)).unwrap();
    assert_ne!(a.state(), b.state());
}

fn error_of(session: &mut EnvSession, actions: Vec<Action>) -> String {
    let (reply, more) = session.handle(Request::Step { actions });
    assert!(more && !reply.ok);
    reply.error.unwrap()
}

#[test]
fn invalid_actions_name_the_device_and_constraint() {
    let cfg = cfg();
    let mut session = EnvSession::new(cfg.clone()).unwrap();
    let (reply, _) = session.handle(Request::Step { actions: vec![] });
    assert!(!reply.ok && reply.error.unwrap().contains("reset"));
    session.reset(Some(3)).unwrap();

    let top = format!("{}dbm", cfg.network.power_levels_dbm.last().unwrap());
    let act = |device, slot, power: &str| Action { device, slot, power: power.to_string() };

    let e = error_of(&mut session, vec![act(1, Some(1), "off"), act(1, Some(1), "off")]);
    assert!(e.contains("device 1") && e.contains("one slot per frame"), "{e}");
    let e = error_of(&mut session, vec![act(2, None, &top)]);
    assert!(e.contains("device 2") && e.contains("power without slot"), "{e}");
    let e = error_of(&mut session, vec![act(0, Some(9), &top)]);
    assert!(e.contains("device 0") && e.contains("window"), "{e}");
    let e = error_of(&mut session, vec![act(0, Some(1), "5dbm")]);
    assert!(e.contains("device 0") && e.contains("unknown power"), "{e}");
    let e = error_of(&mut session, vec![act(17, Some(1), "off")]);
    assert!(e.contains("device 17"), "{e}");

    // Out-of-window slot for a device whose window excludes slot 1.
    let s = session.scenario().unwrap();
    if let Some(i) = (0..s.num_devices()).find(|&i| !s.task(i, 0).allows(0)) {
        let e = error_of(&mut session, vec![act(i, Some(1), &top)]);
        assert!(e.contains(&format!("device {i}")) && e.contains("window"), "{e}");
    }
    // Failed steps leave the frame unchanged.
    assert_eq!(session.frame(), 1);

    let mut poor = cfg.clone();
    poor.network.energy_budget_mw = 60.0;
    let mut session = EnvSession::new(poor).unwrap();
    session.reset(Some(3)).unwrap();
    let s = session.scenario().unwrap();
    let i = (0..s.num_devices()).find(|&i| s.task(i, 0).has_packet()).unwrap();
    let slot = s.task(i, 0).window().start + 1;
    let e = error_of(&mut session, vec![act(i, Some(slot), &top)]);
    assert!(e.contains(&format!("device {i}")) && e.contains("energy budget"), "{e}");
}

#[test]
fn json_lines_session() {
    let cfg = cfg();
    let m = cfg.network.num_devices;
    let silent: Vec<String> = (0..m).map(|i| format!(r#"{{"device":{i},"slot":null,"power":"off"}}"#)).collect();
    let step = format!(r#"{{"cmd":"step","actions":[{}]}}"#, silent.join(","));
    let mut input = String::from("{\"cmd\":\"reset\",\"seed\":1}\n\n");
    for _ in 0..cfg.network.num_frames {
        input.push_str(&step);
        input.push('\n');
    }
    input.push_str("{\"cmd\":\"step\",\"actions\":[]}\nnot json\n{\"cmd\":\"close\"}\n{\"cmd\":\"reset\"}\n");
    let mut out = Vec::new();
    serve(&cfg, Cursor::new(input), &mut out).unwrap();
    let replies: Vec<Reply> = String::from_utf8(out)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    // reset, T steps, step after done, malformed line, close; nothing after close.
    assert_eq!(replies.len(), cfg.network.num_frames + 4);
    let first = &replies[0];
    assert!(first.ok && !first.done && first.frame == 1);
    assert_eq!(first.state.len(), m);
    assert_eq!(first.state[0].gains.len(), cfg.network.num_slots);
    assert!((first.state[0].energy - cfg.network.energy_budget_mw).abs() < 1e-6);
    let last_step = &replies[cfg.network.num_frames];
    assert!(last_step.ok && last_step.done && last_step.cumulative == 0.0);
    assert!(last_step.state.iter().all(|d| d.gains.iter().all(|&g| g == 0.0)));
    let after = &replies[cfg.network.num_frames + 1];
    assert!(!after.ok && after.error.as_deref().unwrap().contains("finished"));
    let malformed = &replies[cfg.network.num_frames + 2];
    assert!(!malformed.ok && malformed.error.as_deref().unwrap().contains("malformed"));
    assert!(replies.last().unwrap().ok);
}

#[test]
fn requests_round_trip_through_json() {
    let r: Request = serde_json::from_str(r#"{"cmd":"step","actions":[{"device":0,"slot":2,"power":"23dbm"}]}"#).unwrap();
    assert_eq!(
        r,
        Request::Step {
            actions: vec![Action { device: 0, slot: Some(2), power: "23dbm".into() }]
        }
    );
    assert_eq!(serde_json::from_str::<Request>(r#"{"cmd":"reset"}"#).unwrap(), Request::Reset { seed: None });
    assert!(serde_json::from_str::<Request>(r#"{"cmd":"reset","bogus":1}"#).is_err());
}
