use super::*;
use crate::bench::{generate_instance, ProblemClass};
use crate::de::N_MAX;

fn test_cfg() -> EnvConfig {
    EnvConfig::new(50_000, 2_500)
}

#[test]
fn reset_state_shape_and_budget_ratio() {
    let inst = generate_instance(ProblemClass::C2, 10, 1);
    let (state, ep) = reset(&inst, &EnvConfig::dim10(), 7);
    // no history yet
    assert!(state.ah.iter().all(|&v| v == 0.0));
    assert_eq!(state.ah.len(), 60);
    // initial evaluations plus three probe rounds at the initial size
    let expected = (N_MAX as u64 + 3 * N_MAX as u64) as f64 / 200_000.0;
    assert!((state.la[8] - expected).abs() < 1e-15);
    assert_eq!(ep.pop.fe_used, 4 * N_MAX as u64);
}

#[test]
fn reset_is_deterministic() {
    let inst = generate_instance(ProblemClass::C2, 10, 2);
    let (s1, _) = reset(&inst, &test_cfg(), 9);
    let (s2, _) = reset(&inst, &test_cfg(), 9);
    assert_eq!(s1, s2);
}

#[test]
fn adc_arithmetic() {
    assert!((compute_adc(80.0, 60.0, 100.0) - 0.2).abs() < 1e-15);
    assert_eq!(compute_adc(80.0, 80.0, 100.0), 0.0);
    assert_eq!(compute_adc(1.0, 0.5, 0.0), 0.0);
}

#[test]
fn stepping_done_episode_is_an_error() {
    let inst = generate_instance(ProblemClass::C1, 10, 3);
    let (_, mut ep) = reset(&inst, &test_cfg(), 11);
    ep.done = true;
    assert!(matches!(
        ep.step(AlgorithmId::MadDe),
        Err(EnvError::EpisodeDone)
    ));
}

#[test]
fn episode_runs_to_termination_with_fe_conservation() {
    let inst = generate_instance(ProblemClass::C2, 10, 4);
    let cfg = test_cfg();
    let (_, mut ep) = reset(&inst, &cfg, 13);
    let mut steps = 0;
    let mut adcs = Vec::new();
    while !ep.done {
        let action = AlgorithmId::ALL[steps % 3];
        let (_, adc, done, info) = ep.step(action).unwrap();
        assert!(adc >= 0.0, "descent signal must be non-negative");
        adcs.push(adc);
        steps += 1;
        if done {
            assert!(info.fe_used >= cfg.max_fes || info.best_cost < cfg.term_error);
        }
    }
    // conservation: every evaluation is initial, interval or probe
    let (init, intervals, probes) = ep.fe_breakdown();
    assert_eq!(init, N_MAX as u64);
    assert_eq!(init + intervals + probes, ep.pop.fe_used);
    // bounded overshoot: at most one generation past the budget
    assert!(ep.pop.fe_used <= cfg.max_fes + N_MAX as u64);
    assert!(ep.fes_end() <= cfg.max_fes);
    assert_eq!(ep.trace.len(), steps);
}

#[test]
fn non_terminal_steps_consume_at_least_delta() {
    let inst = generate_instance(ProblemClass::C2, 10, 5);
    let cfg = test_cfg();
    let (_, mut ep) = reset(&inst, &cfg, 17);
    let mut prev_fe = ep.pop.fe_used;
    while !ep.done {
        let (_, _, done, info) = ep.step(AlgorithmId::NlShadeRsp).unwrap();
        let spent = info.fe_used - prev_fe;
        if !done && info.fe_used + cfg.delta < cfg.max_fes {
            assert!(spent >= cfg.delta, "interval spent only {spent}");
        }
        prev_fe = info.fe_used;
    }
}

#[test]
fn episode_length_stays_in_band_on_full_budget() {
    let inst = generate_instance(ProblemClass::C2, 10, 6);
    let cfg = EnvConfig::dim10();
    let (_, mut ep) = reset(&inst, &cfg, 19);
    while !ep.done {
        ep.step(AlgorithmId::MadDe).unwrap();
    }
    // C2 at full budget does not solve, so the episode runs the budget out
    assert!(
        (10..=200).contains(&ep.step_count),
        "T = {}",
        ep.step_count
    );
}

#[test]
fn la_ablation_skips_probes_and_zeroes_slice() {
    let inst = generate_instance(ProblemClass::C2, 10, 7);
    let mut cfg = test_cfg();
    cfg.use_la = false;
    let (state, mut ep) = reset(&inst, &cfg, 23);
    assert!(state.la.iter().all(|&v| v == 0.0));
    assert_eq!(ep.pop.fe_used, N_MAX as u64, "no probe evaluations");
    let (next, _, _, _) = ep.step(AlgorithmId::Jde21).unwrap();
    assert!(next.la.iter().all(|&v| v == 0.0));
    let (_, _, probes) = ep.fe_breakdown();
    assert_eq!(probes, 0);
}

#[test]
fn ah_ablation_zeroes_history_slice() {
    let inst = generate_instance(ProblemClass::C2, 10, 8);
    let mut cfg = test_cfg();
    cfg.use_ah = false;
    let (_, mut ep) = reset(&inst, &cfg, 29);
    let (next, _, _, _) = ep.step(AlgorithmId::MadDe).unwrap();
    assert!(next.ah.iter().all(|&v| v == 0.0));
    // LA features still live
    assert!(next.la[8] > 0.0);
}

#[test]
fn context_ablation_reinitializes_memories() {
    let inst = generate_instance(ProblemClass::C2, 10, 9);
    let mut cfg = test_cfg();
    cfg.use_context = false;
    let (_, mut ep) = reset(&inst, &cfg, 31);
    ep.step(AlgorithmId::MadDe).unwrap();
    // memories were rebuilt for this interval, then updated by one interval
    // only; the archive cannot exceed one interval's worth of parents
    ep.step(AlgorithmId::MadDe).unwrap();
    let slots = ep.gamma.common.m_f.len();
    assert_eq!(slots, 200);
}

#[test]
fn reward_examples() {
    let r = finalize_rewards(&[0.5, 0.25], 100_000, 200_000, RewardScheme::Adjusted).unwrap();
    assert!((r[0] - 1.0).abs() < 1e-12 && (r[1] - 0.5).abs() < 1e-12);

    let adcs = [0.1, 0.2, 0.0];
    let r = finalize_rewards(&adcs, 200_000, 200_000, RewardScheme::Adjusted).unwrap();
    for (a, b) in adcs.iter().zip(&r) {
        assert!((a - b).abs() < 1e-15, "factor must be 1 at full budget");
    }

    let r = finalize_rewards(&adcs, 200_000, 200_000, RewardScheme::R1).unwrap();
    assert_eq!(r, adcs.to_vec());

    // relative descent: 0.2 / (1 - 0.1) = 0.2222...
    let r = finalize_rewards(&adcs, 200_000, 200_000, RewardScheme::R2).unwrap();
    assert!((r[1] - 0.2 / 0.9).abs() < 1e-12);

    let r = finalize_rewards(&adcs, 200_000, 200_000, RewardScheme::R3).unwrap();
    assert_eq!(r, vec![1.0, 1.0, 0.0]);

    // r4 threshold: relative descent 0.03 passes, 0.02 does not
    let r = finalize_rewards(&[0.03, 0.0194], 1, 1, RewardScheme::R4).unwrap();
    assert_eq!(r[0], 1.0);
    // 0.0194 / 0.97 = 0.02 exactly at the boundary -> not greater
    assert_eq!(r[1], 0.0);

    assert!(finalize_rewards(&[0.1], 0, 1, RewardScheme::R1).is_err());
}

#[test]
fn trace_csv_has_expected_columns() {
    let inst = generate_instance(ProblemClass::C2, 10, 10);
    let (_, mut ep) = reset(&inst, &test_cfg(), 37);
    ep.step(AlgorithmId::Jde21).unwrap();
    ep.step(AlgorithmId::NlShadeRsp).unwrap();
    let mut buf = Vec::new();
    ep.write_trace_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "step,action,adc,fe_used,best_cost");
    assert_eq!(lines.count(), 2);
}
