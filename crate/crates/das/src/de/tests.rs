use super::*;
use crate::bench::{generate_instance, ProblemClass};
use crate::rng::rng_from_seed;

fn setup(
    class: ProblemClass,
    n: usize,
    seed: u64,
) -> (crate::bench::InstanceSpec, PopulationState, ContextMemory, Rng64) {
    let inst = generate_instance(class, 10, seed);
    let mut rng = rng_from_seed(seed ^ 0xABCD);
    let pop = PopulationState::init(&inst, n, &mut rng);
    let gamma = init_context(n, inst.dim);
    (inst, pop, gamma, rng)
}

fn fixed_cfg(max_fes: u64) -> PoolConfig {
    PoolConfig {
        max_fes,
        term_error: 1e-8,
        size_schedule: SizeSchedule::Fixed,
    }
}

#[test]
fn context_memory_sizes() {
    let gamma = init_context(100, 10);
    assert_eq!(gamma.common.m_f.len(), 200);
    assert_eq!(gamma.common.m_cr.len(), 200);
    assert_eq!(CommonCtx::archive_capacity(100), 230);
    assert!(gamma.common.archive.is_empty());
    assert!(gamma.common.m_f.iter().all(|&v| v == 0.5));
}

#[test]
fn context_init_deterministic() {
    assert_eq!(init_context(100, 10), init_context(100, 10));
}

#[test]
fn restore_is_identity_on_stored_fields() {
    let mut gamma = init_context(50, 10);
    gamma.madde.p_m = [0.5, 0.3, 0.2];
    let state = restore(&gamma, AlgorithmId::MadDe);
    match &state.alg_ctx {
        AlgCtx::MadDe(c) => assert_eq!(c.p_m, [0.5, 0.3, 0.2]),
        _ => panic!("wrong context"),
    }
    // restoration never mutates the memory
    assert_eq!(gamma.madde.p_m, [0.5, 0.3, 0.2]);
}

#[test]
fn restore_unselected_algorithm_has_defaults() {
    let gamma = init_context(50, 10);
    let state = restore(&gamma, AlgorithmId::NlShadeRsp);
    match &state.alg_ctx {
        AlgCtx::NlShade(c) => assert_eq!(*c, NlShadeCtx::default()),
        _ => panic!("wrong context"),
    }
}

#[test]
fn restore_save_restore_round_trip() {
    let mut gamma = init_context(50, 10);
    let state = restore(&gamma, AlgorithmId::Jde21);
    save_context(&mut gamma, &state);
    let state2 = restore(&gamma, AlgorithmId::Jde21);
    assert_eq!(state, state2);
}

#[test]
fn save_with_unchanged_state_is_idempotent() {
    let mut gamma = init_context(50, 10);
    let before = gamma.clone();
    let state = restore(&gamma, AlgorithmId::MadDe);
    save_context(&mut gamma, &state);
    assert_eq!(gamma, before);
}

#[test]
fn interval_consumes_exact_multiple() {
    let (inst, mut pop, gamma, mut rng) = setup(ProblemClass::C2, 100, 11);
    let mut state = restore(&gamma, AlgorithmId::MadDe);
    let out = step_interval(&mut state, &mut pop, &inst, &mut rng, 2500, &fixed_cfg(1_000_000), None);
    assert_eq!(out.fe_consumed, 2500);
    assert!(!out.terminated);
}

#[test]
fn interval_rounds_up_to_whole_generations() {
    let (inst, mut pop, gamma, mut rng) = setup(ProblemClass::C2, 170, 12);
    let mut state = restore(&gamma, AlgorithmId::MadDe);
    let out = step_interval(&mut state, &mut pop, &inst, &mut rng, 2500, &fixed_cfg(1_000_000), None);
    // ceil(2500 / 170) = 15 generations
    assert_eq!(out.fe_consumed, 2550);
}

#[test]
fn interval_short_circuits_on_solved_population() {
    let (inst, mut pop, gamma, mut rng) = setup(ProblemClass::C1, 50, 13);
    pop.best_cost = 1e-9;
    let mut state = restore(&gamma, AlgorithmId::NlShadeRsp);
    let out = step_interval(&mut state, &mut pop, &inst, &mut rng, 2500, &fixed_cfg(1_000_000), None);
    assert_eq!(out.fe_consumed, 0);
    assert!(out.terminated);
}

#[test]
fn running_one_solver_leaves_other_contexts_untouched() {
    let (inst, mut pop, mut gamma, mut rng) = setup(ProblemClass::C2, 60, 14);
    let jde_before = gamma.jde21.clone();
    let nl_before = gamma.nlshade.clone();
    let mut state = restore(&gamma, AlgorithmId::MadDe);
    step_interval(&mut state, &mut pop, &inst, &mut rng, 600, &fixed_cfg(1_000_000), None);
    save_context(&mut gamma, &state);
    assert_eq!(gamma.jde21, jde_before);
    assert_eq!(gamma.nlshade, nl_before);

    let madde_before = gamma.madde.clone();
    let mut state = restore(&gamma, AlgorithmId::Jde21);
    step_interval(&mut state, &mut pop, &inst, &mut rng, 600, &fixed_cfg(1_000_000), None);
    save_context(&mut gamma, &state);
    assert_eq!(gamma.madde, madde_before);
    assert_eq!(gamma.nlshade, nl_before);
}

fn pop_bits(pop: &PopulationState) -> Vec<u64> {
    let mut bits: Vec<u64> = pop
        .x
        .iter()
        .flat_map(|row| row.iter().map(|v| v.to_bits()))
        .collect();
    bits.extend(pop.costs.iter().map(|v| v.to_bits()));
    bits.extend(pop.best_x.iter().map(|v| v.to_bits()));
    bits.push(pop.best_cost.to_bits());
    bits.push(pop.fe_used);
    bits
}

#[test]
fn warm_start_continuity_is_bit_exact() {
    for alg in AlgorithmId::ALL {
        let (inst, pop0, gamma0, rng0) = setup(ProblemClass::C2, 100, 21);
        let cfg = fixed_cfg(1_000_000);

        let mut pop_a = pop0.clone();
        let mut gamma_a = gamma0.clone();
        let mut rng_a = rng0.clone();
        let mut state = restore(&gamma_a, alg);
        let out = step_interval(&mut state, &mut pop_a, &inst, &mut rng_a, 2000, &cfg, None);
        save_context(&mut gamma_a, &state);
        assert_eq!(out.fe_consumed, 2000, "{alg:?}");

        let mut pop_b = pop0.clone();
        let mut gamma_b = gamma0.clone();
        let mut rng_b = rng0.clone();
        for _ in 0..2 {
            let mut state = restore(&gamma_b, alg);
            step_interval(&mut state, &mut pop_b, &inst, &mut rng_b, 1000, &cfg, None);
            save_context(&mut gamma_b, &state);
        }

        assert_eq!(pop_bits(&pop_a), pop_bits(&pop_b), "{alg:?} population diverged");
        assert_eq!(gamma_a, gamma_b, "{alg:?} context diverged");
        assert_eq!(rng_a, rng_b, "{alg:?} rng stream diverged");
    }
}

#[test]
fn incumbent_is_monotone() {
    for alg in AlgorithmId::ALL {
        let (inst, mut pop, gamma, mut rng) = setup(ProblemClass::C6, 80, 31);
        let mut state = restore(&gamma, alg);
        let mut last = pop.best_cost;
        for _ in 0..5 {
            step_interval(&mut state, &mut pop, &inst, &mut rng, 400, &fixed_cfg(1_000_000), None);
            assert!(pop.best_cost <= last, "{alg:?}");
            last = pop.best_cost;
        }
    }
}

#[test]
fn adaptive_population_stays_in_range() {
    for alg in AlgorithmId::ALL {
        let inst = generate_instance(ProblemClass::C2, 10, 41);
        let mut rng = rng_from_seed(41);
        let mut pop = PopulationState::init(&inst, N_MAX, &mut rng);
        let mut gamma = init_context(N_MAX, inst.dim);
        let cfg = PoolConfig {
            max_fes: 30_000,
            term_error: 1e-8,
            size_schedule: SizeSchedule::Adaptive,
        };
        while pop.fe_used < cfg.max_fes {
            let mut state = restore(&gamma, alg);
            step_interval(&mut state, &mut pop, &inst, &mut rng, 2000, &cfg, None);
            save_context(&mut gamma, &state);
            assert!(pop.n() >= N_MIN && pop.n() <= N_MAX, "{alg:?}: {}", pop.n());
            assert_eq!(gamma.common.s_f.len(), pop.n());
        }
        // late in the run the schedules must have shrunk the population
        assert!(pop.n() < N_MAX, "{alg:?} never shrank");
    }
}

#[test]
fn probe_trials_are_side_effect_free() {
    let (inst, pop, gamma, mut rng) = setup(ProblemClass::C2, 50, 51);
    let pop_before = pop.clone();
    let gamma_before = gamma.clone();
    for alg in AlgorithmId::ALL {
        let costs = probe_trial_costs(&gamma, alg, &pop, &inst, &mut rng);
        assert_eq!(costs.len(), pop.n());
        assert!(costs.iter().all(|c| c.is_finite()));
    }
    assert_eq!(pop, pop_before);
    assert_eq!(gamma, gamma_before);
}

#[test]
fn probe_trials_deterministic_per_stream() {
    let (inst, pop, gamma, rng) = setup(ProblemClass::C2, 50, 52);
    let mut r1 = rng.clone();
    let mut r2 = rng.clone();
    let a = probe_trial_costs(&gamma, AlgorithmId::MadDe, &pop, &inst, &mut r1);
    let b = probe_trial_costs(&gamma, AlgorithmId::MadDe, &pop, &inst, &mut r2);
    assert_eq!(a, b);
}

#[test]
fn solvers_make_progress_on_the_unimodal_class() {
    for alg in AlgorithmId::ALL {
        let (inst, mut pop, gamma, mut rng) = setup(ProblemClass::C1, 100, 61);
        let start = pop.best_cost;
        let mut state = restore(&gamma, alg);
        step_interval(&mut state, &mut pop, &inst, &mut rng, 10_000, &fixed_cfg(1_000_000), None);
        assert!(
            pop.best_cost < 0.5 * start,
            "{alg:?} made no progress: {start} -> {}",
            pop.best_cost
        );
    }
}
