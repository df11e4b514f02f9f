//! Multi-strategy success-history DE.
//!
//! Three mutation operators (current-to-pbest with archive, current-to-rand,
//! weighted-rand-to-qbest) are picked per individual with adaptive
//! probabilities `p_m` driven by each operator's share of the fitness
//! improvement. F and Cr come from the shared success-history memories; a
//! small probability `p_qbx` swaps the crossover base for a top-q member.
//! Population size shrinks linearly over the budget.

use super::util::{
    archive_push, binomial_crossover, distinct_indices, repair_midpoint, sample_cr, sample_f,
    SelectionRecord,
};
use super::{CommonCtx, PoolConfig, PopulationState, SizeSchedule};
use crate::bench::{evaluate, InstanceSpec};
use crate::rng::Rng64;
use rand::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct MadDeCtx {
    /// Selection probabilities of the three mutation operators.
    pub p_m: [f64; 3],
    /// Fraction of the population forming the pbest / qbest groups.
    pub p_best: f64,
    /// Probability of crossing over against a top-q base instead of the parent.
    pub p_qbx: f64,
}

impl Default for MadDeCtx {
    fn default() -> MadDeCtx {
        MadDeCtx {
            p_m: [1.0 / 3.0; 3],
            p_best: 0.18,
            p_qbx: 0.01,
        }
    }
}

const P_M_FLOOR: f64 = 0.1;

fn pick_strategy(p_m: &[f64; 3], rng: &mut Rng64) -> usize {
    let total: f64 = p_m.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (k, &p) in p_m.iter().enumerate() {
        if u < p {
            return k;
        }
        u -= p;
    }
    2
}

struct Trial {
    u: Vec<f64>,
    f: f64,
    cr: f64,
    strategy: usize,
}

fn make_trial(
    ctx: &MadDeCtx,
    common: &CommonCtx,
    pop: &PopulationState,
    sorted: &[usize],
    i: usize,
    rng: &mut Rng64,
) -> Trial {
    let n = pop.n();
    let d = pop.x[i].len();
    let h = common.m_f.len();
    let slot = rng.gen_range(0..h);
    let f = sample_f(rng, common.m_f[slot]);
    let cr = sample_cr(rng, common.m_cr[slot]);
    let strategy = pick_strategy(&ctx.p_m, rng);
    let group = ((ctx.p_best * n as f64).round() as usize).max(2).min(n);

    let mut v: Vec<f64> = match strategy {
        0 => {
            // current-to-pbest with archive on the second difference vector
            let pb = sorted[rng.gen_range(0..group)];
            let [a] = distinct_indices::<1>(rng, n, &[i, pb]);
            let total = n + common.archive.len();
            let r2 = loop {
                let j = rng.gen_range(0..total);
                if j >= n || (j != i && j != pb && j != a) {
                    break j;
                }
            };
            let x2: &[f64] = if r2 < n {
                &pop.x[r2]
            } else {
                &common.archive[r2 - n]
            };
            (0..d)
                .map(|j| {
                    pop.x[i][j] + f * (pop.x[pb][j] - pop.x[i][j]) + f * (pop.x[a][j] - x2[j])
                })
                .collect()
        }
        1 => {
            // current-to-rand; the trial is the mutant itself
            let [r1, r2, r3] = distinct_indices::<3>(rng, n, &[i]);
            let k: f64 = rng.gen();
            (0..d)
                .map(|j| {
                    pop.x[i][j]
                        + k * (pop.x[r1][j] - pop.x[i][j])
                        + f * (pop.x[r2][j] - pop.x[r3][j])
                })
                .collect()
        }
        _ => {
            // weighted-rand-to-qbest
            let qb = sorted[rng.gen_range(0..group)];
            let [r1, r2] = distinct_indices::<2>(rng, n, &[i, qb]);
            (0..d)
                .map(|j| f * pop.x[r1][j] + f * (pop.x[qb][j] - pop.x[r2][j]))
                .collect()
        }
    };
    repair_midpoint(&mut v, &pop.x[i]);

    let u = if strategy == 1 {
        v
    } else {
        let base: &[f64] = if rng.gen::<f64>() < ctx.p_qbx {
            &pop.x[sorted[rng.gen_range(0..group)]]
        } else {
            &pop.x[i]
        };
        binomial_crossover(rng, base, &v, cr)
    };
    Trial { u, f, cr, strategy }
}

pub fn generation(
    ctx: &mut MadDeCtx,
    common: &mut CommonCtx,
    pop: &mut PopulationState,
    inst: &InstanceSpec,
    rng: &mut Rng64,
    cfg: &PoolConfig,
) -> u64 {
    let n = pop.n();
    let sorted = pop.sorted_indices();
    let trials: Vec<Trial> = (0..n)
        .map(|i| make_trial(ctx, common, pop, &sorted, i, rng))
        .collect();

    let mut record = SelectionRecord::new();
    let mut improvement = [0.0f64; 3];
    let mut spent = 0;
    for (i, trial) in trials.into_iter().enumerate() {
        let cost = pop.evaluate_tracked(inst, &trial.u);
        spent += 1;
        if cost < pop.costs[i] {
            let delta = pop.costs[i] - cost;
            record.record(trial.f, trial.cr, delta);
            improvement[trial.strategy] += delta;
            let old = std::mem::replace(&mut pop.x[i], trial.u);
            archive_push(common, old, n, rng);
            pop.costs[i] = cost;
        }
    }
    record.update_memories(common);

    let total: f64 = improvement.iter().sum();
    if total > 0.0 {
        let mut p = [0.0; 3];
        for k in 0..3 {
            p[k] = (0.5 * ctx.p_m[k] + 0.5 * improvement[k] / total).max(P_M_FLOOR);
        }
        let s: f64 = p.iter().sum();
        for k in 0..3 {
            ctx.p_m[k] = p[k] / s;
        }
    }

    if cfg.size_schedule == SizeSchedule::Adaptive {
        let target = super::target_population(super::AlgorithmId::MadDe, pop.fe_used, cfg.max_fes);
        spent += super::resize_population(pop, inst, common, target, rng);
    }
    spent
}

/// One trial per index without any side effects; used for probing.
pub fn probe_trials(
    ctx: &MadDeCtx,
    common: &CommonCtx,
    pop: &PopulationState,
    inst: &InstanceSpec,
    rng: &mut Rng64,
) -> Vec<f64> {
    let sorted = pop.sorted_indices();
    (0..pop.n())
        .map(|i| {
            let trial = make_trial(ctx, common, pop, &sorted, i, rng);
            evaluate(inst, &trial.u).expect("probe evaluation")
        })
        .collect()
}
