//! Rank-pressure success-history DE with adaptive archive usage.
//!
//! Current-to-pbest mutation where difference-vector donors are drawn with
//! rank-based selective pressure, the second donor comes from the shared
//! archive with adaptive probability `p_a`, and the sampled crossover rates
//! are sorted so better individuals receive smaller Cr. The population
//! shrinks non-linearly over the budget.

use super::util::{
    archive_push, binomial_crossover, rank_weighted_position, repair_midpoint, sample_cr,
    sample_f, SelectionRecord,
};
use super::{CommonCtx, PoolConfig, PopulationState, SizeSchedule};
use crate::bench::{evaluate, InstanceSpec};
use crate::rng::Rng64;
use rand::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct NlShadeCtx {
    /// Last observed share of fitness improvement produced with archive
    /// donors (the adaptation state behind `p_a`).
    pub n_a: f64,
    /// Probability that the second mutation donor comes from the archive.
    pub p_a: f64,
}

impl Default for NlShadeCtx {
    fn default() -> NlShadeCtx {
        NlShadeCtx { n_a: 0.5, p_a: 0.5 }
    }
}

/// Selective pressure of the rank-weighted donor draw.
const RANK_PRESSURE: f64 = 3.0;

fn pbest_fraction(fe_used: u64, max_fes: u64) -> f64 {
    let r = (fe_used as f64 / max_fes as f64).clamp(0.0, 1.0);
    // narrows the elite group as the budget depletes
    0.2 - 0.1 * r
}

struct Plan {
    mutant: Vec<f64>,
    f: f64,
    from_archive: bool,
}

fn plan_mutation(
    ctx: &NlShadeCtx,
    common: &CommonCtx,
    pop: &PopulationState,
    sorted: &[usize],
    i: usize,
    group: usize,
    rng: &mut Rng64,
) -> Plan {
    let n = pop.n();
    let d = pop.x[i].len();
    let pb = sorted[rng.gen_range(0..group)];
    let r1 = loop {
        let cand = sorted[rank_weighted_position(rng, n, RANK_PRESSURE)];
        if cand != i && cand != pb {
            break cand;
        }
    };
    let use_archive = !common.archive.is_empty() && rng.gen::<f64>() < ctx.p_a;
    let (x2, from_archive): (&[f64], bool) = if use_archive {
        (&common.archive[rng.gen_range(0..common.archive.len())], true)
    } else {
        let r2 = loop {
            let cand = sorted[rank_weighted_position(rng, n, RANK_PRESSURE)];
            if cand != i && cand != pb && cand != r1 {
                break cand;
            }
        };
        (&pop.x[r2], false)
    };
    let slot = rng.gen_range(0..common.m_f.len());
    let f = sample_f(rng, common.m_f[slot]);
    let mut mutant: Vec<f64> = (0..d)
        .map(|j| pop.x[i][j] + f * (pop.x[pb][j] - pop.x[i][j]) + f * (pop.x[r1][j] - x2[j]))
        .collect();
    repair_midpoint(&mut mutant, &pop.x[i]);
    Plan {
        mutant,
        f,
        from_archive,
    }
}

/// Sampled Cr values are sorted ascending and reassigned by fitness rank, so
/// the best individual changes least.
fn sorted_crs(common: &CommonCtx, sorted: &[usize], n: usize, rng: &mut Rng64) -> Vec<f64> {
    let mut crs: Vec<f64> = (0..n)
        .map(|_| {
            let slot = rng.gen_range(0..common.m_cr.len());
            sample_cr(rng, common.m_cr[slot])
        })
        .collect();
    crs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut per_index = vec![0.0; n];
    for (pos, &idx) in sorted.iter().enumerate() {
        per_index[idx] = crs[pos];
    }
    per_index
}

pub fn generation(
    ctx: &mut NlShadeCtx,
    common: &mut CommonCtx,
    pop: &mut PopulationState,
    inst: &InstanceSpec,
    rng: &mut Rng64,
    cfg: &PoolConfig,
) -> u64 {
    let n = pop.n();
    let sorted = pop.sorted_indices();
    let group = ((pbest_fraction(pop.fe_used, cfg.max_fes) * n as f64).round() as usize)
        .max(2)
        .min(n);
    let crs = sorted_crs(common, &sorted, n, rng);
    let plans: Vec<Plan> = (0..n)
        .map(|i| plan_mutation(ctx, common, pop, &sorted, i, group, rng))
        .collect();
    let trials: Vec<Vec<f64>> = plans
        .iter()
        .enumerate()
        .map(|(i, p)| binomial_crossover(rng, &pop.x[i], &p.mutant, crs[i]))
        .collect();

    let mut record = SelectionRecord::new();
    let mut gain_archive = 0.0;
    let mut gain_pop = 0.0;
    let mut spent = 0;
    for (i, u) in trials.into_iter().enumerate() {
        let cost = pop.evaluate_tracked(inst, &u);
        spent += 1;
        if cost < pop.costs[i] {
            let delta = pop.costs[i] - cost;
            record.record(plans[i].f, crs[i], delta);
            if plans[i].from_archive {
                gain_archive += delta;
            } else {
                gain_pop += delta;
            }
            let old = std::mem::replace(&mut pop.x[i], u);
            archive_push(common, old, n, rng);
            pop.costs[i] = cost;
        }
    }
    record.update_memories(common);

    let total = gain_archive + gain_pop;
    if total > 0.0 {
        let share = gain_archive / total;
        ctx.n_a = share;
        ctx.p_a = (0.5 * (ctx.p_a + share)).clamp(0.1, 0.9);
    }

    if cfg.size_schedule == SizeSchedule::Adaptive {
        let target =
            super::target_population(super::AlgorithmId::NlShadeRsp, pop.fe_used, cfg.max_fes);
        spent += super::resize_population(pop, inst, common, target, rng);
    }
    spent
}

/// One trial per index without any side effects; used for probing.
pub fn probe_trials(
    ctx: &NlShadeCtx,
    common: &CommonCtx,
    pop: &PopulationState,
    inst: &InstanceSpec,
    rng: &mut Rng64,
) -> Vec<f64> {
    let n = pop.n();
    let sorted = pop.sorted_indices();
    // probes should not depend on the budget position; use the widest group
    let group = ((0.2 * n as f64).round() as usize).max(2).min(n);
    let crs = sorted_crs(common, &sorted, n, rng);
    (0..n)
        .map(|i| {
            let p = plan_mutation(ctx, common, pop, &sorted, i, group, rng);
            let u = binomial_crossover(rng, &pop.x[i], &p.mutant, crs[i]);
            evaluate(inst, &u).expect("probe evaluation")
        })
        .collect()
}
