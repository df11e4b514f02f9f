//! Self-adaptive two-population DE.
//!
//! A large exploratory population and a small exploitative one evolve with
//! rand/1 mutation and per-individual self-adaptive F and Cr (the
//! per-individual parameters live in the shared context as `s_f` / `s_cr`).
//! Either population restarts when its members collapse to near-equal costs
//! or when its best has not improved for `age_lmt` evaluations; the small
//! population keeps its best member through restarts and always receives
//! the run incumbent.

use super::util::{binomial_crossover, distinct_indices, repair_random};
use super::{CommonCtx, PoolConfig, PopulationState, SizeSchedule};
use crate::bench::{evaluate, InstanceSpec, LOWER_BOUND, UPPER_BOUND};
use crate::rng::Rng64;
use rand::Rng;

pub const SMALL_POP: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct Jde21Ctx {
    pub tau1: f64,
    pub tau2: f64,
    /// Evaluations a sub-population may stagnate before it restarts.
    pub age_lmt: u64,
    /// Cost-equality tolerance for the similarity restart.
    pub eps: f64,
    /// Fraction of near-equal members that triggers the similarity restart.
    pub my_eqs: f64,
    pub big_age: u64,
    pub small_age: u64,
}

impl Default for Jde21Ctx {
    fn default() -> Jde21Ctx {
        Jde21Ctx {
            tau1: 0.1,
            tau2: 0.1,
            age_lmt: 25_000,
            eps: 1e-16,
            my_eqs: 0.25,
            big_age: 0,
            small_age: 0,
        }
    }
}

/// Propose (F, Cr) for one individual. Cr for the small population may be
/// drawn up to 1.1 and capped, which makes full-vector crossover likely.
fn propose_params(
    ctx: &Jde21Ctx,
    common: &CommonCtx,
    i: usize,
    small: bool,
    rng: &mut Rng64,
) -> (f64, f64) {
    let f = if rng.gen::<f64>() < ctx.tau1 {
        0.1 + 0.9 * rng.gen::<f64>()
    } else {
        common.s_f[i]
    };
    let cr = if rng.gen::<f64>() < ctx.tau2 {
        if small {
            (1.1 * rng.gen::<f64>()).min(1.0)
        } else {
            rng.gen::<f64>()
        }
    } else {
        common.s_cr[i]
    };
    (f, cr)
}

fn build_trial(
    pop: &PopulationState,
    lo: usize,
    hi: usize,
    i: usize,
    f: f64,
    cr: f64,
    rng: &mut Rng64,
) -> Vec<f64> {
    let span = hi - lo;
    let [a, b, c] = distinct_indices::<3>(rng, span, &[i - lo]);
    let (r1, r2, r3) = (lo + a, lo + b, lo + c);
    let d = pop.x[i].len();
    let mut v: Vec<f64> = (0..d)
        .map(|j| pop.x[r1][j] + f * (pop.x[r2][j] - pop.x[r3][j]))
        .collect();
    repair_random(&mut v, rng);
    binomial_crossover(rng, &pop.x[i], &v, cr)
}

/// Evolve one sub-population synchronously. Returns evaluations spent.
fn evolve_range(
    ctx: &Jde21Ctx,
    common: &mut CommonCtx,
    pop: &mut PopulationState,
    inst: &InstanceSpec,
    lo: usize,
    hi: usize,
    small: bool,
    rng: &mut Rng64,
) -> u64 {
    let mut proposals = Vec::with_capacity(hi - lo);
    for i in lo..hi {
        let (f, cr) = propose_params(ctx, common, i, small, rng);
        let u = build_trial(pop, lo, hi, i, f, cr, rng);
        proposals.push((f, cr, u));
    }
    let mut spent = 0;
    for (k, (f, cr, u)) in proposals.into_iter().enumerate() {
        let i = lo + k;
        let cost = pop.evaluate_tracked(inst, &u);
        spent += 1;
        if cost < pop.costs[i] {
            pop.x[i] = u;
            pop.costs[i] = cost;
            common.s_f[i] = f;
            common.s_cr[i] = cr;
        }
    }
    spent
}

fn range_best(pop: &PopulationState, lo: usize, hi: usize) -> (usize, f64) {
    let mut bi = lo;
    for i in lo + 1..hi {
        if pop.costs[i] < pop.costs[bi] {
            bi = i;
        }
    }
    (bi, pop.costs[bi])
}

fn range_worst(pop: &PopulationState, lo: usize, hi: usize) -> usize {
    let mut wi = lo;
    for i in lo + 1..hi {
        if pop.costs[i] > pop.costs[wi] {
            wi = i;
        }
    }
    wi
}

fn similarity_count(pop: &PopulationState, lo: usize, hi: usize, eps: f64) -> usize {
    let (_, best) = range_best(pop, lo, hi);
    let tol = eps * best.abs().max(1.0);
    (lo..hi).filter(|&i| pop.costs[i] - best <= tol).count()
}

/// Reinitialize a sub-population uniformly, optionally keeping its best
/// member. Resets the self-adaptive parameters of the range.
fn reinit_range(
    common: &mut CommonCtx,
    pop: &mut PopulationState,
    inst: &InstanceSpec,
    lo: usize,
    hi: usize,
    keep_best: bool,
    rng: &mut Rng64,
) -> u64 {
    let keep = if keep_best {
        Some(range_best(pop, lo, hi).0)
    } else {
        None
    };
    let mut spent = 0;
    for i in lo..hi {
        if Some(i) == keep {
            continue;
        }
        let xi: Vec<f64> = (0..inst.dim)
            .map(|_| rng.gen_range(LOWER_BOUND..=UPPER_BOUND))
            .collect();
        let c = pop.evaluate_tracked(inst, &xi);
        pop.x[i] = xi;
        pop.costs[i] = c;
        common.s_f[i] = 0.5;
        common.s_cr[i] = 0.9;
        spent += 1;
    }
    spent
}

pub fn generation(
    ctx: &mut Jde21Ctx,
    common: &mut CommonCtx,
    pop: &mut PopulationState,
    inst: &InstanceSpec,
    rng: &mut Rng64,
    cfg: &PoolConfig,
) -> u64 {
    let mut spent = 0;
    if cfg.size_schedule == SizeSchedule::Adaptive {
        let target = super::target_population(super::AlgorithmId::Jde21, pop.fe_used, cfg.max_fes);
        spent += super::resize_population(pop, inst, common, target, rng);
    }
    let n = pop.n();
    let b = n - SMALL_POP;

    // the run incumbent is always visible to the small population
    let (_, small_best) = range_best(pop, b, n);
    if pop.best_cost < small_best {
        let wi = range_worst(pop, b, n);
        pop.x[wi] = pop.best_x.clone();
        pop.costs[wi] = pop.best_cost;
    }

    let before_big = pop.best_cost;
    spent += evolve_range(ctx, common, pop, inst, 0, b, false, rng);
    if pop.best_cost < before_big {
        ctx.big_age = 0;
    } else {
        ctx.big_age += b as u64;
    }

    let similar = similarity_count(pop, 0, b, ctx.eps);
    let big_stagnant = ctx.big_age > ctx.age_lmt;
    let big_collapsed = similar as f64 >= ctx.my_eqs * b as f64;
    if (big_collapsed || big_stagnant) && pop.fe_used + b as u64 <= cfg.max_fes {
        spent += reinit_range(common, pop, inst, 0, b, false, rng);
        ctx.big_age = 0;
    }

    let before_small = pop.best_cost;
    spent += evolve_range(ctx, common, pop, inst, b, n, true, rng);
    if pop.best_cost < before_small {
        ctx.small_age = 0;
    } else {
        ctx.small_age += SMALL_POP as u64;
    }

    let (sb, sbest) = range_best(pop, b, n);
    let sworst = pop.costs[range_worst(pop, b, n)];
    let collapsed = (sworst - sbest) <= ctx.eps * sbest.abs().max(1.0);
    let stagnant = ctx.small_age > ctx.age_lmt;
    if (collapsed || stagnant) && pop.fe_used + (SMALL_POP as u64 - 1) <= cfg.max_fes {
        let _ = sb;
        spent += reinit_range(common, pop, inst, b, n, true, rng);
        ctx.small_age = 0;
    }
    spent
}

/// One trial per index without any side effects; used for probing.
pub fn probe_trials(
    ctx: &Jde21Ctx,
    common: &CommonCtx,
    pop: &PopulationState,
    inst: &InstanceSpec,
    rng: &mut Rng64,
) -> Vec<f64> {
    let n = pop.n();
    let b = n - SMALL_POP;
    (0..n)
        .map(|i| {
            let small = i >= b;
            let (lo, hi) = if small { (b, n) } else { (0, b) };
            let (f, cr) = propose_params(ctx, common, i, small, rng);
            let u = build_trial(pop, lo, hi, i, f, cr, rng);
            evaluate(inst, &u).expect("probe evaluation")
        })
        .collect()
}
