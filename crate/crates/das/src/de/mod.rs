//! Candidate differential evolution solvers with a shared context memory.
//!
//! Three solvers (a self-adaptive two-population DE, a multi-strategy
//! success-history DE, and a rank-pressure success-history DE with adaptive
//! archive) operate on one shared population and can be suspended and
//! resumed mid-run. Adaptive scalars live in [`ContextMemory`]; the
//! population, incumbent and evaluation counter live in
//! [`PopulationState`] and pass from one solver to the next.

pub mod jde21;
pub mod madde;
pub mod nlshade;
pub(crate) mod util;

use crate::bench::{evaluate, InstanceSpec, LOWER_BOUND, UPPER_BOUND};
use crate::rng::Rng64;
use rand::Rng;

pub use jde21::Jde21Ctx;
pub use madde::MadDeCtx;
pub use nlshade::NlShadeCtx;

/// Unified population size range shared by all candidates.
pub const N_MIN: usize = 30;
pub const N_MAX: usize = 170;
/// Archive capacity as a multiple of the population size.
pub const ARCHIVE_RATE: f64 = 2.3;
/// Success-history memory slots per problem dimension.
pub const MEMORY_FACTOR: usize = 20;

/// Number of candidate solvers (the agent's action-space size).
pub const POOL_SIZE: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AlgorithmId {
    Jde21,
    MadDe,
    NlShadeRsp,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; POOL_SIZE] =
        [AlgorithmId::Jde21, AlgorithmId::MadDe, AlgorithmId::NlShadeRsp];

    pub fn index(self) -> usize {
        match self {
            AlgorithmId::Jde21 => 0,
            AlgorithmId::MadDe => 1,
            AlgorithmId::NlShadeRsp => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<AlgorithmId> {
        AlgorithmId::ALL.get(i).copied()
    }

    pub fn parse(s: &str) -> Option<AlgorithmId> {
        match s.to_ascii_lowercase().as_str() {
            "jde21" => Some(AlgorithmId::Jde21),
            "madde" => Some(AlgorithmId::MadDe),
            "nlshadersp" | "nl-shade-rsp" | "nlshade" => Some(AlgorithmId::NlShadeRsp),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmId::Jde21 => "jde21",
            AlgorithmId::MadDe => "madde",
            AlgorithmId::NlShadeRsp => "nlshadersp",
        }
    }
}

/// Candidate solutions plus run-wide bookkeeping. `best_cost` is the
/// incumbent over every evaluation ever made in the run and never increases.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationState {
    pub x: Vec<Vec<f64>>,
    pub costs: Vec<f64>,
    pub best_x: Vec<f64>,
    pub best_cost: f64,
    pub fe_used: u64,
}

impl PopulationState {
    /// Uniform initialization within bounds; evaluates all members.
    pub fn init(inst: &InstanceSpec, n: usize, rng: &mut Rng64) -> PopulationState {
        let d = inst.dim;
        let mut pop = PopulationState {
            x: Vec::with_capacity(n),
            costs: Vec::with_capacity(n),
            best_x: vec![0.0; d],
            best_cost: f64::INFINITY,
            fe_used: 0,
        };
        for _ in 0..n {
            let xi: Vec<f64> = (0..d)
                .map(|_| rng.gen_range(LOWER_BOUND..=UPPER_BOUND))
                .collect();
            let c = pop.evaluate_tracked(inst, &xi);
            pop.x.push(xi);
            pop.costs.push(c);
        }
        pop
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Evaluate a point, count the evaluation and update the incumbent.
    pub fn evaluate_tracked(&mut self, inst: &InstanceSpec, x: &[f64]) -> f64 {
        let c = evaluate(inst, x).expect("internal evaluation with matching dimension");
        self.fe_used += 1;
        if c < self.best_cost {
            self.best_cost = c;
            self.best_x = x.to_vec();
        }
        c
    }

    pub fn best_index(&self) -> usize {
        argmin(&self.costs)
    }

    pub fn worst_index(&self) -> usize {
        let mut worst = 0;
        for i in 1..self.costs.len() {
            if self.costs[i] > self.costs[worst] {
                worst = i;
            }
        }
        worst
    }

    /// Indices sorted by ascending cost (ties by index).
    pub fn sorted_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.n()).collect();
        idx.sort_by(|&a, &b| {
            self.costs[a]
                .partial_cmp(&self.costs[b])
                .unwrap()
                .then(a.cmp(&b))
        });
        idx
    }
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] < v[best] {
            best = i;
        }
    }
    best
}

/// Shared adaptive state: per-individual self-adaptive parameters,
/// success-history memories and the elite archive of replaced parents.
#[derive(Clone, Debug, PartialEq)]
pub struct CommonCtx {
    pub s_f: Vec<f64>,
    pub s_cr: Vec<f64>,
    pub m_f: Vec<f64>,
    pub m_cr: Vec<f64>,
    pub mem_pos: usize,
    pub archive: Vec<Vec<f64>>,
}

impl CommonCtx {
    /// floor(2.3 * n), computed in integer arithmetic to dodge float fuzz.
    pub fn archive_capacity(n: usize) -> usize {
        23 * n / 10
    }
}

/// Nested per-solver plus shared context store.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextMemory {
    pub jde21: Jde21Ctx,
    pub madde: MadDeCtx,
    pub nlshade: NlShadeCtx,
    pub common: CommonCtx,
}

/// Fresh context: published per-solver defaults, memories at 0.5, empty
/// archive, per-individual parameters at the classic F=0.5 / Cr=0.9.
pub fn init_context(n: usize, d: usize) -> ContextMemory {
    assert!(n >= 1 && d >= 1);
    ContextMemory {
        jde21: Jde21Ctx::default(),
        madde: MadDeCtx::default(),
        nlshade: NlShadeCtx::default(),
        common: CommonCtx {
            s_f: vec![0.5; n],
            s_cr: vec![0.9; n],
            m_f: vec![0.5; MEMORY_FACTOR * d],
            m_cr: vec![0.5; MEMORY_FACTOR * d],
            mem_pos: 0,
            archive: Vec::new(),
        },
    }
}

/// Per-solver context snapshot for one run segment.
#[derive(Clone, Debug, PartialEq)]
pub enum AlgCtx {
    Jde21(Jde21Ctx),
    MadDe(MadDeCtx),
    NlShade(NlShadeCtx),
}

/// Live run state of one solver: its own context plus a working copy of the
/// shared context. Fully determined by (context memory, population, rng).
#[derive(Clone, Debug, PartialEq)]
pub struct DeRunState {
    pub algorithm: AlgorithmId,
    pub alg_ctx: AlgCtx,
    pub common: CommonCtx,
}

/// Restore a solver from the context memory. Never mutates the memory.
pub fn restore(gamma: &ContextMemory, alg: AlgorithmId) -> DeRunState {
    let alg_ctx = match alg {
        AlgorithmId::Jde21 => AlgCtx::Jde21(gamma.jde21.clone()),
        AlgorithmId::MadDe => AlgCtx::MadDe(gamma.madde.clone()),
        AlgorithmId::NlShadeRsp => AlgCtx::NlShade(gamma.nlshade.clone()),
    };
    DeRunState {
        algorithm: alg,
        alg_ctx,
        common: gamma.common.clone(),
    }
}

/// Write a run state back: the solver's own dictionary and the shared
/// dictionary change, the other solvers' entries stay untouched.
pub fn save_context(gamma: &mut ContextMemory, state: &DeRunState) {
    match &state.alg_ctx {
        AlgCtx::Jde21(c) => gamma.jde21 = c.clone(),
        AlgCtx::MadDe(c) => gamma.madde = c.clone(),
        AlgCtx::NlShade(c) => gamma.nlshade = c.clone(),
    }
    gamma.common = state.common.clone();
}

/// How population size evolves during a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SizeSchedule {
    /// Each solver applies its published reduction rule, clamped to
    /// [N_MIN, N_MAX].
    Adaptive,
    /// Population size never changes (used by unit and continuity tests).
    Fixed,
}

#[derive(Clone, Copy, Debug)]
pub struct PoolConfig {
    pub max_fes: u64,
    pub term_error: f64,
    pub size_schedule: SizeSchedule,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalOutcome {
    pub fe_consumed: u64,
    pub terminated: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct TracePoint {
    pub fe_used: u64,
    pub best_cost: f64,
}

fn fe_ratio(fe_used: u64, max_fes: u64) -> f64 {
    (fe_used as f64 / max_fes as f64).clamp(0.0, 1.0)
}

/// Published size-reduction schedules, clamped to the unified range.
pub fn target_population(alg: AlgorithmId, fe_used: u64, max_fes: u64) -> usize {
    let r = fe_ratio(fe_used, max_fes);
    let n = match alg {
        AlgorithmId::Jde21 => {
            // big part halves at quarter points: 160/80/40/20 plus the
            // small part of 10
            if r < 0.25 {
                170
            } else if r < 0.5 {
                90
            } else if r < 0.75 {
                50
            } else {
                30
            }
        }
        AlgorithmId::MadDe => (N_MAX as f64 + (N_MIN as f64 - N_MAX as f64) * r).round() as usize,
        AlgorithmId::NlShadeRsp => {
            ((N_MIN as f64 - N_MAX as f64) * r.powf(1.0 - r) + N_MAX as f64).round() as usize
        }
    };
    n.clamp(N_MIN, N_MAX)
}

/// Resize the shared population: shrink by dropping the worst members, grow
/// by injecting evaluated uniform-random members. Returns evaluations spent.
pub(crate) fn resize_population(
    pop: &mut PopulationState,
    inst: &InstanceSpec,
    common: &mut CommonCtx,
    target: usize,
    rng: &mut Rng64,
) -> u64 {
    let n = pop.n();
    let target = target.clamp(N_MIN, N_MAX);
    let mut spent = 0;
    if target < n {
        let order = pop.sorted_indices();
        let keep = &order[..target];
        let mut new_x = Vec::with_capacity(target);
        let mut new_costs = Vec::with_capacity(target);
        let mut new_sf = Vec::with_capacity(target);
        let mut new_scr = Vec::with_capacity(target);
        for &i in keep {
            new_x.push(pop.x[i].clone());
            new_costs.push(pop.costs[i]);
            new_sf.push(common.s_f[i]);
            new_scr.push(common.s_cr[i]);
        }
        pop.x = new_x;
        pop.costs = new_costs;
        common.s_f = new_sf;
        common.s_cr = new_scr;
    } else if target > n {
        for _ in n..target {
            let xi: Vec<f64> = (0..inst.dim)
                .map(|_| rng.gen_range(LOWER_BOUND..=UPPER_BOUND))
                .collect();
            let c = pop.evaluate_tracked(inst, &xi);
            pop.x.push(xi);
            pop.costs.push(c);
            common.s_f.push(0.5);
            common.s_cr.push(0.9);
            spent += 1;
        }
    }
    let cap = CommonCtx::archive_capacity(target);
    while common.archive.len() > cap {
        let j = rng.gen_range(0..common.archive.len());
        common.archive.swap_remove(j);
    }
    spent
}

/// Run whole generations of the restored solver until at least `delta`
/// evaluations were consumed in this call, the global budget is exhausted or
/// the incumbent dropped below the termination error.
pub fn step_interval(
    state: &mut DeRunState,
    pop: &mut PopulationState,
    inst: &InstanceSpec,
    rng: &mut Rng64,
    delta: u64,
    cfg: &PoolConfig,
    mut trace: Option<&mut Vec<TracePoint>>,
) -> IntervalOutcome {
    assert!(delta >= 1, "interval budget must be positive");
    if pop.best_cost < cfg.term_error {
        return IntervalOutcome {
            fe_consumed: 0,
            terminated: true,
        };
    }
    let mut consumed = 0u64;
    if cfg.size_schedule == SizeSchedule::Adaptive {
        let target = target_population(state.algorithm, pop.fe_used, cfg.max_fes);
        consumed += resize_population(pop, inst, &mut state.common, target, rng);
    }
    while consumed < delta && pop.fe_used < cfg.max_fes && pop.best_cost >= cfg.term_error {
        consumed += run_generation(state, pop, inst, rng, cfg);
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(TracePoint {
                fe_used: pop.fe_used,
                best_cost: pop.best_cost,
            });
        }
    }
    IntervalOutcome {
        fe_consumed: consumed,
        terminated: pop.best_cost < cfg.term_error || pop.fe_used >= cfg.max_fes,
    }
}

fn run_generation(
    state: &mut DeRunState,
    pop: &mut PopulationState,
    inst: &InstanceSpec,
    rng: &mut Rng64,
    cfg: &PoolConfig,
) -> u64 {
    match &mut state.alg_ctx {
        AlgCtx::Jde21(ctx) => jde21::generation(ctx, &mut state.common, pop, inst, rng, cfg),
        AlgCtx::MadDe(ctx) => madde::generation(ctx, &mut state.common, pop, inst, rng, cfg),
        AlgCtx::NlShade(ctx) => nlshade::generation(ctx, &mut state.common, pop, inst, rng, cfg),
    }
}

/// One read-only trial round of a solver: produces the trial cost for every
/// population index without touching the population, the context memory or
/// the incumbent. Costs exactly `pop.n()` evaluations (counted by the
/// caller).
pub fn probe_trial_costs(
    gamma: &ContextMemory,
    alg: AlgorithmId,
    pop: &PopulationState,
    inst: &InstanceSpec,
    rng: &mut Rng64,
) -> Vec<f64> {
    let state = restore(gamma, alg);
    match &state.alg_ctx {
        AlgCtx::Jde21(ctx) => jde21::probe_trials(ctx, &state.common, pop, inst, rng),
        AlgCtx::MadDe(ctx) => madde::probe_trials(ctx, &state.common, pop, inst, rng),
        AlgCtx::NlShade(ctx) => nlshade::probe_trials(ctx, &state.common, pop, inst, rng),
    }
}

#[cfg(test)]
mod tests;
