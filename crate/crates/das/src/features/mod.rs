//! Landscape and solver-history features.
//!
//! Nine scalars describe the optimization state: normalized best cost,
//! fitness-distance correlation, dispersion difference, normalized maximum
//! distance, negative slope coefficient, average neutral ratio, best/worst
//! improvement ratios and the consumed-budget ratio. A per-solver history
//! block records the mean shift of the best and worst individuals caused by
//! each solver. Probe-based features charge their evaluations to the
//! caller's budget.

use crate::bench::{bounds_diameter, InstanceSpec};
use crate::de::{probe_trial_costs, AlgorithmId, ContextMemory, PopulationState, POOL_SIZE};
use crate::rng::Rng64;
use rand::Rng;

pub const LA_LEN: usize = 9;

/// Neutrality tolerance; matches the run termination error.
pub const ANR_EPS: f64 = 1e-8;

/// Number of probe trial rounds per feature extraction.
pub const PROBE_COUNT: usize = 3;

/// The nine landscape scalars plus a degenerate-statistics flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaVector {
    pub values: [f64; LA_LEN],
    pub degenerate: bool,
}

/// Running mean shift vectors of the best and worst individuals, one pair
/// per solver. Never-selected solvers keep zero vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct AhHistory {
    dim: usize,
    sum_best: Vec<Vec<f64>>,
    sum_worst: Vec<Vec<f64>>,
    count: Vec<u64>,
}

impl AhHistory {
    pub fn new(dim: usize) -> AhHistory {
        AhHistory {
            dim,
            sum_best: vec![vec![0.0; dim]; POOL_SIZE],
            sum_worst: vec![vec![0.0; dim]; POOL_SIZE],
            count: vec![0; POOL_SIZE],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self, alg: AlgorithmId) -> u64 {
        self.count[alg.index()]
    }

    pub fn mean_best(&self, alg: AlgorithmId) -> Vec<f64> {
        self.mean(&self.sum_best[alg.index()], self.count[alg.index()])
    }

    pub fn mean_worst(&self, alg: AlgorithmId) -> Vec<f64> {
        self.mean(&self.sum_worst[alg.index()], self.count[alg.index()])
    }

    fn mean(&self, sum: &[f64], count: u64) -> Vec<f64> {
        if count == 0 {
            vec![0.0; self.dim]
        } else {
            sum.iter().map(|&s| s / count as f64).collect()
        }
    }
}

/// Append one interval's shift vectors for the solver that just ran.
pub fn record_shift(
    history: &mut AhHistory,
    alg: AlgorithmId,
    best_before: &[f64],
    best_after: &[f64],
    worst_before: &[f64],
    worst_after: &[f64],
) {
    let k = alg.index();
    for j in 0..history.dim {
        history.sum_best[k][j] += best_after[j] - best_before[j];
        history.sum_worst[k][j] += worst_after[j] - worst_before[j];
    }
    history.count[k] += 1;
}

/// The full observation: nine landscape scalars and the flattened
/// 2L x D history block, rows ordered best/worst per solver.
#[derive(Clone, Debug, PartialEq)]
pub struct DasState {
    pub la: [f64; LA_LEN],
    pub ah: Vec<f64>,
    pub dim: usize,
}

impl DasState {
    pub fn zeros(dim: usize) -> DasState {
        DasState {
            la: [0.0; LA_LEN],
            ah: vec![0.0; 2 * POOL_SIZE * dim],
            dim,
        }
    }

    pub fn ah_row(&self, row: usize) -> &[f64] {
        &self.ah[row * self.dim..(row + 1) * self.dim]
    }
}

pub fn assemble_state(la: &LaVector, history: &AhHistory) -> DasState {
    let dim = history.dim;
    let mut ah = Vec::with_capacity(2 * POOL_SIZE * dim);
    for alg in AlgorithmId::ALL {
        ah.extend(history.mean_best(alg));
        ah.extend(history.mean_worst(alg));
    }
    debug_assert!(la.values.iter().all(|v| v.is_finite()));
    DasState {
        la: la.values,
        ah,
        dim,
    }
}

/// Best cost over initial best cost, clamped to [0, 1]. A non-positive
/// initial cost means the optimum sat in the initial population.
pub fn feature_cost_ratio(best_cost: f64, initial_best_cost: f64) -> (f64, bool) {
    if initial_best_cost <= 0.0 {
        return (0.0, true);
    }
    ((best_cost / initial_best_cost).clamp(0.0, 1.0), false)
}

/// Fitness-distance correlation: Pearson correlation between costs and
/// distances to the population best, clamped to [-1, 1].
pub fn feature_fdc(costs: &[f64], dists_to_best: &[f64]) -> (f64, bool) {
    let n = costs.len() as f64;
    debug_assert!(costs.len() >= 2 && costs.len() == dists_to_best.len());
    let mc = costs.iter().sum::<f64>() / n;
    let md = dists_to_best.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vc = 0.0;
    let mut vd = 0.0;
    for (&c, &d) in costs.iter().zip(dists_to_best) {
        cov += (c - mc) * (d - md);
        vc += (c - mc) * (c - mc);
        vd += (d - md) * (d - md);
    }
    if vc <= 0.0 || vd <= 0.0 {
        return (0.0, true);
    }
    (
        ((cov / n) / ((vc / n).sqrt() * (vd / n).sqrt())).clamp(-1.0, 1.0),
        false,
    )
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn mean_pairwise_distance(points: &[&[f64]]) -> f64 {
    let n = points.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sum += euclid(points[i], points[j]);
        }
    }
    sum / (n * (n - 1) / 2) as f64
}

/// Mean pairwise distance of the best 10% minus that of the whole
/// population.
pub fn feature_dispersion_diff(x: &[Vec<f64>], costs: &[f64]) -> f64 {
    let n = x.len();
    debug_assert!(n >= 10);
    let top = ((0.1 * n as f64).ceil() as usize).max(1);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| costs[a].partial_cmp(&costs[b]).unwrap().then(a.cmp(&b)));
    let top_refs: Vec<&[f64]> = idx[..top].iter().map(|&i| x[i].as_slice()).collect();
    let all_refs: Vec<&[f64]> = x.iter().map(|v| v.as_slice()).collect();
    mean_pairwise_distance(&top_refs) - mean_pairwise_distance(&all_refs)
}

/// Maximum pairwise distance normalized by the search-space diameter.
pub fn feature_max_distance(x: &[Vec<f64>], dim: usize) -> f64 {
    let n = x.len();
    debug_assert!(n >= 2);
    let mut dmax = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            dmax = dmax.max(euclid(&x[i], &x[j]));
        }
    }
    (dmax / bounds_diameter(dim)).clamp(0.0, 1.0)
}

/// Negative slope coefficient over `m` segments of the ascending-sorted
/// evolved and probe cost sets; capped at zero. Near-zero probe segment
/// differences are skipped and flagged.
pub fn feature_nsc(evolved_sorted: &[f64], probe_sorted: &[f64], m: usize) -> (f64, bool) {
    debug_assert!(m >= 2 && evolved_sorted.len() == probe_sorted.len());
    let seg_e = segment_means(evolved_sorted, m);
    let seg_p = segment_means(probe_sorted, m);
    let mut sum = 0.0;
    let mut degenerate = false;
    for i in 0..m - 1 {
        let de = seg_e[i + 1] - seg_e[i];
        let dp = seg_p[i + 1] - seg_p[i];
        if dp.abs() < 1e-12 {
            degenerate = true;
            continue;
        }
        sum += de / dp;
    }
    (sum.min(0.0), degenerate)
}

fn segment_means(sorted: &[f64], m: usize) -> Vec<f64> {
    let n = sorted.len();
    let base = n / m;
    let extra = n % m;
    let mut out = Vec::with_capacity(m);
    let mut offset = 0;
    for k in 0..m {
        let len = base + usize::from(k < extra);
        let seg = &sorted[offset..offset + len];
        out.push(seg.iter().sum::<f64>() / seg.len().max(1) as f64);
        offset += len;
    }
    out
}

/// Fraction of (individual, probe) pairs within `eps` of the base cost.
pub fn feature_anr(base_costs: &[f64], probe_cost_sets: &[Vec<f64>], eps: f64) -> f64 {
    let n = base_costs.len();
    let s = probe_cost_sets.len();
    debug_assert!(s >= 1);
    let mut neutral = 0usize;
    for probe in probe_cost_sets {
        for (i, &c) in base_costs.iter().enumerate() {
            if (c - probe[i]).abs() < eps {
                neutral += 1;
            }
        }
    }
    neutral as f64 / (n * s) as f64
}

/// Best improvement: fraction of individuals no probe trial beat.
/// Worst improvement: fraction of individuals every probe trial worsened.
pub fn feature_best_worst_improvement(
    base_costs: &[f64],
    probe_cost_sets: &[Vec<f64>],
) -> (f64, f64) {
    let n = base_costs.len();
    let s = probe_cost_sets.len();
    let mut best = 0usize;
    let mut worst = 0usize;
    for (i, &c) in base_costs.iter().enumerate() {
        let improved = probe_cost_sets.iter().filter(|p| p[i] < c).count();
        let worsened = probe_cost_sets.iter().filter(|p| p[i] > c).count();
        if improved == 0 {
            best += 1;
        }
        if worsened == s {
            worst += 1;
        }
    }
    (best as f64 / n as f64, worst as f64 / n as f64)
}

/// Outcome of probe sampling: per-probe trial costs and the evaluations
/// charged for them.
pub struct ProbeSample {
    pub cost_sets: Vec<Vec<f64>>,
    pub fe_consumed: u64,
    pub truncated: bool,
}

/// Produce up to `s` probe cost sets by applying one trial round of a
/// randomly chosen solver to the current population. Read-only on the
/// population and the context memory; the caller adds `fe_consumed` to the
/// run budget. A shortage of remaining budget reduces the probe count.
pub fn sample_probe_populations(
    pop: &PopulationState,
    inst: &InstanceSpec,
    gamma: &ContextMemory,
    rng: &mut Rng64,
    s: usize,
    remaining_budget: u64,
) -> ProbeSample {
    let n = pop.n() as u64;
    let affordable = (remaining_budget / n.max(1)) as usize;
    let actual = s.min(affordable);
    let mut cost_sets = Vec::with_capacity(actual);
    for _ in 0..actual {
        let alg = AlgorithmId::ALL[rng.gen_range(0..POOL_SIZE)];
        cost_sets.push(probe_trial_costs(gamma, alg, pop, inst, rng));
    }
    ProbeSample {
        fe_consumed: actual as u64 * n,
        truncated: actual < s,
        cost_sets,
    }
}

/// NSC segment count: 8 for populations of at least 32, else 4.
pub fn nsc_segments(n: usize) -> usize {
    if n >= 32 {
        8
    } else {
        4
    }
}

/// Build the probe cost set feeding the NSC from two randomly chosen
/// probes: the lower half of one and the upper half of the other,
/// re-sorted ascending.
pub fn combine_probes_for_nsc(cost_sets: &[Vec<f64>], rng: &mut Rng64) -> Vec<f64> {
    debug_assert!(cost_sets.len() >= 2);
    let a = rng.gen_range(0..cost_sets.len());
    let b = loop {
        let c = rng.gen_range(0..cost_sets.len());
        if c != a {
            break c;
        }
    };
    let mut pa = cost_sets[a].clone();
    let mut pb = cost_sets[b].clone();
    pa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let n = pa.len();
    let half = n.div_ceil(2);
    let mut combined: Vec<f64> = pa[..half].to_vec();
    combined.extend_from_slice(&pb[half..]);
    combined.sort_by(|x, y| x.partial_cmp(y).unwrap());
    combined
}

/// Extract the full landscape vector. The returned evaluation count covers
/// the probe trials and must be charged to the run budget by the caller.
pub fn extract_la(
    pop: &PopulationState,
    inst: &InstanceSpec,
    gamma: &ContextMemory,
    initial_best_cost: f64,
    max_fes: u64,
    rng: &mut Rng64,
) -> (LaVector, u64) {
    let n = pop.n();
    let mut degenerate = false;

    let (f1, d1) = feature_cost_ratio(pop.best_cost, initial_best_cost);
    degenerate |= d1;

    let best_idx = pop.best_index();
    let dists: Vec<f64> = pop
        .x
        .iter()
        .map(|xi| euclid(xi, &pop.x[best_idx]))
        .collect();
    let (f2, d2) = feature_fdc(&pop.costs, &dists);
    degenerate |= d2;

    let f3 = feature_dispersion_diff(&pop.x, &pop.costs);
    let f4 = feature_max_distance(&pop.x, inst.dim);

    let remaining = max_fes.saturating_sub(pop.fe_used);
    let probes = sample_probe_populations(pop, inst, gamma, rng, PROBE_COUNT, remaining);
    degenerate |= probes.truncated;

    let (f5, f6, f7, f8) = if probes.cost_sets.len() >= 2 {
        let mut evolved = pop.costs.clone();
        evolved.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let probe_sorted = combine_probes_for_nsc(&probes.cost_sets, rng);
        let (f5, d5) = feature_nsc(&evolved, &probe_sorted, nsc_segments(n));
        degenerate |= d5;
        let f6 = feature_anr(&pop.costs, &probes.cost_sets, ANR_EPS);
        let (f7, f8) = feature_best_worst_improvement(&pop.costs, &probes.cost_sets);
        (f5, f6, f7, f8)
    } else {
        degenerate = true;
        (0.0, 0.0, 0.0, 0.0)
    };

    let fe_after = pop.fe_used + probes.fe_consumed;
    let f9 = (fe_after as f64 / max_fes as f64).clamp(0.0, 1.0);

    (
        LaVector {
            values: [f1, f2, f3, f4, f5, f6, f7, f8, f9],
            degenerate,
        },
        probes.fe_consumed,
    )
}
