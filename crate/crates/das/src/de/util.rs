//! Shared operators for the DE candidates.

use super::CommonCtx;
use crate::bench::{LOWER_BOUND, UPPER_BOUND};
use crate::rng::Rng64;
use rand::Rng;

/// Cauchy draw, resampled while non-positive and capped at 1 (the usual
/// success-history F sampling rule).
pub fn sample_f(rng: &mut Rng64, mu: f64) -> f64 {
    loop {
        let u: f64 = rng.gen();
        let v = mu + 0.1 * (std::f64::consts::PI * (u - 0.5)).tan();
        if v > 0.0 {
            return v.min(1.0);
        }
    }
}

/// Gaussian draw clipped to [0, 1] (the usual Cr sampling rule).
pub fn sample_cr(rng: &mut Rng64, mu: f64) -> f64 {
    let n: f64 = rng.sample(rand_distr::StandardNormal);
    (mu + 0.1 * n).clamp(0.0, 1.0)
}

/// Binomial crossover with a guaranteed mutant coordinate.
pub fn binomial_crossover(rng: &mut Rng64, base: &[f64], mutant: &[f64], cr: f64) -> Vec<f64> {
    let d = base.len();
    let j_rand = rng.gen_range(0..d);
    (0..d)
        .map(|j| {
            if j == j_rand || rng.gen::<f64>() < cr {
                mutant[j]
            } else {
                base[j]
            }
        })
        .collect()
}

/// Midpoint repair: violated components move halfway between the parent and
/// the violated bound.
pub fn repair_midpoint(v: &mut [f64], parent: &[f64]) {
    for (vi, &pi) in v.iter_mut().zip(parent) {
        if *vi < LOWER_BOUND {
            *vi = (LOWER_BOUND + pi) / 2.0;
        } else if *vi > UPPER_BOUND {
            *vi = (UPPER_BOUND + pi) / 2.0;
        }
    }
}

/// Random repair: violated components are redrawn uniformly within bounds.
pub fn repair_random(v: &mut [f64], rng: &mut Rng64) {
    for vi in v.iter_mut() {
        if *vi < LOWER_BOUND || *vi > UPPER_BOUND {
            *vi = rng.gen_range(LOWER_BOUND..=UPPER_BOUND);
        }
    }
}

/// Weighted Lehmer mean used for the success-history memory update.
pub fn weighted_lehmer(values: &[f64], weights: &[f64]) -> f64 {
    let wsum: f64 = weights.iter().sum();
    if wsum <= 0.0 {
        return 0.5;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (&v, &w) in values.iter().zip(weights) {
        let wn = w / wsum;
        num += wn * v * v;
        den += wn * v;
    }
    if den.abs() < 1e-300 {
        0.5
    } else {
        num / den
    }
}

/// Push a replaced parent into the shared archive, evicting a random member
/// at capacity.
pub fn archive_push(common: &mut CommonCtx, x: Vec<f64>, n: usize, rng: &mut Rng64) {
    let cap = CommonCtx::archive_capacity(n);
    if cap == 0 {
        return;
    }
    if common.archive.len() < cap {
        common.archive.push(x);
    } else {
        let j = rng.gen_range(0..common.archive.len());
        common.archive[j] = x;
    }
}

/// Distinct random indices from `0..n`, all different from each other and
/// from every index in `exclude`.
pub fn distinct_indices<const K: usize>(rng: &mut Rng64, n: usize, exclude: &[usize]) -> [usize; K] {
    let mut out = [0usize; K];
    let mut chosen = 0;
    while chosen < K {
        let cand = rng.gen_range(0..n);
        if exclude.contains(&cand) || out[..chosen].contains(&cand) {
            continue;
        }
        out[chosen] = cand;
        chosen += 1;
    }
    out
}

/// Rank-weighted position draw over `0..n` (0 = best) with selective
/// pressure `k`: weight of position p is k*(n-p)+1.
pub fn rank_weighted_position(rng: &mut Rng64, n: usize, k: f64) -> usize {
    let nf = n as f64;
    let total = k * nf * (nf + 1.0) / 2.0 + nf;
    let mut u = rng.gen::<f64>() * total;
    for p in 0..n {
        let w = k * (nf - p as f64) + 1.0;
        if u < w {
            return p;
        }
        u -= w;
    }
    n - 1
}

/// Selection pass shared by the success-history solvers: replaces improved
/// parents, records success statistics and feeds the archive.
pub struct SelectionRecord {
    pub success_f: Vec<f64>,
    pub success_cr: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SelectionRecord {
    pub fn new() -> SelectionRecord {
        SelectionRecord {
            success_f: Vec::new(),
            success_cr: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn record(&mut self, f: f64, cr: f64, improvement: f64) {
        self.success_f.push(f);
        self.success_cr.push(cr);
        self.weights.push(improvement);
    }

    pub fn update_memories(&self, common: &mut CommonCtx) {
        if self.success_f.is_empty() {
            return;
        }
        let pos = common.mem_pos;
        common.m_f[pos] = weighted_lehmer(&self.success_f, &self.weights);
        common.m_cr[pos] = weighted_lehmer(&self.success_cr, &self.weights);
        common.mem_pos = (pos + 1) % common.m_f.len();
    }
}
