//! Two-sided rank-sum test with normal approximation and tie correction.

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("each sample needs at least {min} values (got {a} and {b})")]
    TooFewSamples { min: usize, a: usize, b: usize },
}

/// Which sample ranks higher, at the requested significance level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    AGreater,
    BGreater,
    NoDifference,
}

#[derive(Clone, Copy, Debug)]
pub struct RankSumOutcome {
    pub p_value: f64,
    pub z: f64,
    pub u_statistic: f64,
    pub verdict: Verdict,
}

pub const MIN_SAMPLES: usize = 5;

/// Mann-Whitney U with midpoint ranks for ties and the tie-corrected
/// normal approximation. All-equal samples report no difference at p = 1.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64], alpha: f64) -> Result<RankSumOutcome, StatsError> {
    let (n1, n2) = (a.len(), b.len());
    if n1 < MIN_SAMPLES || n2 < MIN_SAMPLES {
        return Err(StatsError::TooFewSamples {
            min: MIN_SAMPLES,
            a: n1,
            b: n2,
        });
    }
    let n = n1 + n2;
    let mut tagged: Vec<(f64, bool)> = a
        .iter()
        .map(|&v| (v, true))
        .chain(b.iter().map(|&v| (v, false)))
        .collect();
    tagged.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());

    let mut ranks = vec![0.0; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && tagged[j].0 == tagged[i].0 {
            j += 1;
        }
        let rank = (i + 1 + j) as f64 / 2.0;
        for r in ranks.iter_mut().take(j).skip(i) {
            *r = rank;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }

    let r1: f64 = ranks
        .iter()
        .zip(&tagged)
        .filter(|(_, (_, is_a))| *is_a)
        .map(|(r, _)| *r)
        .sum();
    let u1 = r1 - (n1 * (n1 + 1)) as f64 / 2.0;
    let mean = (n1 * n2) as f64 / 2.0;
    let nf = n as f64;
    let var = (n1 * n2) as f64 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));

    if var <= 0.0 {
        return Ok(RankSumOutcome {
            p_value: 1.0,
            z: 0.0,
            u_statistic: u1,
            verdict: Verdict::NoDifference,
        });
    }
    let z = (u1 - mean) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let p_value = (2.0 * (1.0 - normal.cdf(z.abs()))).min(1.0);
    let verdict = if p_value >= alpha {
        Verdict::NoDifference
    } else if u1 > mean {
        Verdict::AGreater
    } else {
        Verdict::BGreater
    };
    Ok(RankSumOutcome {
        p_value,
        z,
        u_statistic: u1,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u_statistic(a: &[f64], b: &[f64]) -> f64 {
        // direct pair-count definition, used as an oracle
        let mut u = 0.0;
        for &x in a {
            for &y in b {
                if x > y {
                    u += 1.0;
                } else if x == y {
                    u += 0.5;
                }
            }
        }
        u
    }

    #[test]
    fn identical_samples_tie_at_p_one() {
        let a = vec![1.0; 8];
        let out = wilcoxon_rank_sum(&a, &a, 0.05).unwrap();
        assert_eq!(out.verdict, Verdict::NoDifference);
        assert_eq!(out.p_value, 1.0);
    }

    #[test]
    fn distant_samples_are_highly_significant() {
        let a: Vec<f64> = (0..30).map(|i| i as f64 * 1e-3).collect();
        let b: Vec<f64> = (0..30).map(|i| 100.0 + i as f64 * 1e-3).collect();
        let out = wilcoxon_rank_sum(&a, &b, 0.05).unwrap();
        assert!(out.p_value < 1e-6, "p = {}", out.p_value);
        assert_eq!(out.verdict, Verdict::BGreater);
    }

    #[test]
    fn swapping_arguments_flips_the_verdict_only() {
        let a = vec![0.1, 0.4, 0.2, 0.8, 0.9, 0.3, 0.6];
        let b = vec![1.1, 1.4, 0.7, 1.8, 1.9, 1.3, 1.6];
        let ab = wilcoxon_rank_sum(&a, &b, 0.05).unwrap();
        let ba = wilcoxon_rank_sum(&b, &a, 0.05).unwrap();
        assert!((ab.p_value - ba.p_value).abs() < 1e-12);
        assert_eq!(ab.verdict, Verdict::BGreater);
        assert_eq!(ba.verdict, Verdict::AGreater);
    }

    #[test]
    fn small_samples_are_rejected() {
        let a = vec![1.0; 4];
        let b = vec![2.0; 8];
        assert!(matches!(
            wilcoxon_rank_sum(&a, &b, 0.05),
            Err(StatsError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn u_statistic_matches_pair_count_oracle() {
        let a = vec![3.0, 1.0, 4.0, 1.5, 9.0, 2.6, 5.3, 5.8];
        let b = vec![2.7, 1.8, 2.8, 1.8, 2.8, 4.5, 9.0, 4.4];
        let out = wilcoxon_rank_sum(&a, &b, 0.05).unwrap();
        assert!((out.u_statistic - u_statistic(&a, &b)).abs() < 1e-12);
    }

    #[test]
    fn normal_approximation_tracks_exact_permutation_on_small_samples() {
        // enumerate all C(16, 8) label assignments of the pooled values and
        // compare the exact two-sided tail with the approximation
        let a = vec![0.3, 0.9, 1.4, 2.2, 2.9, 3.6, 4.1, 4.8];
        let b = vec![1.1, 1.7, 2.4, 3.1, 3.8, 4.4, 5.2, 5.9];
        let pooled: Vec<f64> = a.iter().chain(b.iter()).cloned().collect();
        let out = wilcoxon_rank_sum(&a, &b, 0.05).unwrap();

        let n = pooled.len();
        let k = a.len();
        let mean = (k * (n - k)) as f64 / 2.0;
        let observed = (u_statistic(&a, &b) - mean).abs();
        let mut total = 0usize;
        let mut extreme = 0usize;
        // iterate over bitmasks with exactly k bits
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let mut sa = Vec::with_capacity(k);
            let mut sb = Vec::with_capacity(n - k);
            for (i, &v) in pooled.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    sa.push(v);
                } else {
                    sb.push(v);
                }
            }
            total += 1;
            if (u_statistic(&sa, &sb) - mean).abs() >= observed - 1e-12 {
                extreme += 1;
            }
        }
        let exact = extreme as f64 / total as f64;
        assert!(
            (out.p_value - exact).abs() < 0.05,
            "approx {} vs exact {exact}",
            out.p_value
        );
    }
}
