//! Basis functions for the shifted/rotated benchmark suite.
//!
//! Each function takes a vector that has already been shifted and rotated;
//! the per-function input scaling ("shrink rate") and internal offsets are
//! applied here so hybrid chunks and composition components get the same
//! treatment as whole problems.

use std::f64::consts::{E, PI};

/// Basis function identifiers, named after the classic test functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    BentCigar,
    SchwefelMod,
    GrieRosen,
    Rastrigin,
    Elliptic,
    EschafferF6,
    Hgbat,
    Rosenbrock,
    Griewank,
    Ackley,
    HappyCat,
    Discus,
}

impl Basis {
    /// Input shrink rate applied before evaluation.
    pub fn scale(self) -> f64 {
        match self {
            Basis::BentCigar | Basis::Elliptic | Basis::Discus => 1.0,
            Basis::EschafferF6 | Basis::Ackley => 1.0,
            Basis::SchwefelMod => 10.0,
            Basis::GrieRosen => 5.0 / 100.0,
            Basis::Rastrigin => 5.12 / 100.0,
            Basis::Hgbat | Basis::HappyCat => 5.0 / 100.0,
            Basis::Rosenbrock => 2.048 / 100.0,
            Basis::Griewank => 600.0 / 100.0,
        }
    }

    /// Evaluate on a shifted/rotated vector, applying the shrink rate.
    pub fn eval(self, z: &[f64]) -> f64 {
        let s = self.scale();
        let v: Vec<f64> = z.iter().map(|&x| x * s).collect();
        match self {
            Basis::BentCigar => bent_cigar(&v),
            Basis::SchwefelMod => schwefel_mod(&v),
            Basis::GrieRosen => grie_rosen(&v),
            Basis::Rastrigin => rastrigin(&v),
            Basis::Elliptic => elliptic(&v),
            Basis::EschafferF6 => eschaffer_f6(&v),
            Basis::Hgbat => hgbat(&v),
            Basis::Rosenbrock => rosenbrock(&v),
            Basis::Griewank => griewank(&v),
            Basis::Ackley => ackley(&v),
            Basis::HappyCat => happy_cat(&v),
            Basis::Discus => discus(&v),
        }
    }
}

pub fn bent_cigar(z: &[f64]) -> f64 {
    let mut f = z[0] * z[0];
    for &zi in &z[1..] {
        f += 1e6 * zi * zi;
    }
    f
}

pub fn elliptic(z: &[f64]) -> f64 {
    let d = z.len();
    if d == 1 {
        return z[0] * z[0];
    }
    z.iter()
        .enumerate()
        .map(|(i, &zi)| 10f64.powf(6.0 * i as f64 / (d - 1) as f64) * zi * zi)
        .sum()
}

pub fn discus(z: &[f64]) -> f64 {
    let mut f = 1e6 * z[0] * z[0];
    for &zi in &z[1..] {
        f += zi * zi;
    }
    f
}

pub fn rastrigin(z: &[f64]) -> f64 {
    z.iter()
        .map(|&zi| zi * zi - 10.0 * (2.0 * PI * zi).cos() + 10.0)
        .sum()
}

pub fn griewank(z: &[f64]) -> f64 {
    let s: f64 = z.iter().map(|&zi| zi * zi).sum::<f64>() / 4000.0;
    let p: f64 = z
        .iter()
        .enumerate()
        .map(|(i, &zi)| (zi / ((i + 1) as f64).sqrt()).cos())
        .product();
    s - p + 1.0
}

pub fn ackley(z: &[f64]) -> f64 {
    let d = z.len() as f64;
    let s1 = (z.iter().map(|&zi| zi * zi).sum::<f64>() / d).sqrt();
    let s2 = z.iter().map(|&zi| (2.0 * PI * zi).cos()).sum::<f64>() / d;
    -20.0 * (-0.2 * s1).exp() - s2.exp() + 20.0 + E
}

/// Rosenbrock with the conventional unit offset so the optimum sits at zero.
pub fn rosenbrock(z: &[f64]) -> f64 {
    let v: Vec<f64> = z.iter().map(|&zi| zi + 1.0).collect();
    let mut f = 0.0;
    for i in 0..v.len() - 1 {
        let a = v[i] * v[i] - v[i + 1];
        let b = v[i] - 1.0;
        f += 100.0 * a * a + b * b;
    }
    f
}

/// Modified Schwefel with out-of-range penalty branches.
pub fn schwefel_mod(z: &[f64]) -> f64 {
    let d = z.len() as f64;
    let mut f = 0.0;
    for &zi in z {
        let y = zi + 4.209687462275036e2;
        if y > 500.0 {
            let t = 500.0 - y % 500.0;
            f -= t * t.abs().sqrt().sin();
            let u = (y - 500.0) / 100.0;
            f += u * u / d;
        } else if y < -500.0 {
            let t = y.abs() % 500.0 - 500.0;
            f -= t * (500.0 - y.abs() % 500.0).sqrt().sin();
            let u = (y + 500.0) / 100.0;
            f += u * u / d;
        } else {
            f -= y * y.abs().sqrt().sin();
        }
    }
    f + 4.189828872724338e2 * d
}

/// Expanded Griewank-of-Rosenbrock with wrap-around pairing.
pub fn grie_rosen(z: &[f64]) -> f64 {
    let d = z.len();
    let mut v: Vec<f64> = z.to_vec();
    v[0] += 1.0;
    let mut f = 0.0;
    for i in 0..d {
        let j = (i + 1) % d;
        if i + 1 < d {
            v[j] += 1.0;
        }
        let a = v[i] * v[i] - v[j];
        let b = v[i] - 1.0;
        let t = 100.0 * a * a + b * b;
        f += t * t / 4000.0 - t.cos() + 1.0;
    }
    f
}

fn schaffer_pair(x: f64, y: f64) -> f64 {
    let r2 = x * x + y * y;
    let s = r2.sqrt().sin();
    0.5 + (s * s - 0.5) / ((1.0 + 0.001 * r2) * (1.0 + 0.001 * r2))
}

/// Expanded Schaffer F6 with wrap-around pairing.
pub fn eschaffer_f6(z: &[f64]) -> f64 {
    let d = z.len();
    if d == 1 {
        return schaffer_pair(z[0], z[0]);
    }
    let mut f = 0.0;
    for i in 0..d {
        f += schaffer_pair(z[i], z[(i + 1) % d]);
    }
    f
}

pub fn happy_cat(z: &[f64]) -> f64 {
    let d = z.len() as f64;
    let mut r2 = 0.0;
    let mut sum = 0.0;
    for &zi in z {
        let v = zi - 1.0;
        r2 += v * v;
        sum += v;
    }
    (r2 - d).abs().powf(0.25) + (0.5 * r2 + sum) / d + 0.5
}

pub fn hgbat(z: &[f64]) -> f64 {
    let d = z.len() as f64;
    let mut r2 = 0.0;
    let mut sum = 0.0;
    for &zi in z {
        let v = zi - 1.0;
        r2 += v * v;
        sum += v;
    }
    (r2 * r2 - sum * sum).abs().sqrt() + (0.5 * r2 + sum) / d + 0.5
}

/// Asymmetric double-funnel Rastrigin. Unlike the other basis functions this
/// one needs the raw decision vector, the shift and the rotation, because the
/// asymmetry depends on the sign of the shift and only the oscillation term
/// is rotated.
pub fn lunacek_bi_rastrigin(x: &[f64], shift: &[f64], rot: Option<&super::SquareMatrix>) -> f64 {
    let d = x.len();
    let mu0 = 2.5;
    let dd = 1.0;
    let s = 1.0 - 1.0 / (2.0 * ((d as f64) + 20.0).sqrt() - 8.2);
    let mu1 = -((mu0 * mu0 - dd) / s).sqrt();

    let mut t = vec![0.0; d];
    for i in 0..d {
        let y = (x[i] - shift[i]) * 0.1;
        let mut v = 2.0 * y;
        if shift[i] < 0.0 {
            v = -v;
        }
        t[i] = v;
    }
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for &ti in &t {
        s1 += ti * ti;
        let b = ti + mu0 - mu1;
        s2 += b * b;
    }
    s2 = s2 * s + dd * d as f64;

    let w = match rot {
        Some(m) => m.mul_vec(&t),
        None => t.clone(),
    };
    let cos_sum: f64 = w.iter().map(|&wi| (2.0 * PI * wi).cos()).sum();
    s1.min(s2) + 10.0 * (d as f64 - cos_sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-10;

    #[test]
    fn optima_sit_at_zero() {
        // All basis functions are anchored so that the scaled input 0 maps
        // to cost 0 (schwefel within float rounding of its constant).
        let z = vec![0.0; 10];
        assert_eq!(bent_cigar(&z), 0.0);
        assert_eq!(elliptic(&z), 0.0);
        assert_eq!(discus(&z), 0.0);
        assert_eq!(rastrigin(&z), 0.0);
        assert_eq!(griewank(&z), 0.0);
        assert!(ackley(&z).abs() < TOL);
        assert_eq!(rosenbrock(&z), 0.0);
        assert!(schwefel_mod(&z).abs() < 1e-10);
        assert_eq!(grie_rosen(&z), 0.0);
        assert!(happy_cat(&z).abs() < TOL);
        assert!(hgbat(&z).abs() < TOL);
    }

    #[test]
    fn hand_computed_points() {
        // bent cigar at e1: first coordinate is unweighted.
        let mut z = vec![0.0; 5];
        z[0] = 1.0;
        assert_eq!(bent_cigar(&z), 1.0);
        z[0] = 0.0;
        z[1] = 1.0;
        assert_eq!(bent_cigar(&z), 1e6);
        assert_eq!(discus(&z), 1.0);

        // rastrigin at 0.5 per coordinate: 0.25 - 10*cos(pi) + 10 = 20.25.
        let z = vec![0.5, 0.5];
        assert!((rastrigin(&z) - 40.5).abs() < 1e-12);

        // griewank at (sqrt(4000), 0): quadratic term is exactly 1, product
        // term is cos(sqrt(4000)).
        let z = vec![4000f64.sqrt(), 0.0];
        let expect = 1.0 - (4000f64.sqrt()).cos() + 1.0;
        assert!((griewank(&z) - expect).abs() < 1e-12);

        // rosenbrock at the classic origin (offset cancels the +1):
        // 100*(0 - 0)^2 + (0 - 1)^2 = 1.
        let z = vec![-1.0, -1.0];
        assert!((rosenbrock(&z) - 1.0).abs() < 1e-12);

        // elliptic in 3d: weights 1, 1e3, 1e6.
        let z = vec![1.0, 1.0, 1.0];
        assert!((elliptic(&z) - (1.0 + 1e3 + 1e6)).abs() < 1e-6);

        // expanded schaffer pair at (0, 0) is 0.
        assert_eq!(eschaffer_f6(&[0.0, 0.0]), 0.0);

        // happy cat / hgbat at the all-ones offset point.
        let z = vec![2.0, 2.0];
        // v = (1,1): r2 = 2, sum = 2 -> |2-2|^.25 + (1+2)/2 + 0.5 = 2.0
        assert!((happy_cat(&z) - 2.0).abs() < 1e-12);
        // hgbat: |4-4|^.5 + (1+2)/2 + 0.5 = 2.0
        assert!((hgbat(&z) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ackley_known_value() {
        // At z = (1, 1, ..., 1): s1 = 1, s2 = cos(2*pi) = 1.
        let z = vec![1.0; 4];
        let expect = -20.0 * (-0.2f64).exp() - E + 20.0 + E;
        assert!((ackley(&z) - expect).abs() < 1e-12);
    }

    #[test]
    fn schwefel_penalty_branches() {
        // Out-of-range inputs hit the penalty branches and stay finite.
        let z = vec![900.0, -900.0, 0.0];
        let f = schwefel_mod(&z);
        assert!(f.is_finite());
        assert!(f > 0.0);
    }

    #[test]
    fn bi_rastrigin_optimum() {
        let shift = vec![3.0, -2.0, 0.5, 1.0];
        let f = lunacek_bi_rastrigin(&shift, &shift, None);
        assert!(f.abs() < 1e-12);
    }
}
