//! Benchmark instance generation and evaluation.
//!
//! Ten problem classes (one unimodal, three basic multimodal, three hybrid,
//! three composition) plus a mixed class. Every instance is defined by a
//! random shift vector, a random rotation from Gram-Schmidt orthonormalized
//! Gaussian draws, and — for hybrids and compositions — a dimension
//! permutation or extra shifted/rotated components. Costs are reported as
//! error to the known optimum, so a perfect solution scores 0.

pub mod basis;
mod io;

pub use io::{load_instance_set, save_instance_set};

use crate::rng::{rng_from_seed, split_seed, Rng64};
use basis::Basis;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub const LOWER_BOUND: f64 = -100.0;
pub const UPPER_BOUND: f64 = 100.0;
pub const SHIFT_RANGE: f64 = 80.0;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at byte offset {offset}: {what}")]
    Parse { offset: usize, what: String },
    #[error("unsupported file version {found} (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },
}

/// Problem class identifiers. `C11` is the mixed class whose instances are
/// drawn uniformly from C1..C10.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProblemClass {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
    C9,
    C10,
    C11,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Unimodal,
    Basic,
    Hybrid,
    Composition,
    Mixed,
}

impl ProblemClass {
    pub const ALL: [ProblemClass; 11] = [
        ProblemClass::C1,
        ProblemClass::C2,
        ProblemClass::C3,
        ProblemClass::C4,
        ProblemClass::C5,
        ProblemClass::C6,
        ProblemClass::C7,
        ProblemClass::C8,
        ProblemClass::C9,
        ProblemClass::C10,
        ProblemClass::C11,
    ];

    pub const CONCRETE: [ProblemClass; 10] = [
        ProblemClass::C1,
        ProblemClass::C2,
        ProblemClass::C3,
        ProblemClass::C4,
        ProblemClass::C5,
        ProblemClass::C6,
        ProblemClass::C7,
        ProblemClass::C8,
        ProblemClass::C9,
        ProblemClass::C10,
    ];

    pub fn family(self) -> Family {
        match self {
            ProblemClass::C1 => Family::Unimodal,
            ProblemClass::C2 | ProblemClass::C3 | ProblemClass::C4 => Family::Basic,
            ProblemClass::C5 | ProblemClass::C6 | ProblemClass::C7 => Family::Hybrid,
            ProblemClass::C8 | ProblemClass::C9 | ProblemClass::C10 => Family::Composition,
            ProblemClass::C11 => Family::Mixed,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            ProblemClass::C1 => 1,
            ProblemClass::C2 => 2,
            ProblemClass::C3 => 3,
            ProblemClass::C4 => 4,
            ProblemClass::C5 => 5,
            ProblemClass::C6 => 6,
            ProblemClass::C7 => 7,
            ProblemClass::C8 => 8,
            ProblemClass::C9 => 9,
            ProblemClass::C10 => 10,
            ProblemClass::C11 => 11,
        }
    }

    pub fn from_index(i: u8) -> Option<ProblemClass> {
        ProblemClass::ALL.get(i.checked_sub(1)? as usize).copied()
    }

    pub fn parse(s: &str) -> Option<ProblemClass> {
        let t = s.trim().to_ascii_uppercase();
        let n: u8 = t.strip_prefix('C')?.parse().ok()?;
        ProblemClass::from_index(n)
    }

    pub fn name(self) -> String {
        format!("C{}", self.index())
    }
}

/// Row-major square matrix, used for rotations.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SquareMatrix {
    pub fn identity(n: usize) -> SquareMatrix {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        SquareMatrix { n, data }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.n);
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            let mut s = 0.0;
            for j in 0..self.n {
                s += row[j] * v[j];
            }
            out[i] = s;
        }
        out
    }

    /// Max absolute entry of `self * self^T - I`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.data[i * n + k] * self.data[j * n + k];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }
}

/// Extra component of a composition instance (the first component is the
/// instance's own shift/rotation).
#[derive(Clone, Debug, PartialEq)]
pub struct CompComponent {
    pub shift: Vec<f64>,
    /// `None` means the component is evaluated without rotation.
    pub rotation: Option<SquareMatrix>,
}

/// Class-specific structure beyond the shared shift and rotation.
#[derive(Clone, Debug, PartialEq)]
pub enum Recipe {
    Simple,
    /// Dimension permutation feeding the per-chunk sub-functions.
    Hybrid { perm: Vec<u16> },
    /// Components 2..N; component 1 is the instance shift/rotation.
    Composition { extras: Vec<CompComponent> },
}

/// One generated benchmark instance.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceSpec {
    pub class: ProblemClass,
    pub dim: usize,
    pub shift: Vec<f64>,
    pub rotation: SquareMatrix,
    pub recipe: Recipe,
    pub seed: u64,
    pub optimum_cost: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetRole {
    Train,
    Validation,
    Test,
}

/// An ordered collection of instances with K-fold labels.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceSet {
    pub class: ProblemClass,
    pub dim: usize,
    pub k_folds: usize,
    pub master_seed: u64,
    pub role: SetRole,
    pub instances: Vec<InstanceSpec>,
    pub folds: Vec<usize>,
}

impl InstanceSet {
    pub fn fold_indices(&self, fold: usize) -> Vec<usize> {
        self.folds
            .iter()
            .enumerate()
            .filter(|(_, &f)| f == fold)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Orthonormal rotation from Gram-Schmidt on i.i.d. standard normal draws.
/// A second orthogonalization sweep keeps the result orthonormal well below
/// the 1e-9 gate even for ill-conditioned draws; degenerate draws redraw
/// with a perturbed seed.
pub fn gram_schmidt_rotation(seed: u64, d: usize) -> SquareMatrix {
    assert!(d >= 1, "rotation dimension must be positive");
    let mut attempt: u64 = 0;
    'redraw: loop {
        let mut rng = rng_from_seed(split_seed(seed, attempt));
        let mut rows: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        for _sweep in 0..2 {
            for i in 0..d {
                for j in 0..i {
                    let dot: f64 = (0..d).map(|k| rows[i][k] * rows[j][k]).sum();
                    for k in 0..d {
                        rows[i][k] -= dot * rows[j][k];
                    }
                }
                let norm = rows[i].iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm < 1e-12 {
                    attempt += 1;
                    continue 'redraw;
                }
                for k in 0..d {
                    rows[i][k] /= norm;
                }
            }
        }
        let mut data = Vec::with_capacity(d * d);
        for row in rows {
            data.extend(row);
        }
        return SquareMatrix { n: d, data };
    }
}

/// Uniform shift vector in [-80, 80]^D.
pub fn sample_shift(seed: u64, d: usize) -> Vec<f64> {
    assert!(d >= 1);
    let mut rng = rng_from_seed(seed);
    sample_shift_with(&mut rng, d)
}

fn sample_shift_with(rng: &mut Rng64, d: usize) -> Vec<f64> {
    (0..d)
        .map(|_| rng.gen_range(-SHIFT_RANGE..=SHIFT_RANGE))
        .collect()
}

/// Hybrid chunk proportions and sub-functions per class.
fn hybrid_layout(class: ProblemClass) -> (&'static [f64], &'static [Basis]) {
    match class {
        ProblemClass::C5 => (
            &[0.3, 0.3, 0.4],
            &[Basis::SchwefelMod, Basis::Rastrigin, Basis::Elliptic],
        ),
        ProblemClass::C6 => (
            &[0.2, 0.2, 0.3, 0.3],
            &[
                Basis::EschafferF6,
                Basis::Hgbat,
                Basis::Rosenbrock,
                Basis::SchwefelMod,
            ],
        ),
        ProblemClass::C7 => (
            &[0.1, 0.2, 0.2, 0.2, 0.3],
            &[
                Basis::EschafferF6,
                Basis::Hgbat,
                Basis::Rosenbrock,
                Basis::SchwefelMod,
                Basis::Elliptic,
            ],
        ),
        _ => unreachable!("not a hybrid class"),
    }
}

struct CompLayout {
    sigmas: &'static [f64],
    lambdas: &'static [f64],
    biases: &'static [f64],
    funcs: &'static [Basis],
    /// Components evaluated without rotation.
    unrotated: &'static [bool],
}

fn composition_layout(class: ProblemClass) -> CompLayout {
    match class {
        ProblemClass::C8 => CompLayout {
            sigmas: &[10.0, 20.0, 30.0],
            lambdas: &[1.0, 10.0, 1.0],
            biases: &[0.0, 100.0, 200.0],
            funcs: &[Basis::Rastrigin, Basis::Griewank, Basis::SchwefelMod],
            unrotated: &[false, false, true],
        },
        ProblemClass::C9 => CompLayout {
            sigmas: &[10.0, 20.0, 30.0, 40.0],
            lambdas: &[10.0, 1e-6, 10.0, 1.0],
            biases: &[0.0, 100.0, 200.0, 300.0],
            funcs: &[
                Basis::Ackley,
                Basis::Elliptic,
                Basis::Griewank,
                Basis::Rastrigin,
            ],
            unrotated: &[false, false, false, false],
        },
        ProblemClass::C10 => CompLayout {
            sigmas: &[10.0, 20.0, 30.0, 40.0, 50.0],
            lambdas: &[10.0, 1.0, 10.0, 1e-6, 1.0],
            biases: &[0.0, 100.0, 200.0, 300.0, 400.0],
            funcs: &[
                Basis::Rastrigin,
                Basis::HappyCat,
                Basis::Ackley,
                Basis::Discus,
                Basis::Rosenbrock,
            ],
            unrotated: &[false, false, false, false, false],
        },
        _ => unreachable!("not a composition class"),
    }
}

/// Generate one instance. Draw order per instance: (mixed class pick,)
/// shift, rotation, recipe extras.
pub fn generate_instance(class: ProblemClass, dim: usize, seed: u64) -> InstanceSpec {
    if class == ProblemClass::C11 {
        generate_instance_from_pool(&ProblemClass::CONCRETE, dim, seed)
    } else {
        let mut rng = rng_from_seed(seed);
        build_instance(class, dim, seed, &mut rng)
    }
}

/// Instance whose class is drawn uniformly from `pool`.
pub fn generate_instance_from_pool(pool: &[ProblemClass], dim: usize, seed: u64) -> InstanceSpec {
    let mut rng = rng_from_seed(seed);
    let concrete = pool[rng.gen_range(0..pool.len())];
    build_instance(concrete, dim, seed, &mut rng)
}

fn build_instance(
    concrete: ProblemClass,
    dim: usize,
    seed: u64,
    rng: &mut Rng64,
) -> InstanceSpec {
    let shift = sample_shift_with(rng, dim);
    let rotation = gram_schmidt_rotation(rng.gen::<u64>(), dim);
    let recipe = match concrete.family() {
        Family::Unimodal | Family::Basic => Recipe::Simple,
        Family::Hybrid => {
            let mut perm: Vec<u16> = (0..dim as u16).collect();
            // Fisher-Yates
            for i in (1..dim).rev() {
                let j = rng.gen_range(0..=i);
                perm.swap(i, j);
            }
            Recipe::Hybrid { perm }
        }
        Family::Composition => {
            let layout = composition_layout(concrete);
            let extras = (1..layout.funcs.len())
                .map(|k| {
                    let shift = sample_shift_with(rng, dim);
                    let rotation = if layout.unrotated[k] {
                        None
                    } else {
                        Some(gram_schmidt_rotation(rng.gen::<u64>(), dim))
                    };
                    CompComponent { shift, rotation }
                })
                .collect();
            Recipe::Composition { extras }
        }
        Family::Mixed => unreachable!(),
    };
    InstanceSpec {
        class: concrete,
        dim,
        shift,
        rotation,
        recipe,
        seed,
        optimum_cost: 0.0,
    }
}

/// Generate `count` instances with round-robin fold labels.
pub fn generate_instance_set(
    class: ProblemClass,
    dim: usize,
    count: usize,
    seed: u64,
    k_folds: usize,
    role: SetRole,
) -> InstanceSet {
    assert!(k_folds >= 1 && count >= k_folds, "count must be >= k_folds >= 1");
    let instances = (0..count)
        .map(|i| generate_instance(class, dim, split_seed(seed, i as u64)))
        .collect();
    let folds = (0..count).map(|i| i % k_folds).collect();
    InstanceSet {
        class,
        dim,
        k_folds,
        master_seed: seed,
        role,
        instances,
        folds,
    }
}

/// Mixed set over an explicit class list (transfer splits and the mixed
/// class use this; `classes = C1..C10` reproduces the C11 construction).
pub fn generate_mixed_set(
    classes: &[ProblemClass],
    dim: usize,
    count: usize,
    seed: u64,
    k_folds: usize,
    role: SetRole,
) -> InstanceSet {
    assert!(!classes.is_empty());
    assert!(k_folds >= 1 && count >= k_folds);
    let instances = (0..count)
        .map(|i| generate_instance_from_pool(classes, dim, split_seed(seed, i as u64)))
        .collect();
    let folds = (0..count).map(|i| i % k_folds).collect();
    InstanceSet {
        class: ProblemClass::C11,
        dim,
        k_folds,
        master_seed: seed,
        role,
        instances,
        folds,
    }
}

fn shift_rotate(x: &[f64], shift: &[f64], rot: Option<&SquareMatrix>) -> Vec<f64> {
    let y: Vec<f64> = x.iter().zip(shift).map(|(&xi, &oi)| xi - oi).collect();
    match rot {
        Some(m) => m.mul_vec(&y),
        None => y,
    }
}

/// Evaluate an instance at `x`. Pure; does no FE accounting. Out-of-bound
/// points are evaluated as-is.
pub fn evaluate(inst: &InstanceSpec, x: &[f64]) -> Result<f64, BenchError> {
    if x.len() != inst.dim {
        return Err(BenchError::DimensionMismatch {
            expected: inst.dim,
            got: x.len(),
        });
    }
    let f = match (&inst.recipe, inst.class) {
        (Recipe::Simple, ProblemClass::C1) => {
            Basis::BentCigar.eval(&shift_rotate(x, &inst.shift, Some(&inst.rotation)))
        }
        (Recipe::Simple, ProblemClass::C2) => {
            Basis::SchwefelMod.eval(&shift_rotate(x, &inst.shift, Some(&inst.rotation)))
        }
        (Recipe::Simple, ProblemClass::C3) => {
            basis::lunacek_bi_rastrigin(x, &inst.shift, Some(&inst.rotation))
        }
        (Recipe::Simple, ProblemClass::C4) => {
            Basis::GrieRosen.eval(&shift_rotate(x, &inst.shift, Some(&inst.rotation)))
        }
        (Recipe::Hybrid { perm }, class) => {
            let z = shift_rotate(x, &inst.shift, Some(&inst.rotation));
            let permuted: Vec<f64> = perm.iter().map(|&p| z[p as usize]).collect();
            let (props, funcs) = hybrid_layout(class);
            let sizes = chunk_sizes(inst.dim, props);
            let mut f = 0.0;
            let mut offset = 0;
            for (k, &func) in funcs.iter().enumerate() {
                let chunk = &permuted[offset..offset + sizes[k]];
                f += func.eval(chunk);
                offset += sizes[k];
            }
            f
        }
        (Recipe::Composition { extras }, class) => {
            let layout = composition_layout(class);
            let n_comp = layout.funcs.len();
            let mut fits = Vec::with_capacity(n_comp);
            let mut weights = Vec::with_capacity(n_comp);
            for k in 0..n_comp {
                let (shift, rot): (&[f64], Option<&SquareMatrix>) = if k == 0 {
                    (&inst.shift, Some(&inst.rotation))
                } else {
                    let c = &extras[k - 1];
                    (&c.shift, c.rotation.as_ref())
                };
                let z = shift_rotate(x, shift, rot);
                let fit = layout.funcs[k].eval(&z) * layout.lambdas[k] + layout.biases[k];
                let dsq: f64 = x
                    .iter()
                    .zip(shift)
                    .map(|(&xi, &oi)| (xi - oi) * (xi - oi))
                    .sum();
                let w = if dsq == 0.0 {
                    1e99
                } else {
                    (1.0 / dsq).sqrt()
                        * (-dsq / (2.0 * inst.dim as f64 * layout.sigmas[k] * layout.sigmas[k]))
                            .exp()
                };
                fits.push(fit);
                weights.push(w);
            }
            let w_sum: f64 = weights.iter().sum();
            if w_sum == 0.0 {
                fits.iter().sum::<f64>() / n_comp as f64
            } else {
                fits.iter()
                    .zip(&weights)
                    .map(|(&fit, &w)| w / w_sum * fit)
                    .sum()
            }
        }
        (recipe, class) => unreachable!("recipe {recipe:?} does not match class {class:?}"),
    };
    // Tiny negative values can appear from the schwefel anchor constant.
    Ok(f.max(0.0))
}

/// Chunk sizes from proportions: ceil for all but the last, remainder last.
fn chunk_sizes(dim: usize, props: &[f64]) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(props.len());
    let mut used = 0;
    for &p in &props[..props.len() - 1] {
        let s = (p * dim as f64).ceil() as usize;
        sizes.push(s);
        used += s;
    }
    sizes.push(dim - used);
    sizes
}

pub fn bounds_diameter(dim: usize) -> f64 {
    (UPPER_BOUND - LOWER_BOUND) * (dim as f64).sqrt()
}
