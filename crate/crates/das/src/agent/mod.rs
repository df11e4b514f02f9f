//! Actor-critic network with hand-written forward and backward passes.
//!
//! The history block is embedded row-wise through a shared two-layer ReLU
//! map into one scalar per row, concatenated with the nine landscape
//! scalars, fused through a Tanh layer into a 64-wide decision vector, and
//! read by a Tanh-Softmax actor head and a ReLU critic head. Everything is
//! f64 and sequential, so fixed seeds give bit-identical results.

pub mod checkpoint;
pub mod ppo;

use crate::features::{DasState, LA_LEN};
use crate::rng::Rng64;
use rand::Rng;
use thiserror::Error;

pub const EMBED_WIDTH: usize = 64;
pub const FUSED_WIDTH: usize = 64;
pub const ACTOR_WIDTH: usize = 16;
pub const CRITIC_WIDTH: usize = 64;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("update needs a non-empty trajectory batch")]
    EmptyBatch,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint parse error at byte {offset}: {what}")]
    Parse { offset: usize, what: String },
    #[error("unsupported checkpoint version {found} (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },
}

/// Dense row-major matrix; biases use a single column.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Tensor {
        Tensor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Uniform fan-in initialization: U(-1/sqrt(cols), 1/sqrt(cols)).
    fn init(rows: usize, cols: usize, rng: &mut Rng64) -> Tensor {
        let bound = 1.0 / (cols as f64).sqrt();
        Tensor {
            rows,
            cols,
            data: (0..rows * cols)
                .map(|_| rng.gen_range(-bound..bound))
                .collect(),
        }
    }

    fn matvec(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut s = 0.0;
            for c in 0..self.cols {
                s += row[c] * v[c];
            }
            out[r] = s;
        }
    }

    /// out += self^T * v
    fn matvec_t_acc(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for r in 0..self.rows {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for c in 0..self.cols {
                out[c] += row[c] * v[r];
            }
        }
    }

    /// self += outer(a, b), used to accumulate weight gradients.
    fn outer_acc(&mut self, a: &[f64], b: &[f64]) {
        debug_assert_eq!(a.len(), self.rows);
        debug_assert_eq!(b.len(), self.cols);
        for r in 0..self.rows {
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for c in 0..self.cols {
                row[c] += a[r] * b[c];
            }
        }
    }

    fn add_acc(&mut self, v: &[f64]) {
        debug_assert_eq!(v.len(), self.data.len());
        for (d, &x) in self.data.iter_mut().zip(v) {
            *d += x;
        }
    }
}

/// All trainable tensors. The declared order below is also the checkpoint
/// and optimizer order.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    pub dim: usize,
    pub n_actions: usize,
    pub w_ve1: Tensor,
    pub b_ve1: Tensor,
    pub w_ve2: Tensor,
    pub b_ve2: Tensor,
    pub w_dv: Tensor,
    pub b_dv: Tensor,
    pub w_a1: Tensor,
    pub b_a1: Tensor,
    pub w_a2: Tensor,
    pub b_a2: Tensor,
    pub w_c1: Tensor,
    pub b_c1: Tensor,
    pub w_c2: Tensor,
    pub b_c2: Tensor,
}

pub const TENSOR_NAMES: [&str; 14] = [
    "w_ve1", "b_ve1", "w_ve2", "b_ve2", "w_dv", "b_dv", "w_a1", "b_a1", "w_a2", "b_a2", "w_c1",
    "b_c1", "w_c2", "b_c2",
];

impl NetworkParams {
    pub fn new(dim: usize, n_actions: usize, seed: u64) -> NetworkParams {
        let mut rng = crate::rng::rng_from_seed(seed);
        let fused_in = LA_LEN + 2 * n_actions;
        NetworkParams {
            dim,
            n_actions,
            w_ve1: Tensor::init(EMBED_WIDTH, dim, &mut rng),
            b_ve1: Tensor::zeros(EMBED_WIDTH, 1),
            w_ve2: Tensor::init(1, EMBED_WIDTH, &mut rng),
            b_ve2: Tensor::zeros(1, 1),
            w_dv: Tensor::init(FUSED_WIDTH, fused_in, &mut rng),
            b_dv: Tensor::zeros(FUSED_WIDTH, 1),
            w_a1: Tensor::init(ACTOR_WIDTH, FUSED_WIDTH, &mut rng),
            b_a1: Tensor::zeros(ACTOR_WIDTH, 1),
            w_a2: Tensor::init(n_actions, ACTOR_WIDTH, &mut rng),
            b_a2: Tensor::zeros(n_actions, 1),
            w_c1: Tensor::init(CRITIC_WIDTH, FUSED_WIDTH, &mut rng),
            b_c1: Tensor::zeros(CRITIC_WIDTH, 1),
            w_c2: Tensor::init(1, CRITIC_WIDTH, &mut rng),
            b_c2: Tensor::zeros(1, 1),
        }
    }

    pub fn zeros_like(&self) -> NetworkParams {
        let mut out = self.clone();
        for (_, t) in out.tensors_mut() {
            t.data.iter_mut().for_each(|v| *v = 0.0);
        }
        out
    }

    pub fn tensors(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("w_ve1", &self.w_ve1),
            ("b_ve1", &self.b_ve1),
            ("w_ve2", &self.w_ve2),
            ("b_ve2", &self.b_ve2),
            ("w_dv", &self.w_dv),
            ("b_dv", &self.b_dv),
            ("w_a1", &self.w_a1),
            ("b_a1", &self.b_a1),
            ("w_a2", &self.w_a2),
            ("b_a2", &self.b_a2),
            ("w_c1", &self.w_c1),
            ("b_c1", &self.b_c1),
            ("w_c2", &self.w_c2),
            ("b_c2", &self.b_c2),
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        vec![
            ("w_ve1", &mut self.w_ve1),
            ("b_ve1", &mut self.b_ve1),
            ("w_ve2", &mut self.w_ve2),
            ("b_ve2", &mut self.b_ve2),
            ("w_dv", &mut self.w_dv),
            ("b_dv", &mut self.b_dv),
            ("w_a1", &mut self.w_a1),
            ("b_a1", &mut self.b_a1),
            ("w_a2", &mut self.w_a2),
            ("b_a2", &mut self.b_a2),
            ("w_c1", &mut self.w_c1),
            ("b_c1", &mut self.b_c1),
            ("w_c2", &mut self.w_c2),
            ("b_c2", &mut self.b_c2),
        ]
    }
}

fn relu(v: &mut [f64]) {
    for x in v.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

fn tanh(v: &mut [f64]) {
    for x in v.iter_mut() {
        *x = x.tanh();
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - m).exp()).collect();
    let s: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / s).collect()
}

/// Per-sample activations kept for the backward pass. ReLU masks are
/// recovered from the stored post-activations.
pub struct ForwardCache {
    rows: Vec<Vec<f64>>,
    h1: Vec<Vec<f64>>,
    e: Vec<f64>,
    u: Vec<f64>,
    dv: Vec<f64>,
    a1: Vec<f64>,
    pub pi: Vec<f64>,
    c1: Vec<f64>,
    value_pre: f64,
    pub value: f64,
}

impl NetworkParams {
    /// Row-wise embedding of the history block into 2L scalars.
    fn embed_rows(&self, state: &DasState) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) {
        let n_rows = 2 * self.n_actions;
        let mut rows = Vec::with_capacity(n_rows);
        let mut h1s = Vec::with_capacity(n_rows);
        let mut e = Vec::with_capacity(n_rows);
        for r in 0..n_rows {
            let row = state.ah_row(r).to_vec();
            let mut h1 = vec![0.0; EMBED_WIDTH];
            self.w_ve1.matvec(&row, &mut h1);
            for (h, b) in h1.iter_mut().zip(&self.b_ve1.data) {
                *h += b;
            }
            relu(&mut h1);
            let mut out = vec![0.0; 1];
            self.w_ve2.matvec(&h1, &mut out);
            let mut er = out[0] + self.b_ve2.data[0];
            if er < 0.0 {
                er = 0.0;
            }
            rows.push(row);
            h1s.push(h1);
            e.push(er);
        }
        (rows, h1s, e)
    }

    /// Fused decision vector; all entries in (-1, 1).
    pub fn forward_embed(&self, state: &DasState) -> Vec<f64> {
        self.forward(state).1.dv
    }

    pub fn forward(&self, state: &DasState) -> ((Vec<f64>, f64), ForwardCache) {
        assert!(
            state.la.iter().all(|v| v.is_finite()) && state.ah.iter().all(|v| v.is_finite()),
            "network inputs must be finite"
        );
        let (rows, h1, e) = self.embed_rows(state);
        let mut u = Vec::with_capacity(LA_LEN + e.len());
        u.extend_from_slice(&state.la);
        u.extend_from_slice(&e);

        let mut dv = vec![0.0; FUSED_WIDTH];
        self.w_dv.matvec(&u, &mut dv);
        for (x, b) in dv.iter_mut().zip(&self.b_dv.data) {
            *x += b;
        }
        tanh(&mut dv);

        let mut a1 = vec![0.0; ACTOR_WIDTH];
        self.w_a1.matvec(&dv, &mut a1);
        for (x, b) in a1.iter_mut().zip(&self.b_a1.data) {
            *x += b;
        }
        tanh(&mut a1);
        let mut logits = vec![0.0; self.n_actions];
        self.w_a2.matvec(&a1, &mut logits);
        for (x, b) in logits.iter_mut().zip(&self.b_a2.data) {
            *x += b;
        }
        let pi = softmax(&logits);

        let mut c1 = vec![0.0; CRITIC_WIDTH];
        self.w_c1.matvec(&dv, &mut c1);
        for (x, b) in c1.iter_mut().zip(&self.b_c1.data) {
            *x += b;
        }
        relu(&mut c1);
        let mut vout = vec![0.0; 1];
        self.w_c2.matvec(&c1, &mut vout);
        let value_pre = vout[0] + self.b_c2.data[0];
        let value = value_pre.max(0.0);

        let cache = ForwardCache {
            rows,
            h1,
            e,
            u,
            dv,
            a1,
            pi: pi.clone(),
            c1,
            value_pre,
            value,
        };
        ((pi, value), cache)
    }

    /// Actor probabilities for a state.
    pub fn policy(&self, state: &DasState) -> Vec<f64> {
        self.forward(state).0 .0
    }

    /// Critic value for a state.
    pub fn value(&self, state: &DasState) -> f64 {
        self.forward(state).0 .1
    }

    /// Accumulate gradients for one sample given the loss sensitivities
    /// d_loss/d_log_pi(action) and d_loss/d_value.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        action: usize,
        d_logp: f64,
        d_value: f64,
        grads: &mut NetworkParams,
    ) {
        // actor head: d log pi_a / d logit_j = 1[j == a] - pi_j
        let n = self.n_actions;
        let mut d_logits = vec![0.0; n];
        for j in 0..n {
            let ind = if j == action { 1.0 } else { 0.0 };
            d_logits[j] = d_logp * (ind - cache.pi[j]);
        }
        grads.w_a2.outer_acc(&d_logits, &cache.a1);
        grads.b_a2.add_acc(&d_logits);
        let mut d_a1 = vec![0.0; ACTOR_WIDTH];
        self.w_a2.matvec_t_acc(&d_logits, &mut d_a1);
        for (g, &a) in d_a1.iter_mut().zip(&cache.a1) {
            *g *= 1.0 - a * a;
        }
        grads.w_a1.outer_acc(&d_a1, &cache.dv);
        grads.b_a1.add_acc(&d_a1);
        let mut d_dv = vec![0.0; FUSED_WIDTH];
        self.w_a1.matvec_t_acc(&d_a1, &mut d_dv);

        // critic head
        let d_vpre = if cache.value_pre > 0.0 { d_value } else { 0.0 };
        if d_vpre != 0.0 {
            let d_c2 = [d_vpre];
            grads.w_c2.outer_acc(&d_c2, &cache.c1);
            grads.b_c2.add_acc(&d_c2);
            let mut d_c1 = vec![0.0; CRITIC_WIDTH];
            self.w_c2.matvec_t_acc(&d_c2, &mut d_c1);
            for (g, &c) in d_c1.iter_mut().zip(&cache.c1) {
                if c <= 0.0 {
                    *g = 0.0;
                }
            }
            grads.w_c1.outer_acc(&d_c1, &cache.dv);
            grads.b_c1.add_acc(&d_c1);
            self.w_c1.matvec_t_acc(&d_c1, &mut d_dv);
        }

        // fused layer
        for (g, &t) in d_dv.iter_mut().zip(&cache.dv) {
            *g *= 1.0 - t * t;
        }
        grads.w_dv.outer_acc(&d_dv, &cache.u);
        grads.b_dv.add_acc(&d_dv);
        let mut d_u = vec![0.0; cache.u.len()];
        self.w_dv.matvec_t_acc(&d_dv, &mut d_u);

        // shared row embedding; gradients sum over the 2L rows
        for (r, row) in cache.rows.iter().enumerate() {
            let d_e = d_u[LA_LEN + r];
            if d_e == 0.0 || cache.e[r] <= 0.0 {
                continue;
            }
            let d_e2 = [d_e];
            grads.w_ve2.outer_acc(&d_e2, &cache.h1[r]);
            grads.b_ve2.add_acc(&d_e2);
            let mut d_h1 = vec![0.0; EMBED_WIDTH];
            self.w_ve2.matvec_t_acc(&d_e2, &mut d_h1);
            for (g, &h) in d_h1.iter_mut().zip(&cache.h1[r]) {
                if h <= 0.0 {
                    *g = 0.0;
                }
            }
            grads.w_ve1.outer_acc(&d_h1, row);
            grads.b_ve1.add_acc(&d_h1);
        }
    }
}

/// Categorical draw from a probability vector; returns the action and its
/// log-probability.
pub fn sample_action(pi: &[f64], rng: &mut Rng64) -> (usize, f64) {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut action = pi.len() - 1;
    for (i, &p) in pi.iter().enumerate() {
        acc += p;
        if u < acc {
            action = i;
            break;
        }
    }
    (action, pi[action].max(1e-300).ln())
}
