//! Dynamic algorithm selection for black-box optimization.
//!
//! The crate bundles:
//! - a generator and evaluator for shifted/rotated benchmark problem
//!   classes ([`bench`]),
//! - three warm-startable differential evolution solvers behind a shared
//!   context memory ([`de`]),
//! - landscape and per-solver history features ([`features`]),
//! - the selection environment that switches solvers every few thousand
//!   evaluations ([`env`]),
//! - a small actor-critic network trained with clipped policy gradients
//!   ([`agent`]),
//! - non-learning baselines ([`baselines`]) and an experiment harness with
//!   a CLI ([`harness`]).

pub mod agent;
pub mod baselines;
pub mod bench;
pub mod de;
pub mod env;
pub mod features;
pub mod harness;
pub mod rng;
