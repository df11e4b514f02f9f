//! The selection environment.
//!
//! One episode optimizes one instance: the population evolves in intervals
//! of roughly `delta` evaluations, and between intervals a solver is chosen.
//! The per-step descent signal is the incumbent improvement normalized by
//! the initial best cost; final rewards optionally rescale it by budget
//! efficiency. Feature probes consume real evaluations and are charged
//! before the interval they precede.

use crate::bench::InstanceSpec;
use crate::de::{
    init_context, restore, save_context, step_interval, AlgorithmId, ContextMemory, DeRunState,
    PoolConfig, PopulationState, SizeSchedule, N_MAX,
};
use crate::features::{assemble_state, extract_la, record_shift, AhHistory, DasState, LaVector};
use crate::rng::{rng_from_seed, Rng64};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("episode is already done")]
    EpisodeDone,
    #[error("rewards need at least one step and a positive final FE count")]
    EmptyEpisode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardScheme {
    /// Descent normalized by the initial cost (no speed term).
    R1,
    /// Descent normalized by the previous best cost.
    R2,
    /// 1 on any descent, else 0.
    R3,
    /// 1 on relative descent above 2.5%, else 0.
    R4,
    /// R1 rescaled by MaxFEs over the consumed evaluations.
    Adjusted,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EnvConfig {
    pub max_fes: u64,
    pub delta: u64,
    pub term_error: f64,
    pub reward_scheme: RewardScheme,
    pub use_la: bool,
    pub use_ah: bool,
    pub use_context: bool,
}

impl EnvConfig {
    pub fn new(max_fes: u64, delta: u64) -> EnvConfig {
        assert!(
            delta >= max_fes / 200 && delta <= max_fes / 10,
            "interval must keep episode length within [10, 200] steps"
        );
        EnvConfig {
            max_fes,
            delta,
            term_error: 1e-8,
            reward_scheme: RewardScheme::Adjusted,
            use_la: true,
            use_ah: true,
            use_context: true,
        }
    }

    pub fn dim10() -> EnvConfig {
        EnvConfig::new(200_000, 2_500)
    }

    pub fn dim20() -> EnvConfig {
        EnvConfig::new(1_000_000, 8_000)
    }

    /// Feature extraction runs only when some feature block is in use.
    fn probes_enabled(&self) -> bool {
        self.use_la
    }
}

#[derive(Clone, Copy, Debug)]
pub struct StepInfo {
    pub fe_used: u64,
    pub best_cost: f64,
    /// Probe evaluations crossed the budget during state extraction.
    pub truncated_by_probes: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub action: AlgorithmId,
    pub adc: f64,
    pub fe_used: u64,
    pub best_cost: f64,
}

/// A running episode on one instance.
pub struct Episode {
    pub inst: InstanceSpec,
    pub cfg: EnvConfig,
    pub rng: Rng64,
    pub pop: PopulationState,
    pub gamma: ContextMemory,
    pub history: AhHistory,
    pub initial_best: f64,
    pub done: bool,
    pub step_count: usize,
    pub trace: Vec<TraceRow>,
    probe_fes: u64,
    interval_fes: u64,
}

/// Initialize an episode: uniform population, fresh contexts, first state.
pub fn reset(inst: &InstanceSpec, cfg: &EnvConfig, seed: u64) -> (DasState, Episode) {
    let mut rng = rng_from_seed(seed);
    let pop = PopulationState::init(inst, N_MAX, &mut rng);
    let gamma = init_context(N_MAX, inst.dim);
    let initial_best = pop.best_cost;
    let mut ep = Episode {
        inst: inst.clone(),
        cfg: *cfg,
        rng,
        pop,
        gamma,
        history: AhHistory::new(inst.dim),
        initial_best,
        done: false,
        step_count: 0,
        trace: Vec::new(),
        probe_fes: 0,
        interval_fes: 0,
    };
    let state = ep.extract_state();
    ep.done = ep.pop.fe_used >= cfg.max_fes || ep.pop.best_cost < cfg.term_error;
    (state, ep)
}

impl Episode {
    fn pool_cfg(&self) -> PoolConfig {
        PoolConfig {
            max_fes: self.cfg.max_fes,
            term_error: self.cfg.term_error,
            size_schedule: SizeSchedule::Adaptive,
        }
    }

    fn extract_state(&mut self) -> DasState {
        let la = if self.cfg.probes_enabled() {
            let (la, probe_fe) = extract_la(
                &self.pop,
                &self.inst,
                &self.gamma,
                self.initial_best,
                self.cfg.max_fes,
                &mut self.rng,
            );
            self.pop.fe_used += probe_fe;
            self.probe_fes += probe_fe;
            la
        } else {
            LaVector {
                values: [0.0; crate::features::LA_LEN],
                degenerate: false,
            }
        };
        let mut state = assemble_state(&la, &self.history);
        if !self.cfg.use_ah {
            state.ah.iter_mut().for_each(|v| *v = 0.0);
        }
        state
    }

    /// Run one interval under `action`. Returns the next state, the
    /// normalized descent, the done flag and bookkeeping info.
    pub fn step(
        &mut self,
        action: AlgorithmId,
    ) -> Result<(DasState, f64, bool, StepInfo), EnvError> {
        if self.done {
            return Err(EnvError::EpisodeDone);
        }
        if !self.cfg.use_context {
            // contexts are wiped and rebuilt every interval in this ablation
            self.gamma = init_context(self.pop.n(), self.inst.dim);
        }
        let mut state: DeRunState = restore(&self.gamma, action);

        let best_before = self.pop.best_cost;
        let x_best_before = self.pop.best_x.clone();
        let x_worst_before = self.pop.x[self.pop.worst_index()].clone();

        let remaining = self.cfg.max_fes.saturating_sub(self.pop.fe_used);
        let delta = self.cfg.delta.min(remaining).max(1);
        let pool_cfg = self.pool_cfg();
        let outcome = step_interval(
            &mut state,
            &mut self.pop,
            &self.inst,
            &mut self.rng,
            delta,
            &pool_cfg,
            None,
        );
        self.interval_fes += outcome.fe_consumed;
        save_context(&mut self.gamma, &state);

        let x_worst_after = self.pop.x[self.pop.worst_index()].clone();
        record_shift(
            &mut self.history,
            action,
            &x_best_before,
            &self.pop.best_x,
            &x_worst_before,
            &x_worst_after,
        );

        let adc = compute_adc(best_before, self.pop.best_cost, self.initial_best);
        self.done =
            self.pop.fe_used >= self.cfg.max_fes || self.pop.best_cost < self.cfg.term_error;

        let next_state = if self.done {
            DasState::zeros(self.inst.dim)
        } else {
            self.extract_state()
        };
        // probes may exhaust the budget; terminate at this check and flag it
        let truncated_by_probes = !self.done && self.pop.fe_used >= self.cfg.max_fes;
        if truncated_by_probes {
            self.done = true;
        }

        self.step_count += 1;
        self.trace.push(TraceRow {
            step: self.step_count,
            action,
            adc,
            fe_used: self.pop.fe_used,
            best_cost: self.pop.best_cost,
        });

        Ok((
            next_state,
            adc,
            self.done,
            StepInfo {
                fe_used: self.pop.fe_used,
                best_cost: self.pop.best_cost,
                truncated_by_probes,
            },
        ))
    }

    /// Consumed evaluations, capped at the budget for reporting.
    pub fn fes_end(&self) -> u64 {
        self.pop.fe_used.min(self.cfg.max_fes)
    }

    pub fn descent_pct(&self) -> f64 {
        if self.initial_best <= 0.0 {
            return 0.0;
        }
        (self.initial_best - self.pop.best_cost) / self.initial_best * 100.0
    }

    /// (initial evaluations, interval evaluations, probe evaluations).
    pub fn fe_breakdown(&self) -> (u64, u64, u64) {
        let init = self.pop.fe_used - self.interval_fes - self.probe_fes;
        (init, self.interval_fes, self.probe_fes)
    }

    pub fn write_trace_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,action,adc,fe_used,best_cost")?;
        for row in &self.trace {
            writeln!(
                w,
                "{},{},{:.12e},{},{:.12e}",
                row.step,
                row.action.name(),
                row.adc,
                row.fe_used,
                row.best_cost
            )?;
        }
        Ok(())
    }
}

/// Per-step normalized descent of the incumbent.
pub fn compute_adc(prev_best: f64, new_best: f64, initial_best: f64) -> f64 {
    if initial_best <= 0.0 {
        return 0.0;
    }
    (prev_best - new_best) / initial_best
}

/// Turn the per-step descent series into final rewards under a scheme.
/// The relative descent needed by R2/R4 is recovered from the series:
/// best_t / best_0 = 1 - sum of earlier descents.
pub fn finalize_rewards(
    adcs: &[f64],
    fes_end: u64,
    max_fes: u64,
    scheme: RewardScheme,
) -> Result<Vec<f64>, EnvError> {
    if fes_end == 0 {
        return Err(EnvError::EmptyEpisode);
    }
    let mut remaining = 1.0; // best_t as a fraction of best_0
    let mut rewards = Vec::with_capacity(adcs.len());
    for &adc in adcs {
        let relative = if remaining > 0.0 { adc / remaining } else { 0.0 };
        let r = match scheme {
            RewardScheme::R1 => adc,
            RewardScheme::R2 => relative,
            RewardScheme::R3 => f64::from(adc > 0.0),
            RewardScheme::R4 => f64::from(relative > 0.025),
            RewardScheme::Adjusted => adc * (max_fes as f64 / fes_end as f64),
        };
        rewards.push(r);
        remaining -= adc;
    }
    Ok(rewards)
}

#[cfg(test)]
mod tests;
