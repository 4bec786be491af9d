//! Experiment configuration, single runs, delay sweeps and closed-form calculators.

mod calc;
mod config;
mod record;
mod run;
mod sweep;

pub use calc::{
    budget_refined, budget_targeted, listening_time_s, opportune_wait, selection_probs,
    ListeningVariant, SelectionProbs,
};
pub use config::{DelaySpec, ExperimentConfig, SweepSpec};
pub use record::{write_results, RunRecord, RESULTS_HEADER};
pub use run::{run_detailed, run_once, run_trials, trial_seed};
pub use sweep::{sweep_tdelay, SweepPoint, SweepResult};
