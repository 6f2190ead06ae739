//! Birth-death and Metropolis-Hastings samplers with their diagnostics.

pub mod birth_death;
pub mod diagnostics;
pub mod metropolis;
pub mod rng;
pub mod trace;

pub use birth_death::{bd_birth_rate, bd_epoch_states, bd_simulate, bd_simulate_observed, BdConfig};
pub use diagnostics::{batch_means_se, drift_diagnostic, preston_diagnostic, DriftReport, PrestonReport};
pub use metropolis::{mh_run, mh_run_observed, mh_step, MhConfig, MhEvent};
pub use rng::{chain_rng, ChainRng, RNG_ALGORITHM};
pub use trace::{read_state_csv, write_state_csv, EventKind, RunTrace, TraceEvent};
