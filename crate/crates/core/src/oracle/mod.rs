//! Brute-force ground truth on small discretised state spaces.

pub mod checks;
pub mod discrete;
pub mod exact;
pub mod space;
pub mod transition;

pub use checks::{stability_check, StabilityReport};
pub use discrete::DiscreteModel;
pub use exact::{
    count_distribution, exact_count_distribution, exact_distribution, exact_from_log_densities, log_densities,
    log_sum_exp, tv_distance, CountDistribution, EmpiricalDistribution, ExactDistribution,
};
pub use space::{build_state_space, state_count, DiscreteStateSpace, DEFAULT_STATE_BUDGET};
pub use transition::{
    bd_balance_check, detailed_balance_check, mh_balance_violation, mh_transition_matrix, mh_transition_matrix_with,
    Kernel, TransitionMatrix,
};
