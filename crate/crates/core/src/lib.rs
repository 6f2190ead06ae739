//! Finite sequential spatial point processes.
//!
//! Ordered sequences of marked points in a rectangular window, specified by a
//! density with respect to a Poisson-length reference measure. Densities can
//! be factorised into clique interactions over a directed neighbour relation.
//! Both samplers (thinned birth-death and Metropolis-Hastings) are checked
//! against brute-force oracles on discretised state spaces.

pub mod config;
pub mod error;
pub mod factorisation;
pub mod model;
pub mod models;
pub mod oracle;
pub mod point;
pub mod relation;
pub mod run;
pub mod samplers;
pub mod window;

pub use error::{Error, Result};
pub use model::{
    append_intensities, log_density_from_intensities, log_density_from_intensities_checked, log_ratio,
    seq_conditional_intensity, total_insertion_intensity, Model,
};
pub use point::{Mark, MarkedPoint, PointKey, PointSequence};
pub use relation::{directed_neighbours, NeighbourRelation, SharedRelation};
pub use window::{MarkDistribution, Window};
