//! A model restricted to the atoms and length cap of a state space.

use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::error::Result;
use crate::model::Model;
use crate::oracle::space::DiscreteStateSpace;
use crate::point::{Mark, MarkedPoint, PointSequence};
use crate::relation::SharedRelation;
use crate::window::{MarkDistribution, Window};

/// Evaluates the inner density unchanged for sequences of length at most
/// `n_max` and sets it to zero beyond. Proposals are drawn from the atoms
/// with their reference probabilities, so samplers stay on the state space.
#[derive(Clone)]
pub struct DiscreteModel {
    inner: Arc<dyn Model>,
    atoms: Vec<MarkedPoint>,
    cumulative: Vec<f64>,
    marks: MarkDistribution,
    n_max: usize,
}

impl std::fmt::Debug for DiscreteModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscreteModel")
            .field("inner", &self.inner.name())
            .field("atoms", &self.atoms.len())
            .field("n_max", &self.n_max)
            .finish()
    }
}

impl DiscreteModel {
    pub fn new(inner: Arc<dyn Model>, space: &DiscreteStateSpace) -> Self {
        let mut acc = 0.0;
        let cumulative = (0..space.atoms().len())
            .map(|i| {
                acc += space.atom_probability(i);
                acc
            })
            .collect();
        let levels = space.mark_levels();
        let marks = match levels[0].0 {
            Mark::None => MarkDistribution::None,
            Mark::Radius(_) => MarkDistribution::Discrete {
                levels: levels.iter().filter_map(|(m, w)| m.radius().map(|r| (r, *w))).collect(),
            },
            Mark::Label(_) => inner.marks().clone(),
        };
        DiscreteModel {
            inner,
            atoms: space.atoms().to_vec(),
            cumulative,
            marks,
            n_max: space.n_max(),
        }
    }

    pub fn inner(&self) -> &Arc<dyn Model> {
        &self.inner
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }
}

impl Model for DiscreteModel {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn window(&self) -> &Window {
        self.inner.window()
    }

    fn marks(&self) -> &MarkDistribution {
        &self.marks
    }

    fn relation(&self) -> SharedRelation {
        self.inner.relation()
    }

    fn log_density(&self, seq: &PointSequence) -> Result<f64> {
        if seq.len() > self.n_max {
            return Ok(f64::NEG_INFINITY);
        }
        self.inner.log_density(seq)
    }

    fn local_stability_bound(&self) -> Option<f64> {
        self.inner.local_stability_bound()
    }

    fn log_insertion_ratio(&self, seq: &PointSequence, position: usize, u: &MarkedPoint) -> Result<f64> {
        if seq.len() + 1 > self.n_max {
            // Validate the position the same way as the inner model would.
            seq.insert_at(position, *u)?;
            return Ok(f64::NEG_INFINITY);
        }
        self.inner.log_insertion_ratio(seq, position, u)
    }

    fn sample_point(&self, rng: &mut dyn RngCore) -> MarkedPoint {
        let total = self.cumulative[self.cumulative.len() - 1];
        let v = rng.random::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= v).min(self.atoms.len() - 1);
        self.atoms[i]
    }
}
