//! Concrete sequential models.

pub mod pairwise;
pub mod scaled;
pub mod softcore;
pub mod ssi;

use std::fmt;
use std::sync::Arc;

use crate::error::Result;
use crate::model::Model;
use crate::point::PointSequence;
use crate::relation::{Identity, SharedRelation};
use crate::window::{MarkDistribution, Window};

pub use pairwise::{quadratic_interaction, Pairwise, RangeSpec};
pub use scaled::{MarkedInteraction, ScaleFn, ScaledModel, ScalingTransform, TemplateProcess};
pub use softcore::{SoftCore, SoftCoreVariant};
pub use ssi::{AdmissibleIntegral, LocationDensity, Ssi, SsiIntensity, WeightedBox};

/// Density `f(y) = beta^n`: a Poisson process of intensity `beta`. With
/// `beta = 1` this is the reference measure itself.
#[derive(Debug, Clone)]
pub struct Poisson {
    pub beta: f64,
    window: Window,
    marks: MarkDistribution,
}

impl Poisson {
    pub fn new(beta: f64, window: Window, marks: MarkDistribution) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(crate::Error::argument(format!("beta must be positive, got {beta}")));
        }
        window.validate()?;
        marks.validate()?;
        Ok(Poisson { beta, window, marks })
    }
}

impl Model for Poisson {
    fn name(&self) -> &str {
        "poisson"
    }

    fn window(&self) -> &Window {
        &self.window
    }

    fn marks(&self) -> &MarkDistribution {
        &self.marks
    }

    fn relation(&self) -> SharedRelation {
        Arc::new(Identity)
    }

    fn log_density(&self, seq: &PointSequence) -> Result<f64> {
        Ok(seq.len() as f64 * self.beta.ln())
    }

    fn local_stability_bound(&self) -> Option<f64> {
        Some(self.beta)
    }

    fn log_insertion_ratio(&self, seq: &PointSequence, position: usize, _u: &crate::point::MarkedPoint) -> Result<f64> {
        if position == 0 || position > seq.len() + 1 {
            return Err(crate::Error::argument(format!(
                "insert position {position} out of range"
            )));
        }
        Ok(self.beta.ln())
    }
}

type LogDensityFn = dyn Fn(&PointSequence) -> Result<f64> + Send + Sync;

/// A model given by an arbitrary log-density closure.
#[derive(Clone)]
pub struct CustomModel {
    name: String,
    window: Window,
    marks: MarkDistribution,
    relation: SharedRelation,
    bound: Option<f64>,
    log_density: Arc<LogDensityFn>,
}

impl CustomModel {
    pub fn new(
        name: impl Into<String>,
        window: Window,
        marks: MarkDistribution,
        relation: SharedRelation,
        bound: Option<f64>,
        log_density: impl Fn(&PointSequence) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        CustomModel {
            name: name.into(),
            window,
            marks,
            relation,
            bound,
            log_density: Arc::new(log_density),
        }
    }
}

impl fmt::Debug for CustomModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomModel").field("name", &self.name).finish()
    }
}

impl Model for CustomModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn window(&self) -> &Window {
        &self.window
    }

    fn marks(&self) -> &MarkDistribution {
        &self.marks
    }

    fn relation(&self) -> SharedRelation {
        self.relation.clone()
    }

    fn log_density(&self, seq: &PointSequence) -> Result<f64> {
        (self.log_density)(seq)
    }

    fn local_stability_bound(&self) -> Option<f64> {
        self.bound
    }
}
