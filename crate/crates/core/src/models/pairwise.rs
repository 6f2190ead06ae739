//! Sequential pairwise interaction models
//! `f(y) = f(()) prod_i [phi(y_i) prod_{j<i} phi(y_i, y_j)]`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::point::{Mark, MarkedPoint, PointSequence};
use crate::relation::{MarkRange, SharedRelation};
use crate::window::{MarkDistribution, Window};

/// `1 - (1 - d^2 / R^2)^2` for `d <= R`, and 1 beyond.
pub fn quadratic_interaction(d: f64, range: f64) -> f64 {
    if d >= range {
        return 1.0;
    }
    let t = 1.0 - d * d / (range * range);
    1.0 - t * t
}

/// Interaction range `R_{r,s}` as a function of the two marks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RangeSpec {
    Constant(f64),
    /// `scale * (r + s)` for radius marks.
    MarkSum(f64),
}

impl RangeSpec {
    pub fn eval(&self, r: &Mark, s: &Mark) -> f64 {
        match *self {
            RangeSpec::Constant(range) => range,
            RangeSpec::MarkSum(scale) => scale * (r.radius().unwrap_or(0.0) + s.radius().unwrap_or(0.0)),
        }
    }

    fn validate(&self, marks: &MarkDistribution) -> Result<()> {
        match *self {
            RangeSpec::Constant(r) if !(r > 0.0 && r.is_finite()) => {
                Err(Error::argument(format!("interaction range must be positive, got {r}")))
            }
            RangeSpec::MarkSum(s) if !(s > 0.0 && s.is_finite()) => {
                Err(Error::argument(format!("range scale must be positive, got {s}")))
            }
            RangeSpec::MarkSum(_) if !marks.is_marked() || matches!(marks, MarkDistribution::Labels { .. }) => {
                Err(Error::argument("mark-sum range needs radius marks"))
            }
            _ => Ok(()),
        }
    }
}

type FirstOrder = dyn Fn(&MarkedPoint) -> f64 + Send + Sync;
type PairFn = dyn Fn(&MarkedPoint, &MarkedPoint) -> f64 + Send + Sync;
type RangeFn = dyn Fn(&Mark, &Mark) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct Pairwise {
    name: String,
    window: Window,
    marks: MarkDistribution,
    first_order: Arc<FirstOrder>,
    first_order_bound: f64,
    pair: Arc<PairFn>,
    range: Arc<RangeFn>,
    symmetric: bool,
}

impl fmt::Debug for Pairwise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Pairwise")
            .field("name", &self.name)
            .field("first_order_bound", &self.first_order_bound)
            .finish()
    }
}

impl Pairwise {
    /// General pairwise model. `pair(later, earlier)` must take values in
    /// `[0, 1]` and equal 1 beyond `range`; `first_order` must stay in
    /// `(0, first_order_bound]`. Both are checked at every evaluation.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        window: Window,
        marks: MarkDistribution,
        first_order: Arc<FirstOrder>,
        first_order_bound: f64,
        pair: Arc<PairFn>,
        range: Arc<RangeFn>,
        symmetric: bool,
    ) -> Result<Self> {
        window.validate()?;
        marks.validate()?;
        if !(first_order_bound > 0.0 && first_order_bound.is_finite()) {
            return Err(Error::argument("first-order bound must be positive and finite"));
        }
        Ok(Pairwise {
            name: name.into(),
            window,
            marks,
            first_order,
            first_order_bound,
            pair,
            range,
            symmetric,
        })
    }

    /// Constant first-order term `beta` and quadratic pair interaction.
    pub fn quadratic(beta: f64, range: RangeSpec, marks: MarkDistribution, window: Window) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::argument(format!("beta must be positive, got {beta}")));
        }
        range.validate(&marks)?;
        Self::new(
            "pairwise_quadratic",
            window,
            marks,
            Arc::new(move |_| beta),
            beta,
            Arc::new(move |u: &MarkedPoint, v: &MarkedPoint| {
                quadratic_interaction(u.distance(v), range.eval(&u.mark, &v.mark))
            }),
            Arc::new(move |r: &Mark, s: &Mark| range.eval(r, s)),
            true,
        )
    }

    fn log_first_order(&self, y: &MarkedPoint) -> Result<f64> {
        let v = (self.first_order)(y);
        if !(v > 0.0 && v <= self.first_order_bound) {
            return Err(Error::contract(format!(
                "first-order term {v} at {y} outside (0, {}]",
                self.first_order_bound
            )));
        }
        Ok(v.ln())
    }

    fn log_pair(&self, later: &MarkedPoint, earlier: &MarkedPoint) -> Result<f64> {
        let v = (self.pair)(later, earlier);
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::contract(format!(
                "pair interaction {v} between {later} and {earlier} outside [0, 1]"
            )));
        }
        Ok(v.ln())
    }

    pub fn pairwise_log_density(&self, seq: &PointSequence) -> Result<f64> {
        let pts = seq.points();
        let mut total = 0.0;
        for (i, y) in pts.iter().enumerate() {
            total += self.log_first_order(y)?;
            for e in &pts[..i] {
                total += self.log_pair(y, e)?;
            }
        }
        Ok(total)
    }
}

impl Model for Pairwise {
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
        Arc::new(MarkRange::new(self.range.clone(), self.symmetric))
    }

    fn log_density(&self, seq: &PointSequence) -> Result<f64> {
        self.pairwise_log_density(seq)
    }

    /// Pair terms never exceed 1, so each insertion gains at most the
    /// first-order bound.
    fn local_stability_bound(&self) -> Option<f64> {
        Some(self.first_order_bound)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::seq_conditional_intensity;

    #[test]
    fn quadratic_values() {
        assert_eq!(quadratic_interaction(0.0, 1.0), 0.0);
        assert_eq!(quadratic_interaction(1.0, 1.0), 1.0);
        assert_eq!(quadratic_interaction(2.0, 1.0), 1.0);
        let d = (0.5f64).sqrt();
        assert!((quadratic_interaction(d, 1.0) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn quadratic_is_continuous_at_range() {
        let below = quadratic_interaction(1.0 - 1e-9, 1.0);
        assert!((below - 1.0).abs() < 1e-8);
    }

    fn model() -> Pairwise {
        Pairwise::quadratic(1.5, RangeSpec::Constant(0.2), MarkDistribution::None, Window::unit()).unwrap()
    }

    #[test]
    fn densities() {
        let m = model();
        assert_eq!(m.log_density(&PointSequence::empty()).unwrap(), 0.0);
        let apart: PointSequence = vec![MarkedPoint::unmarked(0.1, 0.1), MarkedPoint::unmarked(0.9, 0.9)].into();
        assert!((m.log_density(&apart).unwrap() - 2.0 * 1.5f64.ln()).abs() < 1e-15);
        let coincident: PointSequence = vec![MarkedPoint::unmarked(0.4, 0.4); 2].into();
        assert_eq!(m.log_density(&coincident).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn out_of_range_pair_is_contract_error() {
        let m = Pairwise::new(
            "bad",
            Window::unit(),
            MarkDistribution::None,
            Arc::new(|_| 1.0),
            1.0,
            Arc::new(|_, _| 1.5),
            Arc::new(|_, _| 0.1),
            true,
        )
        .unwrap();
        let seq: PointSequence = vec![MarkedPoint::unmarked(0.1, 0.1), MarkedPoint::unmarked(0.2, 0.2)].into();
        assert!(matches!(m.log_density(&seq), Err(Error::ModelContract(_))));
    }

    #[test]
    fn append_ratio_ignores_points_out_of_range() {
        let m = model();
        let near = MarkedPoint::unmarked(0.5, 0.55);
        let far = MarkedPoint::unmarked(0.95, 0.05);
        let u = MarkedPoint::unmarked(0.5, 0.5);
        let a: PointSequence = vec![near].into();
        let b: PointSequence = vec![far, near].into();
        let la = seq_conditional_intensity(&m, &a, 2, &u).unwrap() * 2.0;
        let lb = seq_conditional_intensity(&m, &b, 3, &u).unwrap() * 3.0;
        assert!((la - lb).abs() < 1e-14);
    }

    #[test]
    fn mark_sum_range() {
        let marks = MarkDistribution::Uniform { lo: 0.05, hi: 0.1 };
        let m = Pairwise::quadratic(1.0, RangeSpec::MarkSum(1.0), marks, Window::unit()).unwrap();
        let rel = m.relation();
        let u = MarkedPoint::with_radius(0.0, 0.0, 0.05);
        assert!(rel.related(&u, &MarkedPoint::with_radius(0.1, 0.0, 0.06)));
        assert!(!rel.related(&u, &MarkedPoint::with_radius(0.1, 0.0, 0.04)));
        assert!(Pairwise::quadratic(1.0, RangeSpec::MarkSum(1.0), MarkDistribution::None, Window::unit()).is_err());
    }
}
