//! Location-dependent scaling of a symmetric template process.
//!
//! A new point `(x, m)` sees the existing configuration through the inverse
//! of the scaling `h_c(x, m) = (c1 x, c2 m)` evaluated at itself:
//!
//! ```text
//! lambda_c((x, m) | y) = lambda((x / c1, m / c2) | h_c^{-1}(y)) / (n + 1),  c = c(x, m)
//! ```
//!
//! and the sequential density follows from these intensities. The scaled
//! process is Markov for `u ~_c v  <=>  h_{c(u)}^{-1}(u) ~ h_{c(u)}^{-1}(v)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{log_density_from_intensities, Model};
use crate::point::{Mark, MarkedPoint, PointSequence};
use crate::relation::{MarkRange, NeighbourRelation, SharedRelation};
use crate::window::{MarkDistribution, Window};

/// A classic, permutation-invariant template process given by its
/// conditional intensity `lambda(u | y) = f(y + u) / f(y)`.
pub trait TemplateProcess: Send + Sync + fmt::Debug {
    fn window(&self) -> &Window;

    fn conditional_intensity(&self, u: &MarkedPoint, others: &[MarkedPoint]) -> Result<f64>;

    fn relation(&self) -> SharedRelation;

    /// Local stability constant of the template.
    fn intensity_bound(&self) -> f64;

    /// Whether adding points never increases the conditional intensity.
    fn is_repulsive(&self) -> bool;
}

/// Marked interaction template `lambda(u | y) = beta gamma^{#{j : |x - x_j| <= m + m_j}}`.
/// `gamma = 0` is the marked hard core.
#[derive(Debug, Clone)]
pub struct MarkedInteraction {
    pub beta: f64,
    pub gamma: f64,
    window: Window,
}

impl MarkedInteraction {
    pub fn new(beta: f64, gamma: f64, window: Window) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::argument(format!("template beta must be positive, got {beta}")));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::argument(format!(
                "template gamma must lie in [0, 1], got {gamma}"
            )));
        }
        window.validate()?;
        Ok(MarkedInteraction { beta, gamma, window })
    }

    pub fn hard_core(window: Window) -> Result<Self> {
        Self::new(1.0, 0.0, window)
    }

    fn overlaps(u: &MarkedPoint, v: &MarkedPoint) -> bool {
        let (a, b) = (u.mark.radius().unwrap_or(0.0), v.mark.radius().unwrap_or(0.0));
        u.distance(v) <= a + b
    }
}

impl TemplateProcess for MarkedInteraction {
    fn window(&self) -> &Window {
        &self.window
    }

    fn conditional_intensity(&self, u: &MarkedPoint, others: &[MarkedPoint]) -> Result<f64> {
        let k = others.iter().filter(|v| Self::overlaps(u, v)).count();
        Ok(match k {
            0 => self.beta,
            _ if self.gamma == 0.0 => 0.0,
            k => self.beta * self.gamma.powi(k as i32),
        })
    }

    fn relation(&self) -> SharedRelation {
        Arc::new(MarkRange::new(
            Arc::new(|r: &Mark, s: &Mark| r.radius().unwrap_or(0.0) + s.radius().unwrap_or(0.0)),
            true,
        ))
    }

    fn intensity_bound(&self) -> f64 {
        self.beta
    }

    fn is_repulsive(&self) -> bool {
        self.gamma <= 1.0
    }
}

/// A scale component `c_i(x, m)`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScaleFn {
    Constant(f64),
    /// `a + b x`.
    LinearX {
        a: f64,
        b: f64,
    },
    /// `a + b y`.
    LinearY {
        a: f64,
        b: f64,
    },
    #[serde(skip)]
    Custom(Arc<dyn Fn(&MarkedPoint) -> f64 + Send + Sync>),
}

impl ScaleFn {
    pub fn eval(&self, p: &MarkedPoint) -> f64 {
        match self {
            ScaleFn::Constant(c) => *c,
            ScaleFn::LinearX { a, b } => a + b * p.x,
            ScaleFn::LinearY { a, b } => a + b * p.y,
            ScaleFn::Custom(f) => f(p),
        }
    }
}

impl fmt::Debug for ScaleFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleFn::Constant(c) => write!(f, "Constant({c})"),
            ScaleFn::LinearX { a, b } => write!(f, "LinearX({a} + {b} x)"),
            ScaleFn::LinearY { a, b } => write!(f, "LinearY({a} + {b} y)"),
            ScaleFn::Custom(_) => write!(f, "Custom"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScalingTransform {
    pub c1: ScaleFn,
    pub c2: ScaleFn,
    pub c_lo: f64,
    pub c_hi: f64,
    pub template: Arc<dyn TemplateProcess>,
}

impl ScalingTransform {
    pub fn new(c1: ScaleFn, c2: ScaleFn, c_lo: f64, c_hi: f64, template: Arc<dyn TemplateProcess>) -> Result<Self> {
        if !(c_lo > 0.0 && c_lo <= c_hi && c_hi.is_finite()) {
            return Err(Error::argument(format!(
                "scale bounds need 0 < c_lo <= c_hi < inf, got [{c_lo}, {c_hi}]"
            )));
        }
        Ok(ScalingTransform {
            c1,
            c2,
            c_lo,
            c_hi,
            template,
        })
    }

    /// `(c1(u), c2(u))`, checked against the declared bounds.
    pub fn scales(&self, u: &MarkedPoint) -> Result<(f64, f64)> {
        let (a, b) = (self.c1.eval(u), self.c2.eval(u));
        for c in [a, b] {
            if !(c >= self.c_lo && c <= self.c_hi) {
                return Err(Error::contract(format!(
                    "scale {c} at {u} outside [{}, {}]",
                    self.c_lo, self.c_hi
                )));
            }
        }
        Ok((a, b))
    }

    /// `h_c^{-1}(p)` for given scales.
    pub fn back(p: &MarkedPoint, (c1, c2): (f64, f64)) -> MarkedPoint {
        let mark = match p.mark {
            Mark::Radius(m) => Mark::Radius(m / c2),
            other => other,
        };
        MarkedPoint::new(p.x / c1, p.y / c1, mark)
    }
}

/// `lambda_c(u | seq)`: the template intensity at the back-transformed
/// arguments, divided by `n + 1`. Zero when `u` maps outside the template window.
pub fn scaled_conditional_intensity(t: &ScalingTransform, seq: &PointSequence, u: &MarkedPoint) -> Result<f64> {
    let c = t.scales(u)?;
    let u_back = ScalingTransform::back(u, c);
    if !t.template.window().contains(u_back.x, u_back.y) {
        return Ok(0.0);
    }
    let others: Vec<MarkedPoint> = seq.iter().map(|p| ScalingTransform::back(p, c)).collect();
    let lambda = t.template.conditional_intensity(&u_back, &others)?;
    Ok(lambda / (seq.len() + 1) as f64)
}

/// The relation `~_c` induced by scaling the template relation at the head point.
#[derive(Debug, Clone)]
pub struct ScaledRelation {
    transform: ScalingTransform,
    inner: SharedRelation,
}

impl NeighbourRelation for ScaledRelation {
    fn related(&self, u: &MarkedPoint, v: &MarkedPoint) -> bool {
        match self.transform.scales(u) {
            Ok(c) => self
                .inner
                .related(&ScalingTransform::back(u, c), &ScalingTransform::back(v, c)),
            // Outside the declared scaling the density is undefined anyway.
            Err(_) => true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScaledModel {
    transform: ScalingTransform,
    window: Window,
    marks: MarkDistribution,
}

impl ScaledModel {
    pub fn new(transform: ScalingTransform, window: Window, marks: MarkDistribution) -> Result<Self> {
        window.validate()?;
        marks.validate()?;
        Ok(ScaledModel {
            transform,
            window,
            marks,
        })
    }

    pub fn transform(&self) -> &ScalingTransform {
        &self.transform
    }
}

impl Model for ScaledModel {
    fn name(&self) -> &str {
        "scaled"
    }

    fn window(&self) -> &Window {
        &self.window
    }

    fn marks(&self) -> &MarkDistribution {
        &self.marks
    }

    fn relation(&self) -> SharedRelation {
        Arc::new(ScaledRelation {
            transform: self.transform.clone(),
            inner: self.transform.template.relation(),
        })
    }

    fn log_density(&self, seq: &PointSequence) -> Result<f64> {
        let intensities = (0..seq.len())
            .map(|k| scaled_conditional_intensity(&self.transform, &seq.prefix(k), &seq.points()[k]))
            .collect::<Result<Vec<_>>>()?;
        log_density_from_intensities(&intensities)
    }

    fn local_stability_bound(&self) -> Option<f64> {
        let t = &self.transform.template;
        t.is_repulsive().then(|| t.intensity_bound())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hard_core_transform(c1: ScaleFn, c2: ScaleFn) -> ScalingTransform {
        let template = Arc::new(MarkedInteraction::hard_core(Window::new(-10.0, -10.0, 10.0, 10.0).unwrap()).unwrap());
        ScalingTransform::new(c1, c2, 0.5, 3.0, template).unwrap()
    }

    #[test]
    fn identity_scaling_reproduces_template() {
        let t = hard_core_transform(ScaleFn::Constant(1.0), ScaleFn::Constant(1.0));
        let seq: PointSequence = vec![
            MarkedPoint::with_radius(0.0, 0.0, 0.1),
            MarkedPoint::with_radius(1.0, 0.0, 0.1),
        ]
        .into();
        let u = MarkedPoint::with_radius(0.5, 0.5, 0.1);
        let template = t.template.conditional_intensity(&u, seq.points()).unwrap();
        let scaled = scaled_conditional_intensity(&t, &seq, &u).unwrap();
        assert_eq!(scaled, template / 3.0);
    }

    #[test]
    fn scaled_hard_core_indicator() {
        // The later point's scales set the exclusion distance c1 / c2 (m_i + m_j).
        let t = hard_core_transform(ScaleFn::LinearX { a: 1.0, b: 1.0 }, ScaleFn::Constant(1.0));
        let model = ScaledModel::new(
            t.clone(),
            Window::new(0.0, 0.0, 2.0, 2.0).unwrap(),
            MarkDistribution::Uniform { lo: 0.05, hi: 0.2 },
        )
        .unwrap();
        let first = MarkedPoint::with_radius(0.2, 1.0, 0.1);
        let mut rng_points = Vec::new();
        for k in 0..40 {
            let x = 0.05 * k as f64;
            rng_points.push(MarkedPoint::with_radius(x, 1.1, 0.1));
        }
        for second in rng_points {
            let seq: PointSequence = vec![first, second].into();
            let c1 = 1.0 + second.x;
            let allowed = first.distance(&second) > c1 * (0.1 + 0.1);
            let log_f = model.log_density(&seq).unwrap();
            assert_eq!(log_f > f64::NEG_INFINITY, allowed, "second = {second}");
        }
    }

    #[test]
    fn constant_dilation_scales_neighbourhoods() {
        let t = hard_core_transform(ScaleFn::Constant(2.0), ScaleFn::Constant(1.0));
        let model = ScaledModel::new(
            t,
            Window::new(0.0, 0.0, 4.0, 4.0).unwrap(),
            MarkDistribution::Uniform { lo: 0.05, hi: 0.2 },
        )
        .unwrap();
        let rel = model.relation();
        let u = MarkedPoint::with_radius(1.0, 1.0, 0.1);
        // Template neighbours within m + s = 0.2; scaled ones within 0.4.
        assert!(rel.related(&u, &MarkedPoint::with_radius(1.39, 1.0, 0.1)));
        assert!(!rel.related(&u, &MarkedPoint::with_radius(1.41, 1.0, 0.1)));
    }

    #[test]
    fn outside_template_window_is_zero() {
        let template = Arc::new(MarkedInteraction::new(2.0, 0.5, Window::unit()).unwrap());
        let t = ScalingTransform::new(ScaleFn::Constant(0.5), ScaleFn::Constant(1.0), 0.5, 1.0, template).unwrap();
        // (0.8, 0.8) maps to (1.6, 1.6), outside the unit template window.
        let u = MarkedPoint::with_radius(0.8, 0.8, 0.1);
        assert_eq!(
            scaled_conditional_intensity(&t, &PointSequence::empty(), &u).unwrap(),
            0.0
        );
    }

    #[test]
    fn scale_outside_bounds_is_contract_error() {
        let t = hard_core_transform(ScaleFn::LinearX { a: 0.0, b: 1.0 }, ScaleFn::Constant(1.0));
        let u = MarkedPoint::with_radius(0.1, 0.0, 0.1);
        assert!(matches!(
            scaled_conditional_intensity(&t, &PointSequence::empty(), &u),
            Err(Error::ModelContract(_))
        ));
    }
}
