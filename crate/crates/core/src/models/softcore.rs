//! Sequential soft core: each settler claims a disc of radius equal to its
//! mark, and later arrivals inside a claimed disc pay a factor `gamma`.
//!
//! `f(y) = beta^n prod_i gamma^{#{j < i : |x_i - x_j| <= m_j}}`, or with
//! `m_i` in place of `m_j` for the invader variant.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::point::{MarkedPoint, PointSequence};
use crate::relation::{InNeighbourTerritory, InOwnTerritory, SharedRelation};
use crate::window::{MarkDistribution, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SoftCoreVariant {
    /// Territory radius is the earlier point's mark.
    #[default]
    SettlerMarks,
    /// Territory radius is the later point's mark.
    InvaderMarks,
}

#[derive(Debug, Clone)]
pub struct SoftCore {
    pub beta: f64,
    pub gamma: f64,
    pub variant: SoftCoreVariant,
    marks: MarkDistribution,
    window: Window,
}

impl SoftCore {
    pub fn new(beta: f64, gamma: f64, marks: MarkDistribution, window: Window) -> Result<Self> {
        Self::with_variant(beta, gamma, marks, window, SoftCoreVariant::SettlerMarks)
    }

    pub fn with_variant(
        beta: f64,
        gamma: f64,
        marks: MarkDistribution,
        window: Window,
        variant: SoftCoreVariant,
    ) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::argument(format!("soft core beta must be positive, got {beta}")));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::argument(format!(
                "soft core gamma must lie in [0, 1), got {gamma}"
            )));
        }
        if !matches!(
            marks,
            MarkDistribution::Exponential { .. }
                | MarkDistribution::Uniform { .. }
                | MarkDistribution::Gamma { .. }
                | MarkDistribution::LogNormal { .. }
                | MarkDistribution::Discrete { .. }
        ) {
            return Err(Error::argument("soft core needs positive radius marks"));
        }
        marks.validate()?;
        window.validate()?;
        Ok(SoftCore {
            beta,
            gamma,
            variant,
            marks,
            window,
        })
    }

    fn radius(p: &MarkedPoint) -> Result<f64> {
        match p.mark.radius() {
            Some(r) if r > 0.0 => Ok(r),
            _ => Err(Error::argument(format!(
                "soft core point {p} has no positive radius mark"
            ))),
        }
    }

    /// Whether the later point `later` pays the inhibition factor against `earlier`.
    fn inhibited(&self, later: &MarkedPoint, earlier: &MarkedPoint) -> Result<bool> {
        let radius = match self.variant {
            SoftCoreVariant::SettlerMarks => Self::radius(earlier)?,
            SoftCoreVariant::InvaderMarks => Self::radius(later)?,
        };
        Ok(later.distance(earlier) <= radius)
    }

    fn log_factor(&self, count: usize) -> f64 {
        if count == 0 {
            0.0
        } else if self.gamma == 0.0 {
            f64::NEG_INFINITY
        } else {
            count as f64 * self.gamma.ln()
        }
    }

    /// Number of inhibiting pairs `sum_i sum_{j<i} 1{...}`.
    pub fn inhibition_count(&self, seq: &PointSequence) -> Result<usize> {
        let pts = seq.points();
        for p in pts {
            Self::radius(p)?;
        }
        let mut count = 0;
        for (i, later) in pts.iter().enumerate() {
            for earlier in &pts[..i] {
                count += usize::from(self.inhibited(later, earlier)?);
            }
        }
        Ok(count)
    }

    /// Closed-form append intensity `beta gamma^k / (n + 1)`.
    pub fn conditional_intensity(&self, seq: &PointSequence, u: &MarkedPoint) -> Result<f64> {
        Self::radius(u)?;
        let mut k = 0;
        for y in seq {
            k += usize::from(self.inhibited(u, y)?);
        }
        let factor = if k == 0 { 1.0 } else { self.gamma.powi(k as i32) };
        Ok(self.beta * factor / (seq.len() + 1) as f64)
    }
}

impl Model for SoftCore {
    fn name(&self) -> &str {
        "softcore"
    }

    fn window(&self) -> &Window {
        &self.window
    }

    fn marks(&self) -> &MarkDistribution {
        &self.marks
    }

    fn relation(&self) -> SharedRelation {
        match self.variant {
            SoftCoreVariant::SettlerMarks => Arc::new(InNeighbourTerritory),
            SoftCoreVariant::InvaderMarks => Arc::new(InOwnTerritory),
        }
    }

    fn log_density(&self, seq: &PointSequence) -> Result<f64> {
        let count = self.inhibition_count(seq)?;
        let log_f = self.log_factor(count);
        if log_f == f64::NEG_INFINITY {
            return Ok(log_f);
        }
        Ok(seq.len() as f64 * self.beta.ln() + log_f)
    }

    fn local_stability_bound(&self) -> Option<f64> {
        Some(self.beta)
    }

    fn log_insertion_ratio(&self, seq: &PointSequence, position: usize, u: &MarkedPoint) -> Result<f64> {
        if position == 0 || position > seq.len() + 1 {
            return Err(Error::argument(format!(
                "insert position {position} outside 1..={}",
                seq.len() + 1
            )));
        }
        Self::radius(u)?;
        // With gamma = 0 the current density may vanish; keep 0/0 = 0.
        if self.gamma == 0.0 && self.log_density(seq)? == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let (before, after) = seq.points().split_at(position - 1);
        let mut k = 0;
        for y in before {
            k += usize::from(self.inhibited(u, y)?);
        }
        for y in after {
            k += usize::from(self.inhibited(y, u)?);
        }
        let log_f = self.log_factor(k);
        if log_f == f64::NEG_INFINITY {
            return Ok(log_f);
        }
        Ok(self.beta.ln() + log_f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::seq_conditional_intensity;
    use crate::point::Mark;
    use proptest::prelude::*;

    fn model(gamma: f64) -> SoftCore {
        SoftCore::new(2.0, gamma, MarkDistribution::Exponential { rate: 2.0 }, Window::unit()).unwrap()
    }

    #[test]
    fn empty_sequence_has_unit_density() {
        assert_eq!(model(0.5).log_density(&PointSequence::empty()).unwrap(), 0.0);
    }

    #[test]
    fn worked_density() {
        let seq = PointSequence::from(vec![
            MarkedPoint::with_radius(0.0, 0.0, 1.0),
            MarkedPoint::with_radius(0.5, 0.0, 0.3),
        ]);
        let v = model(0.5).log_density(&seq).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn hard_territories_forbid_entry() {
        let seq = PointSequence::from(vec![
            MarkedPoint::with_radius(0.0, 0.0, 1.0),
            MarkedPoint::with_radius(0.5, 0.0, 0.3),
        ]);
        assert_eq!(model(0.0).log_density(&seq).unwrap(), f64::NEG_INFINITY);
        let far = PointSequence::from(vec![
            MarkedPoint::with_radius(0.0, 0.0, 0.1),
            MarkedPoint::with_radius(0.9, 0.9, 0.1),
        ]);
        assert!((model(0.0).log_density(&far).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn closed_form_append_intensity_examples() {
        let m = model(0.5);
        let seq = PointSequence::from(vec![MarkedPoint::with_radius(0.0, 0.0, 1.0)]);
        let far = MarkedPoint::with_radius(3.0, 3.0, 0.2);
        assert!((m.conditional_intensity(&seq, &far).unwrap() - 1.0).abs() < 1e-15);
        let covered = MarkedPoint::with_radius(0.5, 0.0, 0.3);
        assert!((m.conditional_intensity(&seq, &covered).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(model(0.0).conditional_intensity(&seq, &covered).unwrap(), 0.0);
    }

    #[test]
    fn invader_variant_uses_new_mark() {
        let m = SoftCore::with_variant(
            2.0,
            0.5,
            MarkDistribution::Exponential { rate: 1.0 },
            Window::unit(),
            SoftCoreVariant::InvaderMarks,
        )
        .unwrap();
        let seq = PointSequence::from(vec![MarkedPoint::with_radius(0.0, 0.0, 1.0)]);
        // Settler radius 1 covers u, but u's own radius 0.3 < 0.5 does not reach.
        let u = MarkedPoint::with_radius(0.5, 0.0, 0.3);
        assert!((m.conditional_intensity(&seq, &u).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn missing_mark_is_argument_error() {
        let seq = PointSequence::from(vec![MarkedPoint::new(0.0, 0.0, Mark::None)]);
        assert!(matches!(model(0.5).log_density(&seq), Err(Error::Argument(_))));
    }

    #[test]
    fn parameter_validation() {
        let w = Window::unit();
        let g = MarkDistribution::Exponential { rate: 1.0 };
        assert!(SoftCore::new(0.0, 0.5, g.clone(), w).is_err());
        assert!(SoftCore::new(1.0, 1.0, g.clone(), w).is_err());
        assert!(SoftCore::new(1.0, -0.1, g, w).is_err());
        assert!(SoftCore::new(1.0, 0.5, MarkDistribution::None, w).is_err());
    }

    fn arb_seq(max: usize) -> impl Strategy<Value = Vec<MarkedPoint>> {
        prop::collection::vec(
            (0.0..1.0f64, 0.0..1.0f64, 0.05..0.6f64).prop_map(|(x, y, r)| MarkedPoint::with_radius(x, y, r)),
            0..=max,
        )
    }

    proptest! {
        #[test]
        fn closed_form_matches_density_ratio(
            pts in arb_seq(8),
            (ux, uy, ur) in (0.0..1.0f64, 0.0..1.0f64, 0.05..0.6f64),
            gamma in 0.05..0.95f64,
            invader in any::<bool>(),
        ) {
            let variant = if invader { SoftCoreVariant::InvaderMarks } else { SoftCoreVariant::SettlerMarks };
            let m = SoftCore::with_variant(1.7, gamma, MarkDistribution::Exponential { rate: 2.0 }, Window::unit(), variant).unwrap();
            let seq = PointSequence::from(pts);
            let u = MarkedPoint::with_radius(ux, uy, ur);
            let closed = m.conditional_intensity(&seq, &u).unwrap();
            let general = seq_conditional_intensity(&m, &seq, seq.len() + 1, &u).unwrap();
            prop_assert!((closed - general).abs() <= 1e-12 * closed.abs().max(1e-300));
        }

        #[test]
        fn insertion_override_matches_density_difference(
            pts in arb_seq(6),
            (ux, uy, ur) in (0.0..1.0f64, 0.0..1.0f64, 0.05..0.6f64),
            pos_seed in 0usize..64,
            gamma in prop_oneof![Just(0.0), 0.05..0.95f64],
        ) {
            let m = model(gamma);
            let seq = PointSequence::from(pts);
            let u = MarkedPoint::with_radius(ux, uy, ur);
            let i = pos_seed % (seq.len() + 1) + 1;
            let fast = m.log_insertion_ratio(&seq, i, &u).unwrap();
            let slow = crate::model::log_ratio(
                m.log_density(&seq.insert_at(i, u).unwrap()).unwrap(),
                m.log_density(&seq).unwrap(),
            );
            if slow == f64::NEG_INFINITY {
                prop_assert_eq!(fast, f64::NEG_INFINITY);
            } else {
                prop_assert!((fast - slow).abs() < 1e-12);
            }
        }
    }
}
