//! The model contract and the model-agnostic algebra built on it: sequential
//! conditional intensities and density reconstruction from intensities.
//!
//! Densities are unnormalised and live in log space; a zero density is
//! `f64::NEG_INFINITY`.

use rand::RngCore;
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::point::{MarkedPoint, PointSequence};
use crate::relation::SharedRelation;
use crate::window::{sample_point, MarkDistribution, Window};

/// A sequential spatial point process specified by its density with respect
/// to the Poisson-length reference measure on `window x marks`.
pub trait Model: Send + Sync {
    fn name(&self) -> &str;

    fn window(&self) -> &Window;

    fn marks(&self) -> &MarkDistribution;

    /// The directed neighbour relation the model is Markov for.
    fn relation(&self) -> SharedRelation;

    /// Unnormalised `log f(seq)`; `-inf` where `f = 0`.
    fn log_density(&self, seq: &PointSequence) -> Result<f64>;

    /// Declared `beta` with `f(s_i(y, u)) <= beta f(y)` for all `y`, `u`, `i`.
    fn local_stability_bound(&self) -> Option<f64>;

    /// `log f(s_i(seq, u)) - log f(seq)`, with `0/0 = 0` giving `-inf`.
    ///
    /// Models with cheaper closed forms override this; overrides must agree
    /// with the density difference.
    fn log_insertion_ratio(&self, seq: &PointSequence, position: usize, u: &MarkedPoint) -> Result<f64> {
        let grown = seq.insert_at(position, *u)?;
        let num = self.log_density(&grown)?;
        let den = self.log_density(seq)?;
        Ok(log_ratio(num, den))
    }

    /// Draws a proposal point from the normalised reference measure.
    fn sample_point(&self, rng: &mut dyn RngCore) -> MarkedPoint {
        sample_point(self.window(), self.marks(), rng)
    }
}

/// `num - den` in log space under the `0/0 = 0` convention.
pub fn log_ratio(num: f64, den: f64) -> f64 {
    if den == f64::NEG_INFINITY || num == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        num - den
    }
}

/// `lambda_i(u | seq) = f(s_i(seq, u)) / ((n + 1) f(seq))`, zero where `f(seq) = 0`.
pub fn seq_conditional_intensity(
    model: &dyn Model,
    seq: &PointSequence,
    position: usize,
    u: &MarkedPoint,
) -> Result<f64> {
    if position == 0 || position > seq.len() + 1 {
        return Err(Error::argument(format!(
            "insert position {position} outside 1..={}",
            seq.len() + 1
        )));
    }
    if model.log_density(seq)? == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let lr = model.log_insertion_ratio(seq, position, u)?;
    let value = (lr - ((seq.len() + 1) as f64).ln()).exp();
    if !value.is_finite() {
        return Err(Error::Numeric {
            message: format!("conditional intensity at position {position} is {value}"),
            sequence: seq.clone(),
        });
    }
    Ok(value)
}

/// `sum_{i=1}^{n+1} lambda_i(u | seq)`.
pub fn total_insertion_intensity(model: &dyn Model, seq: &PointSequence, u: &MarkedPoint) -> Result<f64> {
    (1..=seq.len() + 1).try_fold(0.0, |acc, i| Ok(acc + seq_conditional_intensity(model, seq, i, u)?))
}

/// The intensities `lambda_i(y_i | y_{<i})` for `i = 1..n` along `seq`.
pub fn append_intensities(model: &dyn Model, seq: &PointSequence) -> Result<Vec<f64>> {
    (0..seq.len())
        .map(|k| seq_conditional_intensity(model, &seq.prefix(k), k + 1, &seq.points()[k]))
        .collect()
}

/// `log n! + sum log lambda_i`, the log density (up to a constant) of a
/// hereditary process specified by its append intensities.
pub fn log_density_from_intensities(intensities: &[f64]) -> Result<f64> {
    if let Some(bad) = intensities.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::argument(format!(
            "intensity {bad} is not a finite non-negative number"
        )));
    }
    let n = intensities.len() as u64;
    Ok(intensities.iter().fold(ln_factorial(n), |acc, l| acc + l.ln()))
}

/// As [`log_density_from_intensities`], also checking the integrability
/// condition `lambda_i <= beta / i`. Returns the 1-based positions where the
/// condition fails; each is logged as a warning.
pub fn log_density_from_intensities_checked(intensities: &[f64], beta: f64) -> Result<(f64, Vec<usize>)> {
    let log_f = log_density_from_intensities(intensities)?;
    let violations: Vec<usize> = intensities
        .iter()
        .enumerate()
        .filter(|(k, l)| **l > beta / (*k + 1) as f64)
        .map(|(k, _)| k + 1)
        .collect();
    for &i in &violations {
        log::warn!(
            "intensity {} at position {i} exceeds beta/i = {}; integrability is not guaranteed",
            intensities[i - 1],
            beta / i as f64
        );
    }
    Ok((log_f, violations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::softcore::SoftCore;
    use crate::models::CustomModel;
    use crate::point::Mark;
    use crate::relation::Trivial;
    use std::sync::Arc;

    fn worked_softcore() -> SoftCore {
        SoftCore::new(
            2.0,
            0.5,
            MarkDistribution::Exponential { rate: 1.0 },
            Window::new(-5.0, -5.0, 5.0, 5.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn softcore_worked_intensities() {
        let m = worked_softcore();
        let seq = PointSequence::from(vec![MarkedPoint::with_radius(0.0, 0.0, 1.0)]);
        let u = MarkedPoint::with_radius(0.5, 0.0, 0.3);
        let at_end = seq_conditional_intensity(&m, &seq, 2, &u).unwrap();
        let at_front = seq_conditional_intensity(&m, &seq, 1, &u).unwrap();
        assert!((at_end - 0.5).abs() < 1e-15);
        assert!((at_front - 1.0).abs() < 1e-15);
        let total = total_insertion_intensity(&m, &seq, &u).unwrap();
        assert!((total - 1.5).abs() < 1e-15);
    }

    #[test]
    fn zero_density_gives_zero_intensity() {
        let m = CustomModel::new(
            "zero-beyond-one",
            Window::unit(),
            MarkDistribution::None,
            Arc::new(Trivial),
            None,
            |s: &PointSequence| Ok(if s.len() > 1 { f64::NEG_INFINITY } else { 0.0 }),
        );
        let seq: PointSequence = vec![MarkedPoint::unmarked(0.1, 0.1); 2].into();
        let u = MarkedPoint::unmarked(0.5, 0.5);
        for i in 1..=3 {
            assert_eq!(seq_conditional_intensity(&m, &seq, i, &u).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_term_for_empty_sequence() {
        let m = worked_softcore();
        let u = MarkedPoint::with_radius(0.5, 0.0, 0.3);
        let e = PointSequence::empty();
        assert_eq!(
            total_insertion_intensity(&m, &e, &u).unwrap(),
            seq_conditional_intensity(&m, &e, 1, &u).unwrap()
        );
    }

    #[test]
    fn permutation_invariant_ratio_sums_identical_terms() {
        // f = 3^n: every insertion ratio is 3 regardless of position.
        let m = CustomModel::new(
            "poisson3",
            Window::unit(),
            MarkDistribution::None,
            Arc::new(Trivial),
            Some(3.0),
            |s: &PointSequence| Ok(s.len() as f64 * 3f64.ln()),
        );
        let seq: PointSequence = (0..4).map(|i| MarkedPoint::unmarked(0.1 * i as f64, 0.2)).collect();
        let u = MarkedPoint::unmarked(0.9, 0.9);
        let last = seq_conditional_intensity(&m, &seq, 5, &u).unwrap();
        let total = total_insertion_intensity(&m, &seq, &u).unwrap();
        assert!((total - 5.0 * last).abs() < 1e-14);
    }

    #[test]
    fn pathological_density_reports_sequence() {
        let m = CustomModel::new(
            "nan",
            Window::unit(),
            MarkDistribution::None,
            Arc::new(Trivial),
            None,
            |s: &PointSequence| Ok(if s.is_empty() { 0.0 } else { f64::INFINITY }),
        );
        let err =
            seq_conditional_intensity(&m, &PointSequence::empty(), 1, &MarkedPoint::unmarked(0.5, 0.5)).unwrap_err();
        assert!(matches!(err, Error::Numeric { .. }));
    }

    #[test]
    fn intensities_to_log_density() {
        assert_eq!(log_density_from_intensities(&[]).unwrap(), 0.0);
        let v = log_density_from_intensities(&[2.0, 0.5]).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert_eq!(
            log_density_from_intensities(&[1.0, 0.0, 4.0]).unwrap(),
            f64::NEG_INFINITY
        );
        assert!(log_density_from_intensities(&[-1.0]).is_err());
        assert!(log_density_from_intensities(&[f64::NAN]).is_err());
    }

    #[test]
    fn integrability_condition_flags_violations() {
        let (_, bad) = log_density_from_intensities_checked(&[1.0, 0.6, 0.2], 1.0).unwrap();
        assert_eq!(bad, vec![2]);
    }

    #[test]
    fn bad_position_is_argument_error() {
        let m = worked_softcore();
        let u = MarkedPoint::new(0.0, 0.0, Mark::Radius(0.1));
        assert!(matches!(
            seq_conditional_intensity(&m, &PointSequence::empty(), 2, &u),
            Err(Error::Argument(_))
        ));
    }
}
