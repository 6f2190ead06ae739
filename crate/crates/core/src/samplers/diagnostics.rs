//! Existence and ergodicity diagnostics for the samplers.

use rand::RngCore;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::point::PointSequence;
use crate::samplers::metropolis::mh_step;
use crate::samplers::trace::EventKind;

/// Preston's sufficient conditions with constant birth bound `B_n = b` and
/// death rates `delta_n = n`.
#[derive(Debug, Clone, Serialize)]
pub struct PrestonReport {
    pub b: f64,
    /// `b = 0`: births vanish, the process only dies out.
    pub no_births: bool,
    /// `log sum_{k=1}^{n_terms} k! / b^k`.
    pub log_first_series_partial: f64,
    /// Last term ratio `n_terms / b`; above 1 the terms grow without bound.
    pub first_series_last_ratio: f64,
    pub first_series_diverges: bool,
    /// `sum_{k=2}^{n_terms} b^{k-1} / k!`.
    pub second_series_partial: f64,
    /// Bound on the remainder `sum_{k > n_terms} b^{k-1} / k!`, infinite when
    /// the geometric majorant does not apply.
    pub second_series_tail_bound: f64,
    /// Closed form `(e^b - 1 - b) / b`.
    pub second_series_limit: f64,
    pub conditions_hold: bool,
}

pub fn preston_diagnostic(beta: f64, mu_d: f64, n_terms: usize) -> Result<PrestonReport> {
    if n_terms < 2 {
        return Err(Error::argument("n_terms must be at least 2"));
    }
    if !(beta >= 0.0 && mu_d > 0.0 && beta.is_finite() && mu_d.is_finite()) {
        return Err(Error::argument("beta must be non-negative and mu(D) positive"));
    }
    let b = beta * mu_d;
    if b == 0.0 {
        return Ok(PrestonReport {
            b,
            no_births: true,
            log_first_series_partial: f64::INFINITY,
            first_series_last_ratio: f64::INFINITY,
            first_series_diverges: true,
            second_series_partial: 0.0,
            second_series_tail_bound: 0.0,
            second_series_limit: 0.0,
            conditions_hold: true,
        });
    }
    let log_b = b.ln();
    let mut log_terms = Vec::with_capacity(n_terms);
    let mut log_fact = 0.0;
    for k in 1..=n_terms {
        log_fact += (k as f64).ln();
        log_terms.push(log_fact - k as f64 * log_b);
    }
    let log_first = crate::oracle::log_sum_exp(&log_terms);
    let last_ratio = n_terms as f64 / b;

    let mut second = 0.0;
    let mut term = 1.0; // b^{k-1} / k! at k = 1
    for k in 2..=n_terms {
        term *= b / k as f64;
        second += term;
    }
    // Next term b^{n}/(n+1)!, consecutive ratios at most b/(n+2).
    let next = term * b / (n_terms + 1) as f64;
    let q = b / (n_terms + 2) as f64;
    let tail = if q < 1.0 { next / (1.0 - q) } else { f64::INFINITY };
    let limit = (b.exp_m1() - b) / b;
    Ok(PrestonReport {
        b,
        no_births: false,
        log_first_series_partial: log_first,
        first_series_last_ratio: last_ratio,
        first_series_diverges: last_ratio > 1.0,
        second_series_partial: second,
        second_series_tail_bound: tail,
        second_series_limit: limit,
        conditions_hold: limit.is_finite(),
    })
}

/// Monte Carlo estimate of `PV(y) / V(y)` for `V(y) = A^{n(y)}`.
#[derive(Debug, Clone, Serialize)]
pub struct DriftReport {
    pub n: usize,
    pub a: f64,
    pub samples: usize,
    pub estimate: f64,
    pub std_error: f64,
    /// `estimate + 1.96 std_error`.
    pub upper_95: f64,
    /// Largest birth acceptance probability seen, the empirical `epsilon`.
    pub epsilon: f64,
    /// Smallest death acceptance probability seen (1 if no death was proposed).
    pub min_death_acceptance: f64,
    /// Smallest `N` with `beta mu(D) / (N + 1) <= epsilon`, from the declared bound.
    pub n_epsilon: Option<usize>,
    /// `(A - 1) epsilon / 2 + (1/A - 1) / 2 + 1`, valid when deaths are always accepted.
    pub bound: Option<f64>,
}

impl DriftReport {
    /// Geometric drift at this state with 95% confidence.
    pub fn drifts_down(&self) -> bool {
        self.upper_95 < 1.0
    }
}

pub fn drift_diagnostic(
    model: &dyn Model,
    seq: &PointSequence,
    a: f64,
    n_samples: usize,
    rng: &mut dyn RngCore,
) -> Result<DriftReport> {
    if !(a > 1.0 && a.is_finite()) {
        return Err(Error::argument(format!("A must exceed 1, got {a}")));
    }
    if n_samples < 2 {
        return Err(Error::argument("need at least two samples"));
    }
    let n = seq.len() as i64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut epsilon: f64 = 0.0;
    let mut min_death: f64 = 1.0;
    for _ in 0..n_samples {
        let (next, ev) = mh_step(model, seq, rng)?;
        match ev.kind {
            EventKind::Birth => epsilon = epsilon.max(ev.alpha),
            EventKind::Death => min_death = min_death.min(ev.alpha),
            EventKind::Idle => {}
        }
        let v = a.powi((next.len() as i64 - n) as i32);
        sum += v;
        sum_sq += v * v;
    }
    let m = n_samples as f64;
    let mean = sum / m;
    let var = ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0);
    let se = (var / m).sqrt();
    let mu = model.window().area();
    let n_epsilon = model
        .local_stability_bound()
        .and_then(|beta| (epsilon > 0.0).then(|| ((beta * mu / epsilon - 1.0).ceil().max(0.0)) as usize));
    let bound = (min_death >= 1.0).then(|| 0.5 * (a - 1.0) * epsilon + 0.5 * (1.0 / a - 1.0) + 1.0);
    Ok(DriftReport {
        n: seq.len(),
        a,
        samples: n_samples,
        estimate: mean,
        std_error: se,
        upper_95: mean + 1.96 * se,
        epsilon,
        min_death_acceptance: min_death,
        n_epsilon,
        bound,
    })
}

/// Standard error of the mean of a correlated series by non-overlapping batch means.
pub fn batch_means_se(values: &[f64], batches: usize) -> Result<f64> {
    if batches < 2 || values.len() < 2 * batches {
        return Err(Error::argument("need at least two batches of two values"));
    }
    let size = values.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| values[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    Ok((var / batches as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::SoftCore;
    use crate::samplers::rng::chain_rng;
    use crate::window::{MarkDistribution, Window};

    #[test]
    fn preston_second_series_at_b2() {
        let r = preston_diagnostic(2.0, 1.0, 10).unwrap();
        let limit = ((2f64).exp() - 3.0) / 2.0;
        assert!((r.second_series_limit - limit).abs() < 1e-15);
        assert!((r.second_series_partial - limit).abs() < 1e-4);
        assert!(r.second_series_limit - r.second_series_partial <= r.second_series_tail_bound);
        assert!(r.first_series_diverges);
        assert!(r.conditions_hold);
    }

    #[test]
    fn preston_no_births() {
        let r = preston_diagnostic(0.0, 1.0, 5).unwrap();
        assert!(r.no_births && r.conditions_hold);
    }

    #[test]
    fn preston_ratio_test() {
        let r = preston_diagnostic(7.5, 1.0, 8).unwrap();
        assert!(r.first_series_diverges);
        let r = preston_diagnostic(7.5, 1.0, 7).unwrap();
        assert!(!r.first_series_diverges);
    }

    #[test]
    fn drift_tends_to_one_as_a_tends_to_one() {
        let m = SoftCore::new(2.0, 0.5, MarkDistribution::Exponential { rate: 5.0 }, Window::unit()).unwrap();
        let seq: PointSequence = (0..5)
            .map(|k| crate::point::MarkedPoint::with_radius(0.1 + 0.2 * k as f64, 0.5, 0.05))
            .collect();
        let mut rng = chain_rng(3, 0);
        let r = drift_diagnostic(&m, &seq, 1.0 + 1e-9, 1000, &mut rng).unwrap();
        assert!((r.estimate - 1.0).abs() < 1e-8);
    }

    #[test]
    fn batch_means_of_constant_is_zero() {
        assert_eq!(batch_means_se(&[2.0; 100], 10).unwrap(), 0.0);
        assert!(batch_means_se(&[1.0; 3], 2).is_err());
    }
}
