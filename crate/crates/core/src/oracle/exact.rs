//! Exact laws on a discrete state space.

use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::oracle::space::DiscreteStateSpace;
use crate::point::PointSequence;

/// `log sum exp`, `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `pi(state) ∝ f(state) nu(state)` over the whole space.
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    /// Unnormalised `log f` per state.
    pub log_f: Vec<f64>,
    pub probs: Vec<f64>,
    /// `log sum_states f nu`.
    pub log_normaliser: f64,
}

impl ExactDistribution {
    /// States with `f > 0`.
    pub fn support(&self) -> Vec<usize> {
        (0..self.log_f.len())
            .filter(|&i| self.log_f[i] > f64::NEG_INFINITY)
            .collect()
    }
}

/// Evaluates `log f` on every state of the space.
pub fn log_densities(model: &dyn Model, space: &DiscreteStateSpace) -> Result<Vec<f64>> {
    (0..space.len()).map(|i| model.log_density(&space.state(i))).collect()
}

pub fn exact_distribution(model: &dyn Model, space: &DiscreteStateSpace) -> Result<ExactDistribution> {
    let log_f = log_densities(model, space)?;
    exact_from_log_densities(log_f, space)
}

pub fn exact_from_log_densities(log_f: Vec<f64>, space: &DiscreteStateSpace) -> Result<ExactDistribution> {
    if let Some(i) = log_f.iter().position(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::Numeric {
            message: format!("log density {}", log_f[i]),
            sequence: space.state(i),
        });
    }
    let weighted: Vec<f64> = log_f
        .iter()
        .enumerate()
        .map(|(i, l)| l + space.log_nu_weight(i))
        .collect();
    let log_normaliser = log_sum_exp(&weighted);
    if log_normaliser == f64::NEG_INFINITY {
        return Err(Error::Degenerate("density vanishes on every state".into()));
    }
    let probs = weighted.iter().map(|w| (w - log_normaliser).exp()).collect();
    Ok(ExactDistribution {
        log_f,
        probs,
        log_normaliser,
    })
}

/// Length law `q_n` and the conditional densities `p_n` with respect to
/// `(mu x mu_M)^n`, together with the worst relative error of the identity
/// `f(y) = e^{mu(D)} n! q_n p_n(y)` for the normalised density `f`.
#[derive(Debug, Clone)]
pub struct CountDistribution {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub round_trip_max_err: f64,
}

impl CountDistribution {
    pub fn mean(&self) -> f64 {
        self.q.iter().enumerate().map(|(n, q)| n as f64 * q).sum()
    }
}

pub fn exact_count_distribution(model: &dyn Model, space: &DiscreteStateSpace) -> Result<CountDistribution> {
    let exact = exact_distribution(model, space)?;
    Ok(count_distribution(&exact, space))
}

pub fn count_distribution(exact: &ExactDistribution, space: &DiscreteStateSpace) -> CountDistribution {
    let mu = space.window().area();
    let mut q = vec![0.0; space.n_max() + 1];
    for (i, p) in exact.probs.iter().enumerate() {
        q[space.length_of(i)] += p;
    }
    let mut p = vec![0.0; space.len()];
    let mut worst: f64 = 0.0;
    for (i, p_i) in p.iter_mut().enumerate() {
        let n = space.length_of(i);
        if q[n] == 0.0 {
            continue;
        }
        // Reference mass of the single state under (mu x mu_M)^n.
        let log_cell: f64 = space.atom_indices(i).iter().map(|&a| space.atom_log_mass(a)).sum();
        *p_i = (exact.probs[i].ln() - q[n].ln() - log_cell).exp();
        let f_norm = (exact.log_f[i] - exact.log_normaliser).exp();
        let rebuilt = mu.exp() * ln_factorial(n as u64).exp() * q[n] * *p_i;
        let scale = f_norm.abs().max(f64::MIN_POSITIVE);
        worst = worst.max((rebuilt - f_norm).abs() / scale);
    }
    CountDistribution {
        q,
        p,
        round_trip_max_err: worst,
    }
}

/// `(1/2) sum |p_i - q_i|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::argument(format!(
            "distributions have different lengths {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Tallies visited states into a normalised histogram over the space.
#[derive(Debug, Clone)]
pub struct EmpiricalDistribution {
    counts: Vec<u64>,
    total: u64,
    outside: u64,
}

impl EmpiricalDistribution {
    pub fn new(space: &DiscreteStateSpace) -> Self {
        EmpiricalDistribution {
            counts: vec![0; space.len()],
            total: 0,
            outside: 0,
        }
    }

    pub fn record(&mut self, space: &DiscreteStateSpace, seq: &PointSequence) {
        self.total += 1;
        match space.index_of(seq) {
            Some(i) => self.counts[i] += 1,
            None => self.outside += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Samples that did not fall on the space.
    pub fn outside(&self) -> u64 {
        self.outside
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let t = self.total.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Poisson;
    use crate::oracle::space::{build_state_space, DEFAULT_STATE_BUDGET};
    use crate::point::Mark;
    use crate::window::{MarkDistribution, Window};

    #[test]
    fn tv_examples() {
        assert_eq!(tv_distance(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), 0.5);
        assert!(tv_distance(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn log_sum_exp_handles_zeros() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn reference_law_has_poisson_lengths() {
        let space = build_state_space(Window::unit(), 2, 2, vec![(Mark::None, 1.0)], 8, DEFAULT_STATE_BUDGET).unwrap();
        let m = Poisson::new(1.0, Window::unit(), MarkDistribution::None).unwrap();
        let c = exact_count_distribution(&m, &space).unwrap();
        let raw: Vec<f64> = (0..=8).map(|n| (-1.0 - ln_factorial(n)).exp()).collect();
        let z: f64 = raw.iter().sum();
        for n in 0..=8 {
            assert!((c.q[n] - raw[n] / z).abs() < 1e-12);
        }
        assert!(c.round_trip_max_err < 1e-12);
    }

    #[test]
    fn all_zero_density_is_degenerate() {
        let space = build_state_space(Window::unit(), 1, 1, vec![(Mark::None, 1.0)], 1, 10).unwrap();
        let m = crate::models::CustomModel::new(
            "zero",
            Window::unit(),
            MarkDistribution::None,
            std::sync::Arc::new(crate::relation::Trivial),
            None,
            |_| Ok(f64::NEG_INFINITY),
        );
        assert!(matches!(exact_distribution(&m, &space), Err(Error::Degenerate(_))));
    }
}
