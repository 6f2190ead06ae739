//! Exact Metropolis-Hastings transition matrices and balance checks.

use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::oracle::exact::ExactDistribution;
use crate::oracle::space::DiscreteStateSpace;
use crate::samplers::birth_death::bd_birth_rate;

/// Acceptance rule used to assemble the matrix. `DropWindowMeasure` omits
/// the `mu(D)` factors and serves as a known-broken kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kernel {
    #[default]
    Exact,
    DropWindowMeasure,
}

/// Row-stochastic matrix over the positive-density states `states`
/// (indices into the state space).
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    pub states: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

impl TransitionMatrix {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Largest `|sum_j P(i, j) - 1|`.
    pub fn max_row_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.rows.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }
}

fn log_accept(log_ratio: f64) -> f64 {
    log_ratio.min(0.0)
}

/// Exact transition matrix of the birth/death chain restricted to the
/// positive-density states. Births past `n_max` fall outside the space and
/// count as rejected, which is the chain for `f 1{n <= n_max}`.
pub fn mh_transition_matrix(model: &dyn Model, space: &DiscreteStateSpace, budget: u128) -> Result<TransitionMatrix> {
    mh_transition_matrix_with(model, space, budget, Kernel::Exact)
}

pub fn mh_transition_matrix_with(
    model: &dyn Model,
    space: &DiscreteStateSpace,
    budget: u128,
    kernel: Kernel,
) -> Result<TransitionMatrix> {
    let log_f: Vec<f64> = (0..space.len())
        .map(|i| model.log_density(&space.state(i)))
        .collect::<Result<_>>()?;
    let states: Vec<usize> = (0..space.len()).filter(|&i| log_f[i] > f64::NEG_INFINITY).collect();
    let m = states.len();
    if (m as u128) * (m as u128) > budget {
        return Err(Error::Capacity {
            what: "transition matrix entries",
            required: (m as u128) * (m as u128),
            limit: budget,
        });
    }
    let mut pos = vec![usize::MAX; space.len()];
    for (row, &s) in states.iter().enumerate() {
        pos[s] = row;
    }
    let log_mu = match kernel {
        Kernel::Exact => space.window().area().ln(),
        Kernel::DropWindowMeasure => 0.0,
    };
    let n_atoms = space.atoms().len();
    let mut rows = vec![vec![0.0; m]; m];
    for (row, &s) in states.iter().enumerate() {
        let atoms = space.atom_indices(s);
        let n = atoms.len();
        let mut stay = 0.0;

        // Birth: position uniform on 1..=n+1, atom from the reference measure.
        let birth_pos = 0.5 / (n + 1) as f64;
        for i in 0..=n {
            for a in 0..n_atoms {
                let prob = birth_pos * space.atom_probability(a);
                let mut grown = atoms.clone();
                grown.insert(i, a);
                let target = match space.index_of_atoms(&grown) {
                    Some(t) if log_f[t] > f64::NEG_INFINITY => t,
                    _ => {
                        stay += prob;
                        continue;
                    }
                };
                let alpha = log_accept(log_f[target] - log_f[s] + log_mu - ((n + 1) as f64).ln()).exp();
                rows[row][pos[target]] += prob * alpha;
                stay += prob * (1.0 - alpha);
            }
        }

        // Death: position uniform on 1..=n; nothing happens on the empty sequence.
        if n == 0 {
            stay += 0.5;
        } else {
            let prob = 0.5 / n as f64;
            for i in 0..n {
                let mut shrunk = atoms.clone();
                shrunk.remove(i);
                let target = space
                    .index_of_atoms(&shrunk)
                    .expect("shorter sequences are in the space");
                if log_f[target] == f64::NEG_INFINITY {
                    stay += prob;
                    continue;
                }
                let alpha = log_accept(log_f[target] - log_f[s] + (n as f64).ln() - log_mu).exp();
                rows[row][pos[target]] += prob * alpha;
                stay += prob * (1.0 - alpha);
            }
        }
        rows[row][row] += stay;
    }
    Ok(TransitionMatrix { states, rows })
}

/// `max_{x,y} |pi(x) P(x,y) - pi(y) P(y,x)|` for `pi` indexed like the rows.
pub fn detailed_balance_check(pi: &[f64], p: &[Vec<f64>]) -> Result<f64> {
    if pi.len() != p.len() || p.iter().any(|r| r.len() != pi.len()) {
        return Err(Error::argument("distribution and matrix dimensions disagree"));
    }
    let mut worst: f64 = 0.0;
    for x in 0..pi.len() {
        for y in (x + 1)..pi.len() {
            worst = worst.max((pi[x] * p[x][y] - pi[y] * p[y][x]).abs());
        }
    }
    Ok(worst)
}

/// Balance of the matrix against an exact distribution over the full space.
pub fn mh_balance_violation(exact: &ExactDistribution, matrix: &TransitionMatrix) -> Result<f64> {
    let pi: Vec<f64> = matrix.states.iter().map(|&s| exact.probs[s]).collect();
    detailed_balance_check(&pi, &matrix.rows)
}

/// Largest log-space violation of
/// `e^{-mu(D)}/n! f(y) b_i(y, u) = e^{-mu(D)}/(n+1)! f(s_i(y, u))`
/// over every state, position and atom whose insertion stays in the space.
/// Pairs where both sides vanish count as balanced.
pub fn bd_balance_check(model: &dyn Model, space: &DiscreteStateSpace) -> Result<f64> {
    let mu = space.window().area();
    let mut worst: f64 = 0.0;
    for s in 0..space.len() {
        let y = space.state(s);
        let n = y.len();
        if n >= space.n_max() {
            continue;
        }
        let log_fy = model.log_density(&y)?;
        for i in 1..=n + 1 {
            for u in space.atoms() {
                let grown = y.insert_at(i, *u)?;
                let b = bd_birth_rate(model, &y, i, u)?;
                let lhs = -mu - ln_factorial(n as u64) + log_fy + b.ln();
                let rhs = -mu - ln_factorial(n as u64 + 1) + model.log_density(&grown)?;
                let err = match (lhs == f64::NEG_INFINITY, rhs == f64::NEG_INFINITY) {
                    (true, true) => 0.0,
                    (false, false) => (lhs - rhs).abs(),
                    _ if log_fy == f64::NEG_INFINITY => 0.0,
                    _ => f64::INFINITY,
                };
                worst = worst.max(err);
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Poisson;
    use crate::oracle::exact::exact_distribution;
    use crate::oracle::space::{build_state_space, DEFAULT_STATE_BUDGET};
    use crate::point::Mark;
    use crate::window::{MarkDistribution, Window};

    #[test]
    fn uniform_symmetric_is_balanced() {
        let p = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        assert_eq!(detailed_balance_check(&[0.5, 0.5], &p).unwrap(), 0.0);
    }

    #[test]
    fn reference_kernel_entries_are_closed_form() {
        let space = build_state_space(Window::unit(), 2, 1, vec![(Mark::None, 1.0)], 2, DEFAULT_STATE_BUDGET).unwrap();
        let m = Poisson::new(1.0, Window::unit(), MarkDistribution::None).unwrap();
        let mat = mh_transition_matrix(&m, &space, DEFAULT_STATE_BUDGET).unwrap();
        assert!(mat.max_row_error() < 1e-12);
        // Empty -> first atom: birth 1/2, atom 1/2, accept min(1, mu/1) = 1.
        assert!((mat.rows[0][1] - 0.25).abs() < 1e-15);
        // (a) -> (a, b): 1/2 * 1/2 positions * 1/2 atoms * min(1, 1/2).
        let ab = space.index_of_atoms(&[0, 1]).unwrap();
        assert!((mat.rows[1][ab] - 0.0625).abs() < 1e-15);
        // (a) -> empty: 1/2 * min(1, 1/1).
        assert!((mat.rows[1][0] - 0.5).abs() < 1e-15);
        let exact = exact_distribution(&m, &space).unwrap();
        assert!(mh_balance_violation(&exact, &mat).unwrap() < 1e-15);
        // Diagonal of the empty state includes the idle half.
        assert!(mat.rows[0][0] >= 0.5);
    }

    #[test]
    fn budget_applies_to_matrix() {
        let space = build_state_space(Window::unit(), 2, 1, vec![(Mark::None, 1.0)], 2, DEFAULT_STATE_BUDGET).unwrap();
        let m = Poisson::new(1.0, Window::unit(), MarkDistribution::None).unwrap();
        assert!(matches!(
            mh_transition_matrix(&m, &space, 10),
            Err(Error::Capacity { .. })
        ));
    }
}
