//! Exhaustive hereditariness and local stability checks.

use crate::error::Result;
use crate::model::Model;
use crate::oracle::space::DiscreteStateSpace;
use crate::point::PointSequence;

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub hereditary: bool,
    /// A positive-density state and a one-point deletion of it with zero density.
    pub hereditary_counterexample: Option<(PointSequence, PointSequence)>,
    /// `sup f(s_i(y, u)) / f(y)` over the space; `None` when no insertion stays inside it.
    pub local_stability_beta: Option<f64>,
    /// Insertions whose ratio exceeds the model's declared bound.
    pub counterexamples: Vec<String>,
}

impl StabilityReport {
    /// Whether the declared bound (if any) held everywhere.
    pub fn declared_bound_holds(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// Checks `f(y) > 0 => f(y_{(-i)}) > 0` and `f(s_i(y, u)) <= beta f(y)` on
/// every state, position and atom. One-point deletions suffice for
/// hereditariness because every shorter state is itself enumerated.
pub fn stability_check(model: &dyn Model, space: &DiscreteStateSpace) -> Result<StabilityReport> {
    let log_f: Vec<f64> = (0..space.len())
        .map(|i| model.log_density(&space.state(i)))
        .collect::<Result<_>>()?;
    let declared = model.local_stability_bound();
    let mut report = StabilityReport {
        hereditary: true,
        hereditary_counterexample: None,
        local_stability_beta: None,
        counterexamples: Vec::new(),
    };
    let mut sup = f64::NEG_INFINITY;
    let mut any_insertion = false;
    for s in 0..space.len() {
        if log_f[s] == f64::NEG_INFINITY {
            continue;
        }
        let atoms = space.atom_indices(s);
        let n = atoms.len();
        for i in 0..n {
            let mut shrunk = atoms.clone();
            shrunk.remove(i);
            let t = space.index_of_atoms(&shrunk).expect("shorter states are enumerated");
            if log_f[t] == f64::NEG_INFINITY && report.hereditary {
                report.hereditary = false;
                report.hereditary_counterexample = Some((space.state(s), space.state(t)));
            }
        }
        if n >= space.n_max() {
            continue;
        }
        for i in 0..=n {
            for a in 0..space.atoms().len() {
                let mut grown = atoms.clone();
                grown.insert(i, a);
                let t = space.index_of_atoms(&grown).expect("within n_max");
                any_insertion = true;
                let lr = log_f[t] - log_f[s];
                sup = sup.max(lr);
                if let Some(beta) = declared {
                    if lr > beta.ln() + 1e-12 {
                        report.counterexamples.push(format!(
                            "inserting {} at position {} into {} gives ratio {} > {beta}",
                            space.atoms()[a],
                            i + 1,
                            space.state(s),
                            lr.exp()
                        ));
                    }
                }
            }
        }
    }
    if any_insertion {
        report.local_stability_beta = Some(sup.exp());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Poisson;
    use crate::oracle::space::{build_state_space, DEFAULT_STATE_BUDGET};
    use crate::point::Mark;
    use crate::window::{MarkDistribution, Window};

    #[test]
    fn reference_density_has_unit_beta() {
        let space = build_state_space(Window::unit(), 2, 2, vec![(Mark::None, 1.0)], 3, DEFAULT_STATE_BUDGET).unwrap();
        let m = Poisson::new(1.0, Window::unit(), MarkDistribution::None).unwrap();
        let r = stability_check(&m, &space).unwrap();
        assert!(r.hereditary);
        assert_eq!(r.local_stability_beta, Some(1.0));
        assert!(r.declared_bound_holds());
    }
}
