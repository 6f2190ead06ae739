//! Finite discretisation of the sequence space: cell centres times mark
//! levels, all sequences up to a length cap.

use std::collections::HashMap;

use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::point::{Mark, MarkedPoint, PointKey, PointSequence};
use crate::window::Window;

pub const DEFAULT_STATE_BUDGET: u128 = 1_000_000;

/// Every sequence of length `0..=n_max` over `atoms = cells x mark levels`,
/// ordered by length and then lexicographically by atom index.
#[derive(Debug, Clone)]
pub struct DiscreteStateSpace {
    window: Window,
    nx: usize,
    ny: usize,
    mark_levels: Vec<(Mark, f64)>,
    n_max: usize,
    atoms: Vec<MarkedPoint>,
    atom_log_mass: Vec<f64>,
    atom_lookup: HashMap<PointKey, usize>,
    /// First state index of each length, plus the total at the end.
    offsets: Vec<usize>,
}

/// Number of states `sum_{n <= n_max} a^n`, or `None` on overflow.
pub fn state_count(atoms: usize, n_max: usize) -> Option<u128> {
    let mut total: u128 = 0;
    let mut term: u128 = 1;
    for n in 0..=n_max {
        if n > 0 {
            term = term.checked_mul(atoms as u128)?;
        }
        total = total.checked_add(term)?;
    }
    Some(total)
}

/// Builds the space over an `nx x ny` grid of cell centres of `window`.
/// `mark_levels` pairs each mark with its probability; pass
/// `[(Mark::None, 1.0)]` for unmarked models.
pub fn build_state_space(
    window: Window,
    nx: usize,
    ny: usize,
    mark_levels: Vec<(Mark, f64)>,
    n_max: usize,
    budget: u128,
) -> Result<DiscreteStateSpace> {
    window.validate()?;
    if nx == 0 || ny == 0 {
        return Err(Error::argument("cell grid must be non-empty"));
    }
    if mark_levels.is_empty() {
        return Err(Error::argument("at least one mark level is required"));
    }
    if mark_levels.iter().any(|(_, w)| !(*w > 0.0 && w.is_finite())) {
        return Err(Error::argument("mark level weights must be positive"));
    }
    let total: f64 = mark_levels.iter().map(|(_, w)| w).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::argument(format!("mark level weights sum to {total}, not 1")));
    }
    let k = nx * ny;
    let a = k * mark_levels.len();
    let required = state_count(a, n_max).unwrap_or(u128::MAX);
    if required > budget {
        return Err(Error::Capacity {
            what: "discrete state space",
            required,
            limit: budget,
        });
    }

    let (dx, dy) = (window.width() / nx as f64, window.height() / ny as f64);
    let cell_log_mass = (dx * dy).ln();
    let mut atoms = Vec::with_capacity(a);
    let mut atom_log_mass = Vec::with_capacity(a);
    for iy in 0..ny {
        for ix in 0..nx {
            let (x, y) = (window.x0 + (ix as f64 + 0.5) * dx, window.y0 + (iy as f64 + 0.5) * dy);
            for &(mark, w) in &mark_levels {
                atoms.push(MarkedPoint::new(x, y, mark));
                atom_log_mass.push(cell_log_mass + w.ln());
            }
        }
    }
    let mut offsets = Vec::with_capacity(n_max + 2);
    let mut acc = 0usize;
    let mut term = 1usize;
    for n in 0..=n_max {
        if n > 0 {
            term *= a;
        }
        offsets.push(acc);
        acc += term;
    }
    offsets.push(acc);
    let atom_lookup = atoms.iter().enumerate().map(|(i, p)| (p.key(), i)).collect();
    Ok(DiscreteStateSpace {
        window,
        nx,
        ny,
        mark_levels,
        n_max,
        atoms,
        atom_log_mass,
        atom_lookup,
        offsets,
    })
}

impl DiscreteStateSpace {
    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn mark_levels(&self) -> &[(Mark, f64)] {
        &self.mark_levels
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn atoms(&self) -> &[MarkedPoint] {
        &self.atoms
    }

    /// `log(mu(cell) * mark weight)` per atom.
    pub fn atom_log_mass(&self, atom: usize) -> f64 {
        self.atom_log_mass[atom]
    }

    /// Probability of drawing each atom from the normalised reference measure.
    pub fn atom_probability(&self, atom: usize) -> f64 {
        (self.atom_log_mass[atom] - self.window.area().ln()).exp()
    }

    pub fn cell_measure(&self) -> f64 {
        self.window.area() / (self.nx * self.ny) as f64
    }

    pub fn len(&self) -> usize {
        self.offsets[self.n_max + 1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index range of the states of length `n`.
    pub fn length_range(&self, n: usize) -> std::ops::Range<usize> {
        self.offsets[n]..self.offsets[n + 1]
    }

    pub fn length_of(&self, index: usize) -> usize {
        self.offsets.partition_point(|&o| o <= index) - 1
    }

    /// Atom indices of state `index`.
    pub fn atom_indices(&self, index: usize) -> Vec<usize> {
        let n = self.length_of(index);
        let a = self.atoms.len();
        let mut rest = index - self.offsets[n];
        let mut out = vec![0; n];
        for slot in out.iter_mut().rev() {
            *slot = rest % a;
            rest /= a;
        }
        out
    }

    pub fn state(&self, index: usize) -> PointSequence {
        self.atom_indices(index).into_iter().map(|i| self.atoms[i]).collect()
    }

    pub fn states(&self) -> impl Iterator<Item = PointSequence> + '_ {
        (0..self.len()).map(|i| self.state(i))
    }

    pub fn atom_index(&self, p: &MarkedPoint) -> Option<usize> {
        self.atom_lookup.get(&p.key()).copied()
    }

    pub fn index_of_atoms(&self, atoms: &[usize]) -> Option<usize> {
        let n = atoms.len();
        if n > self.n_max {
            return None;
        }
        let a = self.atoms.len();
        let mut rest = 0usize;
        for &i in atoms {
            if i >= a {
                return None;
            }
            rest = rest * a + i;
        }
        Some(self.offsets[n] + rest)
    }

    /// Index of `seq`, or `None` when it is longer than `n_max` or leaves the atoms.
    pub fn index_of(&self, seq: &PointSequence) -> Option<usize> {
        let atoms = seq.iter().map(|p| self.atom_index(p)).collect::<Option<Vec<_>>>()?;
        self.index_of_atoms(&atoms)
    }

    /// `log nu`-weight `-mu(D) - log n! + sum log(mu(cell) w(mark))`.
    pub fn log_nu_weight(&self, index: usize) -> f64 {
        let atoms = self.atom_indices(index);
        let n = atoms.len() as u64;
        atoms.iter().fold(-self.window.area() - ln_factorial(n), |acc, &i| {
            acc + self.atom_log_mass[i]
        })
    }
}
