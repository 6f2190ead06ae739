//! Simple sequential inhibition (random sequential adsorption with a random
//! number of arrivals).
//!
//! Arrivals pick locations by a density `pi` on the window but may not settle
//! within distance `r` of an earlier arrival. Given `n` arrivals the sequence
//! density is
//!
//! ```text
//! p_n(x) = c_n prod_k pi(x_k) 1{d(x_k, x_<k) > r} / I(x_<k),
//! I(x) = int_D pi(z) 1{d(z, x) > r} dz,   I(()) = 1,
//! ```
//!
//! and the density with respect to the reference measure is
//! `f(x) = e^{mu(D)} n! q_n p_n(x)`. Here `1 / c_n` is the admissible mass
//! `Z_n`, which is computed exactly on cell grids and is known to be 1 in the
//! continuous setting while the window cannot yet be covered.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::point::{MarkedPoint, PointSequence};
use crate::relation::{SharedRelation, Trivial};
use crate::window::{MarkDistribution, Window};

/// Work limit for the exact admissible-mass enumeration on cell grids.
const ENUMERATION_BUDGET: u64 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub weight: f64,
}

impl WeightedBox {
    fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

/// Location preference `pi` on the window.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LocationDensity {
    #[default]
    Uniform,
    /// Mixture of box-uniform densities.
    Boxes { boxes: Vec<WeightedBox> },
}

impl LocationDensity {
    fn validate(&self, window: &Window) -> Result<()> {
        if let LocationDensity::Boxes { boxes } = self {
            if boxes.is_empty() {
                return Err(Error::argument("box mixture needs at least one box"));
            }
            for b in boxes {
                if !(b.x1 > b.x0 && b.y1 > b.y0 && b.weight > 0.0) {
                    return Err(Error::argument(format!("degenerate box {b:?}")));
                }
                if !(window.contains(b.x0, b.y0) && window.contains(b.x1, b.y1)) {
                    return Err(Error::argument(format!("box {b:?} leaves the window")));
                }
            }
            let total: f64 = boxes.iter().map(|b| b.weight).sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::argument(format!("box weights sum to {total}, not 1")));
            }
        }
        Ok(())
    }

    pub fn density(&self, window: &Window, x: f64, y: f64) -> f64 {
        if !window.contains(x, y) {
            return 0.0;
        }
        match self {
            LocationDensity::Uniform => 1.0 / window.area(),
            LocationDensity::Boxes { boxes } => boxes
                .iter()
                .filter(|b| b.contains(x, y))
                .map(|b| b.weight / b.area())
                .sum(),
        }
    }

    /// Upper bound on `pi`.
    fn sup(&self, window: &Window) -> f64 {
        match self {
            LocationDensity::Uniform => 1.0 / window.area(),
            LocationDensity::Boxes { boxes } => boxes.iter().map(|b| b.weight / b.area()).sum(),
        }
    }
}

/// How `I(x)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdmissibleIntegral {
    /// Deterministic midpoint rule on a square grid with the given step.
    Quadrature { step: f64 },
    /// Exact sums over the centres of an `nx x ny` cell grid; used for
    /// discretised models, where only cell centres are ever occupied.
    Cells { nx: usize, ny: usize },
}

/// Regular grid of integration nodes carrying weights `pi(node) * cell area`.
#[derive(Debug, Clone)]
struct NodeGrid {
    x0: f64,
    y0: f64,
    dx: f64,
    dy: f64,
    nx: usize,
    ny: usize,
    weights: Vec<f64>,
}

impl NodeGrid {
    fn new(window: &Window, pi: &LocationDensity, nx: usize, ny: usize) -> Self {
        let dx = window.width() / nx as f64;
        let dy = window.height() / ny as f64;
        let mut weights = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                let (x, y) = (window.x0 + (ix as f64 + 0.5) * dx, window.y0 + (iy as f64 + 0.5) * dy);
                weights.push(pi.density(window, x, y) * dx * dy);
            }
        }
        NodeGrid {
            x0: window.x0,
            y0: window.y0,
            dx,
            dy,
            nx,
            ny,
            weights,
        }
    }

    fn centre(&self, idx: usize) -> (f64, f64) {
        let (ix, iy) = (idx % self.nx, idx / self.nx);
        (
            self.x0 + (ix as f64 + 0.5) * self.dx,
            self.y0 + (iy as f64 + 0.5) * self.dy,
        )
    }

    /// Removes the nodes within distance `r` of `(x, y)` from `mask`,
    /// returning the weight removed.
    fn cover(&self, mask: &mut [bool], x: f64, y: f64, r: f64) -> f64 {
        let lo = |c: f64, o: f64, d: f64| (((c - r - o) / d).floor().max(0.0)) as usize;
        let hi = |c: f64, o: f64, d: f64, n: usize| ((((c + r - o) / d).ceil()).max(0.0) as usize).min(n);
        let (ix0, ix1) = (lo(x, self.x0, self.dx), hi(x, self.x0, self.dx, self.nx));
        let (iy0, iy1) = (lo(y, self.y0, self.dy), hi(y, self.y0, self.dy, self.ny));
        let r2 = r * r;
        let mut removed = 0.0;
        for iy in iy0..iy1 {
            for ix in ix0..ix1 {
                let idx = iy * self.nx + ix;
                if !mask[idx] {
                    continue;
                }
                let (cx, cy) = self.centre(idx);
                let (ddx, ddy) = (cx - x, cy - y);
                if ddx * ddx + ddy * ddy <= r2 {
                    mask[idx] = false;
                    removed += self.weights[idx];
                }
            }
        }
        removed
    }
}

/// Append intensity of the SSI model, flagged when the normalising-constant
/// ratio is unavailable and `value` holds only `pi(u) 1{...} / I(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsiIntensity {
    pub value: f64,
    pub ratio_known: bool,
}

#[derive(Debug, Clone)]
pub struct Ssi {
    window: Window,
    pi: LocationDensity,
    r: f64,
    q: Vec<f64>,
    integral: AdmissibleIntegral,
    grid: NodeGrid,
    /// `log Z_n`, `None` where unknown.
    log_mass: Vec<Option<f64>>,
}

impl Ssi {
    pub fn new(window: Window, pi: LocationDensity, r: f64, q: Vec<f64>, integral: AdmissibleIntegral) -> Result<Self> {
        window.validate()?;
        pi.validate(&window)?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::argument(format!(
                "inhibition distance must be positive, got {r}"
            )));
        }
        if q.is_empty() || q.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::argument("q must be a non-empty list of non-negative weights"));
        }
        let total: f64 = q.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::argument(format!("q sums to {total}, not 1")));
        }
        let grid = match integral {
            AdmissibleIntegral::Quadrature { step } => {
                if !(step > 0.0 && step.is_finite()) {
                    return Err(Error::argument(format!("quadrature step must be positive, got {step}")));
                }
                let nx = (window.width() / step).ceil().max(1.0) as usize;
                let ny = (window.height() / step).ceil().max(1.0) as usize;
                NodeGrid::new(&window, &pi, nx, ny)
            }
            AdmissibleIntegral::Cells { nx, ny } => {
                if nx == 0 || ny == 0 {
                    return Err(Error::argument("cell grid must be non-empty"));
                }
                NodeGrid::new(&window, &pi, nx, ny)
            }
        };
        let mut model = Ssi {
            window,
            pi,
            r,
            q,
            integral,
            grid,
            log_mass: Vec::new(),
        };
        model.log_mass = match integral {
            AdmissibleIntegral::Cells { .. } => model.exact_masses()?.into_iter().map(|z| Some(z.ln())).collect(),
            AdmissibleIntegral::Quadrature { .. } => {
                let safe = model.uncoverable_len();
                (0..=model.n_max()).map(|n| (n <= safe).then_some(0.0)).collect()
            }
        };
        Ok(model)
    }

    /// Default quadrature step `r / 20`.
    pub fn default_step(r: f64) -> f64 {
        r / 20.0
    }

    /// Supplies the admissible masses `Z_0..Z_{n_max}` (with `Z_0 = 1`) for
    /// continuous runs that may approach jamming.
    pub fn with_normalisers(mut self, masses: &[f64]) -> Result<Self> {
        if masses.len() != self.q.len() {
            return Err(Error::argument(format!(
                "expected {} normalisers, got {}",
                self.q.len(),
                masses.len()
            )));
        }
        if masses.iter().any(|z| !(*z >= 0.0 && *z <= 1.0 + 1e-12)) {
            return Err(Error::argument("admissible masses must lie in [0, 1]"));
        }
        self.log_mass = masses.iter().map(|z| Some(z.ln())).collect();
        Ok(self)
    }

    pub fn n_max(&self) -> usize {
        self.q.len() - 1
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn inhibition_distance(&self) -> f64 {
        self.r
    }

    pub fn integral_mode(&self) -> AdmissibleIntegral {
        self.integral
    }

    /// Whether every `q_0..q_{n_max}` is positive, which makes the density hereditary.
    pub fn has_full_support(&self) -> bool {
        self.q.iter().all(|&v| v > 0.0)
    }

    pub fn location_density(&self, x: f64, y: f64) -> f64 {
        self.pi.density(&self.window, x, y)
    }

    /// Largest `n` for which `n - 1` discs of radius `r` cannot exhaust the
    /// `pi`-mass, so `Z_n = 1` in the continuous model.
    fn uncoverable_len(&self) -> usize {
        let per_disc = self.pi.sup(&self.window) * PI * self.r * self.r;
        if per_disc <= 0.0 {
            return self.n_max();
        }
        // (n - 1) * per_disc < 1
        let bound = (1.0 / per_disc).ceil() as usize;
        bound.min(self.n_max())
    }

    /// `I(points)`; 1 for the empty set.
    pub fn admissible_integral(&self, points: &[MarkedPoint]) -> f64 {
        if points.is_empty() {
            return 1.0;
        }
        let mut mask = vec![true; self.grid.weights.len()];
        for p in points {
            self.grid.cover(&mut mask, p.x, p.y, self.r);
        }
        mask.iter()
            .zip(&self.grid.weights)
            .filter(|(m, _)| **m)
            .map(|(_, w)| w)
            .sum()
    }

    /// Whether no admissible location remains after `seq`.
    pub fn jammed(&self, seq: &PointSequence) -> bool {
        !seq.is_empty() && self.admissible_integral(seq.points()) <= 0.0
    }

    /// `Z_n`, where known.
    pub fn admissible_mass(&self, n: usize) -> Option<f64> {
        self.log_mass.get(n).copied().flatten().map(f64::exp)
    }

    /// `r_n = n c_n q_n / (c_{n-1} q_{n-1})`, zero outside `1..=n_max` or where
    /// the density vanishes, `None` where the masses are unknown.
    pub fn r_coefficient(&self, n: usize) -> Option<f64> {
        if n == 0 || n > self.n_max() || self.q[n] == 0.0 || self.q[n - 1] == 0.0 {
            return Some(0.0);
        }
        let z_n = self.admissible_mass(n)?;
        let z_prev = self.admissible_mass(n - 1)?;
        if z_n == 0.0 {
            return Some(0.0);
        }
        Some(n as f64 * z_prev * self.q[n] / (z_n * self.q[n - 1]))
    }

    /// `log f(seq)`; a domain error beyond `n_max`.
    pub fn ssi_log_density(&self, seq: &PointSequence) -> Result<f64> {
        let n = seq.len();
        if n > self.n_max() {
            return Err(Error::Domain(format!(
                "sequence length {n} exceeds n_max = {}",
                self.n_max()
            )));
        }
        if self.q[n] == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let log_mass = self.log_mass[n].ok_or_else(|| {
            Error::Unsupported(format!(
                "admissible mass Z_{n} is unknown in continuous mode; supply normalisers"
            ))
        })?;
        let mut mask = vec![true; self.grid.weights.len()];
        let mut remaining: f64 = 1.0;
        let mut log_f = self.window.area() + ln_factorial(n as u64) + self.q[n].ln() - log_mass;
        let r2 = self.r * self.r;
        let pts = seq.points();
        for (k, p) in pts.iter().enumerate() {
            let density = self.location_density(p.x, p.y);
            let blocked = pts[..k].iter().any(|e| e.distance_sq(p) <= r2);
            if density <= 0.0 || blocked || remaining <= 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            log_f += density.ln() - remaining.ln();
            if k == 0 {
                remaining = self.grid.weights.iter().sum();
            }
            remaining -= self.grid.cover(&mut mask, p.x, p.y, self.r);
            if remaining < 1e-15 {
                remaining = 0.0;
            }
        }
        Ok(log_f)
    }

    /// Closed-form append intensity
    /// `lambda_{n+1}(u | x) = r_{n+1} / (n + 1) * pi(u) 1{d(u, x) > r} / I(x)`.
    pub fn conditional_intensity(&self, seq: &PointSequence, u: &MarkedPoint) -> Result<SsiIntensity> {
        let known = |value| SsiIntensity {
            value,
            ratio_known: true,
        };
        let n = seq.len();
        if n >= self.n_max() || self.ssi_log_density(seq)? == f64::NEG_INFINITY {
            return Ok(known(0.0));
        }
        let r2 = self.r * self.r;
        if seq.iter().any(|p| p.distance_sq(u) <= r2) {
            return Ok(known(0.0));
        }
        let integral = self.admissible_integral(seq.points());
        if integral <= 0.0 {
            return Ok(known(0.0));
        }
        let ratio_free = self.location_density(u.x, u.y) / integral;
        Ok(match self.r_coefficient(n + 1) {
            Some(rc) => known(rc / (n + 1) as f64 * ratio_free),
            None => SsiIntensity {
                value: ratio_free,
                ratio_known: false,
            },
        })
    }

    /// Exact `Z_0..Z_{n_max}` by enumerating admissible cell sequences.
    fn exact_masses(&self) -> Result<Vec<f64>> {
        let n_max = self.n_max();
        let mut masses = vec![0.0; n_max + 1];
        masses[0] = 1.0;
        let mut mask = vec![true; self.grid.weights.len()];
        let mut work = 0u64;
        self.enumerate(&mut mask, 1.0, 1.0, 1, &mut masses, &mut work)?;
        Ok(masses)
    }

    fn enumerate(
        &self,
        mask: &mut [bool],
        weight: f64,
        remaining: f64,
        level: usize,
        masses: &mut [f64],
        work: &mut u64,
    ) -> Result<()> {
        if level >= masses.len() || remaining <= 0.0 {
            return Ok(());
        }
        for idx in 0..mask.len() {
            let w = self.grid.weights[idx];
            if !mask[idx] || w <= 0.0 {
                continue;
            }
            *work += 1;
            if *work > ENUMERATION_BUDGET {
                return Err(Error::Capacity {
                    what: "admissible-mass enumeration",
                    required: u128::from(*work),
                    limit: u128::from(ENUMERATION_BUDGET),
                });
            }
            let next = weight * w / remaining;
            masses[level] += next;
            if level + 1 < masses.len() {
                let mut child = mask.to_vec();
                let (x, y) = self.grid.centre(idx);
                let base = if level == 1 {
                    self.grid.weights.iter().sum()
                } else {
                    remaining
                };
                let removed = self.grid.cover(&mut child, x, y, self.r);
                let left = base - removed;
                let left = if left < 1e-15 { 0.0 } else { left };
                self.enumerate(&mut child, next, left, level + 1, masses, work)?;
            }
        }
        Ok(())
    }
}

impl Model for Ssi {
    fn name(&self) -> &str {
        "ssi"
    }

    fn window(&self) -> &Window {
        &self.window
    }

    fn marks(&self) -> &MarkDistribution {
        &MarkDistribution::None
    }

    /// Only the trivial relation in general: the append ratio depends on the
    /// whole configuration through `I(x)` and on the length through `r_n`.
    fn relation(&self) -> SharedRelation {
        Arc::new(Trivial)
    }

    fn log_density(&self, seq: &PointSequence) -> Result<f64> {
        if seq.len() > self.n_max() {
            return Ok(f64::NEG_INFINITY);
        }
        self.ssi_log_density(seq)
    }

    fn local_stability_bound(&self) -> Option<f64> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(r: f64, q: Vec<f64>) -> Ssi {
        Ssi::new(
            Window::unit(),
            LocationDensity::Uniform,
            r,
            q,
            AdmissibleIntegral::Quadrature {
                step: Ssi::default_step(r),
            },
        )
        .unwrap()
    }

    fn pt(x: f64, y: f64) -> MarkedPoint {
        MarkedPoint::unmarked(x, y)
    }

    #[test]
    fn empty_sequence_density() {
        let m = uniform(0.1, vec![0.2, 0.3, 0.5]);
        let v = m.ssi_log_density(&PointSequence::empty()).unwrap();
        assert!((v - (1.0 + 0.2f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn single_point_density() {
        let m = uniform(0.1, vec![0.2, 0.3, 0.5]);
        let v = m.ssi_log_density(&vec![pt(0.3, 0.4)].into()).unwrap();
        assert!((v - (1.0 + 0.3f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn close_pair_is_forbidden() {
        let m = uniform(0.1, vec![0.2, 0.3, 0.5]);
        let v = m.ssi_log_density(&vec![pt(0.3, 0.4), pt(0.35, 0.4)].into()).unwrap();
        assert_eq!(v, f64::NEG_INFINITY);
    }

    #[test]
    fn too_long_is_domain_error() {
        let m = uniform(0.1, vec![0.5, 0.5]);
        let seq: PointSequence = vec![pt(0.1, 0.1), pt(0.9, 0.9)].into();
        assert!(matches!(m.ssi_log_density(&seq), Err(Error::Domain(_))));
        assert_eq!(m.log_density(&seq).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn admissible_integral_of_central_disc() {
        let m = uniform(0.1, vec![1.0]);
        assert_eq!(m.admissible_integral(&[]), 1.0);
        let v = m.admissible_integral(&[pt(0.5, 0.5)]);
        assert!((v - (1.0 - PI * 0.01)).abs() < 1e-3, "{v}");
    }

    #[test]
    fn admissible_integral_vanishes_when_covered() {
        let m = uniform(0.3, vec![1.0]);
        let mut pts = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                pts.push(pt(0.1 + 0.2 * i as f64, 0.1 + 0.2 * j as f64));
            }
        }
        assert!(m.admissible_integral(&pts).abs() < 1e-12);
    }

    #[test]
    fn admissible_integral_is_monotone() {
        let m = uniform(0.15, vec![1.0]);
        let pts = [pt(0.2, 0.2), pt(0.8, 0.3), pt(0.5, 0.9), pt(0.21, 0.19)];
        let mut last = 1.0;
        for k in 1..=pts.len() {
            let v = m.admissible_integral(&pts[..k]);
            assert!(v <= last + 1e-15);
            last = v;
        }
    }

    #[test]
    fn intensity_is_zero_when_blocked_or_at_cap() {
        let m = uniform(0.1, vec![0.2, 0.3, 0.5]);
        let seq: PointSequence = vec![pt(0.5, 0.5)].into();
        let near = m.conditional_intensity(&seq, &pt(0.55, 0.5)).unwrap();
        assert_eq!(near.value, 0.0);
        let full: PointSequence = vec![pt(0.1, 0.1), pt(0.9, 0.9)].into();
        assert_eq!(m.conditional_intensity(&full, &pt(0.5, 0.5)).unwrap().value, 0.0);
    }

    #[test]
    fn unknown_normaliser_is_flagged_not_guessed() {
        // A disc of radius 0.4 already carries half the mass: Z_3 is unknown.
        let m = uniform(0.4, vec![0.25, 0.25, 0.25, 0.25]);
        assert!(m.admissible_mass(2).is_some());
        assert!(m.admissible_mass(3).is_none());
        let seq: PointSequence = vec![pt(0.05, 0.05), pt(0.95, 0.95)].into();
        let lam = m.conditional_intensity(&seq, &pt(0.05, 0.95)).unwrap();
        assert!(!lam.ratio_known);
        assert!(lam.value > 0.0);
        assert!(matches!(
            m.ssi_log_density(&vec![pt(0.05, 0.05), pt(0.95, 0.95), pt(0.05, 0.95)].into()),
            Err(Error::Unsupported(_))
        ));
        let m = m.with_normalisers(&[1.0, 1.0, 1.0, 0.5]).unwrap();
        assert!(m.conditional_intensity(&seq, &pt(0.05, 0.95)).unwrap().ratio_known);
    }

    #[test]
    fn point_mass_q_is_not_full_support() {
        assert!(!uniform(0.1, vec![0.0, 0.0, 1.0]).has_full_support());
        assert!(uniform(0.1, vec![0.2, 0.3, 0.5]).has_full_support());
    }

    #[test]
    fn cell_masses_on_four_cells() {
        // 2x2 cells, r inside one cell: only repeats are blocked.
        let m = Ssi::new(
            Window::unit(),
            LocationDensity::Uniform,
            0.25,
            vec![0.1, 0.2, 0.3, 0.2, 0.1, 0.1],
            AdmissibleIntegral::Cells { nx: 2, ny: 2 },
        )
        .unwrap();
        for n in 0..=4 {
            assert!((m.admissible_mass(n).unwrap() - 1.0).abs() < 1e-14, "Z_{n}");
        }
        assert_eq!(m.admissible_mass(5).unwrap(), 0.0);
    }

    #[test]
    fn box_mixture_density() {
        let pi = LocationDensity::Boxes {
            boxes: vec![
                WeightedBox {
                    x0: 0.0,
                    y0: 0.0,
                    x1: 0.5,
                    y1: 1.0,
                    weight: 0.75,
                },
                WeightedBox {
                    x0: 0.5,
                    y0: 0.0,
                    x1: 1.0,
                    y1: 1.0,
                    weight: 0.25,
                },
            ],
        };
        let m = Ssi::new(
            Window::unit(),
            pi,
            0.05,
            vec![1.0],
            AdmissibleIntegral::Quadrature { step: 0.01 },
        )
        .unwrap();
        assert!((m.location_density(0.2, 0.5) - 1.5).abs() < 1e-15);
        assert!((m.location_density(0.8, 0.5) - 0.5).abs() < 1e-15);
        assert_eq!(m.location_density(1.5, 0.5), 0.0);
    }
}
