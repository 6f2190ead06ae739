//! Observation window and mark distributions.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, LogNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::point::{Mark, MarkedPoint};

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]` carrying Lebesgue measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Window {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        let w = Window { x0, y0, x1, y1 };
        w.validate()?;
        Ok(w)
    }

    pub fn unit() -> Self {
        Window {
            x0: 0.0,
            y0: 0.0,
            x1: 1.0,
            y1: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x0, self.y0, self.x1, self.y1].iter().all(|v| v.is_finite());
        if !finite || self.x1 <= self.x0 || self.y1 <= self.y0 {
            return Err(Error::argument(format!(
                "window must have x0 < x1 and y0 < y1, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    /// Lebesgue measure of the window, `mu(D)`.
    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    pub fn sample_location<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let x = self.x0 + self.width() * rng.random::<f64>();
        let y = self.y0 + self.height() * rng.random::<f64>();
        (x, y)
    }
}

/// Mark probability measure `mu_M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarkDistribution {
    /// Unmarked points.
    None,
    Exponential {
        rate: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Gamma with `shape >= 1`, so the density is bounded at the origin.
    Gamma {
        shape: f64,
        rate: f64,
    },
    #[serde(rename = "lognormal")]
    LogNormal {
        mu: f64,
        sigma: f64,
    },
    /// Uniform over labels `0..count`.
    Labels {
        count: u32,
    },
    /// Finitely many radius atoms `(radius, weight)`.
    Discrete {
        levels: Vec<(f64, f64)>,
    },
}

const DENSITY_TOLERANCE: f64 = 1e-6;

impl MarkDistribution {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::argument(msg));
        match *self {
            MarkDistribution::None => return Ok(()),
            MarkDistribution::Exponential { rate } if !(rate > 0.0 && rate.is_finite()) => {
                return bad(format!("exponential rate must be positive, got {rate}"))
            }
            MarkDistribution::Uniform { lo, hi } if !(lo >= 0.0 && hi > lo && hi.is_finite()) => {
                return bad(format!("uniform marks need 0 <= lo < hi, got [{lo}, {hi}]"))
            }
            MarkDistribution::Gamma { shape, rate } if !(shape >= 1.0 && rate > 0.0) => {
                return bad(format!(
                    "gamma marks need shape >= 1 and rate > 0, got ({shape}, {rate})"
                ))
            }
            MarkDistribution::LogNormal { sigma, mu } if !(sigma > 0.0 && mu.is_finite()) => {
                return bad(format!("lognormal sigma must be positive, got {sigma}"))
            }
            MarkDistribution::Labels { count: 0 } => return bad("label set must be non-empty".into()),
            MarkDistribution::Labels { .. } => return Ok(()),
            MarkDistribution::Discrete { ref levels } => {
                if levels.is_empty() {
                    return bad("discrete marks need at least one level".into());
                }
                if levels.iter().any(|&(r, w)| !(r > 0.0 && w > 0.0 && r.is_finite())) {
                    return bad("discrete mark levels need positive radii and weights".into());
                }
                let total: f64 = levels.iter().map(|l| l.1).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return bad(format!("discrete mark weights sum to {total}, not 1"));
                }
                return Ok(());
            }
            _ => {}
        }
        let mass = self.integrate_density();
        if (mass - 1.0).abs() > DENSITY_TOLERANCE {
            return Err(Error::argument(format!(
                "mark density integrates to {mass}, not 1 (tolerance {DENSITY_TOLERANCE})"
            )));
        }
        Ok(())
    }

    /// Density `g(m)` on the positive reals, for continuous families.
    pub fn density(&self, m: f64) -> Option<f64> {
        if m <= 0.0 {
            return match self {
                MarkDistribution::Exponential { .. }
                | MarkDistribution::Gamma { .. }
                | MarkDistribution::LogNormal { .. }
                | MarkDistribution::Uniform { .. } => Some(0.0),
                _ => None,
            };
        }
        match *self {
            MarkDistribution::Exponential { rate } => Some(rate * (-rate * m).exp()),
            MarkDistribution::Uniform { lo, hi } => Some(if m >= lo && m <= hi { 1.0 / (hi - lo) } else { 0.0 }),
            MarkDistribution::Gamma { shape, rate } => {
                Some(((shape - 1.0) * m.ln() - rate * m + shape * rate.ln() - ln_gamma(shape)).exp())
            }
            MarkDistribution::LogNormal { mu, sigma } => {
                let z = (m.ln() - mu) / sigma;
                Some((-0.5 * z * z).exp() / (m * sigma * (2.0 * std::f64::consts::PI).sqrt()))
            }
            _ => None,
        }
    }

    /// Total mass of the density by adaptive Simpson quadrature.
    pub fn integrate_density(&self) -> f64 {
        match *self {
            MarkDistribution::Uniform { lo, hi } => {
                let g = |m: f64| self.density(m).unwrap_or(0.0);
                adaptive_simpson(&g, lo, hi, 1e-10, 40)
            }
            MarkDistribution::Exponential { .. }
            | MarkDistribution::Gamma { .. }
            | MarkDistribution::LogNormal { .. } => {
                // m = t / (1 - t) maps (0, 1) onto (0, inf).
                let g = |t: f64| {
                    if t <= 0.0 || t >= 1.0 {
                        return 0.0;
                    }
                    let s = 1.0 - t;
                    self.density(t / s).unwrap_or(0.0) / (s * s)
                };
                adaptive_simpson(&g, 0.0, 1.0, 1e-10, 50)
            }
            _ => 1.0,
        }
    }

    pub fn is_marked(&self) -> bool {
        !matches!(self, MarkDistribution::None)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Mark {
        match *self {
            MarkDistribution::None => Mark::None,
            MarkDistribution::Exponential { rate } => Mark::Radius(Exp::new(rate).expect("validated rate").sample(rng)),
            MarkDistribution::Uniform { lo, hi } => Mark::Radius(lo + (hi - lo) * rng.random::<f64>()),
            MarkDistribution::Gamma { shape, rate } => {
                Mark::Radius(Gamma::new(shape, 1.0 / rate).expect("validated gamma").sample(rng))
            }
            MarkDistribution::LogNormal { mu, sigma } => {
                Mark::Radius(LogNormal::new(mu, sigma).expect("validated lognormal").sample(rng))
            }
            MarkDistribution::Labels { count } => Mark::Label(rng.random_range(0..count)),
            MarkDistribution::Discrete { ref levels } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for &(r, w) in levels {
                    acc += w;
                    if u < acc {
                        return Mark::Radius(r);
                    }
                }
                Mark::Radius(levels[levels.len() - 1].0)
            }
        }
    }

    /// Whether `mark` is of the kind this distribution produces.
    pub fn admits(&self, mark: &Mark) -> bool {
        match (self, mark) {
            (MarkDistribution::None, Mark::None) => true,
            (MarkDistribution::Labels { count }, Mark::Label(l)) => l < count,
            (MarkDistribution::Discrete { levels }, Mark::Radius(r)) => levels.iter().any(|l| l.0 == *r),
            (
                MarkDistribution::Exponential { .. }
                | MarkDistribution::Uniform { .. }
                | MarkDistribution::Gamma { .. }
                | MarkDistribution::LogNormal { .. },
                Mark::Radius(r),
            ) => *r > 0.0,
            _ => false,
        }
    }
}

/// Draws a point uniformly on `window` with a mark from `marks`.
pub fn sample_point<R: Rng + ?Sized>(window: &Window, marks: &MarkDistribution, rng: &mut R) -> MarkedPoint {
    let (x, y) = window.sample_location(rng);
    MarkedPoint::new(x, y, marks.sample(rng))
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
    }
    // Split into a few panels first so narrow peaks are not skipped.
    let panels = 16;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            recurse(
                f,
                lo,
                hi,
                fa,
                fm,
                fb,
                simpson(fa, fm, fb, lo, hi),
                eps / panels as f64,
                depth,
            )
        })
        .sum()
}
