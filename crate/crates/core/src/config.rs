//! JSON run configuration and model construction from it.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::models::{
    AdmissibleIntegral, LocationDensity, MarkedInteraction, Pairwise, RangeSpec, ScaleFn, ScaledModel,
    ScalingTransform, SoftCore, SoftCoreVariant, Ssi, TemplateProcess,
};
use crate::oracle::DEFAULT_STATE_BUDGET;
use crate::point::{Mark, MarkedPoint, PointSequence};
use crate::window::{MarkDistribution, Window};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Softcore {
        beta: f64,
        gamma: f64,
        marks: MarkDistribution,
        #[serde(default)]
        variant: SoftCoreVariant,
        window: Window,
    },
    Ssi {
        #[serde(default = "uniform_pi")]
        pi: LocationDensity,
        r: f64,
        /// Length weights `q_0..q_{n_max}`. When absent, truncated Poisson
        /// weights on `0..=n_max` with mean parameter `q_mean` (default `n_max`).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_max: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q_mean: Option<f64>,
        /// Quadrature step for `I(x)`; default `r / 20`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        quadrature_resolution: Option<f64>,
        /// Admissible masses `Z_0..Z_{n_max}` for continuous runs.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        normalisers: Option<Vec<f64>>,
        window: Window,
    },
    PairwiseQuadratic {
        beta: f64,
        range: RangeSpec,
        #[serde(default = "no_marks")]
        marks: MarkDistribution,
        window: Window,
    },
    Scaled {
        template: TemplateConfig,
        c1: ScaleFn,
        c2: ScaleFn,
        c_lo: f64,
        c_hi: f64,
        marks: MarkDistribution,
        window: Window,
    },
}

fn uniform_pi() -> LocationDensity {
    LocationDensity::Uniform
}

fn no_marks() -> MarkDistribution {
    MarkDistribution::None
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TemplateConfig {
    MarkedInteraction { beta: f64, gamma: f64, window: Window },
    HardCore { window: Window },
}

impl PartialEq for ScaleFn {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ScaleFn::Constant(a), ScaleFn::Constant(b)) => a == b,
            (ScaleFn::LinearX { a, b }, ScaleFn::LinearX { a: c, b: d }) => a == c && b == d,
            (ScaleFn::LinearY { a, b }, ScaleFn::LinearY { a: c, b: d }) => a == c && b == d,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerConfig {
    Mh {
        steps: u64,
        #[serde(default = "one")]
        record_every: u64,
        #[serde(default)]
        initial: Vec<MarkedPoint>,
    },
    Bd {
        /// Defaults to the model's local stability bound.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
        t_max: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_cap: Option<usize>,
        #[serde(default = "unit_spacing")]
        epoch_spacing: f64,
        #[serde(default)]
        initial: Vec<MarkedPoint>,
    },
}

fn one() -> u64 {
    1
}

fn unit_spacing() -> f64 {
    1.0
}

/// Discretisation and sample sizes for the oracle checks.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub nx: usize,
    pub ny: usize,
    pub n_max: usize,
    /// `(radius, weight)` pairs; inferred for unmarked, labelled and
    /// discrete-mark models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mark_levels: Option<Vec<(f64, f64)>>,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default = "default_mh_steps")]
    pub mh_steps: u64,
    #[serde(default = "default_bd_t_max")]
    pub bd_t_max: f64,
    #[serde(default = "default_bd_spacing")]
    pub bd_epoch_spacing: f64,
}

fn default_budget() -> u64 {
    DEFAULT_STATE_BUDGET as u64
}

fn default_mh_steps() -> u64 {
    1_000_000
}

fn default_bd_t_max() -> f64 {
    1e4
}

fn default_bd_spacing() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Factorise,
    Validate,
    Stats,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Factorise => "factorise",
            Command::Validate => "validate",
            Command::Stats => "stats",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_chain")]
    pub chains: u64,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn one_chain() -> u64 {
    1
}

fn config_error(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl RunConfig {
    /// Parses a run configuration, or the `config` field of an emitted
    /// `meta.json`.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(config_error)?;
        if let Some(inner) = value.get("config").filter(|_| value.get("model").is_none()) {
            return serde_json::from_value(inner.clone()).map_err(config_error);
        }
        serde_json::from_str(text).map_err(config_error)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// SHA-256 of the canonical JSON of the model section.
    pub fn model_hash(&self) -> String {
        let canonical = serde_json::to_vec(&self.model).expect("model config serialises");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn oracle(&self) -> Result<&OracleConfig> {
        self.oracle
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs an \"oracle\" section".into()))
    }

    pub fn sampler(&self) -> Result<&SamplerConfig> {
        self.sampler
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs a \"sampler\" section".into()))
    }
}

/// Truncated Poisson weights `mean^n / n!` on `0..=n_max`, renormalised.
pub fn truncated_poisson(mean: f64, n_max: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n_max + 1);
    let mut term = 1.0;
    for n in 0..=n_max {
        if n > 0 {
            term *= mean / n as f64;
        }
        w.push(term);
    }
    let total: f64 = w.iter().sum();
    let mut q: Vec<f64> = w.iter().map(|v| v / total).collect();
    // Make the weights sum to 1 to the last bit.
    let drift = 1.0 - q.iter().sum::<f64>();
    let top = q
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    q[top] += drift;
    q
}

fn ssi_weights(q: &Option<Vec<f64>>, n_max: Option<usize>, q_mean: Option<f64>) -> Result<Vec<f64>> {
    match (q, n_max) {
        (Some(q), None) => Ok(q.clone()),
        (Some(q), Some(n)) if q.len() == n + 1 => Ok(q.clone()),
        (Some(q), Some(n)) => Err(Error::Config(format!("ssi: q has {} entries but n_max = {n}", q.len()))),
        (None, Some(n)) => {
            let mean = q_mean.unwrap_or(n as f64);
            if !(mean > 0.0 && mean.is_finite()) {
                return Err(Error::Config(format!("ssi: q_mean must be positive, got {mean}")));
            }
            Ok(truncated_poisson(mean, n))
        }
        (None, None) => Err(Error::Config("ssi: give either q or n_max".into())),
    }
}

/// Builds the model. `cells` switches an SSI model to exact cell sums over
/// an `nx x ny` grid, as used on discretised state spaces.
pub fn build_model(cfg: &ModelConfig, cells: Option<(usize, usize)>) -> Result<Arc<dyn Model>> {
    let wrap = |e: Error| match e {
        Error::Argument(m) => Error::Config(format!("{}: {m}", kind_name(cfg))),
        other => other,
    };
    build_model_inner(cfg, cells).map_err(wrap)
}

pub fn kind_name(cfg: &ModelConfig) -> &'static str {
    match cfg {
        ModelConfig::Softcore { .. } => "softcore",
        ModelConfig::Ssi { .. } => "ssi",
        ModelConfig::PairwiseQuadratic { .. } => "pairwise_quadratic",
        ModelConfig::Scaled { .. } => "scaled",
    }
}

fn build_model_inner(cfg: &ModelConfig, cells: Option<(usize, usize)>) -> Result<Arc<dyn Model>> {
    Ok(match cfg {
        ModelConfig::Softcore {
            beta,
            gamma,
            marks,
            variant,
            window,
        } => Arc::new(SoftCore::with_variant(*beta, *gamma, marks.clone(), *window, *variant)?),
        ModelConfig::Ssi {
            pi,
            r,
            q,
            n_max,
            q_mean,
            quadrature_resolution,
            normalisers,
            window,
        } => {
            let weights = ssi_weights(q, *n_max, *q_mean)?;
            let integral = match cells {
                Some((nx, ny)) => AdmissibleIntegral::Cells { nx, ny },
                None => AdmissibleIntegral::Quadrature {
                    step: quadrature_resolution.unwrap_or_else(|| Ssi::default_step(*r)),
                },
            };
            let mut model = Ssi::new(*window, pi.clone(), *r, weights, integral)?;
            if let (Some(z), None) = (normalisers, cells) {
                model = model.with_normalisers(z)?;
            }
            Arc::new(model)
        }
        ModelConfig::PairwiseQuadratic {
            beta,
            range,
            marks,
            window,
        } => Arc::new(Pairwise::quadratic(*beta, *range, marks.clone(), *window)?),
        ModelConfig::Scaled {
            template,
            c1,
            c2,
            c_lo,
            c_hi,
            marks,
            window,
        } => {
            let template: Arc<dyn TemplateProcess> = match template {
                TemplateConfig::MarkedInteraction { beta, gamma, window } => {
                    Arc::new(MarkedInteraction::new(*beta, *gamma, *window)?)
                }
                TemplateConfig::HardCore { window } => Arc::new(MarkedInteraction::hard_core(*window)?),
            };
            let t = ScalingTransform::new(c1.clone(), c2.clone(), *c_lo, *c_hi, template)?;
            Arc::new(ScaledModel::new(t, *window, marks.clone())?)
        }
    })
}

pub fn model_window(cfg: &ModelConfig) -> Window {
    match cfg {
        ModelConfig::Softcore { window, .. }
        | ModelConfig::Ssi { window, .. }
        | ModelConfig::PairwiseQuadratic { window, .. }
        | ModelConfig::Scaled { window, .. } => *window,
    }
}

/// Mark levels for the oracle grid: explicit, or read off the model's mark
/// distribution when it is finite.
pub fn oracle_mark_levels(oracle: &OracleConfig, marks: &MarkDistribution) -> Result<Vec<(Mark, f64)>> {
    if let Some(levels) = &oracle.mark_levels {
        if levels.is_empty() {
            return Err(Error::Config("oracle.mark_levels is empty".into()));
        }
        return Ok(levels.iter().map(|&(r, w)| (Mark::Radius(r), w)).collect());
    }
    match marks {
        MarkDistribution::None => Ok(vec![(Mark::None, 1.0)]),
        MarkDistribution::Labels { count } => Ok((0..*count).map(|l| (Mark::Label(l), 1.0 / *count as f64)).collect()),
        MarkDistribution::Discrete { levels } => Ok(levels.iter().map(|&(r, w)| (Mark::Radius(r), w)).collect()),
        _ => Err(Error::Config(
            "oracle.mark_levels is required for continuous mark distributions".into(),
        )),
    }
}

pub fn initial_state(points: &[MarkedPoint]) -> Result<PointSequence> {
    for p in points {
        p.validate().map_err(|e| Error::Config(format!("initial state: {e}")))?;
    }
    Ok(points.to_vec().into())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SOFTCORE: &str = r#"{
        "model": {"kind": "softcore", "beta": 2.0, "gamma": 0.5,
                  "marks": {"kind": "exponential", "rate": 2.0},
                  "window": {"x0": 0, "y0": 0, "x1": 1, "y1": 1}},
        "sampler": {"kind": "mh", "steps": 10},
        "seed": 3
    }"#;

    #[test]
    fn parses_and_builds() {
        let cfg = RunConfig::from_json(SOFTCORE).unwrap();
        assert_eq!(cfg.seed, 3);
        let m = build_model(&cfg.model, None).unwrap();
        assert_eq!(m.name(), "softcore");
        assert_eq!(cfg.model_hash().len(), 64);
    }

    #[test]
    fn unknown_fields_and_kinds_are_rejected() {
        let bad = SOFTCORE.replace("\"gamma\"", "\"gama\"");
        assert!(matches!(RunConfig::from_json(&bad), Err(Error::Config(_))));
        let bad = SOFTCORE.replace("\"softcore\"", "\"strauss\"");
        assert!(matches!(RunConfig::from_json(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn meta_wrapper_is_accepted() {
        let cfg = RunConfig::from_json(SOFTCORE).unwrap();
        let meta = serde_json::json!({"version": "x", "config": cfg});
        assert_eq!(RunConfig::from_json(&meta.to_string()).unwrap(), cfg);
    }

    #[test]
    fn invalid_parameters_are_config_errors() {
        let bad = SOFTCORE.replace("\"gamma\": 0.5", "\"gamma\": 1.5");
        let cfg = RunConfig::from_json(&bad).unwrap();
        assert!(matches!(build_model(&cfg.model, None), Err(Error::Config(_))));
    }

    #[test]
    fn truncated_poisson_weights() {
        let q = truncated_poisson(2.0, 3);
        assert_eq!(q.iter().sum::<f64>(), 1.0);
        assert!((q[1] / q[0] - 2.0).abs() < 1e-12);
        assert!((q[3] / q[2] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ssi_q_defaults() {
        let text = r#"{"model": {"kind": "ssi", "r": 0.1, "n_max": 4,
            "window": {"x0": 0, "y0": 0, "x1": 1, "y1": 1}}}"#;
        let cfg = RunConfig::from_json(text).unwrap();
        assert!(build_model(&cfg.model, None).is_ok());
    }
}
