//! Spatial birth-death process simulated by thinning a dominating process
//! with birth rate `beta / (n + 1)` per position and unit death rates.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::model::{seq_conditional_intensity, Model};
use crate::point::PointSequence;
use crate::samplers::rng::chain_rng;
use crate::samplers::trace::{EventKind, RunTrace, TraceEvent};

/// `b_i(y, u) = f(s_i(y, u)) / ((n + 1) f(y))` with `0/0 = 0`.
pub fn bd_birth_rate(
    model: &dyn Model,
    seq: &PointSequence,
    position: usize,
    u: &crate::point::MarkedPoint,
) -> Result<f64> {
    seq_conditional_intensity(model, seq, position, u)
}

#[derive(Debug, Clone)]
pub struct BdConfig {
    /// Local stability bound used by the dominating process.
    pub beta: f64,
    pub t_max: f64,
    /// Length cap; defaults to `10 beta mu(D) + 100`.
    pub n_cap: Option<usize>,
    pub seed: u64,
    pub stream: u64,
    /// Spacing of the readout epochs `t_max / 2 + k * spacing`.
    pub epoch_spacing: f64,
    pub initial: PointSequence,
    pub record_events: bool,
}

impl BdConfig {
    pub fn new(beta: f64, t_max: f64, seed: u64) -> Self {
        BdConfig {
            beta,
            t_max,
            n_cap: None,
            seed,
            stream: 0,
            epoch_spacing: 1.0,
            initial: PointSequence::empty(),
            record_events: true,
        }
    }

    pub fn default_n_cap(beta: f64, mu: f64) -> usize {
        (10.0 * beta * mu).ceil() as usize + 100
    }
}

/// Runs until `t_max`, reporting the state at every readout epoch to
/// `observe(t, state)`.
pub fn bd_simulate_observed(
    model: &dyn Model,
    cfg: &BdConfig,
    mut observe: impl FnMut(f64, &PointSequence),
) -> Result<RunTrace> {
    let beta = cfg.beta;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::argument(format!(
            "birth-death beta must be positive, got {beta}"
        )));
    }
    if !(cfg.t_max >= 0.0 && cfg.t_max.is_finite()) {
        return Err(Error::argument(format!(
            "t_max must be finite and non-negative, got {}",
            cfg.t_max
        )));
    }
    if cfg.epoch_spacing.is_nan() || cfg.epoch_spacing <= 0.0 {
        return Err(Error::argument("epoch spacing must be positive"));
    }
    if let Some(declared) = model.local_stability_bound() {
        if beta < declared {
            log::warn!("birth-death beta {beta} is below the model's declared bound {declared}");
        }
    }
    if model.log_density(&cfg.initial)? == f64::NEG_INFINITY {
        return Err(Error::contract("initial state has zero density"));
    }
    let mu = model.window().area();
    let n_cap = cfg.n_cap.unwrap_or_else(|| BdConfig::default_n_cap(beta, mu));
    let birth_total = beta * mu;
    let log_beta = beta.ln();

    let mut rng = chain_rng(cfg.seed, cfg.stream);
    let mut state = cfg.initial.clone();
    let mut events = Vec::new();
    let mut truncation = None;
    let mut t = 0.0;
    let mut epoch_k = 0u64;
    let epoch = |k: u64| cfg.t_max / 2.0 + k as f64 * cfg.epoch_spacing;
    let mut next_epoch = epoch(0);

    loop {
        let rate = birth_total + state.len() as f64;
        let dt = Exp::new(rate).expect("positive rate").sample(&mut rng);
        let t_next = t + dt;
        while next_epoch < t_next && next_epoch <= cfg.t_max {
            observe(next_epoch, &state);
            epoch_k += 1;
            next_epoch = epoch(epoch_k);
        }
        if t_next > cfg.t_max {
            break;
        }
        t = t_next;
        let n = state.len();
        if rng.random::<f64>() * rate < birth_total {
            let i = rng.random_range(1..=n + 1);
            let u = model.sample_point(&mut rng);
            if n + 1 > n_cap {
                let msg = format!("length cap {n_cap} reached at t = {t}");
                log::warn!("{msg}");
                truncation = Some(msg);
                break;
            }
            let log_retention = model.log_insertion_ratio(&state, i, &u)? - log_beta;
            if log_retention > 1e-12 {
                return Err(Error::contract(format!(
                    "retention probability {} exceeds 1: beta = {beta} is not a local stability bound at {state}",
                    log_retention.exp()
                )));
            }
            let accepted = rng.random::<f64>().ln() < log_retention;
            if accepted {
                state.insert_in_place(i, u);
            }
            if cfg.record_events {
                events.push(TraceEvent {
                    t_or_step: t,
                    kind: EventKind::Birth,
                    position: Some(i),
                    point: Some(u),
                    accepted,
                    n_after: state.len(),
                });
            }
        } else {
            let i = rng.random_range(1..=n);
            let removed = state.remove_in_place(i);
            if cfg.record_events {
                events.push(TraceEvent {
                    t_or_step: t,
                    kind: EventKind::Death,
                    position: Some(i),
                    point: Some(removed),
                    accepted: true,
                    n_after: state.len(),
                });
            }
        }
    }
    if truncation.is_none() {
        while next_epoch <= cfg.t_max {
            observe(next_epoch, &state);
            epoch_k += 1;
            next_epoch = epoch(epoch_k);
        }
    }
    Ok(RunTrace {
        seed: cfg.seed,
        stream: cfg.stream,
        initial: cfg.initial.clone(),
        events,
        final_state: state,
        complete: cfg.record_events,
        truncation,
    })
}

pub fn bd_simulate(model: &dyn Model, cfg: &BdConfig) -> Result<RunTrace> {
    bd_simulate_observed(model, cfg, |_, _| {})
}

/// The states at the readout epochs.
pub fn bd_epoch_states(model: &dyn Model, cfg: &BdConfig) -> Result<(RunTrace, Vec<PointSequence>)> {
    let mut states = Vec::new();
    let trace = bd_simulate_observed(model, cfg, |_, s| states.push(s.clone()))?;
    Ok((trace, states))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Poisson, SoftCore};
    use crate::point::MarkedPoint;
    use crate::window::{MarkDistribution, Window};

    #[test]
    fn birth_rate_matches_worked_example() {
        let m = SoftCore::new(
            2.0,
            0.5,
            MarkDistribution::Exponential { rate: 1.0 },
            Window::new(-5.0, -5.0, 5.0, 5.0).unwrap(),
        )
        .unwrap();
        let seq: PointSequence = vec![MarkedPoint::with_radius(0.0, 0.0, 1.0)].into();
        let u = MarkedPoint::with_radius(0.5, 0.0, 0.3);
        assert!((bd_birth_rate(&m, &seq, 2, &u).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn epochs_and_replay() {
        let m = Poisson::new(3.0, Window::unit(), MarkDistribution::None).unwrap();
        let mut cfg = BdConfig::new(3.0, 20.0, 5);
        cfg.epoch_spacing = 0.5;
        let mut times = Vec::new();
        let trace = bd_simulate_observed(&m, &cfg, |t, _| times.push(t)).unwrap();
        assert_eq!(times.len(), 21);
        assert_eq!(times[0], 10.0);
        assert_eq!(trace.replay().unwrap(), trace.final_state);
        assert!(trace.truncation.is_none());
    }

    #[test]
    fn beta_below_model_bound_is_contract_error() {
        let m = Poisson::new(3.0, Window::unit(), MarkDistribution::None).unwrap();
        let cfg = BdConfig::new(1.0, 50.0, 1);
        assert!(matches!(bd_simulate(&m, &cfg), Err(Error::ModelContract(_))));
    }

    #[test]
    fn length_cap_is_recorded() {
        let m = Poisson::new(50.0, Window::unit(), MarkDistribution::None).unwrap();
        let mut cfg = BdConfig::new(50.0, 100.0, 3);
        cfg.n_cap = Some(5);
        let trace = bd_simulate(&m, &cfg).unwrap();
        assert!(trace.truncation.is_some());
        assert!(trace.final_state.len() <= 5);
    }

    #[test]
    fn hard_territories_are_respected() {
        let m = SoftCore::new(
            30.0,
            0.0,
            MarkDistribution::Uniform { lo: 0.05, hi: 0.15 },
            Window::unit(),
        )
        .unwrap();
        let cfg = BdConfig::new(30.0, 40.0, 11);
        let (_, states) = bd_epoch_states(&m, &cfg).unwrap();
        for s in states {
            let pts = s.points();
            for i in 0..pts.len() {
                for j in 0..i {
                    assert!(pts[i].distance(&pts[j]) > pts[j].mark.radius().unwrap());
                }
            }
        }
    }
}
