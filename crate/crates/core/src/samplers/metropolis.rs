//! Metropolis-Hastings birth/death chain on sequences, restricted to the
//! positive-density set.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::point::PointSequence;
use crate::samplers::rng::chain_rng;
use crate::samplers::trace::{EventKind, RunTrace, TraceEvent};

#[derive(Debug, Clone)]
pub struct MhConfig {
    pub steps: u64,
    pub seed: u64,
    pub stream: u64,
    pub initial: PointSequence,
    /// Record the event of every `record_every`-th step; 1 records all
    /// (replayable), 0 records none.
    pub record_every: u64,
}

impl MhConfig {
    pub fn new(steps: u64, seed: u64) -> Self {
        MhConfig {
            steps,
            seed,
            stream: 0,
            initial: PointSequence::empty(),
            record_every: 1,
        }
    }
}

/// One proposal and its outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct MhEvent {
    pub kind: EventKind,
    pub position: Option<usize>,
    pub point: Option<crate::point::MarkedPoint>,
    pub accepted: bool,
    /// Acceptance probability of the proposal (1 for idle moves).
    pub alpha: f64,
}

/// Birth: `log alpha = log f(s_i) - log f + log mu(D) - log(n + 1)`.
/// Death: `log alpha = log f(y_(-i)) - log f + log n - log mu(D)`.
fn step_in_h(
    model: &dyn Model,
    seq: &PointSequence,
    rng: &mut dyn RngCore,
    log_mu: f64,
) -> Result<(PointSequence, MhEvent)> {
    let n = seq.len();
    if rng.random::<f64>() < 0.5 {
        let i = rng.random_range(1..=n + 1);
        let u = model.sample_point(rng);
        let lr = model.log_insertion_ratio(seq, i, &u)?;
        let log_alpha = (lr + log_mu - ((n + 1) as f64).ln()).min(0.0);
        let accepted = rng.random::<f64>().ln() < log_alpha;
        let next = if accepted { seq.insert_at(i, u)? } else { seq.clone() };
        Ok((
            next,
            MhEvent {
                kind: EventKind::Birth,
                position: Some(i),
                point: Some(u),
                accepted,
                alpha: log_alpha.exp(),
            },
        ))
    } else if n == 0 {
        Ok((
            seq.clone(),
            MhEvent {
                kind: EventKind::Idle,
                position: None,
                point: None,
                accepted: false,
                alpha: 1.0,
            },
        ))
    } else {
        let i = rng.random_range(1..=n);
        let removed = seq.points()[i - 1];
        let shrunk = seq.remove_at(i)?;
        // f(y_(-i)) / f(y) = 1 / [f(y) / f(y_(-i))]; a zero numerator blocks the move.
        let back = model.log_insertion_ratio(&shrunk, i, &removed)?;
        let log_alpha = if back == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            (-back + (n as f64).ln() - log_mu).min(0.0)
        };
        let accepted = rng.random::<f64>().ln() < log_alpha;
        let next = if accepted { shrunk } else { seq.clone() };
        Ok((
            next,
            MhEvent {
                kind: EventKind::Death,
                position: Some(i),
                point: Some(removed),
                accepted,
                alpha: log_alpha.exp(),
            },
        ))
    }
}

/// One transition from `seq`, which must have positive density.
pub fn mh_step(model: &dyn Model, seq: &PointSequence, rng: &mut dyn RngCore) -> Result<(PointSequence, MhEvent)> {
    if model.log_density(seq)? == f64::NEG_INFINITY {
        return Err(Error::contract(format!("chain state {seq} has zero density")));
    }
    step_in_h(model, seq, rng, model.window().area().ln())
}

/// Runs the chain, passing the state after every step to `observe(step, state)`.
pub fn mh_run_observed(
    model: &dyn Model,
    cfg: &MhConfig,
    mut observe: impl FnMut(u64, &PointSequence),
) -> Result<RunTrace> {
    if model.log_density(&cfg.initial)? == f64::NEG_INFINITY {
        return Err(Error::contract("initial state has zero density"));
    }
    let log_mu = model.window().area().ln();
    let mut rng = chain_rng(cfg.seed, cfg.stream);
    let mut state = cfg.initial.clone();
    let mut events = Vec::new();
    for step in 1..=cfg.steps {
        let (next, ev) = step_in_h(model, &state, &mut rng, log_mu)?;
        state = next;
        if cfg.record_every > 0 && step % cfg.record_every == 0 {
            events.push(TraceEvent {
                t_or_step: step as f64,
                kind: ev.kind,
                position: ev.position,
                point: ev.point,
                accepted: ev.accepted,
                n_after: state.len(),
            });
        }
        observe(step, &state);
    }
    Ok(RunTrace {
        seed: cfg.seed,
        stream: cfg.stream,
        initial: cfg.initial.clone(),
        events,
        final_state: state,
        complete: cfg.record_every == 1 || cfg.steps == 0,
        truncation: None,
    })
}

pub fn mh_run(model: &dyn Model, cfg: &MhConfig) -> Result<RunTrace> {
    mh_run_observed(model, cfg, |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::SoftCore;
    use crate::point::MarkedPoint;
    use crate::window::{MarkDistribution, Window};

    fn softcore() -> SoftCore {
        SoftCore::new(2.0, 0.5, MarkDistribution::Exponential { rate: 1.0 }, Window::unit()).unwrap()
    }

    #[test]
    fn zero_steps_keep_initial() {
        let mut cfg = MhConfig::new(0, 1);
        cfg.initial = vec![MarkedPoint::with_radius(0.5, 0.5, 0.1)].into();
        let t = mh_run(&softcore(), &cfg).unwrap();
        assert_eq!(t.final_state, cfg.initial);
        assert!(t.events.is_empty());
    }

    #[test]
    fn same_seed_same_trace() {
        let cfg = MhConfig::new(2000, 9);
        let a = mh_run(&softcore(), &cfg).unwrap();
        let b = mh_run(&softcore(), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.replay().unwrap(), a.final_state);
    }

    #[test]
    fn zero_density_start_is_contract_error() {
        let m = SoftCore::new(2.0, 0.0, MarkDistribution::Exponential { rate: 1.0 }, Window::unit()).unwrap();
        let seq: PointSequence = vec![
            MarkedPoint::with_radius(0.5, 0.5, 0.4),
            MarkedPoint::with_radius(0.6, 0.5, 0.1),
        ]
        .into();
        let mut rng = chain_rng(1, 0);
        assert!(matches!(mh_step(&m, &seq, &mut rng), Err(Error::ModelContract(_))));
    }

    #[test]
    fn chain_never_leaves_positive_density() {
        let m = SoftCore::new(
            20.0,
            0.0,
            MarkDistribution::Uniform { lo: 0.05, hi: 0.2 },
            Window::unit(),
        )
        .unwrap();
        let mut cfg = MhConfig::new(5000, 4);
        cfg.record_every = 0;
        let mut bad = 0;
        mh_run_observed(&m, &cfg, |_, s| {
            if m.log_density(s).unwrap() == f64::NEG_INFINITY {
                bad += 1;
            }
        })
        .unwrap();
        assert_eq!(bad, 0);
    }
}
