//! The four CLI commands as library functions writing their output files.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::{info, warn};
use serde::Serialize;

use crate::config::{
    build_model, initial_state, kind_name, model_window, oracle_mark_levels, Command, ModelConfig, OracleConfig,
    RunConfig, SamplerConfig,
};
use crate::error::{Error, Result};
use crate::factorisation::{factorisation_max_error, factorise_space, verify_markov, Factoriser, DEFAULT_CLIQUE_CAP};
use crate::model::Model;
use crate::oracle::{
    bd_balance_check, build_state_space, count_distribution, exact_distribution, mh_balance_violation,
    mh_transition_matrix, stability_check, tv_distance, DiscreteModel, DiscreteStateSpace, EmpiricalDistribution,
};
use crate::point::PointSequence;
use crate::samplers::{
    batch_means_se, bd_simulate_observed, mh_run_observed, preston_diagnostic, write_state_csv, BdConfig, MhConfig,
    PrestonReport, RunTrace, RNG_ALGORITHM,
};
use crate::window::MarkDistribution;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const FACTORISATION_TOLERANCE: f64 = 1e-10;
pub const BALANCE_TOLERANCE: f64 = 1e-12;
pub const TV_MH_TOLERANCE: f64 = 0.02;
pub const TV_BD_TOLERANCE: f64 = 0.05;

const SE_BATCHES: usize = 20;

/// Count statistics of one chain.
#[derive(Debug, Clone, Serialize)]
pub struct CountSummary {
    pub samples: u64,
    pub mean_count: f64,
    /// Batch-means standard error of `mean_count`; absent for short runs.
    pub mean_count_std_error: Option<f64>,
    pub count_histogram: BTreeMap<usize, u64>,
    pub final_count: usize,
    pub complete_trace: bool,
    pub truncation: Option<String>,
}

#[derive(Default)]
struct CountTally {
    counts: Vec<f64>,
    histogram: BTreeMap<usize, u64>,
}

impl CountTally {
    fn record(&mut self, seq: &PointSequence) {
        self.counts.push(seq.len() as f64);
        *self.histogram.entry(seq.len()).or_insert(0) += 1;
    }

    fn summary(self, trace: &RunTrace) -> CountSummary {
        let samples = self.counts.len() as u64;
        let mean_count = if self.counts.is_empty() {
            trace.final_state.len() as f64
        } else {
            self.counts.iter().sum::<f64>() / samples as f64
        };
        let se = if self.counts.len() >= 2 * SE_BATCHES {
            batch_means_se(&self.counts, SE_BATCHES).ok()
        } else {
            None
        };
        CountSummary {
            samples,
            mean_count,
            mean_count_std_error: se,
            count_histogram: self.histogram,
            final_count: trace.final_state.len(),
            complete_trace: trace.complete,
            truncation: trace.truncation.clone(),
        }
    }
}

struct ChainOutput {
    trace: RunTrace,
    summary: CountSummary,
}

fn bd_beta(model: &dyn Model, requested: Option<f64>) -> Result<f64> {
    match requested.or_else(|| model.local_stability_bound()) {
        Some(b) => Ok(b),
        None => Err(Error::Config(format!(
            "birth-death sampling needs a local stability bound; model {} declares none, set sampler.beta",
            model.name()
        ))),
    }
}

fn run_chain(model: &dyn Model, sampler: &SamplerConfig, seed: u64, stream: u64) -> Result<ChainOutput> {
    let mut tally = CountTally::default();
    let trace = match sampler {
        SamplerConfig::Mh {
            steps,
            record_every,
            initial,
        } => {
            let cfg = MhConfig {
                steps: *steps,
                seed,
                stream,
                initial: initial_state(initial)?,
                record_every: *record_every,
            };
            mh_run_observed(model, &cfg, |_, s| tally.record(s))?
        }
        SamplerConfig::Bd {
            beta,
            t_max,
            n_cap,
            epoch_spacing,
            initial,
        } => {
            let cfg = BdConfig {
                beta: bd_beta(model, *beta)?,
                t_max: *t_max,
                n_cap: *n_cap,
                seed,
                stream,
                epoch_spacing: *epoch_spacing,
                initial: initial_state(initial)?,
                record_events: true,
            };
            let trace = bd_simulate_observed(model, &cfg, |_, s| tally.record(s))?;
            if let Some(reason) = &trace.truncation {
                warn!("chain {stream}: {reason}");
            }
            trace
        }
    };
    let summary = tally.summary(&trace);
    Ok(ChainOutput { trace, summary })
}

/// Runs `chains` independent chains on worker threads. Chain `k` uses RNG
/// stream `k`, so results do not depend on scheduling.
fn run_chains(model: &Arc<dyn Model>, sampler: &SamplerConfig, seed: u64, chains: u64) -> Result<Vec<ChainOutput>> {
    if chains == 0 {
        return Err(Error::Config("chains must be at least 1".into()));
    }
    if chains == 1 {
        return Ok(vec![run_chain(model.as_ref(), sampler, seed, 0)?]);
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..chains)
            .map(|k| scope.spawn(move || run_chain(model.as_ref(), sampler, seed, k)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain worker panicked"))
            .collect()
    })
}

fn suffixed(dir: &Path, stem: &str, ext: &str, chain: u64, chains: u64) -> PathBuf {
    if chains > 1 {
        dir.join(format!("{stem}_chain{chain}.{ext}"))
    } else {
        dir.join(format!("{stem}.{ext}"))
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Serialize)]
struct Meta<'a> {
    version: &'static str,
    command: &'static str,
    model_kind: &'static str,
    model_config_hash: String,
    seed: u64,
    rng: &'static str,
    stream: u64,
    chain: u64,
    chains: u64,
    summary: &'a CountSummary,
    config: &'a RunConfig,
}

fn effective(cfg: &RunConfig, command: Command) -> RunConfig {
    let mut c = cfg.clone();
    c.command = Some(command);
    c
}

/// Writes `trace.csv`, `final_state.csv` and `meta.json` per chain.
pub fn run_simulate(cfg: &RunConfig) -> Result<Vec<CountSummary>> {
    let model = build_model(&cfg.model, None)?;
    let sampler = cfg.sampler()?;
    let outputs = run_chains(&model, sampler, cfg.seed, cfg.chains)?;
    fs::create_dir_all(&cfg.output_dir)?;
    let eff = effective(cfg, Command::Simulate);
    let mut summaries = Vec::new();
    for (k, out) in outputs.into_iter().enumerate() {
        let k = k as u64;
        let dir = &cfg.output_dir;
        out.trace.write_csv(BufWriter::new(fs::File::create(suffixed(
            dir, "trace", "csv", k, cfg.chains,
        ))?))?;
        write_state_csv(
            &out.trace.final_state,
            BufWriter::new(fs::File::create(suffixed(dir, "final_state", "csv", k, cfg.chains))?),
        )?;
        let meta = Meta {
            version: VERSION,
            command: Command::Simulate.as_str(),
            model_kind: kind_name(&cfg.model),
            model_config_hash: cfg.model_hash(),
            seed: cfg.seed,
            rng: RNG_ALGORITHM,
            stream: k,
            chain: k,
            chains: cfg.chains,
            summary: &out.summary,
            config: &eff,
        };
        write_json(&suffixed(dir, "meta", "json", k, cfg.chains), &meta)?;
        info!(
            "chain {k}: {} samples, mean count {:.4}, final count {}",
            out.summary.samples, out.summary.mean_count, out.summary.final_count
        );
        summaries.push(out.summary);
    }
    Ok(summaries)
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainStats {
    pub chain: u64,
    #[serde(flatten)]
    pub counts: CountSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsReport {
    pub version: &'static str,
    pub model_config_hash: String,
    pub seed: u64,
    pub chains: Vec<ChainStats>,
    /// Pooled mean over chains, weighted by sample count.
    pub pooled_mean_count: f64,
    /// Stability series for the dominating birth rate, when a bound is declared.
    pub preston: Option<PrestonReport>,
    pub config: RunConfig,
}

/// Runs the sampler and writes count statistics to `stats.json` without traces.
pub fn run_stats(cfg: &RunConfig) -> Result<StatsReport> {
    let model = build_model(&cfg.model, None)?;
    let sampler = cfg.sampler()?;
    let outputs = run_chains(&model, sampler, cfg.seed, cfg.chains)?;
    let total: u64 = outputs.iter().map(|o| o.summary.samples).sum();
    let pooled = if total == 0 {
        f64::NAN
    } else {
        outputs
            .iter()
            .map(|o| o.summary.mean_count * o.summary.samples as f64)
            .sum::<f64>()
            / total as f64
    };
    let preston = match model.local_stability_bound() {
        Some(beta) => Some(preston_diagnostic(beta, model.window().area(), 200)?),
        None => None,
    };
    let report = StatsReport {
        version: VERSION,
        model_config_hash: cfg.model_hash(),
        seed: cfg.seed,
        chains: outputs
            .into_iter()
            .enumerate()
            .map(|(k, o)| ChainStats {
                chain: k as u64,
                counts: o.summary,
            })
            .collect(),
        pooled_mean_count: pooled,
        preston,
        config: effective(cfg, Command::Stats),
    };
    fs::create_dir_all(&cfg.output_dir)?;
    write_json(&cfg.output_dir.join("stats.json"), &report)?;
    Ok(report)
}

fn marks_of(cfg: &ModelConfig) -> MarkDistribution {
    match cfg {
        ModelConfig::Softcore { marks, .. }
        | ModelConfig::PairwiseQuadratic { marks, .. }
        | ModelConfig::Scaled { marks, .. } => marks.clone(),
        ModelConfig::Ssi { .. } => MarkDistribution::None,
    }
}

/// The model restricted to the oracle grid, with the grid itself.
pub fn oracle_model(cfg: &RunConfig) -> Result<(DiscreteModel, DiscreteStateSpace)> {
    let oracle = cfg.oracle()?;
    let levels = oracle_mark_levels(oracle, &marks_of(&cfg.model))?;
    let space = build_state_space(
        model_window(&cfg.model),
        oracle.nx,
        oracle.ny,
        levels,
        oracle.n_max,
        u128::from(oracle.budget),
    )
    .map_err(|e| match e {
        Error::Argument(m) => Error::Config(format!("oracle: {m}")),
        other => other,
    })?;
    let inner = build_model(&cfg.model, Some((oracle.nx, oracle.ny)))?;
    let model = DiscreteModel::new(inner, &space);
    Ok((model, space))
}

/// Writes the interaction table over every oracle state to `interactions.csv`.
pub fn run_factorise(cfg: &RunConfig) -> Result<usize> {
    let (model, space) = oracle_model(cfg)?;
    let mut fz = Factoriser::new(&model)?.with_cap(DEFAULT_CLIQUE_CAP);
    factorise_space(&mut fz, &space)?;
    let table = fz.into_table();
    fs::create_dir_all(&cfg.output_dir)?;
    table.write_csv(BufWriter::new(fs::File::create(
        cfg.output_dir.join("interactions.csv"),
    )?))?;
    info!("{} interaction entries over {} states", table.len(), space.len());
    Ok(table.len())
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidateReport {
    pub hereditary: bool,
    pub tight_beta: Option<f64>,
    pub factorisation_max_err: Option<f64>,
    pub markov_locality_max_err: Option<f64>,
    pub mh_balance_max_violation: Option<f64>,
    pub tv_mh: Option<f64>,
    pub tv_bd: Option<f64>,
    pub declared_beta: Option<f64>,
    pub bd_balance_max_err: Option<f64>,
    /// Bound on the count mass beyond `n_max` relative to the mass kept,
    /// `q_{n_max} rho / (1 - rho)` with `rho = beta mu(D) / (n_max + 1)`.
    pub truncation_tail_bound: Option<f64>,
    pub states: usize,
    pub positive_states: usize,
    pub count_distribution: Vec<f64>,
    pub checks: BTreeMap<&'static str, bool>,
    pub notes: Vec<String>,
    pub passed: bool,
}

/// Errors that make one check unavailable rather than aborting the run.
fn soft<T>(r: Result<T>, what: &str, notes: &mut Vec<String>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e @ (Error::Capacity { .. } | Error::Config(_) | Error::Io(_) | Error::Json(_))) => Err(e),
        Err(e) => {
            notes.push(format!("{what}: {e}"));
            Ok(None)
        }
    }
}

fn within(v: Option<f64>, tol: f64) -> bool {
    matches!(v, Some(x) if x <= tol)
}

fn tail_bound(q: &[f64], beta: Option<f64>, mu: f64) -> Option<f64> {
    let n_max = q.len().checked_sub(1)?;
    let rho = beta? * mu / (n_max + 1) as f64;
    (rho < 1.0).then(|| q[n_max] * rho / (1.0 - rho))
}

/// Runs every oracle check and both samplers on the discretised model.
pub fn validate(cfg: &RunConfig) -> Result<ValidateReport> {
    let oracle: &OracleConfig = cfg.oracle()?;
    let (model, space) = oracle_model(cfg)?;
    let budget = u128::from(oracle.budget);
    let mut notes = Vec::new();

    let exact = exact_distribution(&model, &space)?;
    let counts = count_distribution(&exact, &space);
    let support = exact.support();

    let stability = stability_check(&model, &space)?;
    let declared = model.local_stability_bound();
    for c in stability.counterexamples.iter().take(5) {
        notes.push(format!("declared bound exceeded: {c}"));
    }
    if let Some((y, z)) = &stability.hereditary_counterexample {
        notes.push(format!("not hereditary: f{y} > 0 but f{z} = 0"));
    }

    let fact_err = soft(
        factorisation_max_error(&model, &space, DEFAULT_CLIQUE_CAP),
        "factorisation",
        &mut notes,
    )?;
    let markov = soft(verify_markov(&model, &space), "markov", &mut notes)?;
    if let Some(Some(c)) = markov.as_ref().map(|m| m.locality_counterexample.clone()) {
        notes.push(format!("locality: {c}"));
    }

    let matrix = mh_transition_matrix(&model, &space, budget)?;
    let mh_balance = soft(mh_balance_violation(&exact, &matrix), "mh balance", &mut notes)?;
    let bd_balance = soft(bd_balance_check(&model, &space), "bd balance", &mut notes)?;

    // Start both samplers from the empty sequence when it is allowed, else
    // from the first positive-density state.
    let start = space.state(support[0]);

    let mut emp = EmpiricalDistribution::new(&space);
    let mh_cfg = MhConfig {
        steps: oracle.mh_steps,
        seed: cfg.seed,
        stream: 0,
        initial: start.clone(),
        record_every: 0,
    };
    let tv_mh = match soft(
        mh_run_observed(&model, &mh_cfg, |_, s| emp.record(&space, s)),
        "mh run",
        &mut notes,
    )? {
        Some(_) => Some(tv_distance(&emp.probabilities(), &exact.probs)?),
        None => None,
    };

    let bd_beta = declared.or(stability.local_stability_beta);
    let tv_bd = match bd_beta {
        Some(beta) => {
            let mut emp = EmpiricalDistribution::new(&space);
            let bd_cfg = BdConfig {
                beta,
                t_max: oracle.bd_t_max,
                n_cap: None,
                seed: cfg.seed,
                stream: 1,
                epoch_spacing: oracle.bd_epoch_spacing,
                initial: start,
                record_events: false,
            };
            match soft(
                bd_simulate_observed(&model, &bd_cfg, |_, s| emp.record(&space, s)),
                "bd run",
                &mut notes,
            )? {
                Some(_) if emp.total() > 0 => Some(tv_distance(&emp.probabilities(), &exact.probs)?),
                Some(_) => {
                    notes.push("bd run produced no readout epochs".into());
                    None
                }
                None => None,
            }
        }
        None => {
            notes.push("bd run skipped: no local stability bound".into());
            None
        }
    };

    let mut checks = BTreeMap::new();
    checks.insert("hereditary", stability.hereditary);
    checks.insert("declared_bound", stability.declared_bound_holds());
    checks.insert("factorisation", within(fact_err, FACTORISATION_TOLERANCE));
    checks.insert("markov", markov.as_ref().is_some_and(|m| m.passed()));
    checks.insert("mh_balance", within(mh_balance, BALANCE_TOLERANCE));
    checks.insert("bd_balance", within(bd_balance, BALANCE_TOLERANCE));
    checks.insert("tv_mh", within(tv_mh, TV_MH_TOLERANCE));
    checks.insert("tv_bd", within(tv_bd, TV_BD_TOLERANCE));
    let passed = checks.values().all(|&ok| ok);

    Ok(ValidateReport {
        hereditary: stability.hereditary,
        tight_beta: stability.local_stability_beta,
        factorisation_max_err: fact_err,
        markov_locality_max_err: markov.map(|m| m.locality_max_err),
        mh_balance_max_violation: mh_balance,
        tv_mh,
        tv_bd,
        declared_beta: declared,
        bd_balance_max_err: bd_balance,
        truncation_tail_bound: tail_bound(&counts.q, bd_beta, space.window().area()),
        states: space.len(),
        positive_states: support.len(),
        count_distribution: counts.q,
        checks,
        notes,
        passed,
    })
}

/// Runs [`validate`] and writes `report.json`.
pub fn run_validate(cfg: &RunConfig) -> Result<ValidateReport> {
    let report = validate(cfg)?;
    fs::create_dir_all(&cfg.output_dir)?;
    write_json(&cfg.output_dir.join("report.json"), &report)?;
    for (name, ok) in &report.checks {
        info!("{name}: {}", if *ok { "pass" } else { "FAIL" });
    }
    Ok(report)
}
