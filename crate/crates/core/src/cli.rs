//! Command-line front end: argument types, dispatch and the JSON run report.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::CircuitSpec;
use crate::error::{Error, Result};
use crate::estimator::EstimationParams;
use crate::km::HeavyHitterList;
use crate::oracle::{dense_simulate, exact_distribution};
use crate::reconstruct::{
    reconstruct_distribution, reconstruct_state, significant_weights, Diagnostic, DistributionReconstruction,
    ReconstructionParams, StageSamples, StateReconstruction, WeightReport,
};
use crate::rng::StreamKey;
use crate::sparse::{l1_distance, SparseDistribution};

pub const ENDIANNESS: &str =
    "bit strings list qubit 0 first; the integer view is sum_i bit_i 2^i over the listed order";

/// Exact probabilities below this are dropped from oracle dumps.
pub const ORACLE_CUTOFF: f64 = 1e-14;

#[derive(Debug, Parser)]
#[command(name = "sparsim", version, about = "Simulate quantum circuits with sparse output distributions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Log progress to stderr.
    #[arg(long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Reconstruct the output distribution of the measured qubits.
    Simulate(RunArgs),
    /// Reconstruct the full output state (all qubits measured).
    State(RunArgs),
    /// List the significant output amplitudes, |<x|U2 U1|input>|^2 >= theta.
    Weights(WeightArgs),
    /// Dump the exact output distribution by dense simulation (n <= 16).
    Oracle(OracleArgs),
    /// Repeat `simulate` and score each run against the exact distribution.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Circuit file (JSON).
    #[arg(long)]
    pub circuit: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exit with status 2 if the sparseness promise looks violated.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
    /// Promised sparsity.
    #[arg(long)]
    pub t: usize,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
}

#[derive(Debug, Clone, Args)]
pub struct WeightArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.05)]
    pub pi: f64,
    /// Accuracy of each reported amplitude.
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    /// Failure probability of each reported amplitude.
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub circuit: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ParamsEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleDump {
    pub distribution: SparseDistribution,
    pub cutoff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub seed: u64,
    pub l1_error: f64,
    pub support: usize,
    pub success: bool,
    pub promise_violated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareSummary {
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// `1 - delta`.
    pub target: f64,
    /// `1 - delta - 3 sigma` for `trials` Bernoulli runs.
    pub target_with_slack: f64,
    pub meets_target: bool,
    /// `12 epsilon`.
    pub l1_bound: f64,
    pub max_l1_error: f64,
    pub mean_l1_error: f64,
    pub outcomes: Vec<TrialOutcome>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Payload {
    Distribution(Box<DistributionReconstruction>),
    State(Box<StateReconstruction>),
    Weights(Box<WeightReport>),
    Oracle(OracleDump),
    Compare(CompareSummary),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub endianness: &'static str,
    pub circuit: CircuitSpec,
    pub params: ParamsEcho,
    pub seed: Option<u64>,
    pub samples: StageSamples,
    pub payload: Payload,
    pub diagnostics: Vec<Diagnostic>,
    pub anomalies: u64,
    pub promise_violated: bool,
    /// Kept last so that everything above it is reproducible byte for byte.
    pub wall_time_seconds: f64,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// The report serialized with the wall time zeroed.
    pub fn reproducible_json(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.wall_time_seconds = 0.0;
        copy.to_json()
    }
}

impl Command {
    pub fn out(&self) -> Option<&PathBuf> {
        match self {
            Command::Simulate(a) | Command::State(a) => a.common.out.as_ref(),
            Command::Weights(a) => a.common.out.as_ref(),
            Command::Oracle(a) => a.out.as_ref(),
            Command::Compare(a) => a.run.common.out.as_ref(),
        }
    }

    pub fn strict(&self) -> bool {
        match self {
            Command::Simulate(a) | Command::State(a) => a.common.strict,
            Command::Weights(a) => a.common.strict,
            Command::Oracle(_) => false,
            Command::Compare(a) => a.run.common.strict,
        }
    }

    fn threads(&self) -> Option<usize> {
        match self {
            Command::Simulate(a) | Command::State(a) => a.common.threads,
            Command::Weights(a) => a.common.threads,
            Command::Oracle(_) => None,
            Command::Compare(a) => a.run.common.threads,
        }
    }
}

/// Runs `command` on a pool of `--threads` workers (or the global pool).
pub fn execute(command: &Command) -> Result<RunReport> {
    match command.threads() {
        Some(0) => Err(Error::invalid("--threads must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(format!("cannot start thread pool: {e}")))?
            .install(|| dispatch(command)),
        None => dispatch(command),
    }
}

fn reconstruction_params(a: &RunArgs) -> Result<ReconstructionParams> {
    ReconstructionParams::new(a.t, a.epsilon, a.delta, a.common.seed)
}

fn run_echo(a: &RunArgs) -> ParamsEcho {
    ParamsEcho {
        t: Some(a.t),
        epsilon: Some(a.epsilon),
        delta: Some(a.delta),
        ..Default::default()
    }
}

fn audit_search(search: &HeavyHitterList) -> Result<()> {
    if search.probes > search.probe_cap {
        return Err(Error::invalid(format!(
            "audit failed: {} probes exceed the cap {}",
            search.probes, search.probe_cap
        )));
    }
    if search.entries.len() as f64 > 2.0 / search.theta {
        return Err(Error::invalid(format!(
            "audit failed: {} heavy strings exceed 2/theta",
            search.entries.len()
        )));
    }
    Ok(())
}

fn exact_measured(spec: &CircuitSpec) -> Result<SparseDistribution> {
    let state = dense_simulate(spec)?;
    let probs = exact_distribution(&state, &spec.measure);
    let kept: Vec<(u64, f64)> = probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| p >= ORACLE_CUTOFF)
        .map(|(x, &p)| (x as u64, p))
        .collect();
    let total: f64 = kept.iter().map(|e| e.1).sum();
    let kept = if total > 1.0 {
        kept.into_iter().map(|(x, p)| (x, p / total)).collect()
    } else {
        kept
    };
    SparseDistribution::from_raw(spec.measure.len(), kept)
}

fn dispatch(command: &Command) -> Result<RunReport> {
    let start = Instant::now();
    let circuit_path = match command {
        Command::Simulate(a) | Command::State(a) => &a.common.circuit,
        Command::Weights(a) => &a.common.circuit,
        Command::Oracle(a) => &a.circuit,
        Command::Compare(a) => &a.run.common.circuit,
    };
    let spec = CircuitSpec::from_path(circuit_path)?;
    let mut report = match command {
        Command::Simulate(a) => simulate(&spec, a)?,
        Command::State(a) => state(&spec, a)?,
        Command::Weights(a) => weights(&spec, a)?,
        Command::Oracle(_) => RunReport {
            command: "oracle",
            endianness: ENDIANNESS,
            params: ParamsEcho::default(),
            seed: None,
            samples: StageSamples::default(),
            payload: Payload::Oracle(OracleDump {
                distribution: exact_measured(&spec)?,
                cutoff: ORACLE_CUTOFF,
            }),
            diagnostics: Vec::new(),
            anomalies: 0,
            promise_violated: false,
            wall_time_seconds: 0.0,
            circuit: spec,
        },
        Command::Compare(a) => compare(&spec, a)?,
    };
    report.wall_time_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn simulate(spec: &CircuitSpec, a: &RunArgs) -> Result<RunReport> {
    let params = reconstruction_params(a)?;
    let ct = spec.ct_state()?;
    let oracle = spec.marginal_oracle(&ct)?;
    let rec = reconstruct_distribution(&oracle, &params)?;
    audit_search(&rec.search)?;
    Ok(RunReport {
        command: "simulate",
        endianness: ENDIANNESS,
        circuit: spec.clone(),
        params: run_echo(a),
        seed: Some(a.common.seed),
        samples: rec.samples,
        diagnostics: rec.diagnostics.clone(),
        anomalies: rec.anomalies,
        promise_violated: rec.promise_violated(),
        payload: Payload::Distribution(Box::new(rec)),
        wall_time_seconds: 0.0,
    })
}

fn state(spec: &CircuitSpec, a: &RunArgs) -> Result<RunReport> {
    let params = reconstruction_params(a)?;
    let ct = spec.ct_state()?;
    let rec = reconstruct_state(&ct, &spec.second_block()?, &spec.measure, &params)?;
    audit_search(&rec.distribution.search)?;
    Ok(RunReport {
        command: "state",
        endianness: ENDIANNESS,
        circuit: spec.clone(),
        params: run_echo(a),
        seed: Some(a.common.seed),
        samples: rec.samples,
        diagnostics: rec.diagnostics.clone(),
        anomalies: rec.anomalies,
        promise_violated: rec.promise_violated(),
        payload: Payload::State(Box::new(rec)),
        wall_time_seconds: 0.0,
    })
}

fn weights(spec: &CircuitSpec, a: &WeightArgs) -> Result<RunReport> {
    let ct = spec.ct_state()?;
    // weights of U2|psi> in the computational basis are weights of |psi> in
    // the basis U2^dagger|x>
    let basis = spec.second_block()?.adjoint();
    let coefficient = EstimationParams::new(a.epsilon, a.delta, a.common.seed)?;
    let rep = significant_weights(&ct, &basis, a.theta, a.pi, &coefficient)?;
    audit_search(&rep.search)?;
    let mut diagnostics = Vec::new();
    if let Some(reason) = rep.search.halted {
        diagnostics.push(Diagnostic::SearchHalted { reason });
    }
    let samples = StageSamples {
        search: rep.search.samples_used,
        amplitudes: rep.entries.len() as u64 * 2 * crate::estimator::overlap_sample_count(a.epsilon, a.delta),
        ..Default::default()
    };
    Ok(RunReport {
        command: "weights",
        endianness: ENDIANNESS,
        circuit: spec.clone(),
        params: ParamsEcho {
            epsilon: Some(a.epsilon),
            delta: Some(a.delta),
            theta: Some(a.theta),
            pi: Some(a.pi),
            ..Default::default()
        },
        seed: Some(a.common.seed),
        samples,
        promise_violated: !diagnostics.is_empty(),
        diagnostics,
        anomalies: rep.search.anomalies,
        payload: Payload::Weights(Box::new(rep)),
        wall_time_seconds: 0.0,
    })
}

/// Lower edge of the acceptance band for a success rate of `1 - delta` over
/// `trials` runs.
pub fn success_floor(delta: f64, trials: usize) -> f64 {
    1.0 - delta - 3.0 * (delta * (1.0 - delta) / trials.max(1) as f64).sqrt()
}

fn compare(spec: &CircuitSpec, a: &CompareArgs) -> Result<RunReport> {
    let r = &a.run;
    if a.trials == 0 {
        return Err(Error::invalid("--trials must be at least 1"));
    }
    reconstruction_params(r)?;
    let exact = exact_measured(spec)?;
    let ct = spec.ct_state()?;
    let oracle = spec.marginal_oracle(&ct)?;
    let bound = 12.0 * r.epsilon;
    let root = StreamKey::new(r.common.seed);
    let runs = (0..a.trials)
        .into_par_iter()
        .map(|i| {
            let seed = root.child(i as u64).raw();
            let params = ReconstructionParams::new(r.t, r.epsilon, r.delta, seed)?;
            let rec = reconstruct_distribution(&oracle, &params)?;
            audit_search(&rec.search)?;
            let l1 = l1_distance(&rec.distribution, &exact);
            Ok((
                TrialOutcome {
                    seed,
                    l1_error: l1,
                    support: rec.distribution.len(),
                    success: l1 <= bound,
                    promise_violated: rec.promise_violated(),
                },
                rec.samples,
                rec.anomalies,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut samples = StageSamples::default();
    let mut anomalies = 0;
    let mut outcomes = Vec::with_capacity(runs.len());
    for (o, s, an) in runs {
        samples.search += s.search;
        samples.point_estimates += s.point_estimates;
        anomalies += an;
        outcomes.push(o);
    }
    let successes = outcomes.iter().filter(|o| o.success).count();
    let success_rate = successes as f64 / a.trials as f64;
    let target_with_slack = success_floor(r.delta, a.trials);
    let summary = CompareSummary {
        trials: a.trials,
        successes,
        success_rate,
        target: 1.0 - r.delta,
        target_with_slack,
        meets_target: success_rate >= target_with_slack,
        l1_bound: bound,
        max_l1_error: outcomes.iter().map(|o| o.l1_error).fold(0.0, f64::max),
        mean_l1_error: outcomes.iter().map(|o| o.l1_error).sum::<f64>() / a.trials as f64,
        outcomes,
    };
    Ok(RunReport {
        command: "compare",
        endianness: ENDIANNESS,
        circuit: spec.clone(),
        params: ParamsEcho {
            trials: Some(a.trials),
            ..run_echo(r)
        },
        seed: Some(r.common.seed),
        samples,
        diagnostics: Vec::new(),
        anomalies,
        promise_violated: !summary.meets_target,
        payload: Payload::Compare(summary),
        wall_time_seconds: 0.0,
    })
}
