//! File-based command surface: instance ingestion, method execution,
//! adversary generation, trajectory verification, decomposition utilities,
//! and covering-solution rounding.
//!
//! Everything is driven by flags (no environment configuration) and output
//! bytes are a function of the inputs and the seed alone. Rationals stay in
//! `p/q` form everywhere; float columns appear only behind
//! `--float-report`. Exit codes: 0 ok, 1 check failed, 2 input error,
//! 3 method infeasible.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::adversary::{booster, figure3_schedule, AdversaryConfig, AdversaryError, Transcript};
use crate::flow::{decompose_integral, feasible_flow, CapacitatedNetwork, FlowOutcome};
use crate::greedy::{GreedyMethod, MaxSurplusMethod, OnlineMethod, RandomFeasibleMethod};
use crate::instance::{Instance, ParsedTrajectory, QuotaStatus, TrajectoryState};
use crate::mmhsc::{round_near_feasible, CoveringFile, MinCostRounder, MmhscError};
use crate::offline::{offline_lottery, OfflineError};
use crate::randmethod::{
    grimmett_lambda_from_seed, grimmett_sample, GrimmettError, NetworkFlowMethod,
};
use crate::rational::Rational;

#[derive(Debug, Parser)]
#[command(
    name = "seatflow",
    about = "Online proportional apportionment: methods, adversaries, verification, rounding"
)]
pub struct CliArgs {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an apportionment method over an instance file.
    Simulate(SimulateArgs),
    /// Generate an adversarial instance against a target method.
    Adversary(AdversaryArgs),
    /// Check a trajectory CSV for consistency, feasibility, and quota.
    Verify(VerifyArgs),
    /// Build the offline lottery over global-quota methods.
    Offline(OfflineArgs),
    /// Decompose a fractional vector or a network flow.
    Decompose(DecomposeArgs),
    /// Round fractional covering solutions online.
    Mmhsc(MmhscArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodId {
    Greedy,
    Grimmett,
    Netflow,
}

impl MethodId {
    fn name(self) -> &'static str {
        match self {
            MethodId::Greedy => "greedy",
            MethodId::Grimmett => "grimmett",
            MethodId::Netflow => "netflow",
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub method: MethodId,
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub trials: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Echo float columns next to the exact rationals in trajectory CSVs.
    #[arg(long, default_value_t = false)]
    pub float_report: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetMethodId {
    Greedy,
    MaxSurplus,
    RandomFeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleId {
    /// The recursive booster, driving some party to `(n-1)/2 - epsilon`.
    Auto,
    /// The fixed reference splitter schedule (three or four parties).
    Figure3,
}

#[derive(Debug, Args)]
pub struct AdversaryArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value = "1/20")]
    pub epsilon: Rational,
    #[arg(long, value_enum, default_value_t = TargetMethodId::Greedy)]
    pub target_method: TargetMethodId,
    #[arg(long, value_enum, default_value_t = ScheduleId::Auto)]
    pub schedule: ScheduleId,
    #[arg(long)]
    pub out: PathBuf,
    /// Seed for randomized target methods.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub max_steps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub trajectory: PathBuf,
    /// Check `alpha`-proportionality instead of global quota.
    #[arg(long)]
    pub alpha: Option<Rational>,
}

#[derive(Debug, Args)]
pub struct OfflineArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Comma-separated rational vector, e.g. "3/5,3/10,1/10".
    #[arg(long, conflicts_with_all = ["network", "value"], requires = "house")]
    pub vector: Option<String>,
    #[arg(long)]
    pub house: Option<u64>,
    /// Network JSON file (nodes, origin, dest, arcs with p/q bounds).
    #[arg(long, requires = "value")]
    pub network: Option<PathBuf>,
    /// Flow value to route and decompose.
    #[arg(long)]
    pub value: Option<Rational>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MmhscArgs {
    #[command(subcommand)]
    pub mode: MmhscMode,
}

#[derive(Debug, Subcommand)]
pub enum MmhscMode {
    /// Greedy rounding: exact capacities, bounded covering violation.
    NearFeasible {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Randomized three-resource rounding under resource augmentation.
    MinCost {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        trials: u64,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("method infeasible: {0}")]
    Infeasible(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Input(_) => 2,
            CliError::Infeasible(_) => 3,
        }
    }
}

pub fn run(args: CliArgs) -> Result<(), CliError> {
    match args.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Adversary(a) => cmd_adversary(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Offline(a) => cmd_offline(&a),
        Command::Decompose(a) => cmd_decompose(&a),
        Command::Mmhsc(a) => match a.mode {
            MmhscMode::NearFeasible { instance, out } => cmd_mmhsc_near_feasible(&instance, &out),
            MmhscMode::MinCost {
                instance,
                out,
                seed,
                trials,
            } => cmd_mmhsc_min_cost(&instance, &out, seed, trials),
        },
    }
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(input_err)?;
    }
    fs::write(path, bytes).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("json serializes");
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn load_instance(path: &Path) -> Result<(Instance, String), CliError> {
    let text = read_file(path)?;
    let digest = hex_digest(text.as_bytes());
    let inst = Instance::from_json(&text).map_err(input_err)?;
    let violations = inst.validate();
    if !violations.is_empty() {
        let listed: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(CliError::Input(format!(
            "invalid instance: {}",
            listed.join("; ")
        )));
    }
    Ok((inst, digest))
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn trajectory_csv(state: &TrajectoryState, float_report: bool) -> String {
    if !float_report {
        return state.to_csv_string();
    }
    // Echo columns with lossy float renderings next to the exact values.
    let mut out = String::from("t,i,v,V,a,A,s,v_float,V_float,s_float\n");
    let mut cum_v = vec![Rational::zero(); state.n()];
    let mut cum_a = vec![0u64; state.n()];
    for (k, (votes, chosen)) in state.steps().enumerate() {
        for i in 0..state.n() {
            cum_v[i] += votes.entry(i);
            let a = u8::from(chosen.contains(&i));
            if a == 1 {
                cum_a[i] += 1;
            }
            let s = Rational::from(cum_a[i]) - &cum_v[i];
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                k + 1,
                i,
                votes.entry(i),
                cum_v[i],
                a,
                cum_a[i],
                s,
                votes.entry(i).to_f64(),
                cum_v[i].to_f64(),
                s.to_f64()
            ));
        }
    }
    out
}

fn quota_json(status: &QuotaStatus) -> serde_json::Value {
    match status {
        QuotaStatus::Satisfied => json!({ "ok": true }),
        QuotaStatus::Violated { step, party } => {
            json!({ "ok": false, "step": step, "party": party })
        }
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let (inst, digest) = load_instance(&args.instance)?;
    fs::create_dir_all(&args.out).map_err(input_err)?;

    let netflow = match args.method {
        MethodId::Netflow => match NetworkFlowMethod::run(&inst) {
            Ok(method) => Some(method),
            Err(err) => {
                if let Some((step, witness)) = err.witness() {
                    let report = json!({
                        "command": "simulate",
                        "method": "netflow",
                        "instance_digest": digest,
                        "infeasible_at_step": step,
                        "witness_cut": witness.cut_labels,
                        "lower_into_cut": witness.lower_into_cut.to_string(),
                        "upper_out_of_cut": witness.upper_out_of_cut.to_string(),
                    });
                    write_json(&args.out.join("report.json"), &report)?;
                    return Err(CliError::Infeasible(format!(
                        "no feasible step flow at step {step}: {witness}"
                    )));
                }
                return Err(input_err(err));
            }
        },
        MethodId::Grimmett => {
            if inst.n > 2 {
                return Err(CliError::Input(format!(
                    "grimmett supports at most 2 parties, instance has {}",
                    inst.n
                )));
            }
            None
        }
        MethodId::Greedy => None,
    };

    // Trials are independent given their substream; compute them in
    // parallel and keep all file writes on this thread, in trial order.
    let trials: Result<Vec<(String, serde_json::Value, TrajectoryState)>, CliError> = (0..args
        .trials)
        .into_par_iter()
        .map(|trial| {
            let state = match args.method {
                MethodId::Greedy => {
                    crate::greedy::run_method(&mut GreedyMethod, &inst).map_err(input_err)?
                }
                MethodId::Grimmett => {
                    let lambda = grimmett_lambda_from_seed(args.seed, trial);
                    grimmett_sample(&inst, &lambda).map_err(|e| match e {
                        GrimmettError::TooManyParties { .. } => input_err(e),
                        other => input_err(other),
                    })?
                }
                MethodId::Netflow => netflow
                    .as_ref()
                    .expect("feasible netflow method")
                    .sample(args.seed, trial),
            };
            let summary = json!({
                "trial": trial,
                "file": format!("trajectory_{trial:04}.csv"),
                "max_deviation": state.max_deviation().to_string(),
                "global_quota": quota_json(&state.check_global_quota()),
                "final_seats": state.cumulative_seats(),
            });
            Ok((trajectory_csv(&state, args.float_report), summary, state))
        })
        .collect();
    let trials = trials?;
    let mut summaries = Vec::with_capacity(trials.len());
    let mut seat_counts = vec![vec![0u64; inst.n]; inst.horizon()];
    for (trial, (csv, summary, state)) in trials.into_iter().enumerate() {
        write_file(
            &args.out.join(format!("trajectory_{trial:04}.csv")),
            csv.as_bytes(),
        )?;
        summaries.push(summary);
        for (t, (_, chosen)) in state.steps().enumerate() {
            for &i in chosen {
                seat_counts[t][i] += 1;
            }
        }
    }

    // Empirical per-step seat frequencies minus the vote shares, exact.
    let marginal_deltas: Option<Vec<Vec<String>>> = (args.trials > 0).then(|| {
        let trials = Rational::from(args.trials);
        (0..inst.horizon())
            .map(|t| {
                (0..inst.n)
                    .map(|i| {
                        (Rational::from(seat_counts[t][i]) / &trials - &inst.votes[t][i])
                            .to_string()
                    })
                    .collect()
            })
            .collect()
    });

    let mut report = json!({
        "command": "simulate",
        "method": args.method.name(),
        "instance_digest": digest,
        "seed": args.seed,
        "trials": args.trials,
        "n": inst.n,
        "horizon": inst.horizon(),
        "trial_summaries": summaries,
        "marginal_deltas": marginal_deltas,
    });
    if let Some(method) = &netflow {
        let exact: Vec<Vec<String>> = method
            .records()
            .iter()
            .map(|r| r.marginals.iter().map(Rational::to_string).collect())
            .collect();
        report["exact_marginals"] = json!(exact);
        write_json(&args.out.join("method_state.json"), &method.state_dump())?;
    }
    write_json(&args.out.join("report.json"), &report)
}

fn adversary_instance(state: &TrajectoryState) -> Instance {
    Instance::new(
        state.n(),
        state
            .steps()
            .map(|(votes, _)| votes.entries().to_vec())
            .collect(),
    )
}

pub fn cmd_adversary(args: &AdversaryArgs) -> Result<(), CliError> {
    if args.n == 0 {
        return Err(CliError::Input("need at least one party".into()));
    }
    let mut method: Box<dyn OnlineMethod> = match args.target_method {
        TargetMethodId::Greedy => Box::new(GreedyMethod),
        TargetMethodId::MaxSurplus => Box::new(MaxSurplusMethod),
        TargetMethodId::RandomFeasible => Box::new(RandomFeasibleMethod::new(args.seed)),
    };
    let map_err = |e: AdversaryError| match e {
        AdversaryError::InvalidConfig(msg) => CliError::Input(msg),
        other => CliError::Input(other.to_string()),
    };
    let (state, transcript, extra): (TrajectoryState, Transcript, serde_json::Value) = match args
        .schedule
    {
        ScheduleId::Figure3 => {
            let (state, transcript) = figure3_schedule(method.as_mut(), args.n).map_err(map_err)?;
            (state, transcript, json!({}))
        }
        ScheduleId::Auto => {
            let cfg = AdversaryConfig {
                parties: (0..args.n).collect(),
                epsilon: args.epsilon.clone(),
                max_steps: args.max_steps.or(Some(1_000_000)),
            };
            let out =
                booster(method.as_mut(), TrajectoryState::new(args.n), &cfg).map_err(map_err)?;
            let extra = json!({
                "witness_party": out.witness,
                "guarantee": (Rational::new(args.n as i64 - 1, 2) - &args.epsilon).to_string(),
            });
            (out.state, out.transcript, extra)
        }
    };
    fs::create_dir_all(&args.out).map_err(input_err)?;
    let inst = adversary_instance(&state);
    write_file(&args.out.join("instance.json"), inst.to_json().as_bytes())?;
    write_json(
        &args.out.join("transcript.json"),
        &serde_json::to_value(&transcript).expect("transcript serializes"),
    )?;
    let mut report = json!({
        "command": "adversary",
        "schedule": match args.schedule {
            ScheduleId::Auto => "auto",
            ScheduleId::Figure3 => "figure3",
        },
        "target_method": method.name(),
        "n": args.n,
        "epsilon": args.epsilon.to_string(),
        "steps": state.t(),
        "achieved_deviation": state.max_deviation().to_string(),
    });
    if let serde_json::Value::Object(extra) = extra {
        for (k, v) in extra {
            report[k] = v;
        }
    }
    write_json(&args.out.join("report.json"), &report)
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<(), CliError> {
    let file = fs::File::open(&args.trajectory)
        .map_err(|e| input_err(format!("{}: {e}", args.trajectory.display())))?;
    let parsed = ParsedTrajectory::read(BufReader::new(file)).map_err(input_err)?;
    let issues = parsed.check_consistency();
    let mut report = json!({
        "command": "verify",
        "trajectory": args.trajectory.display().to_string(),
        "consistency_issues": issues.iter().map(|i| i.to_string()).collect::<Vec<_>>(),
    });
    let mut failures: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
    match parsed.into_state() {
        Ok(state) => {
            let deviation = state.max_deviation();
            report["local_feasibility"] = json!({ "ok": true });
            report["max_deviation"] = json!(deviation.to_string());
            let quota = state.check_global_quota();
            report["global_quota"] = quota_json(&quota);
            match &args.alpha {
                Some(alpha) => {
                    report["alpha"] = json!(alpha.to_string());
                    let ok = deviation <= *alpha;
                    report["alpha_proportional"] = json!(ok);
                    if !ok {
                        failures.push(format!("max deviation {deviation} exceeds alpha {alpha}"));
                    }
                }
                None => {
                    if let QuotaStatus::Violated { step, party } = quota {
                        failures.push(format!(
                            "global quota violated at step {step}, party {party}"
                        ));
                    }
                }
            }
        }
        Err(e) => {
            report["local_feasibility"] = json!({ "ok": false, "error": e.to_string() });
            failures.push(e.to_string());
        }
    }
    report["passed"] = json!(failures.is_empty());
    let mut stdout = std::io::stdout();
    let _ = writeln!(
        stdout,
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(failures.join("; ")))
    }
}

pub fn cmd_offline(args: &OfflineArgs) -> Result<(), CliError> {
    let (inst, digest) = load_instance(&args.instance)?;
    let lottery = offline_lottery(&inst).map_err(|e| match e {
        OfflineError::InvalidInstance(_) => input_err(e),
        other => CliError::Input(other.to_string()),
    })?;
    fs::create_dir_all(&args.out).map_err(input_err)?;
    let components: Vec<serde_json::Value> = lottery
        .components
        .iter()
        .map(|c| {
            json!({
                "weight": c.weight.to_string(),
                "sets": c
                    .sets
                    .iter()
                    .map(|s| s.iter().copied().collect::<Vec<usize>>())
                    .collect::<Vec<_>>(),
            })
        })
        .collect();
    write_json(&args.out.join("lottery.json"), &json!(components))?;
    let marginals_ok = (1..=inst.horizon())
        .all(|t| (0..inst.n).all(|i| lottery.marginal(t, i) == inst.votes[t - 1][i]));
    let quota_ok = (0..lottery.components.len()).all(|idx| {
        lottery
            .component_trajectory(&inst, idx)
            .map(|traj| traj.check_global_quota().is_ok())
            .unwrap_or(false)
    });
    let report = json!({
        "command": "offline",
        "instance_digest": digest,
        "components": lottery.components.len(),
        "total_weight": lottery.total_weight().to_string(),
        "marginals_exact": marginals_ok,
        "all_components_quota": quota_ok,
    });
    write_json(&args.out.join("report.json"), &report)
}

pub fn cmd_decompose(args: &DecomposeArgs) -> Result<(), CliError> {
    match (&args.vector, &args.network) {
        (Some(vector), None) => {
            let house = args
                .house
                .ok_or_else(|| CliError::Input("--vector requires --house".into()))?;
            let entries: Result<Vec<Rational>, _> =
                vector.split(',').map(|s| s.trim().parse()).collect();
            let entries = entries.map_err(input_err)?;
            let parts = crate::flow::hypersimplex_decompose(&entries, house).map_err(input_err)?;
            let components: Vec<serde_json::Value> = parts
                .iter()
                .map(|(w, s)| {
                    json!({
                        "weight": w.to_string(),
                        "set": s.iter().copied().collect::<Vec<usize>>(),
                    })
                })
                .collect();
            write_json(
                &args.out.join("decomposition.json"),
                &json!({
                    "mode": "vector",
                    "vector": entries.iter().map(Rational::to_string).collect::<Vec<_>>(),
                    "house": house,
                    "components": components,
                }),
            )
        }
        (None, Some(network_path)) => {
            let value = args
                .value
                .clone()
                .ok_or_else(|| CliError::Input("--network requires --value".into()))?;
            let text = read_file(network_path)?;
            let network: CapacitatedNetwork = serde_json::from_str(&text).map_err(input_err)?;
            network.validate().map_err(input_err)?;
            let outcome = feasible_flow(&network, &value).map_err(input_err)?;
            match outcome {
                FlowOutcome::Feasible(flow) => {
                    let mut doc = json!({
                        "mode": "network",
                        "value": value.to_string(),
                        "flow": flow.values.iter().map(Rational::to_string).collect::<Vec<_>>(),
                    });
                    if network.has_integral_bounds() {
                        let parts = decompose_integral(&network, &flow).map_err(input_err)?;
                        doc["components"] = json!(parts
                            .iter()
                            .map(|(w, h)| {
                                json!({
                                    "weight": w.to_string(),
                                    "values": h
                                        .values
                                        .iter()
                                        .map(Rational::to_string)
                                        .collect::<Vec<_>>(),
                                })
                            })
                            .collect::<Vec<_>>());
                    }
                    write_json(&args.out.join("decomposition.json"), &doc)
                }
                FlowOutcome::Infeasible(witness) => {
                    write_json(
                        &args.out.join("decomposition.json"),
                        &json!({
                            "mode": "network",
                            "value": value.to_string(),
                            "infeasible": {
                                "cut": witness.cut_labels,
                                "lower_into_cut": witness.lower_into_cut.to_string(),
                                "upper_out_of_cut": witness.upper_out_of_cut.to_string(),
                            },
                        }),
                    )?;
                    Err(CliError::Infeasible(witness.to_string()))
                }
            }
        }
        _ => Err(CliError::Input(
            "pass exactly one of --vector ... --house ... or --network ... --value ...".into(),
        )),
    }
}

fn load_covering(
    path: &Path,
) -> Result<
    (
        crate::mmhsc::CoveringInstance,
        crate::mmhsc::FractionalSolution,
    ),
    CliError,
> {
    let text = read_file(path)?;
    let file: CoveringFile = serde_json::from_str(&text).map_err(input_err)?;
    Ok(file.split())
}

fn mmhsc_err(e: MmhscError) -> CliError {
    CliError::Input(e.to_string())
}

pub fn cmd_mmhsc_near_feasible(instance: &Path, out: &Path) -> Result<(), CliError> {
    let (ci, sol) = load_covering(instance)?;
    let rounded = round_near_feasible(&ci, &sol).map_err(mmhsc_err)?;
    fs::create_dir_all(out).map_err(input_err)?;
    let report = json!({
        "command": "mmhsc near-feasible",
        "Y": rounded.solution,
        "audit": {
            "max_covering_violation": rounded.max_covering_violation.to_string(),
            "violation_bound": rounded.violation_bound.to_string(),
            "capacity_exact": true,
            "cost": ci.total_cost(&rounded.solution).map(|c| c.to_string()),
        },
    });
    write_json(&out.join("rounded.json"), &report)
}

pub fn cmd_mmhsc_min_cost(
    instance: &Path,
    out: &Path,
    seed: u64,
    trials: u64,
) -> Result<(), CliError> {
    let (ci, sol) = load_covering(instance)?;
    let rounder = MinCostRounder::new(&ci, &sol).map_err(mmhsc_err)?;
    fs::create_dir_all(out).map_err(input_err)?;
    let mut violation_free = true;
    let mut capacity_ok = true;
    let mut costs = Vec::new();
    let mut first = None;
    for trial in 0..trials.max(1) {
        let solution = rounder.sample(seed, trial);
        violation_free &= ci.max_covering_violation(&solution).is_zero();
        capacity_ok &= rounder.capacity_within_augmented(&ci, &solution);
        if let Some(cost) = ci.total_cost(&solution) {
            costs.push(cost);
        }
        if first.is_none() {
            first = Some(solution);
        }
    }
    let expected = rounder.expected_cost(&ci);
    let mean_cost = (!costs.is_empty()).then(|| {
        let total: Rational = costs.iter().sum();
        total / Rational::from(costs.len() as u64)
    });
    let report = json!({
        "command": "mmhsc min-cost",
        "alpha": rounder.alpha().to_string(),
        "seed": seed,
        "trials": trials.max(1),
        "Y": first,
        "audit": {
            "all_samples_cover": violation_free,
            "capacity_within_augmented": capacity_ok,
            "sample_cost": costs.first().map(Rational::to_string),
            "mean_cost": mean_cost.as_ref().map(Rational::to_string),
            "mean_cost_float": mean_cost.as_ref().map(Rational::to_f64),
            "expected_cost": expected.as_ref().map(Rational::to_string),
        },
    });
    write_json(&out.join("rounded.json"), &report)
}
