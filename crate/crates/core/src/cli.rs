//! Command-line front end: `pid`, `aglfop`, `fl` and `sweep`.
//!
//! Every option is a long flag. `--config FILE` reads `key = value` lines
//! whose keys are flag names; explicit flags override the file. Each run
//! writes a `replay.conf` next to its manifest that reproduces it.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::aglfop::{self, AglfopOptions, DerivedClassifierHull, FairnessBudget, FixedMarginal, HullGrouping};
use crate::data::{self, PartitionSpec, Scenario, TabularDataset};
use crate::dist::{JointDist, S, Z};
use crate::error::{Error, Result};
use crate::fl::{self, Architecture, ClientDataset, ClientWeights, TrainingConfig};
use crate::pid::{self, PidDecomposition, SolverOptions};

pub const OUT_ENV: &str = "FEDPID_OUT";
const DEFAULT_OUT: &str = "fedpid-out";

#[derive(Parser, Debug)]
#[command(name = "fedpid", version, about = "Audit global and local fairness in federated learning", args_override_self = true)]
pub struct Cli {
    /// `key = value` file of flag defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $FEDPID_OUT, else ./fedpid-out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write JSON instead of CSV.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decompose global and local disparity of a joint or prediction file.
    Pid(PidArgs),
    /// Accuracy/fairness Pareto grid.
    Aglfop(AglfopArgs),
    /// Train FedAvg on a partitioned dataset and audit the result.
    Fl(FlArgs),
    /// Repeat `fl` along an alpha or lambda axis.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct PidArgs {
    /// Joint JSON, atom CSV (last column `p`) or observation CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 50_000)]
    pub max_iters: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    Adult,
    Synthetic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Iid,
    Heterogeneity,
    Synergy,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DataArgs {
    #[arg(long, value_enum, default_value = "adult")]
    pub dataset: DatasetKind,
    /// Adult training file.
    #[arg(long, default_value = "data/adult.data")]
    pub data: PathBuf,
    /// Rows used for training (default 5000 for adult, 100000 for synthetic).
    #[arg(long)]
    pub rows: Option<usize>,
    /// `P(Y=1)` of the synthetic mixture.
    #[arg(long, default_value_t = 0.5)]
    pub p_y: f64,
    #[arg(long, value_enum, default_value = "iid")]
    pub scenario: ScenarioKind,
    /// `Pr(Z=0 | S=0)` for the heterogeneity scenario.
    #[arg(long, default_value_t = 0.9)]
    pub alpha: f64,
    /// `Pr(Y = Z xor S)` for the synergy scenario.
    #[arg(long, default_value_t = 0.9)]
    pub lambda: f64,
    #[arg(long, default_value_t = 2)]
    pub clients: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HullArg {
    Zs,
    Z,
}

#[derive(Args, Debug, Serialize)]
pub struct AglfopArgs {
    /// Joint over (Z, S, Y); with `--hull`, a prediction file that also has Yhat.
    #[arg(long)]
    pub marginal: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    /// `start:stop:count` or a comma list; `inf` disables the budget.
    #[arg(long, default_value = "0:0.1:20")]
    pub eps_global: String,
    #[arg(long, default_value = "0:0.1:20")]
    pub eps_local: String,
    /// Add a brute-force column at this grid resolution.
    #[arg(long)]
    pub oracle: Option<usize>,
    /// Restrict to post-processings of the classifier in `--marginal`.
    #[arg(long, value_enum)]
    pub hull: Option<HullArg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArchArg {
    Mlp,
    Logistic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightsArg {
    ByCount,
    Uniform,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TrainArgs {
    /// Held-out rows drawn from outside the training rows (0 disables).
    #[arg(long, default_value_t = 5000)]
    pub holdout_rows: usize,
    #[arg(long, default_value_t = 30)]
    pub rounds: usize,
    #[arg(long, default_value_t = 2)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Weight of the local statistical-parity penalty.
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    #[arg(long, value_enum, default_value = "mlp")]
    pub arch: ArchArg,
    #[arg(long, value_enum, default_value = "by-count")]
    pub weights: WeightsArg,
}

#[derive(Args, Debug, Serialize)]
pub struct FlArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisArg {
    Alpha,
    Lambda,
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub axis: AxisArg,
    /// Comma-separated axis values.
    #[arg(long)]
    pub values: String,
    /// Worker threads (default: logical cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainArgs,
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match apply_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// 1 for solver failures, 2 for everything caused by the input.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. } | Error::NegativeTerm { .. } => 1,
        _ => 2,
    }
}

fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("config line {}: expected `key = value`", i + 1)))?;
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

/// Splices config-file entries in right after the subcommand so that
/// explicit flags, which come later, win.
fn apply_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let path = strs.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            strs.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    });
    let Some(path) = path else {
        return Ok(argv);
    };
    let cmd = Cli::command();
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    let Some(pos) = strs.iter().position(|a| names.contains(a)) else {
        return Ok(argv);
    };
    let sub = cmd.find_subcommand(&strs[pos]).expect("listed above");
    let mut flags: BTreeMap<String, bool> = BTreeMap::new();
    for arg in sub.get_arguments().chain(cmd.get_arguments()) {
        if let Some(long) = arg.get_long() {
            let takes_value = arg.get_num_args().is_none_or(|n| n.takes_values());
            flags.insert(long.to_string(), takes_value);
        }
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::InvalidArgument(format!("config {path}: {e}")))?;
    let mut injected: Vec<OsString> = Vec::new();
    for (key, value) in parse_config(&text)? {
        if key == "config" {
            continue;
        }
        match flags.get(&key) {
            None => return Err(Error::InvalidArgument(format!("unknown config key `{key}` for `{}`", strs[pos]))),
            Some(true) => {
                injected.push(format!("--{key}").into());
                injected.push(value.into());
            }
            Some(false) => match value.as_str() {
                "true" => injected.push(format!("--{key}").into()),
                "false" => {}
                other => return Err(Error::InvalidArgument(format!("`{key}` expects true or false, got {other}"))),
            },
        }
    }
    let mut out = argv[..=pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

/// `key = value` lines for every field of a serializable argument record.
fn replay_lines<T: Serialize>(command: &str, args: &T, json_flag: bool) -> Result<String> {
    let mut out = format!("# fedpid {command} --config replay.conf\n");
    if let serde_json::Value::Object(map) = serde_json::to_value(args)? {
        for (k, v) in map {
            let value = match v {
                serde_json::Value::Null => continue,
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            };
            out.push_str(&format!("{} = {}\n", k.replace('_', "-"), value));
        }
    }
    if json_flag {
        out.push_str("json = true\n");
    }
    Ok(out)
}

pub fn output_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

pub fn run(cli: &Cli) -> Result<()> {
    let out = output_dir(cli.out.as_deref());
    fs::create_dir_all(&out)?;
    match &cli.command {
        Command::Pid(a) => cmd_pid(a, &out, cli.json),
        Command::Aglfop(a) => cmd_aglfop(a, &out, cli.json),
        Command::Fl(a) => cmd_fl(a, &out, cli.json),
        Command::Sweep(a) => cmd_sweep(a, &out, cli.json),
    }
}

/// Joint JSON when the file starts with `{`, otherwise CSV.
pub fn load_joint(path: &Path) -> Result<JointDist> {
    let text = fs::read_to_string(path)?;
    if text.trim().is_empty() {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            reason: "empty file".into(),
        });
    }
    if text.trim_start().starts_with('{') {
        JointDist::from_json_str(&text)
    } else {
        JointDist::from_atom_csv(text.as_bytes())
    }
}

fn write_manifest(out: &Path, command: &str, replay: &str, body: serde_json::Value) -> Result<()> {
    let manifest = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "replay": "replay.conf",
        "result": body,
    });
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    fs::write(out.join("replay.conf"), replay)?;
    Ok(())
}

const PID_HEADER: [&str; 7] = [
    "local_bits",
    "global_bits",
    "unique_bits",
    "redundant_bits",
    "masked_bits",
    "iterations",
    "residual_prob",
];

fn pid_fields(d: &PidDecomposition) -> Vec<String> {
    vec![
        format!("{:.6}", d.local_disparity),
        format!("{:.6}", d.global_disparity),
        format!("{:.6}", d.uni),
        format!("{:.6}", d.red),
        format!("{:.6}", d.syn),
        d.iters.to_string(),
        format!("{:.3e}", d.residual.abs()),
    ]
}

fn write_pid(out: &Path, d: &PidDecomposition, as_json: bool) -> Result<()> {
    if as_json {
        fs::write(out.join("pid.json"), serde_json::to_string_pretty(d)?)?;
    } else {
        let mut w = csv::Writer::from_path(out.join("pid.csv"))?;
        w.write_record(PID_HEADER)?;
        w.write_record(pid_fields(d))?;
        w.flush()?;
    }
    Ok(())
}

fn cmd_pid(a: &PidArgs, out: &Path, as_json: bool) -> Result<()> {
    let d = load_joint(&a.input)?;
    let opts = SolverOptions {
        max_iters: a.max_iters,
        ..SolverOptions::default()
    };
    let report = pid::decompose(&d, &opts)?;
    write_pid(out, &report, as_json)?;
    if as_json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", pid::render_table(&[(&a.input.display().to_string(), &report)]));
    }
    write_manifest(out, "pid", &replay_lines("pid", a, as_json)?, serde_json::to_value(&report)?)
}

/// `start:stop:count` or a comma list; `inf` is accepted in either.
pub fn parse_axis(spec: &str) -> Result<Vec<f64>> {
    let num = |s: &str| -> Result<f64> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(f64::INFINITY);
        }
        s.parse::<f64>()
            .map_err(|_| Error::InvalidArgument(format!("bad number `{s}` in axis `{spec}`")))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let values = match parts.as_slice() {
        [a, b, n] => {
            let (a, b) = (num(a)?, num(b)?);
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad count in axis `{spec}`")))?;
            if n < 2 || !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidArgument(format!("axis `{spec}` needs finite ends and count >= 2")));
            }
            (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
        }
        [_] => spec.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(Error::InvalidArgument(format!("axis `{spec}` must be a:b:n or a comma list"))),
    };
    Ok(values)
}

/// Training rows (and a disjoint holdout) for the dataset flags.
fn load_rows(a: &DataArgs, holdout: usize) -> Result<(TabularDataset, Option<TabularDataset>)> {
    let (full, default_rows) = match a.dataset {
        DatasetKind::Adult => (data::adult_ingest(&a.data)?, 5_000),
        DatasetKind::Synthetic => {
            let rows = a.rows.unwrap_or(100_000);
            (data::synth_generate(rows + holdout, a.p_y, a.seed)?, 100_000)
        }
    };
    let rows = a.rows.unwrap_or(default_rows);
    let want = rows + holdout;
    if want > full.len() {
        return Err(Error::InvalidArgument(format!(
            "{rows} training + {holdout} holdout rows exceed the {} available",
            full.len()
        )));
    }
    let pool = if want == full.len() { full } else { full.subsample(want, a.seed)? };
    if holdout == 0 {
        return Ok((pool, None));
    }
    let (train, test) = pool.split(holdout as f64 / want as f64, a.seed)?;
    Ok((train, Some(test)))
}

fn partition_spec(a: &DataArgs) -> PartitionSpec {
    let scenario = match a.scenario {
        ScenarioKind::Iid => Scenario::Iid,
        ScenarioKind::Heterogeneity => Scenario::Heterogeneity { alpha: a.alpha },
        ScenarioKind::Synergy => Scenario::Synergy { lambda: a.lambda },
    };
    PartitionSpec {
        scenario,
        k: a.clients,
        seed: a.seed,
    }
}

fn cmd_aglfop(a: &AglfopArgs, out: &Path, as_json: bool) -> Result<()> {
    let g_axis = parse_axis(&a.eps_global)?;
    let l_axis = parse_axis(&a.eps_local)?;
    let (m, hull) = match &a.marginal {
        Some(path) => {
            let joint = load_joint(path)?;
            let hull = match a.hull {
                None => None,
                Some(h) => {
                    let grouping = if h == HullArg::Zs { HullGrouping::ZS } else { HullGrouping::Z };
                    Some(DerivedClassifierHull::from_predictions(&joint, grouping)?)
                }
            };
            (FixedMarginal::new(&joint)?, hull)
        }
        None => {
            if a.hull.is_some() {
                return Err(Error::InvalidArgument("--hull needs --marginal with a Yhat column".into()));
            }
            let (ds, _) = load_rows(&a.data, 0)?;
            let clients = data::partition(&ds, &partition_spec(&a.data))?;
            (FixedMarginal::new(&data::empirical_zsy(&clients)?)?, None)
        }
    };
    let opts = AglfopOptions::default();
    let grid = match &hull {
        Some(h) => aglfop::pareto_sweep_in_hull(&m, h, &g_axis, &l_axis, &opts)?,
        None => aglfop::pareto_sweep(&m, &g_axis, &l_axis, &opts)?,
    };
    let oracle: Option<Vec<Vec<f64>>> = match a.oracle {
        None => None,
        Some(res) => Some(
            g_axis
                .par_iter()
                .map(|&g| {
                    l_axis
                        .iter()
                        .map(|&l| Ok(1.0 - aglfop::brute_force_solve(&m, FairnessBudget::new(g, l)?, res)?))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    let mut body = grid.to_json();
    if let Some(o) = &oracle {
        body["oracle_accuracy"] = json!(o);
    }
    if as_json {
        fs::write(out.join("pareto.json"), serde_json::to_string_pretty(&body)?)?;
    } else if let Some(o) = &oracle {
        let mut w = csv::Writer::from_path(out.join("pareto.csv"))?;
        w.write_record(["eps_global", "eps_local", "accuracy", "status", "oracle_accuracy"])?;
        for (i, g) in g_axis.iter().enumerate() {
            for (j, l) in l_axis.iter().enumerate() {
                w.write_record([
                    axis_label(*g),
                    axis_label(*l),
                    format!("{:.10}", grid.accuracy[i][j]),
                    grid.status[i][j].as_str().to_string(),
                    format!("{:.10}", o[i][j]),
                ])?;
            }
        }
        w.flush()?;
    } else {
        grid.write_csv(fs::File::create(out.join("pareto.csv"))?)?;
    }
    let corner = grid.accuracy[0][0];
    let best = grid.accuracy[g_axis.len() - 1][l_axis.len() - 1];
    println!(
        "{}x{} grid: accuracy {corner:.4} at ({}, {}), {best:.4} at ({}, {})",
        g_axis.len(),
        l_axis.len(),
        axis_label(g_axis[0]),
        axis_label(l_axis[0]),
        axis_label(g_axis[g_axis.len() - 1]),
        axis_label(l_axis[l_axis.len() - 1]),
    );
    write_manifest(out, "aglfop", &replay_lines("aglfop", a, as_json)?, body)
}

fn axis_label(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v}")
    }
}

fn training_config(t: &TrainArgs, seed: u64) -> TrainingConfig {
    TrainingConfig {
        architecture: match t.arch {
            ArchArg::Mlp => Architecture::Mlp,
            ArchArg::Logistic => Architecture::Logistic,
        },
        rounds: t.rounds,
        local_epochs: t.epochs,
        batch_size: t.batch_size,
        learning_rate: t.lr,
        seed,
        fairness_beta: t.beta,
        client_weights: match t.weights {
            WeightsArg::ByCount => ClientWeights::ByCount,
            WeightsArg::Uniform => ClientWeights::Uniform,
        },
        ..TrainingConfig::default()
    }
}

/// Result of one partition, train and audit pass.
#[derive(Debug, Serialize)]
pub struct Audit {
    pub accuracy: f64,
    pub holdout_accuracy: Option<f64>,
    pub i_zs: f64,
    pub synergy_level: f64,
    pub alpha: Option<f64>,
    pub pid: PidDecomposition,
    #[serde(skip)]
    pub run: fl::FederationRun,
    #[serde(skip)]
    pub manifest: data::PartitionManifest,
}

/// Partition, train with FedAvg and decompose the resulting disparities.
pub fn audit(d: &DataArgs, t: &TrainArgs) -> Result<Audit> {
    let (train_rows, holdout) = load_rows(d, t.holdout_rows)?;
    let manifest = data::assign(&train_rows, &partition_spec(d))?;
    let clients = manifest.to_clients(&train_rows)?;
    let run = fl::train(&clients, &training_config(t, d.seed))?;
    let pid = pid::decompose(&run.joint, &SolverOptions::default())?;
    let holdout_accuracy = match &holdout {
        Some(h) => Some(fl::evaluate(&run.params, &[ClientDataset::from_rows(0, h)?])),
        None => None,
    };
    Ok(Audit {
        accuracy: run.accuracy,
        holdout_accuracy,
        i_zs: run.joint.mutual_information(&[Z], &[S])?,
        synergy_level: data::measured_synergy_level(&clients),
        alpha: data::measured_alpha(&clients, 0),
        pid,
        run,
        manifest,
    })
}

fn cmd_fl(a: &FlArgs, out: &Path, as_json: bool) -> Result<()> {
    let result = audit(&a.data, &a.train)?;
    let run = &result.run;
    run.write_predictions_csv(fs::File::create(out.join("predictions.csv"))?)?;
    fs::write(out.join("joint.json"), run.joint.to_json_string()?)?;
    fs::write(out.join("partition.json"), serde_json::to_string(&result.manifest)?)?;
    write_pid(out, &result.pid, as_json)?;
    let mut h = csv::Writer::from_path(out.join("history.csv"))?;
    h.write_record(["round", "loss_nats", "accuracy_prob"])?;
    for r in &run.history {
        h.write_record([r.round.to_string(), format!("{:.6}", r.loss), format!("{:.6}", r.accuracy)])?;
    }
    h.flush()?;
    print!("{}", pid::render_table(&[("fedavg", &result.pid)]));
    print!("accuracy {:.4}", result.accuracy);
    if let Some(h) = result.holdout_accuracy {
        print!(", holdout {h:.4}");
    }
    println!(", I(Z;S) {:.4} bits", result.i_zs);
    let body = json!({
        "config": training_config(&a.train, a.data.seed),
        "partition": result.manifest.spec,
        "dataset": {
            "kind": a.data.dataset,
            "rows": run.predictions.len(),
            "preprocessing": if a.data.dataset == DatasetKind::Adult { data::ADULT_PREPROCESSING } else { "synthetic-v1" },
        },
        "history": run.history,
        "audit": result,
        "artifacts": ["predictions.csv", "joint.json", "partition.json", "history.csv", if as_json { "pid.json" } else { "pid.csv" }],
    });
    write_manifest(out, "fl", &replay_lines("fl", a, as_json)?, body)
}

fn cmd_sweep(a: &SweepArgs, out: &Path, as_json: bool) -> Result<()> {
    let values: Vec<f64> = a
        .values
        .split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad axis value `{v}`")))
        })
        .collect::<Result<_>>()?;
    if values.is_empty() {
        return Err(Error::InvalidArgument("empty axis".into()));
    }
    let (axis, scenario) = match a.axis {
        AxisArg::Alpha => ("alpha", ScenarioKind::Heterogeneity),
        AxisArg::Lambda => ("lambda", ScenarioKind::Synergy),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let results: Vec<Result<Audit>> = pool.install(|| {
        values
            .par_iter()
            .map(|&v| {
                let mut d = a.data.clone();
                d.scenario = scenario;
                match a.axis {
                    AxisArg::Alpha => d.alpha = v,
                    AxisArg::Lambda => d.lambda = v,
                }
                audit(&d, &a.train)
            })
            .collect()
    });
    let header = [
        axis,
        "status",
        "i_zs_bits",
        "local_bits",
        "global_bits",
        "unique_bits",
        "redundant_bits",
        "masked_bits",
        "accuracy_prob",
        "holdout_accuracy_prob",
    ];
    let mut rows_json = Vec::new();
    let mut w = (!as_json).then(|| csv::Writer::from_path(out.join("sweep.csv"))).transpose()?;
    if let Some(w) = w.as_mut() {
        w.write_record(header)?;
    }
    for (v, r) in values.iter().zip(&results) {
        let record: Vec<String> = match r {
            Ok(x) => {
                let p = &x.pid;
                vec![
                    v.to_string(),
                    "ok".into(),
                    format!("{:.6}", x.i_zs),
                    format!("{:.6}", p.local_disparity),
                    format!("{:.6}", p.global_disparity),
                    format!("{:.6}", p.uni),
                    format!("{:.6}", p.red),
                    format!("{:.6}", p.syn),
                    format!("{:.6}", x.accuracy),
                    x.holdout_accuracy.map_or(String::new(), |h| format!("{h:.6}")),
                ]
            }
            Err(e) => {
                let mut row = vec![v.to_string(), format!("error: {e}")];
                row.resize(header.len(), String::new());
                row
            }
        };
        println!("{}", record.join(","));
        rows_json.push(match r {
            Ok(x) => json!({ axis: v, "status": "ok", "audit": x }),
            Err(e) => json!({ axis: v, "status": format!("error: {e}") }),
        });
        if let Some(w) = w.as_mut() {
            w.write_record(&record)?;
        }
    }
    if let Some(mut w) = w {
        w.flush()?;
    }
    let body = json!({ "axis": axis, "points": rows_json });
    if as_json {
        let mut f = fs::File::create(out.join("sweep.json"))?;
        f.write_all(serde_json::to_string_pretty(&body)?.as_bytes())?;
    }
    write_manifest(out, "sweep", &replay_lines("sweep", a, as_json)?, body)
}
