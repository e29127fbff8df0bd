//! `gerryfair`: audit classifiers and train subgroup-fair ones from the shell.
//!
//! Exit codes: 0 success (or fair), 2 unfair certificate found, 1 error.
//! Only a one-line summary goes to stdout; diagnostics go to stderr at the
//! level set by `GERRYFAIR_LOG`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gerryfair::audit::{audit, AuditInstance};
use gerryfair::csc::{CscOracle, ExhaustiveOracle, HypothesisFamily, RegressionOracle};
use gerryfair::data::{load_csv, Dataset, DatasetSchema};
use gerryfair::dynamics::{fair_fict_play, fair_nr, FitResult, RoundRecord, RunTrace};
use gerryfair::frontier::{pareto_frontier, FrontierPoint};
use gerryfair::game::FairnessParams;
use gerryfair::metrics::{Notion, Verdict};
use gerryfair::model::{read_predictions, Model};
use log::info;
use rayon::prelude::*;

#[derive(Parser, Debug)]
#[command(name = "gerryfair", version, about = "Rich-subgroup fairness auditing and learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Audit a classifier's predictions for subgroup unfairness.
    Audit(AuditArgs),
    /// Train a randomized classifier under a fairness constraint.
    Train(TrainArgs),
    /// Train over a list of γ values and emit the Pareto frontier.
    Sweep(SweepArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum NotionArg {
    Sp,
    Fp,
}

impl From<NotionArg> for Notion {
    fn from(n: NotionArg) -> Self {
        match n {
            NotionArg::Sp => Notion::Sp,
            NotionArg::Fp => Notion::Fp,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Dynamics {
    Fictplay,
    Nr,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum OracleKind {
    /// Enumerated conjunctions of one threshold literal per column.
    Exhaustive,
    /// Two-stage least-squares heuristic over linear thresholds.
    Regression,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// JSON schema naming the label and protected columns.
    #[arg(long)]
    schema: PathBuf,
    #[arg(long, value_enum, default_value = "fp")]
    notion: NotionArg,
    #[arg(long, value_enum, default_value = "exhaustive")]
    oracle: OracleKind,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[command(flatten)]
    data: DataArgs,
    /// CSV with a 0/1 column named D, one row per dataset row.
    #[arg(long)]
    predictions: PathBuf,
    /// Report a certificate only when α·β exceeds this.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
}

#[derive(Args, Debug)]
struct GameArgs {
    #[arg(long, value_enum, default_value = "fictplay")]
    dynamics: Dynamics,
    /// Dual bound C.
    #[arg(long = "cap", default_value_t = gerryfair::game::DEFAULT_CAP)]
    cap: f64,
    /// Number of rounds T.
    #[arg(long, default_value_t = 1000)]
    rounds: usize,
    /// Learner samples per round m (no-regret dynamics).
    #[arg(long, default_value_t = gerryfair::game::DEFAULT_SAMPLES)]
    samples: usize,
    /// FTPL noise scale η; defaults to the schedule's value.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Derive the game parameters from ν and δ instead of the flags above.
    #[arg(long)]
    theory_params: bool,
    #[arg(long, default_value_t = 0.1)]
    nu: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, default_value_t = 0.01)]
    gamma: f64,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    game: GameArgs,
    /// Comma-separated γ values.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    gammas: Vec<f64>,
    /// Average traces over this many consecutive seeds.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GERRYFAIR_LOG", "error"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Audit(args) => cmd_audit(&args),
        Command::Train(args) => cmd_train(&args).map(|()| ExitCode::SUCCESS),
        Command::Sweep(args) => cmd_sweep(&args).map(|()| ExitCode::SUCCESS),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    })
}

fn load(args: &DataArgs) -> Result<Dataset> {
    let schema =
        DatasetSchema::load(&args.schema).with_context(|| format!("reading schema {}", args.schema.display()))?;
    let data = load_csv(&args.data, &schema).with_context(|| format!("reading {}", args.data.display()))?;
    info!(
        "loaded {} rows, {} features ({} protected)",
        data.len(),
        data.feature_names().len(),
        data.protected_columns().len()
    );
    Ok(data)
}

fn oracle(kind: OracleKind, data: &Dataset, columns: Vec<usize>) -> Result<Box<dyn CscOracle>> {
    let x = data.features();
    Ok(match kind {
        OracleKind::Exhaustive => Box::new(ExhaustiveOracle::new(
            &HypothesisFamily::conjunctions_over(x, &columns),
            x,
        )?),
        OracleKind::Regression => Box::new(RegressionOracle::new(x, columns)?),
    })
}

fn out_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

fn write_json(path: &Path, text: &str) -> Result<()> {
    fs::write(path, format!("{text}\n")).with_context(|| format!("writing {}", path.display()))
}

fn cmd_audit(args: &AuditArgs) -> Result<ExitCode> {
    let data = load(&args.data)?;
    let file = File::open(&args.predictions).with_context(|| format!("opening {}", args.predictions.display()))?;
    let decisions = read_predictions(file).with_context(|| format!("reading {}", args.predictions.display()))?;
    let inst = AuditInstance::from_dataset(&data, decisions, args.data.notion.into(), args.gamma, args.gamma)?;
    let groups = oracle(args.data.oracle, inst.data(), inst.data().all_columns())?;
    let verdict = audit(&inst, groups.as_ref())?;
    out_dir(&args.data.out)?;
    let path = args.data.out.join("certificate.json");
    match verdict {
        Verdict::Fair => {
            write_json(&path, &serde_json::json!({ "result": "fair" }).to_string())?;
            println!("fair: no group found with alpha*beta above {}", args.gamma);
            Ok(ExitCode::SUCCESS)
        }
        Verdict::Unfair(cert) => {
            write_json(&path, &serde_json::to_string_pretty(&cert.to_json())?)?;
            println!(
                "unfair: alpha {:.6} beta {:.6} product {:.6}",
                cert.size, cert.disparity, cert.product
            );
            Ok(ExitCode::from(2))
        }
    }
}

fn params(game: &GameArgs, data: &Dataset, notion: Notion, gamma: f64) -> Result<FairnessParams> {
    let mut p = if game.theory_params {
        let vc_dim = (data.protected_columns().len() + 1) as f64;
        FairnessParams::theory(notion, gamma, game.nu, game.delta, data.len(), vc_dim)?
    } else {
        let mut p = FairnessParams::practical(notion, gamma, game.rounds);
        p.cap = game.cap;
        p.samples = game.samples;
        p
    };
    p.eta = game.eta;
    p.seed = game.seed;
    p.validate()?;
    Ok(p)
}

struct Players {
    learner: Box<dyn CscOracle>,
    auditor: Box<dyn CscOracle>,
}

impl Players {
    fn new(kind: OracleKind, data: &Dataset) -> Result<Self> {
        Ok(Self {
            learner: oracle(kind, data, data.all_columns())?,
            auditor: oracle(kind, data, data.protected_columns().to_vec())?,
        })
    }

    fn fit(&self, dynamics: Dynamics, data: &Dataset, params: &FairnessParams) -> Result<FitResult> {
        let (l, a) = (self.learner.as_ref(), self.auditor.as_ref());
        Ok(match dynamics {
            Dynamics::Fictplay => fair_fict_play(data, l, a, params)?,
            Dynamics::Nr => fair_nr(data, l, a, params)?,
        })
    }
}

fn write_trace(trace: &RunTrace, path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    trace.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let data = load(&args.data)?;
    let notion = args.data.notion.into();
    let params = params(&args.game, &data, notion, args.gamma)?;
    let players = Players::new(args.data.oracle, &data)?;
    info!("training with {params:?}");
    let fit = players.fit(args.game.dynamics, &data, &params)?;
    out_dir(&args.data.out)?;
    write_trace(&fit.trace, &args.data.out.join("trace.csv"))?;
    let model = Model::new(&fit.classifier, &fit.dual, notion, args.gamma);
    write_json(&args.data.out.join("model.json"), &model.to_json()?)?;
    let last = fit.trace.last().context("no rounds were run")?;
    println!(
        "trained: T {} error {:.6} unfairness {:.6} gap {:.6}",
        params.rounds,
        last.error,
        last.max_violation,
        last.gap_l + last.gap_a
    );
    Ok(())
}

/// Per-round mean of several traces of equal length. The group id is
/// taken from the first trace.
fn average_traces(traces: &[RunTrace]) -> Result<RunTrace> {
    let k = traces.len() as f64;
    let mut out = RunTrace::new();
    for (i, first) in traces[0].records().iter().enumerate() {
        let mean = |f: fn(&RoundRecord) -> f64| traces.iter().map(|t| f(&t.records()[i])).sum::<f64>() / k;
        out.push(RoundRecord {
            t: first.t,
            error: mean(|r| r.error),
            max_violation: mean(|r| r.max_violation),
            phi: mean(|r| r.phi),
            group_id: first.group_id,
            regret: None,
            gap_l: mean(|r| r.gap_l),
            gap_a: mean(|r| r.gap_a),
        })?;
    }
    Ok(out)
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    if args.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let data = load(&args.data)?;
    let notion: Notion = args.data.notion.into();
    let players = Players::new(args.data.oracle, &data)?;
    out_dir(&args.data.out)?;

    let traces: Vec<RunTrace> = args
        .gammas
        .par_iter()
        .map(|&gamma| {
            let runs = (0..args.seeds)
                .map(|k| {
                    let mut p = params(&args.game, &data, notion, gamma)?;
                    p.seed = args.game.seed.wrapping_add(k);
                    info!("sweep: γ = {gamma}, seed {}", p.seed);
                    Ok(players.fit(args.game.dynamics, &data, &p)?.trace)
                })
                .collect::<Result<Vec<_>>>()?;
            average_traces(&runs)
        })
        .collect::<Result<_>>()?;

    let mut points = Vec::new();
    for (i, (gamma, trace)) in args.gammas.iter().zip(&traces).enumerate() {
        write_trace(trace, &args.data.out.join(format!("trace_{i}.csv")))?;
        points.extend(trace.records().iter().map(|r| FrontierPoint {
            error: r.error,
            unfairness: r.max_violation,
            gamma: *gamma,
            t: r.t,
        }));
    }
    let frontier = pareto_frontier(&points);
    let path = args.data.out.join("pareto.csv");
    let mut out = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(out, "error,unfairness,gamma,t")?;
    for p in &frontier {
        writeln!(out, "{:.17e},{:.17e},{},{}", p.error, p.unfairness, p.gamma, p.t)?;
    }
    out.flush()?;
    println!(
        "swept {} gamma values: {} frontier points",
        args.gammas.len(),
        frontier.len()
    );
    Ok(())
}
