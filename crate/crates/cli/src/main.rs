//! `liftlab` command-line driver.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use liftlab::harness::{
    analyze, lift_histogram, run_sweep, write_histogram_csv, write_sweep_csv, SweepConfig,
};
use liftlab::io::{read_joint_file, write_channel};
use liftlab::response::AORR_CAP;
use liftlab::{Budget, Error, MeasureKind, MechanismKind};

#[derive(Parser)]
#[command(name = "liftlab", version, about = "Lift-based privacy mechanisms for discrete data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo sweep over a budget grid.
    Sweep(SweepArgs),
    /// Histogram of pooled log min- and max-lifts of random joints.
    Hist(HistArgs),
    /// Run one mechanism on a joint distribution read from CSV.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 5)]
    ns: usize,
    #[arg(long, default_value_t = 17)]
    nx: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// `start:stop:step` or a comma-separated list, in nats.
    #[arg(long, default_value = "0.25:8:0.25")]
    eps: String,
    #[arg(long = "lambda", value_delimiter = ',', default_value = "0.5")]
    lambdas: Vec<f64>,
    #[arg(long = "mechanism", value_delimiter = ',', default_value = "watchdog-subset")]
    mechanisms: Vec<String>,
    #[arg(long, default_value = "alip")]
    kind: String,
    #[arg(long = "alpha", value_delimiter = ',')]
    alphas: Vec<f64>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = AORR_CAP)]
    aorr_cap: usize,
    /// Use this joint in every trial instead of random ones.
    #[arg(long)]
    joint: Option<PathBuf>,
    /// Record per-trial wall time.
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct HistArgs {
    #[arg(long, default_value_t = 5)]
    ns: usize,
    #[arg(long, default_value_t = 17)]
    nx: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 60)]
    bins: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    joint: PathBuf,
    #[arg(long, default_value = "alip")]
    kind: String,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = f64::INFINITY)]
    eps_l: f64,
    #[arg(long, default_value_t = f64::INFINITY)]
    eps_u: f64,
    #[arg(long, default_value = "watchdog-subset")]
    mechanism: String,
    #[arg(long, default_value_t = AORR_CAP)]
    aorr_cap: usize,
    /// Channel CSV destination.
    #[arg(long)]
    out: PathBuf,
    /// Report destination; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn parse_grid(text: &str) -> Result<Vec<f64>, Error> {
    let bad = || Error::InvalidConfig(format!("cannot parse grid `{text}`"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| start + i as f64 * step).collect())
    } else {
        text.split(',').map(num).collect()
    }
}

fn kinds(name: &str, alphas: &[f64]) -> Result<Vec<MeasureKind>, Error> {
    if alphas.is_empty() {
        return Ok(vec![MeasureKind::parse(name, None)?]);
    }
    let first = MeasureKind::parse(name, Some(alphas[0]))?;
    if first.alpha().is_none() {
        return Ok(vec![first]);
    }
    alphas
        .iter()
        .map(|&a| MeasureKind::parse(name, Some(a)))
        .collect()
}

fn create(path: &PathBuf) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

fn sweep(args: SweepArgs) -> anyhow::Result<ExitCode> {
    let mechanisms = args
        .mechanisms
        .iter()
        .map(|m| m.parse::<MechanismKind>())
        .collect::<Result<Vec<_>, _>>()?;
    let joint = match &args.joint {
        Some(p) => Some(read_joint_file(p)?),
        None => None,
    };
    let cfg = SweepConfig {
        ns: args.ns,
        nx: args.nx,
        trials: args.trials,
        eps: parse_grid(&args.eps)?,
        lambdas: args.lambdas,
        mechanisms,
        kinds: kinds(&args.kind, &args.alphas)?,
        seed: args.seed,
        aorr_cap: args.aorr_cap,
        timing: args.timing,
        joint,
    };
    let outcome = run_sweep(&cfg)?;
    let mut w = create(&args.out)?;
    write_sweep_csv(&outcome.records, &mut w)?;
    w.flush()?;
    if outcome.records.is_empty() {
        eprintln!("every cell was skipped");
        return Ok(ExitCode::from(EXIT_INFEASIBLE));
    }
    Ok(ExitCode::SUCCESS)
}

fn hist(args: HistArgs) -> anyhow::Result<ExitCode> {
    let h = lift_histogram(args.ns, args.nx, args.trials, args.seed, args.bins)?;
    let mut w = create(&args.out)?;
    write_histogram_csv(&h, &mut w)?;
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn analyze_cmd(args: AnalyzeArgs) -> anyhow::Result<ExitCode> {
    let j = read_joint_file(&args.joint)?;
    let kind = MeasureKind::parse(&args.kind, args.alpha)?;
    let b = Budget::new(args.eps_l, args.eps_u)?;
    let mechanism: MechanismKind = args.mechanism.parse()?;
    let report = analyze(&j, mechanism, kind, &b, args.aorr_cap)?;

    let mut w = create(&args.out)?;
    write_channel(&report.channel, &mut w)?;
    w.flush()?;
    let text = report.to_key_values(j.col_labels());
    match &args.report {
        Some(p) => {
            let mut r = create(p)?;
            r.write_all(text.as_bytes())?;
            r.flush()?;
        }
        None => print!("{text}"),
    }
    if !report.satisfied {
        eprintln!("budget not met");
        return Ok(ExitCode::from(EXIT_INFEASIBLE));
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Hist(a) => hist(a),
        Command::Analyze(a) => analyze_cmd(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let validation = e
                .downcast_ref::<Error>()
                .is_some_and(Error::is_validation);
            if validation {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
