use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use occdyn::data::{generate_synthetic, load_csv, write_csv};
use occdyn::harness::{emit_reports, run_all, ExperimentConfig, ExperimentReport, Method};
use occdyn::{Dataset64, Error};

#[derive(Parser, Debug)]
#[command(name = "occdyn", version, about = "Deep one-class anomaly detection with rank-dynamics pseudo-labeling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train and evaluate one method on a labeled CSV.
    Run(RunArgs),
    /// Write a synthetic Gaussian dataset with planted anomalies.
    Synth(SynthArgs),
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// CSV with numeric feature columns and a 0/1 `label` column.
    #[arg(long)]
    data: PathBuf,
    /// oc, sb, oc-otsu, oc-tar or proposed.
    #[arg(long, default_value = "proposed")]
    method: Method,
    /// A count k (seeds 0..k) or a comma-separated list of seeds.
    #[arg(long, default_value = "1")]
    seeds: String,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 100)]
    pretrain_epochs: usize,
    #[arg(long, default_value_t = 128)]
    batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Hidden widths, e.g. 32,16,8. Defaults depend on the dataset.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    /// Soft-boundary outlier fraction; defaults to the dataset's anomaly ratio.
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>, Error> {
    let spec = spec.trim();
    let bad = |part: &str| Error::InvalidConfig(format!("invalid seed `{part}` in `{spec}`"));
    if !spec.contains(',') {
        let k: u64 = spec.parse().map_err(|_| bad(spec))?;
        return Ok((0..k).collect());
    }
    spec.split(',')
        .map(|p| p.trim().parse::<u64>().map_err(|_| bad(p)))
        .collect()
}

fn run(args: RunArgs) -> Result<(), Error> {
    let dataset: Dataset64 = load_csv(&args.data)?;
    let config = ExperimentConfig {
        method: args.method,
        epochs: args.epochs,
        pretrain_epochs: args.pretrain_epochs,
        batch_size: args.batch,
        learning_rate: args.lr,
        seeds: parse_seeds(&args.seeds)?,
        hidden: args.hidden,
        nu: args.nu,
        out_dir: Some(args.out.clone()),
    };
    config.validate(&dataset)?;
    let runs = run_all(&config, &dataset)?;
    let report = ExperimentReport::new(config, &dataset, runs);
    emit_reports(&report, &args.out)?;
    let line = serde_json::json!({
        "status": "ok",
        "dataset": dataset.name,
        "method": args.method.as_str(),
        "out": args.out.display().to_string(),
        "aggregate": report.aggregate,
    });
    println!("{line}");
    Ok(())
}

fn synth(args: SynthArgs) -> Result<(), Error> {
    let dataset: Dataset64 = generate_synthetic(args.n, args.dim, args.ratio, args.seed)?;
    write_csv(&dataset, &args.out)?;
    let line = serde_json::json!({
        "status": "ok",
        "out": args.out.display().to_string(),
        "rows": dataset.len(),
        "anomalies": dataset.anomaly_count(),
    });
    println!("{line}");
    Ok(())
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "status": "error", "kind": kind, "message": message }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("").trim_start_matches("error: ");
            return fail("usage", first, 2);
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Synth(args) => synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = match e {
                Error::InvalidConfig(_) => 2,
                _ => 1,
            };
            fail(e.kind(), &e.to_string(), code)
        }
    }
}
