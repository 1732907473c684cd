use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use sinr_sched_cli::{run_experiment, CliError, ExperimentSpec, Layer};

/// Sweep efficiency ratios and seeds through the SINR queueing simulator.
///
/// Settings are taken from defaults, then the config file, then flags.
/// Exit status: 0 success, 1 I/O error, 2 config error, 3 invariant
/// violation, 4 instance rejected.
#[derive(Debug, Parser)]
#[command(name = "sinr-sched", version)]
struct Args {
    /// Config file with key=value lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// centralized or distributed.
    #[arg(long)]
    mode: Option<String>,
    /// Comma-separated efficiency ratios in [0, 1].
    #[arg(long)]
    gamma: Option<String>,
    /// Comma-separated seeds; `a..b` is an inclusive range.
    #[arg(long)]
    seeds: Option<String>,
    /// Physical slots per run.
    #[arg(long)]
    slots: Option<String>,
    /// Period length coefficient c in theta = ceil(c * log2(n)^2).
    #[arg(long = "theta-c")]
    theta_c: Option<String>,
    /// mean, linear, uniform or uniform:<level>.
    #[arg(long)]
    power: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Keep every k-th slot in trace files.
    #[arg(long)]
    stride: Option<String>,
    /// Instance file to load instead of generating one.
    #[arg(long)]
    instance: Option<String>,
    /// Parallel runs (default: available cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn build_spec(args: &Args) -> Result<ExperimentSpec, CliError> {
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            Layer::parse(&text)?
        }
        None => Layer::default(),
    };
    let mut flags = Layer::default();
    let pairs = [
        ("mode", &args.mode),
        ("gamma", &args.gamma),
        ("seeds", &args.seeds),
        ("slots", &args.slots),
        ("theta_c", &args.theta_c),
        ("power", &args.power),
        ("out", &args.out),
        ("stride", &args.stride),
        ("instance", &args.instance),
    ];
    for (key, value) in pairs {
        if let Some(v) = value {
            flags.set_flag(key, v.as_str())?;
        }
    }
    Ok(ExperimentSpec::from_layer(&file.overlay(flags))?)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let jobs = args.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let outcome = build_spec(&args).and_then(|spec| run_experiment(&spec, jobs));
    match outcome {
        Ok(report) => {
            println!("gamma\tseed\tmode\tfinal_max_queue\tstable\tslope\tdelivered");
            for r in &report.rows {
                println!(
                    "{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}",
                    r.gamma,
                    r.seed,
                    r.mode.as_str(),
                    r.final_max_queue,
                    r.stable,
                    r.slope,
                    r.delivered_fraction
                );
            }
            match report.threshold {
                Some(g) => println!("measured efficiency threshold: gamma = {g}"),
                None => println!("measured efficiency threshold: none (smallest swept gamma was unstable)"),
            }
            println!("summary: {}", report.summary_path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
