use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use sinr_sched::arrivals::{build_rate_vector, RateVector};
use sinr_sched::model::{generate_instance, Instance};
use sinr_sched::scheduling::GreedyScheduler;
use sinr_sched::simulator::{
    default_theta, estimate_stability, run_centralized, run_distributed, Mode, SimConfig, Trace, MIN_STABILITY_SLOTS,
};
use sinr_sched::sinr::{AffectanceMatrix, PowerAssignment};
use sinr_sched::{ArrivalError, SimError, SinrError};

use crate::config::{ExperimentSpec, InstanceSource};
use crate::CliError;

pub const TRACE_HEADER: [&str; 7] =
    ["slot", "max_queue", "total_queue", "delivered_cum", "arrived_cum", "setqueue_or_s", "cur"];
pub const PERIOD_HEADER: [&str; 3] = ["period", "batch_size", "schedule_len"];
pub const SUMMARY_HEADER: [&str; 9] =
    ["gamma", "seed", "mode", "final_max_queue", "stable", "slope", "delivered_fraction", "trace_file", "trace_rows"];

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub gamma: f64,
    pub seed: u64,
    pub mode: Mode,
    pub final_max_queue: u64,
    pub stable: bool,
    /// Max-queue growth per 1000 slots over the second half of the run.
    pub slope: f64,
    pub delivered_fraction: f64,
    /// Trace file name, relative to the output directory.
    pub trace_file: String,
    pub trace_rows: u64,
}

impl SummaryRow {
    fn record(&self) -> [String; 9] {
        [
            self.gamma.to_string(),
            self.seed.to_string(),
            self.mode.as_str().to_string(),
            self.final_max_queue.to_string(),
            self.stable.to_string(),
            self.slope.to_string(),
            self.delivered_fraction.to_string(),
            self.trace_file.clone(),
            self.trace_rows.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    /// One row per (gamma, seed), gammas in sweep order, then seeds.
    pub rows: Vec<SummaryRow>,
    pub summary_path: PathBuf,
    /// Largest swept gamma below which every run was judged stable.
    pub threshold: Option<f64>,
}

/// Largest gamma such that it and every smaller swept gamma were stable for all seeds.
pub fn measured_threshold(rows: &[SummaryRow]) -> Option<f64> {
    let mut gammas: Vec<f64> = rows.iter().map(|r| r.gamma).collect();
    gammas.sort_by(f64::total_cmp);
    gammas.dedup();
    gammas.into_iter().take_while(|&g| rows.iter().filter(|r| r.gamma == g).all(|r| r.stable)).last()
}

/// Everything a cell needs that does not depend on gamma.
struct Prepared {
    instance: Instance,
    matrix: AffectanceMatrix,
}

fn prepare(instance: Instance, pa: &PowerAssignment) -> Result<Prepared, CliError> {
    let matrix = AffectanceMatrix::new(&instance, pa).map_err(|e| match e {
        SinrError::DeadLink { id } => CliError::Instance(format!("link {id} is dead under the chosen power and noise")),
        other => CliError::Instance(other.to_string()),
    })?;
    Ok(Prepared { instance, matrix })
}

fn load_instance(path: &Path) -> Result<Instance, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    Instance::from_text(&text).map_err(|e| CliError::Instance(format!("{}: {e}", path.display())))
}

fn generate(spec: &ExperimentSpec, seed: u64) -> Result<Instance, CliError> {
    match &spec.source {
        InstanceSource::Generate(p) => generate_instance(p, seed).map_err(|e| CliError::Instance(e.to_string())),
        InstanceSource::File(path) => load_instance(path),
    }
}

fn rate_vector(prep: &Prepared, gamma: f64) -> Result<RateVector, CliError> {
    if gamma == 0.0 {
        return Ok(RateVector::zero(prep.instance.len()));
    }
    build_rate_vector(&prep.instance, gamma, &GreedyScheduler::new(&prep.instance, &prep.matrix)).map_err(|e| match e {
        ArrivalError::Schedule(s) => CliError::Instance(s.to_string()),
        other => CliError::Setup(other.to_string()),
    })
}

fn file_stem(gamma: f64, seed: u64) -> String {
    format!("g{gamma}_s{seed}")
}

fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator,
    I::Item: IntoIterator,
    <I::Item as IntoIterator>::Item: AsRef<[u8]>,
{
    let csv_err = |source| CliError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Writes every `stride`-th slot of the trace and returns the number of rows.
fn write_trace(path: &Path, trace: &Trace, stride: u64) -> Result<u64, CliError> {
    let sampled: Vec<_> = trace.slots.iter().filter(|r| r.slot % stride == 0).collect();
    let rows = sampled.len() as u64;
    write_csv(
        path,
        &TRACE_HEADER,
        sampled.into_iter().map(|r| {
            [r.slot, r.max_queue, r.total_queue, r.delivered_cum, r.arrived_cum, r.setqueue_or_s, r.cur]
                .map(|v| v.to_string())
        }),
    )?;
    Ok(rows)
}

fn run_cell(spec: &ExperimentSpec, prep: &Prepared, gamma: f64, seed: u64) -> Result<SummaryRow, CliError> {
    let pa = spec.power.assignment();
    let rv = rate_vector(prep, gamma)?;
    let theta = default_theta(prep.instance.len(), spec.theta_c);
    let cfg = SimConfig::new(spec.mode, theta, spec.slots, seed);
    let result = match spec.mode {
        Mode::Centralized => run_centralized(&prep.instance, &pa, &rv, &cfg),
        Mode::Distributed => run_distributed(&prep.instance, &pa, &rv, &cfg),
    };
    let trace = result.map_err(|e| match e {
        SimError::Invariant { slot, msg } => CliError::Invariant { gamma, seed, msg: format!("slot {slot}: {msg}") },
        SimError::Sinr(SinrError::DeadLink { id }) => CliError::Instance(format!("link {id} is dead")),
        other => CliError::Setup(other.to_string()),
    })?;
    trace.check_conservation().map_err(|e| CliError::Invariant { gamma, seed, msg: e.to_string() })?;
    let stability = estimate_stability(&trace).map_err(|e| CliError::Setup(e.to_string()))?;

    let stem = file_stem(gamma, seed);
    let trace_file = format!("trace_{stem}.csv");
    let trace_rows = write_trace(&spec.out.join(&trace_file), &trace, spec.stride)?;
    write_csv(
        &spec.out.join(format!("periods_{stem}.csv")),
        &PERIOD_HEADER,
        trace.periods.iter().map(|p| [p.period, p.batch_size, p.schedule_len].map(|v| v.to_string())),
    )?;

    Ok(SummaryRow {
        gamma,
        seed,
        mode: spec.mode,
        final_max_queue: trace.last().map_or(0, |r| r.max_queue),
        stable: stability.stable,
        slope: stability.slope,
        delivered_fraction: trace.delivered_fraction(),
        trace_file,
        trace_rows,
    })
}

/// Runs every (gamma, seed) cell on at most `jobs` threads.
///
/// Each cell writes `trace_g<gamma>_s<seed>.csv` and `periods_g<gamma>_s<seed>.csv`
/// into the output directory; once all cells finish, `summary.csv` and the
/// canonical `config.txt` are written next to them.
pub fn run_experiment(spec: &ExperimentSpec, jobs: usize) -> Result<ExperimentReport, CliError> {
    if spec.slots < MIN_STABILITY_SLOTS as u64 {
        return Err(CliError::Setup(format!("slots must be >= {MIN_STABILITY_SLOTS} for a stability verdict")));
    }
    let pa = spec.power.assignment();

    // Instances are built and checked before any simulation starts.
    let shared = match (&spec.source, spec.instance_seed) {
        (InstanceSource::File(path), _) => Some(prepare(load_instance(path)?, &pa)?),
        (InstanceSource::Generate(_), Some(seed)) => Some(prepare(generate(spec, seed)?, &pa)?),
        (InstanceSource::Generate(_), None) => None,
    };
    let per_seed: Vec<Prepared> = match shared {
        Some(_) => Vec::new(),
        None => spec.seeds.iter().map(|&s| prepare(generate(spec, s)?, &pa)).collect::<Result<_, _>>()?,
    };
    let prepared_for = |i: usize| shared.as_ref().unwrap_or_else(|| &per_seed[i]);

    let theta = default_theta(prepared_for(0).instance.len(), spec.theta_c);
    if spec.slots < theta {
        return Err(CliError::Setup(format!("slots ({}) must be >= theta ({theta})", spec.slots)));
    }

    fs::create_dir_all(&spec.out).map_err(|source| CliError::Io { path: spec.out.clone(), source })?;
    let cells: Vec<(f64, usize)> =
        spec.gammas.iter().flat_map(|&g| (0..spec.seeds.len()).map(move |i| (g, i))).collect();
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| CliError::Setup(e.to_string()))?;
    let results: Vec<Result<SummaryRow, CliError>> =
        pool.install(|| cells.par_iter().map(|&(g, i)| run_cell(spec, prepared_for(i), g, spec.seeds[i])).collect());
    let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let summary_path = spec.out.join("summary.csv");
    write_csv(&summary_path, &SUMMARY_HEADER, rows.iter().map(SummaryRow::record))?;
    let config_path = spec.out.join("config.txt");
    fs::write(&config_path, spec.to_config()).map_err(|source| CliError::Io { path: config_path, source })?;

    let threshold = measured_threshold(&rows);
    Ok(ExperimentReport { rows, summary_path, threshold })
}
