//! Benchmark harness: build or load an input, run sorters over a grid of
//! algorithms, thread counts and repeats, verify, time and emit CSV.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use raduls::datagen::{self, Distribution, GenSpec, DEFAULT_THETA, DEFAULT_UNIVERSE};
use raduls::radix::BufferConfig;
use raduls::verify::{self, VerifyReport};
use raduls::{Error, LsdConfig, RecordArray, RecordLayout, SchedulerConfig};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(
    name = "raduls-bench",
    version,
    about = "Time and verify radix sorters on fixed-size records"
)]
#[command(args_conflicts_with_subcommands = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,

    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print median-based speedups relative to one thread from a results CSV.
    Speedup {
        /// Results CSV written by a previous run.
        csv: PathBuf,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Raduls,
    Lsd1,
    Lsd4,
    Oracle,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Raduls => "raduls",
            Algo::Lsd1 => "lsd1",
            Algo::Lsd4 => "lsd4",
            Algo::Oracle => "oracle",
        }
    }

    /// Stable algorithms are checked record-for-record in full mode.
    pub fn is_stable(self) -> bool {
        !matches!(self, Algo::Raduls)
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Dist {
    Uniform,
    Zipf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum VerifyMode {
    /// Sortedness and an order-independent permutation digest.
    Digest,
    /// Comparison against the reference sort (n <= 10^8).
    Full,
}

pub const FULL_VERIFY_LIMIT: usize = 100_000_000;

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Algorithms to run, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "raduls")]
    pub algo: Vec<Algo>,

    /// Number of records to generate.
    #[arg(long, default_value_t = 1_000_000)]
    pub n: usize,

    /// Record size in bytes: 8, 16, 24 or 32.
    #[arg(long, default_value_t = 16)]
    pub record_size: usize,

    /// Key size in bytes: 8 or 16, at most the record size.
    #[arg(long, default_value_t = 8)]
    pub key_size: usize,

    #[arg(long, value_enum, default_value = "uniform")]
    pub dist: Dist,

    /// Zipf exponent.
    #[arg(long, default_value_t = DEFAULT_THETA)]
    pub theta: f64,

    /// Distinct zipf ranks.
    #[arg(long, default_value_t = DEFAULT_UNIVERSE)]
    pub universe: u64,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Thread counts to sweep, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub threads: Vec<usize>,

    #[arg(long, default_value_t = 3)]
    pub repeats: usize,

    /// Raw record file to sort instead of generated data.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Verify each result (digest when given without a value).
    #[arg(long, value_enum, num_args = 0..=1, require_equals = true, default_missing_value = "digest")]
    pub verify: Option<VerifyMode>,

    /// L2 cache size used to pick the split kernel for small bins.
    #[arg(long, default_value_t = 262_144)]
    pub l2_bytes: usize,

    /// Write-combining bytes per digit lane for raduls.
    #[arg(long, default_value_t = 256)]
    pub buffer_bytes: usize,

    /// Output path for CSV rows, or `stdout`.
    #[arg(long, default_value = "stdout")]
    pub csv: String,
}

/// One timed sort.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub algo: String,
    pub n: usize,
    pub record_size: usize,
    pub key_size: usize,
    pub distribution: String,
    pub threads: usize,
    /// Seconds spent in the sort call only.
    pub wall_time: f64,
    pub verified: bool,
    pub repeat_index: usize,
}

/// Harness phases outside the timed region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Prepare,
    Copy,
    Sort,
    Verify,
}

pub trait Clock {
    fn now(&self) -> Duration;

    /// Called when the harness enters `phase`.
    fn mark(&self, _phase: Phase) {}
}

pub struct MonotonicClock(Instant);

impl Default for MonotonicClock {
    fn default() -> Self {
        MonotonicClock(Instant::now())
    }
}

impl Clock for MonotonicClock {
    fn now(&self) -> Duration {
        self.0.elapsed()
    }
}

#[derive(Debug)]
pub enum BenchError {
    Usage(String),
    Sort(Error),
    Output(String),
}

impl fmt::Display for BenchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchError::Usage(m) => write!(f, "usage: {m}"),
            BenchError::Sort(e) => write!(f, "{e}"),
            BenchError::Output(m) => write!(f, "output: {m}"),
        }
    }
}

impl std::error::Error for BenchError {}

impl From<Error> for BenchError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::InvalidLayout { .. } => {
                BenchError::Usage(e.to_string())
            }
            e => BenchError::Sort(e),
        }
    }
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        BenchError::Output(e.to_string())
    }
}

impl BenchError {
    /// 2 for usage errors, 3 for resource, I/O and format errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Usage(_) => 2,
            BenchError::Sort(_) | BenchError::Output(_) => 3,
        }
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub rows: Vec<RunResult>,
    /// Combinations whose verification failed, as `algo/threads/repeat`.
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            1
        }
    }
}

impl RunArgs {
    pub fn layout(&self) -> Result<RecordLayout, BenchError> {
        Ok(RecordLayout::new(self.record_size, self.key_size)?)
    }

    fn check(&self) -> Result<(), BenchError> {
        if self.algo.is_empty() || self.threads.is_empty() {
            return Err(BenchError::Usage(
                "--algo and --threads need at least one value".into(),
            ));
        }
        if self.threads.contains(&0) {
            return Err(BenchError::Usage("thread counts must be positive".into()));
        }
        if self.repeats == 0 {
            return Err(BenchError::Usage("--repeats must be positive".into()));
        }
        Ok(())
    }

    pub fn scheduler_config(&self, threads: usize) -> SchedulerConfig {
        SchedulerConfig {
            threads,
            l2_cache_bytes: self.l2_bytes,
            buffer: BufferConfig::with_lane_bytes(self.buffer_bytes),
            ..Default::default()
        }
    }

    fn distribution(&self) -> Distribution {
        match self.dist {
            Dist::Uniform => Distribution::Uniform,
            Dist::Zipf => Distribution::Zipf {
                theta: self.theta,
                universe: self.universe,
            },
        }
    }
}

pub fn run_algo(
    algo: Algo,
    data: &mut [u8],
    layout: RecordLayout,
    threads: usize,
    args: &RunArgs,
) -> Result<(), Error> {
    match algo {
        Algo::Raduls => raduls::sort(data, layout, &args.scheduler_config(threads)),
        Algo::Lsd1 => raduls::lsd_sort(data, layout, &LsdConfig::lsd1(threads)).map(|_| ()),
        Algo::Lsd4 => raduls::lsd_sort(data, layout, &LsdConfig::lsd4(threads)).map(|_| ()),
        Algo::Oracle => {
            verify::oracle_sort_in_place(data, layout);
            Ok(())
        }
    }
}

/// Runs the whole grid, algorithm-major, then threads, then repeats.
/// Each row is handed to `emit` as soon as it is measured.
pub fn run_benchmark<C, E>(args: &RunArgs, clock: &C, mut emit: E) -> Result<Outcome, BenchError>
where
    C: Clock,
    E: FnMut(&RunResult) -> Result<(), BenchError>,
{
    args.check()?;
    let layout = args.layout()?;
    clock.mark(Phase::Prepare);
    let (input, dist_name) = match &args.input {
        Some(path) => (datagen::load_file(path, layout)?, "file"),
        None => {
            let spec = GenSpec {
                n: args.n,
                layout,
                distribution: args.distribution(),
                seed: args.seed,
            };
            (datagen::generate(&spec)?, spec.distribution.name())
        }
    };
    if args.verify == Some(VerifyMode::Full) && input.len() > FULL_VERIFY_LIMIT {
        return Err(BenchError::Usage(format!(
            "--verify=full supports at most {FULL_VERIFY_LIMIT} records"
        )));
    }
    let before = args
        .verify
        .map(|_| verify::digest(input.as_bytes(), layout));

    let mut outcome = Outcome::default();
    let mut work = RecordArray::zeroed(layout, input.len())?;
    for &algo in &args.algo {
        for &threads in &args.threads {
            for repeat in 0..args.repeats {
                clock.mark(Phase::Copy);
                work.as_bytes_mut().copy_from_slice(input.as_bytes());

                let start = clock.now();
                clock.mark(Phase::Sort);
                run_algo(algo, work.as_bytes_mut(), layout, threads, args)?;
                let wall = clock.now().saturating_sub(start);

                let verified = match args.verify {
                    None => false,
                    Some(mode) => {
                        clock.mark(Phase::Verify);
                        let report = match mode {
                            VerifyMode::Digest => {
                                VerifyReport::digest_mode(before.unwrap(), work.as_bytes(), layout)
                            }
                            VerifyMode::Full => VerifyReport::full_mode(
                                input.as_bytes(),
                                work.as_bytes(),
                                layout,
                                algo.is_stable(),
                            ),
                        };
                        if !report.ok() {
                            outcome.failures.push(format!(
                                "{algo}/threads={threads}/repeat={repeat}: {report:?}"
                            ));
                        }
                        report.ok()
                    }
                };
                let row = RunResult {
                    algo: algo.name().to_string(),
                    n: input.len(),
                    record_size: layout.record_size(),
                    key_size: layout.key_size(),
                    distribution: dist_name.to_string(),
                    threads,
                    wall_time: wall.as_secs_f64(),
                    verified,
                    repeat_index: repeat,
                };
                emit(&row)?;
                outcome.rows.push(row);
            }
        }
    }
    Ok(outcome)
}

/// CSV sink writing a header and one line per result.
pub fn csv_sink<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(true).from_writer(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpeedupRow {
    pub algo: String,
    pub n: usize,
    pub record_size: usize,
    pub key_size: usize,
    pub distribution: String,
    pub threads: usize,
    pub median_wall_time: f64,
    pub speedup: f64,
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

type GroupKey = (String, usize, usize, usize, String);

/// `speedup(T) = median time at T=1 / median time at T` for every
/// configuration group. Groups without a T=1 row are reported in the
/// second return value and skipped.
pub fn speedup_report<R: Read>(csv_in: R) -> Result<(Vec<SpeedupRow>, Vec<String>), BenchError> {
    let mut groups: BTreeMap<GroupKey, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    let mut rdr = csv::Reader::from_reader(csv_in);
    for row in rdr.deserialize::<RunResult>() {
        let r = row?;
        groups
            .entry((r.algo, r.n, r.record_size, r.key_size, r.distribution))
            .or_default()
            .entry(r.threads)
            .or_default()
            .push(r.wall_time);
    }
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for ((algo, n, rs, ks, dist), mut by_threads) in groups {
        let Some(base) = by_threads.get_mut(&1).map(|v| median(v)) else {
            skipped.push(format!(
                "{algo} (n={n}, {rs}B/{ks}B, {dist}): no threads=1 baseline"
            ));
            continue;
        };
        for (threads, times) in by_threads.iter_mut() {
            let m = median(times);
            out.push(SpeedupRow {
                algo: algo.clone(),
                n,
                record_size: rs,
                key_size: ks,
                distribution: dist.clone(),
                threads: *threads,
                median_wall_time: m,
                speedup: if m > 0.0 { base / m } else { f64::INFINITY },
            });
        }
    }
    Ok((out, skipped))
}
