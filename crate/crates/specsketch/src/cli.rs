//! The `specsketch` command line.
//!
//! Exit codes: 0 success, 2 usage error, 3 file or format error, 4 numeric
//! failure.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use specsketch_core::metrics::{psd_errors, storage_report, StorageMethod, StorageReport};
use specsketch_core::spectral::{finish_blocks, sketch_stream, CHUNK_ROWS};
use specsketch_core::synth::{AdversarialConfig, TwoFrequencyConfig};
use specsketch_core::{
    autocorr_from_sketch, AutocorrEstimate, CellAudit, Error as CoreError, PipelineConfig, PowerSpectrum, SketchKind,
    TimeSeriesSource, Transform,
};

use crate::bench::{consistency_blocks, run_bench, write_bench, BenchConfig, InputSpec};
use crate::io::{
    read_manifest, read_sketched, read_table, write_atomic, write_manifest, write_sketched, write_table, DenseFormat,
    DmatWriter, FieldSpec, IoError,
};
use crate::manifest::RunManifest;
use crate::methods::{run_method, Method, MethodParams};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FORMAT: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// Name of the environment variable capping worker threads.
pub const THREADS_ENV: &str = "SPECSKETCH_THREADS";

/// Block manifest written by `sketch` and read by `estimate`.
pub const BLOCK_MANIFEST: &str = "blocks.txt";

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn numeric(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERIC,
            message: message.into(),
        }
    }
}

/// Core parameter names that correspond to a flag.
fn flag_for(name: &str) -> Option<&'static str> {
    Some(match name {
        "gamma" => "--gamma",
        "k" => "--k",
        "m" => "--m",
        "blocks" => "--blocks",
        "ell" => "--ell",
        "L" => "--levels",
        "c" => "--c",
        "n" => "--n",
        "t" => "--t",
        "dt" => "--dt",
        "f_fast" => "--f-fast",
        "f_slow" => "--f-slow",
        "omega" => "--omega",
        "omega_prime" => "--omega-prime",
        "n_special" => "--n-special",
        "noise_sigma" => "--noise-sigma",
        "pulse_width" => "--pulse-width",
        "t1" => "--t1",
        _ => return None,
    })
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match &e {
            CoreError::InvalidParameter { name, reason } => match flag_for(name) {
                Some(flag) => CliError::usage(format!("invalid value for {flag}: {reason}")),
                None => CliError::usage(e.to_string()),
            },
            CoreError::OverlappingPulses(..) => CliError::usage(format!("invalid pulse placement (--t1/--t2/--pulse-width): {e}")),
            CoreError::DimensionMismatch { .. } | CoreError::Source(_) => Self {
                code: EXIT_FORMAT,
                message: e.to_string(),
            },
            CoreError::InvalidLag { .. }
            | CoreError::TooFewValidLags { .. }
            | CoreError::Asymmetric(_)
            | CoreError::EmptySample
            | CoreError::NonRealSpectrum(_) => CliError::numeric(e.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Core(c) => c.into(),
            other => Self {
                code: EXIT_FORMAT,
                message: format!("{} [{}]", other, other.code()),
            },
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "specsketch", version, about = "Sketched autocorrelation and power spectrum estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic data set.
    Synth(SynthArgs),
    /// Sketch a data file block by block.
    Sketch(SketchArgs),
    /// Estimate autocorrelation and PSD from sketched blocks.
    Estimate(EstimateArgs),
    /// Estimate with a subsampling or correlator baseline.
    Baseline(BaselineArgs),
    /// Compare an estimated PSD against a reference.
    Compare(CompareArgs),
    /// Sweep compression ratios over all methods.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SynthKind {
    TwoFreq,
    Adversarial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SketchMethod {
    Gaussian,
    Haar,
    Fjlt,
}

impl From<SketchMethod> for SketchKind {
    fn from(m: SketchMethod) -> Self {
        match m {
            SketchMethod::Gaussian => SketchKind::Gaussian,
            SketchMethod::Haar => SketchKind::Haar,
            SketchMethod::Fjlt => SketchKind::Fjlt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum TransformArg {
    Wht,
    Dct,
}

impl From<TransformArg> for Transform {
    fn from(t: TransformArg) -> Self {
        match t {
            TransformArg::Wht => Transform::WalshHadamard,
            TransformArg::Dct => Transform::Dct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum FormatArg {
    Dmat,
    Csv,
}

/// Generator overrides; unset fields keep the generator defaults.
#[derive(Debug, Clone, Args, Serialize)]
struct GenArgs {
    /// Number of particles N.
    #[arg(long)]
    n: Option<usize>,
    /// Number of time steps T.
    #[arg(long)]
    t: Option<usize>,
    /// Time step (two-freq only; the adversarial set uses unit steps).
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    f_fast: Option<f64>,
    #[arg(long)]
    f_slow: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    omega_prime: Option<f64>,
    #[arg(long)]
    n_special: Option<usize>,
    #[arg(long)]
    special_amp: Option<f64>,
    #[arg(long)]
    pulse_amp: Option<f64>,
    #[arg(long)]
    pulse_width: Option<f64>,
    #[arg(long)]
    t1: Option<f64>,
    #[arg(long)]
    t2: Option<f64>,
    #[arg(long)]
    noise_sigma: Option<f64>,
}

impl GenArgs {
    fn input(&self, kind: SynthKind, seed: u64) -> CliResult<InputSpec> {
        Ok(match kind {
            SynthKind::TwoFreq => {
                let d = TwoFrequencyConfig::default();
                let c = TwoFrequencyConfig {
                    n: self.n.unwrap_or(d.n),
                    t: self.t.unwrap_or(d.t),
                    f_fast: self.f_fast.unwrap_or(d.f_fast),
                    f_slow: self.f_slow.unwrap_or(d.f_slow),
                    dt: self.dt.unwrap_or(d.dt),
                    seed,
                };
                c.validate()?;
                InputSpec::TwoFrequency(c)
            }
            SynthKind::Adversarial => {
                if self.dt.is_some() {
                    return Err(CliError::usage("--dt does not apply to --kind adversarial"));
                }
                let d = AdversarialConfig::default();
                let c = AdversarialConfig {
                    n: self.n.unwrap_or(d.n),
                    n_special: self.n_special.unwrap_or(d.n_special),
                    t: self.t.unwrap_or(d.t),
                    omega: self.omega.unwrap_or(d.omega),
                    omega_prime: self.omega_prime.unwrap_or(d.omega_prime),
                    special_amp: self.special_amp.unwrap_or(d.special_amp),
                    pulse_amp: self.pulse_amp.unwrap_or(d.pulse_amp),
                    pulse_width: self.pulse_width.or(d.pulse_width),
                    t1: self.t1.or(d.t1),
                    t2: self.t2.or(d.t2),
                    noise_sigma: self.noise_sigma.unwrap_or(d.noise_sigma),
                    seed,
                };
                c.validate()?;
                InputSpec::Adversarial(c)
            }
        })
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; `-` writes CSV to stdout.
    #[arg(long)]
    out: PathBuf,
    /// Defaults to CSV for `.csv` paths and DMAT otherwise.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[command(flatten)]
    gen: GenArgs,
}

/// Input file options shared by the commands that read data.
#[derive(Debug, Clone, Args, Serialize)]
struct InputArgs {
    /// DMAT, headerless CSV (`.csv`) or LAMMPS text dump (with `--field`).
    #[arg(long = "in")]
    input: PathBuf,
    /// Time step for CSV and LAMMPS inputs (DMAT stores its own).
    #[arg(long = "dt", default_value_t = 1.0)]
    input_dt: f64,
    /// LAMMPS per-atom column, or `norm(vx,vy,vz)`.
    #[arg(long)]
    field: Option<String>,
}

impl InputArgs {
    fn spec(&self) -> CliResult<InputSpec> {
        if !(self.input_dt > 0.0) {
            return Err(CliError::usage("invalid value for --dt: time step must be positive"));
        }
        let ext = self.input.extension().and_then(|e| e.to_str()).unwrap_or("");
        let lammps = matches!(ext, "dump" | "lammpstrj");
        match (&self.field, lammps) {
            (Some(f), _) => {
                let field: FieldSpec = f.parse().map_err(|e| CliError::usage(format!("invalid value for --field: {e}")))?;
                Ok(InputSpec::Lammps {
                    path: self.input.clone(),
                    field,
                    dt: self.input_dt,
                })
            }
            (None, true) => Err(CliError::usage("LAMMPS dumps need --field (e.g. --field vx)")),
            (None, false) => Ok(InputSpec::Dense {
                path: self.input.clone(),
                format: DenseFormat::from_path(&self.input),
                dt: self.input_dt,
            }),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct SketchArgs {
    #[arg(long, value_enum)]
    method: SketchMethod,
    /// Sketch rows.
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    blocks: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    out_dir: PathBuf,
    /// Fast transform inside the FJLT.
    #[arg(long, value_enum, default_value = "wht")]
    transform: TransformArg,
    /// Subtract column means first (reads the input twice).
    #[arg(long)]
    subtract_mean: bool,
    /// Report buffer sizes and fail if any scales with T·N.
    #[arg(long)]
    mem_audit: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
struct EstimateArgs {
    /// Directory written by `sketch`.
    #[arg(long)]
    in_dir: PathBuf,
    #[arg(long)]
    acf_out: PathBuf,
    #[arg(long)]
    psd_out: PathBuf,
    /// Skip the Bartlett window on multi-block averages.
    #[arg(long)]
    no_window: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
struct BaselineArgs {
    /// time-random, power-series, sparse-ruler, block, hier, particle, entries or full.
    #[arg(long)]
    method: String,
    #[arg(long)]
    gamma: Option<f64>,
    /// Power-series or ruler order (instead of --gamma).
    #[arg(long)]
    k: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    blocks: usize,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    acf_out: PathBuf,
    #[arg(long)]
    psd_out: PathBuf,
    #[arg(long)]
    no_window: bool,
    /// Correlator lags per level (block window for `block`).
    #[arg(long)]
    ell: Option<usize>,
    /// Hierarchical coarsening factor.
    #[arg(long, default_value_t = 2)]
    c: usize,
    /// Hierarchical levels.
    #[arg(long)]
    levels: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct CompareArgs {
    /// Estimated PSD table.
    #[arg(long)]
    est: PathBuf,
    /// Reference PSD table.
    #[arg(long)]
    truth: PathBuf,
    /// First CSV field; defaults to the estimate's method.
    #[arg(long)]
    label: Option<String>,
    /// Print the CSV header line first.
    #[arg(long)]
    header: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
struct BenchArgs {
    /// Synthetic data set (ignored with --in).
    #[arg(long, value_enum, default_value = "adversarial")]
    kind: SynthKind,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    field: Option<String>,
    /// Seed of the synthetic data set.
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    #[command(flatten)]
    gen: GenArgs,
    /// Comma-separated compression ratios.
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.02, 0.05, 0.1])]
    gammas: Vec<f64>,
    /// Comma-separated method names (default: all).
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    /// Method seeds per cell; errors are medians.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    blocks: usize,
    /// Use ⌊√T_long⌋ blocks.
    #[arg(long)]
    consistency: bool,
    #[arg(long)]
    no_window: bool,
    #[arg(long, value_enum, default_value = "wht")]
    transform: TransformArg,
    #[arg(long)]
    out_dir: PathBuf,
}

/// Parses `argv` (program name first), runs and returns the exit code.
/// Errors are reported on stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match dispatch(cli.command, argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("specsketch: {}", e.message);
            e.code
        }
    }
}

fn dispatch(cmd: Command, argv: Vec<String>) -> CliResult<()> {
    let start = Instant::now();
    let (mut manifest, path) = match cmd {
        Command::Synth(a) => synth(a, argv)?,
        Command::Sketch(a) => sketch(a, argv)?,
        Command::Estimate(a) => estimate(a, argv)?,
        Command::Baseline(a) => baseline(a, argv)?,
        Command::Compare(a) => return compare(a),
        Command::Bench(a) => bench(a, argv)?,
    };
    if let Some(path) = path {
        manifest.wall_clock_s = start.elapsed().as_secs_f64();
        manifest.write(&path)?;
    }
    Ok(())
}

/// A run's manifest and where it goes (`None` when output went to stdout).
type Ran = (RunManifest, Option<PathBuf>);

fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::usage(format!("cannot start worker threads: {e}")))
}

fn synth(a: SynthArgs, argv: Vec<String>) -> CliResult<Ran> {
    let spec = a.gen.input(a.kind, a.seed)?;
    let mut src = spec.open()?;
    let (t, n, dt) = (src.n_rows(), src.n_cols(), src.dt());
    let stdout = a.out.as_os_str() == "-";
    let format = match a.format {
        Some(FormatArg::Csv) => DenseFormat::Csv,
        Some(FormatArg::Dmat) => DenseFormat::Dmat,
        None if stdout => DenseFormat::Csv,
        None => DenseFormat::from_path(&a.out),
    };
    if stdout && format == DenseFormat::Dmat {
        return Err(CliError::usage("--out - writes CSV only; drop --format dmat"));
    }
    let mut row = vec![0.0; n];
    match format {
        DenseFormat::Dmat => {
            let mut w = DmatWriter::create(&a.out, t as u64, n as u64, dt)?;
            while src.next_row(&mut row)? {
                w.write_row(&row)?;
            }
            w.finish()?;
        }
        DenseFormat::Csv => {
            let mut write_rows = |w: &mut dyn std::io::Write| -> std::io::Result<()> {
                let mut line = String::new();
                while src.next_row(&mut row).map_err(std::io::Error::other)? {
                    line.clear();
                    for (j, v) in row.iter().enumerate() {
                        if j > 0 {
                            line.push(',');
                        }
                        line.push_str(&v.to_string());
                    }
                    line.push('\n');
                    w.write_all(line.as_bytes())?;
                }
                Ok(())
            };
            if stdout {
                let out = std::io::stdout();
                let mut lock = std::io::BufWriter::new(out.lock());
                write_rows(&mut lock).and_then(|_| lock.flush()).map_err(|e| CliError {
                    code: EXIT_FORMAT,
                    message: format!("stdout: {e}"),
                })?;
            } else {
                write_atomic(&a.out, |w| write_rows(w))?;
            }
        }
    }
    let mut m = RunManifest::new("synth", argv);
    m.with_flags(&a);
    m.seed = Some(a.seed);
    if stdout {
        return Ok((m, None));
    }
    m.outputs.push(a.out.clone());
    Ok((m, Some(RunManifest::path_for(&a.out))))
}

/// Upper bound on the cells `sketch` may hold for one block.
pub fn sketch_cell_budget(t: usize, n: usize, m: usize, state: usize, subtract_mean: bool) -> usize {
    CHUNK_ROWS * n + state + t * m + if subtract_mean { n } else { 0 }
}

fn sketch(a: SketchArgs, argv: Vec<String>) -> CliResult<Ran> {
    let spec = a.input.spec()?;
    let mut src = spec.open()?;
    let (t_long, n) = (src.n_rows(), src.n_cols());
    if a.m == 0 {
        return Err(CliError::usage("invalid value for --m: need at least one sketch row"));
    }
    if a.blocks == 0 || t_long % a.blocks != 0 {
        return Err(CliError::usage(format!(
            "invalid value for --blocks: T_long = {t_long} is not a multiple of {}",
            a.blocks
        )));
    }
    std::fs::create_dir_all(&a.out_dir).map_err(|e| IoError::Io {
        path: a.out_dir.clone(),
        source: e,
    })?;
    let mut cfg = PipelineConfig::new(a.method.into(), a.m, a.blocks, a.seed);
    cfg.transform = a.transform.into();
    cfg.subtract_mean = a.subtract_mean;

    let mut audit = CellAudit::new();
    let mut files = Vec::with_capacity(a.blocks);
    let mut state = 0;
    let mut io_failure = None;
    let res = sketch_stream(&mut src, &cfg, &mut audit, |block| {
        state = state.max(specsketch_core::SketchOperator::draw(block.spec).map(|o| o.state_cells()).unwrap_or(0));
        let name = PathBuf::from(format!("block_{:05}.skb", block.block_index));
        if let Err(e) = write_sketched(&a.out_dir.join(&name), &block) {
            let msg = e.to_string();
            io_failure = Some(e);
            return Err(CoreError::Source(msg));
        }
        files.push(name);
        Ok(())
    });
    if let Some(e) = io_failure {
        return Err(e.into());
    }
    res?;
    write_manifest(&a.out_dir.join(BLOCK_MANIFEST), &files)?;

    if a.mem_audit {
        let t = t_long / a.blocks;
        let budget = sketch_cell_budget(t, n, a.m, state, a.subtract_mean);
        eprintln!(
            "mem-audit: peak_cells={} largest_buffer={} budget={} block_rows={} t_times_n={}",
            audit.peak(),
            audit.largest(),
            budget,
            t,
            t * n
        );
        if audit.peak() > budget || (a.m < n && t > CHUNK_ROWS && audit.largest() >= t * n) {
            return Err(CliError::numeric(format!(
                "--mem-audit: peak of {} cells exceeds the streaming budget of {budget}",
                audit.peak()
            )));
        }
    }

    let mut m = RunManifest::new("sketch", argv);
    m.with_flags(&a);
    m.seed = Some(a.seed);
    m.inputs.push(a.input.input.clone());
    m.outputs = files.iter().map(|f| a.out_dir.join(f)).collect();
    m.outputs.push(a.out_dir.join(BLOCK_MANIFEST));
    Ok((m, Some(a.out_dir.join("run.json"))))
}

fn table_header(method: &str, storage: Option<&StorageReport>, acf: &AutocorrEstimate, extra: &[String]) -> Vec<String> {
    let mut h = vec![format!("method {method}")];
    if let Some(s) = storage {
        h.push(format!("gamma_eff {:e}", s.gamma_eff));
        h.push(format!("payload_values {}", s.payload_values));
        h.push(format!("metadata_values {}", s.metadata_values));
    }
    h.push(format!("blocks {}", acf.blocks));
    h.push(format!("windowed {}", acf.windowed));
    h.push(format!("interpolated_lags {}", acf.filled.iter().filter(|&&f| f).count()));
    h.extend(extra.iter().cloned());
    h
}

fn write_estimates(
    acf_out: &Path,
    psd_out: &Path,
    header: &[String],
    acf: &AutocorrEstimate,
    psd: &PowerSpectrum,
    dt: f64,
) -> CliResult<()> {
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    let lags: Vec<f64> = (0..acf.len()).map(|k| k as f64 * dt).collect();
    let mut acf_h = h.clone();
    acf_h.push("lag_time value");
    write_table(acf_out, &acf_h, &lags, &acf.r)?;
    let mut psd_h = h;
    psd_h.push("frequency value");
    write_table(psd_out, &psd_h, &psd.freqs, &psd.s)?;
    Ok(())
}

fn estimate(a: EstimateArgs, argv: Vec<String>) -> CliResult<Ran> {
    let files = read_manifest(&a.in_dir.join(BLOCK_MANIFEST))?;
    if files.is_empty() {
        return Err(CliError {
            code: EXIT_FORMAT,
            message: format!("{}: no blocks listed", a.in_dir.join(BLOCK_MANIFEST).display()),
        });
    }
    let pool = thread_pool()?;
    let blocks: Vec<_> = pool.install(|| {
        files
            .par_iter()
            .map(|f| -> CliResult<_> {
                let read = read_sketched(f)?;
                for w in &read.warnings {
                    eprintln!("specsketch: warning: {}: {w}", f.display());
                }
                let mut est = autocorr_from_sketch(&read.block)?;
                est.blocks = 1;
                Ok((read.block.spec, read.block.t(), read.block.dt, est))
            })
            .collect::<CliResult<Vec<_>>>()
    })?;
    let (spec0, t, dt, _) = blocks[0];
    for (f, (spec, tb, dtb, _)) in files.iter().zip(&blocks) {
        if *tb != t || *dtb != dt || spec.n != spec0.n || spec.m != spec0.m || spec.kind != spec0.kind {
            return Err(CliError {
                code: EXIT_FORMAT,
                message: format!("{}: block shape or time step differs from the first block", f.display()),
            });
        }
    }
    let per_block: Vec<AutocorrEstimate> = blocks.into_iter().map(|b| b.3).collect();
    let (acf, psd) = finish_blocks(&per_block, !a.no_window, dt)?;
    let storage = storage_report(StorageMethod::Sketch {
        t: t * files.len(),
        n: spec0.n,
        m: spec0.m,
        blocks: files.len(),
    })?;
    let header = table_header(&format!("sketch-{}", spec0.kind.name()), Some(&storage), &acf, &[]);
    write_estimates(&a.acf_out, &a.psd_out, &header, &acf, &psd, dt)?;

    let mut m = RunManifest::new("estimate", argv);
    m.with_flags(&a);
    m.inputs = files;
    m.outputs = vec![a.acf_out.clone(), a.psd_out.clone()];
    Ok((m, Some(RunManifest::path_for(&a.acf_out))))
}

fn baseline(a: BaselineArgs, argv: Vec<String>) -> CliResult<Ran> {
    let method: Method = a
        .method
        .parse()
        .map_err(|e| CliError::usage(format!("invalid value for --method: {e}")))?;
    if method.is_sketch() {
        return Err(CliError::usage(format!(
            "invalid value for --method: {method} is a sketch; use `sketch` then `estimate`"
        )));
    }
    if let Some(g) = a.gamma {
        if !(g > 0.0 && g <= 1.0) {
            return Err(CliError::usage("invalid value for --gamma: must lie in (0, 1]"));
        }
    }
    let needs_gamma = match method {
        Method::PowerSeries | Method::SparseRuler => a.k.is_none(),
        Method::Block => a.ell.is_none(),
        Method::Hier => a.levels.is_none(),
        Method::Full => false,
        _ => true,
    };
    if needs_gamma && a.gamma.is_none() {
        return Err(CliError::usage(format!("--method {method} needs --gamma")));
    }
    let spec = a.input.spec()?;
    let src = spec.open()?;
    let dt = src.dt();
    let p = MethodParams {
        gamma: a.gamma,
        k: a.k,
        seed: a.seed,
        blocks: a.blocks,
        window: !a.no_window,
        ell: a.ell,
        hier_c: a.c,
        hier_levels: a.levels,
        ..MethodParams::default()
    };
    let run = run_method(src, method, &p)?;
    if run.missing_lags > 0 {
        eprintln!(
            "specsketch: {} lags had no sampled pairs and were interpolated",
            run.missing_lags
        );
    }
    let extra = vec![format!("missing_lags_before_interpolation {}", run.missing_lags)];
    let header = table_header(method.name(), Some(&run.storage), &run.acf, &extra);
    write_estimates(&a.acf_out, &a.psd_out, &header, &run.acf, &run.psd, dt)?;

    let mut m = RunManifest::new("baseline", argv);
    m.with_flags(&a);
    m.seed = Some(a.seed);
    m.inputs.push(a.input.input.clone());
    m.outputs = vec![a.acf_out.clone(), a.psd_out.clone()];
    Ok((m, Some(RunManifest::path_for(&a.acf_out))))
}

fn comment_value<'a>(comments: &'a [String], key: &str) -> Option<&'a str> {
    comments.iter().find_map(|c| c.strip_prefix(key).and_then(|r| r.strip_prefix(' ')).map(str::trim))
}

/// The `compare` CSV row: `label,gamma_eff,rel_l1,rel_l2,rel_linf`.
pub const COMPARE_HEADER: &str = "method,gamma_eff,rel_l1,rel_l2,rel_linf";

fn compare(a: CompareArgs) -> CliResult<()> {
    let est = read_table(&a.est)?;
    let truth = read_table(&a.truth)?;
    if est.x.len() != truth.x.len() {
        return Err(CliError {
            code: EXIT_FORMAT,
            message: format!(
                "--est has {} rows but --truth has {}",
                est.x.len(),
                truth.x.len()
            ),
        });
    }
    if let Some(i) = (0..est.x.len()).find(|&i| (est.x[i] - truth.x[i]).abs() > 1e-9 * truth.x[i].abs().max(1e-300)) {
        return Err(CliError {
            code: EXIT_FORMAT,
            message: format!("--est and --truth disagree on the frequency grid at row {}", i + 1),
        });
    }
    let report = psd_errors(&est.y, &truth.y)?;
    let label = a
        .label
        .clone()
        .or_else(|| comment_value(&est.comments, "method").map(String::from))
        .unwrap_or_else(|| "estimate".into());
    let gamma_eff = comment_value(&est.comments, "gamma_eff")
        .and_then(|v| v.parse::<f64>().ok())
        .unwrap_or(f64::NAN);
    let mut out = std::io::stdout().lock();
    let res = (|| {
        if a.header {
            writeln!(out, "{COMPARE_HEADER}")?;
        }
        writeln!(out, "{label},{gamma_eff},{},{},{}", report.rel_l1, report.rel_l2, report.rel_linf)
    })();
    res.map_err(|e| CliError {
        code: EXIT_FORMAT,
        message: format!("stdout: {e}"),
    })
}

fn bench(a: BenchArgs, argv: Vec<String>) -> CliResult<Ran> {
    let input = match &a.input {
        Some(p) => InputArgs {
            input: p.clone(),
            input_dt: a.gen.dt.unwrap_or(1.0),
            field: a.field.clone(),
        }
        .spec()?,
        None => a.gen.input(a.kind, a.data_seed)?,
    };
    let methods = if a.methods.is_empty() {
        Method::ALL.to_vec()
    } else {
        a.methods
            .iter()
            .map(|s| s.parse::<Method>().map_err(|e| CliError::usage(format!("invalid value for --methods: {e}"))))
            .collect::<CliResult<Vec<_>>>()?
    };
    if let Some(g) = a.gammas.iter().find(|g| !(**g > 0.0 && **g <= 1.0)) {
        return Err(CliError::usage(format!("invalid value for --gammas: {g} is outside (0, 1]")));
    }
    if a.repeats == 0 {
        return Err(CliError::usage("invalid value for --repeats: need at least one"));
    }
    let blocks = if a.consistency {
        consistency_blocks(input.open()?.n_rows())
    } else {
        a.blocks
    };
    let cfg = BenchConfig {
        methods,
        gammas: a.gammas.clone(),
        repeats: a.repeats,
        seed: a.seed,
        blocks,
        window: !a.no_window,
        transform: a.transform.into(),
    };
    let pool = thread_pool()?;
    let out = pool.install(|| run_bench(&input, &cfg))?;
    let written = write_bench(&a.out_dir, &out)?;
    print!("{}", crate::bench::bench_csv(&out.rows));

    let mut m = RunManifest::new("bench", argv);
    m.with_flags(&a);
    m.seed = Some(a.seed);
    m.inputs.extend(input.path().map(Path::to_path_buf));
    m.outputs = written;
    Ok((m, Some(a.out_dir.join("run.json"))))
}
