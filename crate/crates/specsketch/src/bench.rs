//! Error-versus-compression sweeps over every method.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use specsketch_core::metrics::{psd_errors, ErrorReport};
use specsketch_core::rng::block_seed;
use specsketch_core::synth::{gen_adversarial, gen_two_frequency, AdversarialConfig, TwoFrequencyConfig};
use specsketch_core::{PowerSpectrum, Transform};

use crate::io::{read_dense, write_atomic, BoxedSource, DenseFormat, FieldSpec, LammpsSource, Result};
use crate::methods::{run_method, Method, MethodParams, MethodRun};

/// Where a benchmark (or any command) gets its rows; reopened per cell.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSpec {
    Dense { path: PathBuf, format: DenseFormat, dt: f64 },
    Lammps { path: PathBuf, field: FieldSpec, dt: f64 },
    TwoFrequency(TwoFrequencyConfig),
    Adversarial(AdversarialConfig),
}

impl InputSpec {
    pub fn open(&self) -> Result<BoxedSource> {
        Ok(match self {
            InputSpec::Dense { path, format, dt } => read_dense(path, *format, *dt)?,
            InputSpec::Lammps { path, field, dt } => Box::new(LammpsSource::open(path, field.clone(), *dt)?),
            InputSpec::TwoFrequency(c) => Box::new(gen_two_frequency(c)?),
            InputSpec::Adversarial(c) => Box::new(gen_adversarial(c)?),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        match self {
            InputSpec::Dense { path, .. } | InputSpec::Lammps { path, .. } => Some(path),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub methods: Vec<Method>,
    pub gammas: Vec<f64>,
    /// Independent method seeds per cell; errors are medians over them.
    pub repeats: usize,
    pub seed: u64,
    pub blocks: usize,
    pub window: bool,
    pub transform: Transform,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            gammas: vec![0.01, 0.02, 0.05, 0.1],
            repeats: 1,
            seed: 0,
            blocks: 1,
            window: true,
            transform: Transform::default(),
        }
    }
}

/// Consistency-mode block count `⌊√T_long⌋`.
pub fn consistency_blocks(t_long: usize) -> usize {
    ((t_long as f64).sqrt().floor() as usize).max(1)
}

/// One (method, γ) cell, summarized over repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: Method,
    pub gamma: f64,
    pub gamma_eff: f64,
    pub median: ErrorReport,
    pub missing_lags: usize,
    pub runs: Vec<ErrorReport>,
    /// Why the cell could not be evaluated, if it could not.
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct BenchOutput {
    pub truth: PowerSpectrum,
    pub rows: Vec<BenchRow>,
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

/// Seed of repeat `r` of a sweep with master seed `seed`.
pub fn repeat_seed(seed: u64, r: usize) -> u64 {
    block_seed(seed ^ 0x5EED_0000_0000_0000, r as u64)
}

/// Runs one method and scores it against `truth`.
pub fn score(input: &InputSpec, method: Method, p: &MethodParams, truth: &PowerSpectrum) -> Result<(MethodRun, ErrorReport)> {
    let run = run_method(input.open()?, method, p)?;
    let err = psd_errors(&run.psd.s, &truth.s)?;
    Ok((run, err))
}

pub fn run_bench(input: &InputSpec, cfg: &BenchConfig) -> Result<BenchOutput> {
    let base = MethodParams {
        blocks: cfg.blocks,
        window: cfg.window,
        transform: cfg.transform,
        ..MethodParams::default()
    };
    let truth = run_method(input.open()?, Method::Full, &base)?.psd;
    let cells: Vec<(Method, f64, usize)> = cfg
        .methods
        .iter()
        .flat_map(|&m| cfg.gammas.iter().flat_map(move |&g| (0..cfg.repeats).map(move |r| (m, g, r))))
        .collect();
    let results: Vec<_> = cells
        .par_iter()
        .map(|&(method, gamma, r)| {
            let p = MethodParams {
                gamma: Some(gamma),
                seed: repeat_seed(cfg.seed, r),
                ..base
            };
            score(input, method, &p, &truth).map(|(run, err)| (run.storage.gamma_eff, run.missing_lags, err))
        })
        .collect();

    let mut rows = Vec::new();
    let mut it = results.into_iter();
    for &method in &cfg.methods {
        for &gamma in &cfg.gammas {
            let mut runs = Vec::new();
            let mut effs = Vec::new();
            let mut missing = Vec::new();
            let mut error = None;
            for _ in 0..cfg.repeats {
                match it.next().expect("one result per cell") {
                    Ok((g, miss, e)) => {
                        effs.push(g);
                        missing.push(miss as f64);
                        runs.push(e);
                    }
                    Err(e) => error = Some(e.to_string()),
                }
            }
            let pick = |f: fn(&ErrorReport) -> f64| median(&runs.iter().map(f).collect::<Vec<_>>());
            rows.push(BenchRow {
                method,
                gamma,
                gamma_eff: median(&effs),
                median: ErrorReport {
                    rel_l1: pick(|e| e.rel_l1),
                    rel_l2: pick(|e| e.rel_l2),
                    rel_linf: pick(|e| e.rel_linf),
                    n_compared: truth.s.len(),
                },
                missing_lags: median(&missing).round() as usize,
                runs,
                error,
            });
        }
    }
    Ok(BenchOutput { truth, rows })
}

pub const BENCH_CSV_HEADER: &str = "method,gamma,gamma_eff,rel_l1,rel_l2,rel_linf,repeats,missing_lags,status";

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from(BENCH_CSV_HEADER);
    s.push('\n');
    for r in rows {
        let status = match &r.error {
            None => "ok".to_string(),
            Some(e) => format!("\"error: {}\"", e.replace('"', "'")),
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.method,
            r.gamma,
            r.gamma_eff,
            r.median.rel_l1,
            r.median.rel_l2,
            r.median.rel_linf,
            r.runs.len(),
            r.missing_lags,
            status
        );
    }
    s
}

/// Writes `bench.csv`, one `<method>.dat` per method (γ_eff, rel ℓ₁, ℓ₂,
/// ℓ∞) and `bench.gp`, a gnuplot script plotting them. Returns the paths.
pub fn write_bench(dir: &Path, out: &BenchOutput) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(crate::io::io_err(dir))?;
    let mut written = Vec::new();
    let csv = dir.join("bench.csv");
    write_atomic(&csv, |w| w.write_all(bench_csv(&out.rows).as_bytes()))?;
    written.push(csv);

    let mut methods: Vec<Method> = Vec::new();
    for r in &out.rows {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    for &m in &methods {
        let path = dir.join(format!("{m}.dat"));
        write_atomic(&path, |w| {
            writeln!(w, "# {m}: gamma_eff rel_l1 rel_l2 rel_linf")?;
            for r in out.rows.iter().filter(|r| r.method == m && r.error.is_none()) {
                writeln!(w, "{:e} {:e} {:e} {:e}", r.gamma_eff, r.median.rel_l1, r.median.rel_l2, r.median.rel_linf)?;
            }
            Ok(())
        })?;
        written.push(path);
    }

    let gp = dir.join("bench.gp");
    write_atomic(&gp, |w| {
        writeln!(w, "set logscale xy")?;
        writeln!(w, "set xlabel 'effective compression ratio'")?;
        writeln!(w, "set ylabel 'relative l2 error of the PSD'")?;
        writeln!(w, "set key outside right")?;
        let plots: Vec<String> = methods
            .iter()
            .map(|m| format!("'{m}.dat' using 1:3 with linespoints title '{m}'"))
            .collect();
        writeln!(w, "plot {}", plots.join(", \\\n     "))
    })?;
    written.push(gp);
    Ok(written)
}
