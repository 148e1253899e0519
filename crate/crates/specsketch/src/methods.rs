//! Every estimator behind one interface, with blocking and storage
//! accounting, so the CLI and the benchmark treat them uniformly.

use std::fmt;
use std::str::FromStr;

use specsketch_core::baselines::{
    autocorr_entrywise, autocorr_particle_subsampled, autocorr_time_subsampled, correlate_stream, gather_columns,
    gather_entries, gather_rows, interpolate_missing_lags, k_for_gamma, sample_entries, sample_particles,
    sample_time, BlockCorrelator, HierarchicalCorrelator, TimeScheme,
};
use specsketch_core::metrics::{storage_report, StorageMethod, StorageReport};
use specsketch_core::rng::block_seed;
use specsketch_core::spectral::{autocorr_fft, finish_blocks};
use specsketch_core::synth::collect_matrix;
use specsketch_core::{
    run_pipeline, AutocorrEstimate, Error, PipelineConfig, PowerSpectrum, Result, SketchKind, TimeSeriesSource,
    Transform,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Sketch(SketchKind),
    TimeRandom,
    PowerSeries,
    SparseRuler,
    Particle,
    Entries,
    Block,
    Hier,
    /// The exact estimator on all the data.
    Full,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Sketch(SketchKind::Gaussian),
        Method::Sketch(SketchKind::Haar),
        Method::Sketch(SketchKind::Fjlt),
        Method::TimeRandom,
        Method::PowerSeries,
        Method::SparseRuler,
        Method::Particle,
        Method::Entries,
        Method::Block,
        Method::Hier,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sketch(k) => k.name(),
            Method::TimeRandom => "time-random",
            Method::PowerSeries => "power-series",
            Method::SparseRuler => "sparse-ruler",
            Method::Particle => "particle",
            Method::Entries => "entries",
            Method::Block => "block",
            Method::Hier => "hier",
            Method::Full => "full",
        }
    }

    pub fn is_sketch(self) -> bool {
        matches!(self, Method::Sketch(_))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Method::ALL
            .iter()
            .chain([Method::Full].iter())
            .find(|m| m.name() == s)
            .copied()
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                format!("unknown method {s:?}; expected one of {}, full", names.join(", "))
            })
    }
}

/// Knobs shared by all methods; each method reads the ones it needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodParams {
    /// Target compression ratio.
    pub gamma: Option<f64>,
    /// Power-series / ruler order, overriding `gamma`.
    pub k: Option<u32>,
    /// Sketch size, overriding `gamma`.
    pub m: Option<usize>,
    pub seed: u64,
    pub blocks: usize,
    /// Bartlett window on averaged multi-block estimates.
    pub window: bool,
    pub transform: Transform,
    pub subtract_mean: bool,
    /// Block correlator window / hierarchical lags per level.
    pub ell: Option<usize>,
    pub hier_c: usize,
    pub hier_levels: Option<usize>,
}

impl Default for MethodParams {
    fn default() -> Self {
        Self {
            gamma: None,
            k: None,
            m: None,
            seed: 0,
            blocks: 1,
            window: true,
            transform: Transform::default(),
            subtract_mean: false,
            ell: None,
            hier_c: 2,
            hier_levels: None,
        }
    }
}

/// Lags per level of the hierarchical correlator when derived from `γ`.
pub const HIER_DEFAULT_ELL: usize = 16;

fn need_gamma(p: &MethodParams, what: &str) -> Result<f64> {
    p.gamma.ok_or_else(|| Error::InvalidParameter {
        name: "gamma",
        reason: format!("{what} needs a compression ratio"),
    })
}

impl MethodParams {
    /// Sketch rows: `m`, else `⌈γ N⌉`.
    pub fn sketch_m(&self, n: usize) -> Result<usize> {
        match self.m {
            Some(m) => Ok(m),
            None => Ok(((need_gamma(self, "a sketch")? * n as f64).ceil() as usize).max(1)),
        }
    }

    fn order(&self, t: usize, ruler: bool) -> Result<u32> {
        match self.k {
            Some(k) => Ok(k),
            None => k_for_gamma(t, need_gamma(self, "a deterministic time scheme")?, ruler),
        }
    }

    /// Block correlator window: `ℓ`, else `max(4, ⌈γ T⌉)`.
    pub fn block_ell(&self, t: usize) -> Result<usize> {
        match self.ell {
            Some(l) => Ok(l),
            None => Ok(((need_gamma(self, "the block correlator")? * t as f64).ceil() as usize).max(4)),
        }
    }

    /// Hierarchical shape `(ℓ, c, levels)`; levels default to
    /// `max(1, round(γ T / ℓ))` so `ℓ · levels ≈ γ T` rows stay resident.
    pub fn hier_shape(&self, t: usize) -> Result<(usize, usize, usize)> {
        let ell = self.ell.unwrap_or(HIER_DEFAULT_ELL);
        let levels = match self.hier_levels {
            Some(l) => l,
            None => ((need_gamma(self, "the hierarchical correlator")? * t as f64 / ell as f64).round() as usize).max(1),
        };
        Ok((ell, self.hier_c, levels))
    }
}

/// Result of running one method on one input.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: Method,
    pub acf: AutocorrEstimate,
    pub psd: PowerSpectrum,
    pub storage: StorageReport,
    /// Lags without a sampled pair, summed over blocks, before interpolation.
    pub missing_lags: usize,
}

/// The next `t` rows of a longer stream.
struct BlockView<'a, S: ?Sized> {
    src: &'a mut S,
    t: usize,
    pos: usize,
}

impl<S: TimeSeriesSource + ?Sized> BlockView<'_, S> {
    /// Skips whatever the consumer left unread.
    fn drain(&mut self) -> Result<()> {
        let mut row = vec![0.0; self.src.n_cols()];
        while self.next_row(&mut row)? {}
        Ok(())
    }
}

impl<S: TimeSeriesSource + ?Sized> TimeSeriesSource for BlockView<'_, S> {
    fn n_cols(&self) -> usize {
        self.src.n_cols()
    }
    fn n_rows(&self) -> usize {
        self.t
    }
    fn dt(&self) -> f64 {
        self.src.dt()
    }
    fn next_row(&mut self, out: &mut [f64]) -> Result<bool> {
        if self.pos == self.t {
            return Ok(false);
        }
        if !self.src.next_row(out)? {
            return Err(Error::Source("stream ended before the last block was complete".into()));
        }
        self.pos += 1;
        Ok(true)
    }
}

fn block_len(t_long: usize, blocks: usize) -> Result<usize> {
    if blocks < 1 || t_long == 0 || t_long % blocks != 0 {
        return Err(Error::InvalidParameter {
            name: "blocks",
            reason: format!("T_long = {t_long} is not a positive multiple of {blocks} blocks"),
        });
    }
    Ok(t_long / blocks)
}

/// Sums per-block storage; `method` describes the whole run.
fn total_storage(method: StorageMethod, per_block: &[StorageReport], t_long: usize, n: usize) -> StorageReport {
    let payload: usize = per_block.iter().map(|r| r.payload_values).sum();
    let meta: usize = per_block.iter().map(|r| r.metadata_values).sum();
    StorageReport {
        method,
        payload_values: payload,
        metadata_values: meta,
        gamma_eff: (payload + meta) as f64 / (t_long as f64 * n as f64),
    }
}

/// Runs `method` over the whole stream.
pub fn run_method<S: TimeSeriesSource>(mut src: S, method: Method, p: &MethodParams) -> Result<MethodRun> {
    let n = src.n_cols();
    let t_long = src.n_rows();
    let dt = src.dt();
    let t = block_len(t_long, p.blocks)?;

    if let Method::Sketch(kind) = method {
        let m = p.sketch_m(n)?;
        let mut cfg = PipelineConfig::new(kind, m, p.blocks, p.seed);
        cfg.transform = p.transform;
        cfg.window = p.window;
        cfg.subtract_mean = p.subtract_mean;
        let out = run_pipeline(&mut src, &cfg)?;
        let storage = storage_report(StorageMethod::Sketch {
            t: t_long,
            n,
            m,
            blocks: p.blocks,
        })?;
        return Ok(MethodRun {
            method,
            acf: out.acf,
            psd: out.psd,
            storage,
            missing_lags: 0,
        });
    }

    let mut per_block = Vec::with_capacity(p.blocks);
    let mut reports = Vec::with_capacity(p.blocks);
    let mut missing = 0;
    let mut samples = 0;
    for b in 0..p.blocks {
        let seed = block_seed(p.seed, b as u64);
        let mut view = BlockView {
            src: &mut src,
            t,
            pos: 0,
        };
        let (est, report) = match method {
            Method::TimeRandom | Method::PowerSeries | Method::SparseRuler => {
                let scheme = match method {
                    Method::TimeRandom => TimeScheme::Random {
                        gamma: need_gamma(p, "random time subsampling")?,
                    },
                    Method::PowerSeries => TimeScheme::PowerSeries { k: p.order(t, false)? },
                    _ => TimeScheme::SparseRuler { k: p.order(t, true)? },
                };
                let set = sample_time(scheme, t, seed)?;
                let rows = gather_rows(&mut view, &set)?;
                samples += set.len();
                let r = storage_report(StorageMethod::TimeSubsample { t, n, samples: set.len() })?;
                (autocorr_time_subsampled(&rows, &set)?, r)
            }
            Method::Particle => {
                let set = sample_particles(n, need_gamma(p, "particle subsampling")?, seed)?;
                let cols = gather_columns(&mut view, &set)?;
                samples += set.len();
                let r = storage_report(StorageMethod::Particle { t, n, samples: set.len() })?;
                (autocorr_particle_subsampled(&cols)?, r)
            }
            Method::Entries => {
                let set = sample_entries(t, n, need_gamma(p, "entrywise sampling")?, seed)?;
                let values = gather_entries(&mut view, &set)?;
                samples += set.nnz();
                let r = storage_report(StorageMethod::Entrywise { t, n, nnz: set.nnz() })?;
                (autocorr_entrywise(&set, &values)?, r)
            }
            Method::Block => {
                let ell = p.block_ell(t)?;
                let mut c = BlockCorrelator::new(n, ell)?;
                correlate_stream(&mut view, |row| c.push(row))?;
                samples = ell;
                let r = storage_report(StorageMethod::Correlator { t, n, rows: ell })?;
                (c.finish(), r)
            }
            Method::Hier => {
                let (ell, c, levels) = p.hier_shape(t)?;
                let mut h = HierarchicalCorrelator::new(n, ell, c, levels)?;
                correlate_stream(&mut view, |row| h.push(row))?;
                samples = ell * levels;
                let r = storage_report(StorageMethod::Correlator { t, n, rows: ell * levels })?;
                (h.finish(), r)
            }
            Method::Full => {
                let x = collect_matrix(&mut view)?;
                (autocorr_fft(&x)?, storage_report(StorageMethod::Full { t, n })?)
            }
            Method::Sketch(_) => unreachable!(),
        };
        view.drain()?;
        missing += est.n_missing();
        let mut est = interpolate_missing_lags(&est)?;
        est.blocks = 1;
        per_block.push(est);
        reports.push(report);
    }

    let whole = match method {
        Method::TimeRandom | Method::PowerSeries | Method::SparseRuler => {
            StorageMethod::TimeSubsample { t: t_long, n, samples }
        }
        Method::Particle => StorageMethod::Particle { t: t_long, n, samples },
        Method::Entries => StorageMethod::Entrywise { t: t_long, n, nnz: samples },
        Method::Block | Method::Hier => StorageMethod::Correlator { t: t_long, n, rows: samples },
        _ => StorageMethod::Full { t: t_long, n },
    };
    // Correlator buffers are reused across blocks, not stored per block.
    let storage = match method {
        Method::Block | Method::Hier => storage_report(whole)?,
        _ => total_storage(whole, &reports, t_long, n),
    };
    let (acf, psd) = finish_blocks(&per_block, p.window, dt)?;
    Ok(MethodRun {
        method,
        acf,
        psd,
        storage,
        missing_lags: missing,
    })
}
