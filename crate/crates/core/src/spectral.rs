//! Exact and sketched time autocorrelation, Bartlett windowing, the power
//! spectral density, and the blocked streaming pipeline.
//!
//! All autocorrelations use the per-lag unbiased normalization
//!
//! ```text
//! R_τ = 1/(N (T−τ)) Σ_t Σ_i x(t,i) x(t+τ,i)
//! ```
//!
//! which need not be a positive-definite sequence; spectra may dip below
//! zero and are reported as computed.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, invalid, Error, Result};
use crate::fft::{Complex64, Fft, LagAccumulator};
use crate::matrix::{CellAudit, Matrix};
use crate::rng::block_seed;
use crate::sketch::{SketchKind, SketchOperator, SketchSpec, Transform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Divide lag sums by `N` times the number of contributing pairs.
    #[default]
    PerLagUnbiased,
}

/// A lag-indexed autocorrelation estimate, `τ = 0..len−1`.
///
/// `valid[τ]` holds iff `counts[τ] > 0` or the value was filled in by
/// interpolation (`filled[τ]`). Invalid lags carry `r = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrEstimate {
    pub r: Vec<f64>,
    pub counts: Vec<u64>,
    pub valid: Vec<bool>,
    pub filled: Vec<bool>,
    pub windowed: bool,
    pub blocks: usize,
    pub normalization: Normalization,
}

impl AutocorrEstimate {
    /// `r[τ] = sums[τ] / (n · counts[τ])`, invalid where the count is zero.
    pub fn from_lag_sums(sums: &[f64], counts: Vec<u64>, n: usize) -> Result<Self> {
        check_len(sums.len(), counts.len())?;
        let nf = n as f64;
        let r = sums
            .iter()
            .zip(&counts)
            .map(|(&s, &c)| if c > 0 { s / (nf * c as f64) } else { 0.0 })
            .collect();
        let valid = counts.iter().map(|&c| c > 0).collect();
        Ok(Self {
            r,
            filled: vec![false; counts.len()],
            counts,
            valid,
            windowed: false,
            blocks: 1,
            normalization: Normalization::PerLagUnbiased,
        })
    }

    /// Wraps fully observed values with `counts[τ] = T − τ`.
    pub fn full(r: Vec<f64>) -> Self {
        let t = r.len();
        Self {
            counts: (0..t).map(|tau| (t - tau) as u64).collect(),
            valid: vec![true; t],
            filled: vec![false; t],
            r,
            windowed: false,
            blocks: 1,
            normalization: Normalization::PerLagUnbiased,
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn n_valid(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn n_missing(&self) -> usize {
        self.len() - self.n_valid()
    }

    pub fn all_valid(&self) -> bool {
        self.valid.iter().all(|&v| v)
    }

    /// First `len` lags.
    pub fn truncated(&self, len: usize) -> Self {
        let len = len.min(self.len());
        Self {
            r: self.r[..len].to_vec(),
            counts: self.counts[..len].to_vec(),
            valid: self.valid[..len].to_vec(),
            filled: self.filled[..len].to_vec(),
            ..*self
        }
    }
}

/// A one-sided spectrum on `T` bins `freqs[k] = k / ((2T−1) dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    pub freqs: Vec<f64>,
    pub s: Vec<f64>,
    pub windowed: bool,
    pub blocks: usize,
}

impl PowerSpectrum {
    /// Index of the bin whose frequency is nearest `f`.
    pub fn bin_of(&self, f: f64) -> usize {
        let mut best = 0;
        for (k, &fk) in self.freqs.iter().enumerate() {
            if (fk - f).abs() < (self.freqs[best] - f).abs() {
                best = k;
            }
        }
        best
    }
}

/// Reference `O(T² N)` autocorrelation by explicit double loop.
pub fn autocorr_direct(x: &Matrix) -> Result<AutocorrEstimate> {
    let (t, n) = (x.rows(), x.cols());
    if t < 1 || n < 1 {
        return Err(invalid("X", "need at least one row and one column"));
    }
    let mut sums = vec![0.0; t];
    for (tau, s) in sums.iter_mut().enumerate() {
        let mut acc = 0.0;
        for s0 in 0..t - tau {
            let (a, b) = (x.row(s0), x.row(s0 + tau));
            for i in 0..n {
                acc += a[i] * b[i];
            }
        }
        *s = acc;
    }
    let counts = (0..t).map(|tau| (t - tau) as u64).collect();
    AutocorrEstimate::from_lag_sums(&sums, counts, n)
}

/// Unnormalized `u[τ] = Σ_{t<T−τ} v[t] v[t+τ]` by zero-padded FFT.
pub fn column_autocorr(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut acc = LagAccumulator::new(v.len());
    acc.add(v);
    acc.finish()
}

/// FFT-path autocorrelation of a full data matrix.
pub fn autocorr_fft(x: &Matrix) -> Result<AutocorrEstimate> {
    let (t, n) = (x.rows(), x.cols());
    if t < 1 || n < 1 {
        return Err(invalid("X", "need at least one row and one column"));
    }
    let mut acc = LagAccumulator::new(t);
    for j in 0..n {
        acc.add(&x.column(j));
    }
    let counts = (0..t).map(|tau| (t - tau) as u64).collect();
    AutocorrEstimate::from_lag_sums(&acc.finish(), counts, n)
}

/// One compressed block `X̂ = X Ωᵀ` (`T × m`) with the descriptor of its
/// operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchedBlock {
    pub block_index: u64,
    pub spec: SketchSpec,
    pub dt: f64,
    pub data: Matrix,
}

impl SketchedBlock {
    pub fn t(&self) -> usize {
        self.data.rows()
    }
}

/// Autocorrelation from a sketch, summing column autocorrelations of `X̂`
/// and normalizing by the ambient `N`. `Σ̂ = X̂X̂ᵀ` is never formed.
pub fn autocorr_from_sketch(block: &SketchedBlock) -> Result<AutocorrEstimate> {
    check_len(block.spec.m, block.data.cols())?;
    let t = block.t();
    if t < 1 {
        return Err(invalid("T", "block has no rows"));
    }
    let mut acc = LagAccumulator::new(t);
    for j in 0..block.data.cols() {
        acc.add(&block.data.column(j));
    }
    let counts = (0..t).map(|tau| (t - tau) as u64).collect();
    AutocorrEstimate::from_lag_sums(&acc.finish(), counts, block.spec.n)
}

/// Bartlett taper `w(τ) = (T−τ)/T`.
pub fn bartlett_window(a: &AutocorrEstimate) -> Result<AutocorrEstimate> {
    if !a.all_valid() {
        return Err(Error::InvalidLag {
            lag: a.valid.iter().position(|&v| !v).unwrap_or(0),
        });
    }
    let t = a.len() as f64;
    let mut out = a.clone();
    for (tau, r) in out.r.iter_mut().enumerate() {
        *r *= (t - tau as f64) / t;
    }
    out.windowed = true;
    Ok(out)
}

/// Symmetric extension `g` of length `2T−1`: `g[τ] = g[−τ mod 2T−1] = r[τ]`.
pub fn even_extension(r: &[f64]) -> Vec<f64> {
    let t = r.len();
    if t == 0 {
        return Vec::new();
    }
    let l = 2 * t - 1;
    let mut g = vec![0.0; l];
    g[0] = r[0];
    for tau in 1..t {
        g[tau] = r[tau];
        g[l - tau] = r[tau];
    }
    g
}

/// Real DFT of the even extension of `r`, all `2T−1` bins, together with
/// the largest imaginary residue.
pub fn symmetric_spectrum(r: &[f64]) -> (Vec<f64>, f64) {
    let g = even_extension(r);
    if g.is_empty() {
        return (Vec::new(), 0.0);
    }
    let mut buf: Vec<Complex64> = g.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Fft::new(buf.len()).forward(&mut buf);
    let residue = buf.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    (buf.iter().map(|z| z.re).collect(), residue)
}

/// Wiener–Khinchin: the PSD is the DFT of the even-extended autocorrelation.
pub fn psd_from_autocorr(a: &AutocorrEstimate, dt: f64) -> Result<PowerSpectrum> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", "time step must be positive"));
    }
    if a.is_empty() {
        return Err(invalid("r", "empty autocorrelation"));
    }
    if let Some(lag) = a.valid.iter().position(|&v| !v) {
        return Err(Error::InvalidLag { lag });
    }
    let t = a.len();
    let (full, residue) = symmetric_spectrum(&a.r);
    let peak = full.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // Scale-aware tolerance: the residue is pure rounding for symmetric input.
    let floor = f64::EPSILON * a.r.iter().fold(0.0f64, |m, v| m.max(v.abs())) * (2 * t) as f64;
    if residue > 1e-9 * peak && residue > floor {
        return Err(Error::NonRealSpectrum(residue / peak));
    }
    let l = (2 * t - 1) as f64;
    Ok(PowerSpectrum {
        freqs: (0..t).map(|k| k as f64 / (l * dt)).collect(),
        s: full[..t].to_vec(),
        windowed: a.windowed,
        blocks: a.blocks,
    })
}

/// Lag-wise mean of per-block estimates of equal length; counts add up.
pub fn average_estimates(blocks: &[AutocorrEstimate]) -> Result<AutocorrEstimate> {
    let first = blocks.first().ok_or(Error::EmptySample)?;
    let t = first.len();
    let mut out = first.clone();
    for b in &blocks[1..] {
        check_len(t, b.len())?;
        for tau in 0..t {
            out.r[tau] += b.r[tau];
            out.counts[tau] += b.counts[tau];
            out.valid[tau] &= b.valid[tau];
            out.filled[tau] |= b.filled[tau];
        }
    }
    let scale = 1.0 / blocks.len() as f64;
    out.r.iter_mut().for_each(|r| *r *= scale);
    out.blocks = blocks.iter().map(|b| b.blocks).sum();
    Ok(out)
}

/// A row-streamed `T_long × N` data matrix.
pub trait TimeSeriesSource {
    /// Number of columns `N`.
    fn n_cols(&self) -> usize;

    /// Total number of rows the source will yield.
    fn n_rows(&self) -> usize;

    /// Time step between rows.
    fn dt(&self) -> f64 {
        1.0
    }

    /// Writes the next row into `out` (length `N`); `Ok(false)` at the end.
    fn next_row(&mut self, out: &mut [f64]) -> Result<bool>;

    /// Restarts the stream. Only needed for the optional mean pre-pass.
    fn rewind(&mut self) -> Result<()> {
        Err(Error::Source("source cannot be rewound".into()))
    }
}

impl<S: TimeSeriesSource + ?Sized> TimeSeriesSource for &mut S {
    fn n_cols(&self) -> usize {
        (**self).n_cols()
    }
    fn n_rows(&self) -> usize {
        (**self).n_rows()
    }
    fn dt(&self) -> f64 {
        (**self).dt()
    }
    fn next_row(&mut self, out: &mut [f64]) -> Result<bool> {
        (**self).next_row(out)
    }
    fn rewind(&mut self) -> Result<()> {
        (**self).rewind()
    }
}

impl<S: TimeSeriesSource + ?Sized> TimeSeriesSource for alloc::boxed::Box<S> {
    fn n_cols(&self) -> usize {
        (**self).n_cols()
    }
    fn n_rows(&self) -> usize {
        (**self).n_rows()
    }
    fn dt(&self) -> f64 {
        (**self).dt()
    }
    fn next_row(&mut self, out: &mut [f64]) -> Result<bool> {
        (**self).next_row(out)
    }
    fn rewind(&mut self) -> Result<()> {
        (**self).rewind()
    }
}

/// Streams the rows of an in-memory matrix.
#[derive(Debug, Clone)]
pub struct MatrixSource<'a> {
    data: &'a Matrix,
    pos: usize,
    dt: f64,
}

impl<'a> MatrixSource<'a> {
    pub fn new(data: &'a Matrix) -> Self {
        Self::with_dt(data, 1.0)
    }

    pub fn with_dt(data: &'a Matrix, dt: f64) -> Self {
        Self { data, pos: 0, dt }
    }
}

impl TimeSeriesSource for MatrixSource<'_> {
    fn n_cols(&self) -> usize {
        self.data.cols()
    }
    fn n_rows(&self) -> usize {
        self.data.rows()
    }
    fn dt(&self) -> f64 {
        self.dt
    }
    fn next_row(&mut self, out: &mut [f64]) -> Result<bool> {
        if self.pos == self.data.rows() {
            return Ok(false);
        }
        check_len(self.data.cols(), out.len())?;
        out.copy_from_slice(self.data.row(self.pos));
        self.pos += 1;
        Ok(true)
    }
    fn rewind(&mut self) -> Result<()> {
        self.pos = 0;
        Ok(())
    }
}

/// Rows sketched per batched operator application.
pub const CHUNK_ROWS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub kind: SketchKind,
    pub transform: Transform,
    pub m: usize,
    pub blocks: usize,
    pub master_seed: u64,
    /// Apply the Bartlett window when `blocks > 1`.
    pub window: bool,
    /// Subtract global column means, found by an extra pass over the source.
    pub subtract_mean: bool,
}

impl PipelineConfig {
    pub fn new(kind: SketchKind, m: usize, blocks: usize, master_seed: u64) -> Self {
        Self {
            kind,
            transform: Transform::default(),
            m,
            blocks,
            master_seed,
            window: true,
            subtract_mean: false,
        }
    }

    /// Descriptor of the operator used for block `b`.
    pub fn block_spec(&self, b: usize, n: usize) -> SketchSpec {
        SketchSpec::new(self.kind, self.m, n, block_seed(self.master_seed, b as u64)).with_transform(self.transform)
    }
}

fn block_len(t_long: usize, blocks: usize) -> Result<usize> {
    if blocks < 1 {
        return Err(invalid("blocks", "need at least one block"));
    }
    if t_long == 0 || t_long % blocks != 0 {
        return Err(invalid("blocks", "T_long must be a positive multiple of the block count"));
    }
    Ok(t_long / blocks)
}

/// Column means over the whole stream; rewinds the source afterwards.
pub fn column_means<S: TimeSeriesSource>(src: &mut S) -> Result<Vec<f64>> {
    let n = src.n_cols();
    let mut row = vec![0.0; n];
    let mut sum = vec![0.0; n];
    let mut rows = 0usize;
    while src.next_row(&mut row)? {
        for (s, v) in sum.iter_mut().zip(&row) {
            *s += v;
        }
        rows += 1;
    }
    src.rewind()?;
    let inv = 1.0 / rows.max(1) as f64;
    sum.iter_mut().for_each(|s| *s *= inv);
    Ok(sum)
}

/// Sketches the source block by block, handing each finished `X̂` to `sink`.
///
/// Only one block's `X̂`, one operator and a `CHUNK_ROWS × N` row buffer
/// are alive at a time; `audit` records every such buffer.
pub fn sketch_stream<S, F>(src: &mut S, cfg: &PipelineConfig, audit: &mut CellAudit, mut sink: F) -> Result<()>
where
    S: TimeSeriesSource,
    F: FnMut(SketchedBlock) -> Result<()>,
{
    let n = src.n_cols();
    let t = block_len(src.n_rows(), cfg.blocks)?;
    let means = if cfg.subtract_mean {
        audit.alloc(n);
        Some(column_means(src)?)
    } else {
        None
    };
    let chunk_cells = CHUNK_ROWS * n;
    let mut chunk = vec![0.0; chunk_cells];
    audit.alloc(chunk_cells);
    for b in 0..cfg.blocks {
        let op = SketchOperator::draw(cfg.block_spec(b, n))?;
        audit.alloc(op.state_cells());
        let mut data = Matrix::zeros(t, cfg.m);
        audit.alloc(data.cells());
        let mut row = 0;
        while row < t {
            let k = CHUNK_ROWS.min(t - row);
            for i in 0..k {
                let dst = &mut chunk[i * n..(i + 1) * n];
                if !src.next_row(dst)? {
                    return Err(Error::Source("stream ended before the last block was complete".into()));
                }
                if let Some(mu) = &means {
                    dst.iter_mut().zip(mu).for_each(|(v, m)| *v -= m);
                }
            }
            let out = &mut data.as_mut_slice()[row * cfg.m..(row + k) * cfg.m];
            op.apply_rows(&chunk[..k * n], out)?;
            row += k;
        }
        let cells = data.cells();
        sink(SketchedBlock {
            block_index: b as u64,
            spec: *op.spec(),
            dt: src.dt(),
            data,
        })?;
        audit.free(cells);
        audit.free(op.state_cells());
    }
    audit.free(chunk_cells);
    if means.is_some() {
        audit.free(n);
    }
    Ok(())
}

/// Combines per-block estimates: average, window iff `B > 1`, PSD.
pub fn finish_blocks(per_block: &[AutocorrEstimate], window: bool, dt: f64) -> Result<(AutocorrEstimate, PowerSpectrum)> {
    let mut acf = average_estimates(per_block)?;
    if window && per_block.len() > 1 {
        acf = bartlett_window(&acf)?;
    }
    let psd = psd_from_autocorr(&acf, dt)?;
    Ok((acf, psd))
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub acf: AutocorrEstimate,
    pub psd: PowerSpectrum,
    pub audit: CellAudit,
    pub specs: Vec<SketchSpec>,
}

/// Sketch every block of the stream, estimate, average, window and
/// transform. Peak memory is `O(T m + N)` plus operator state.
pub fn run_pipeline<S: TimeSeriesSource>(mut src: S, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let mut audit = CellAudit::new();
    let mut per_block = Vec::with_capacity(cfg.blocks);
    let mut specs = Vec::with_capacity(cfg.blocks);
    let dt = src.dt();
    sketch_stream(&mut src, cfg, &mut audit, |block| {
        let mut est = autocorr_from_sketch(&block)?;
        est.blocks = 1;
        per_block.push(est);
        specs.push(block.spec);
        Ok(())
    })?;
    let (acf, psd) = finish_blocks(&per_block, cfg.window, dt)?;
    Ok(PipelineOutput { acf, psd, audit, specs })
}

/// Exact blocked autocorrelation of a stream (ground truth).
///
/// Each block is materialized as `T × N` in turn, so this is the reference
/// path, not the streaming one.
pub fn autocorr_exact_blocked<S: TimeSeriesSource>(
    mut src: S,
    blocks: usize,
    window: bool,
) -> Result<(AutocorrEstimate, PowerSpectrum)> {
    let n = src.n_cols();
    let t = block_len(src.n_rows(), blocks)?;
    let mut per_block = Vec::with_capacity(blocks);
    let mut row = vec![0.0; n];
    for _ in 0..blocks {
        // Column-major so each column feeds the accumulator directly.
        let mut cols = vec![0.0; t * n];
        for s in 0..t {
            if !src.next_row(&mut row)? {
                return Err(Error::Source("stream ended before the last block was complete".into()));
            }
            for (i, &v) in row.iter().enumerate() {
                cols[i * t + s] = v;
            }
        }
        let mut acc = LagAccumulator::new(t);
        for c in cols.chunks_exact(t) {
            acc.add(c);
        }
        let counts = (0..t).map(|tau| (t - tau) as u64).collect();
        per_block.push(AutocorrEstimate::from_lag_sums(&acc.finish(), counts, n)?);
    }
    finish_blocks(&per_block, window, src.dt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_signal() {
        let x = Matrix::from_vec(3, 1, vec![1.0; 3]).unwrap();
        assert_eq!(autocorr_direct(&x).unwrap().r, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn single_spike() {
        let x = Matrix::from_vec(3, 1, vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(autocorr_direct(&x).unwrap().r, vec![1.0 / 3.0, 0.0, 0.0]);
    }

    #[test]
    fn column_autocorr_small() {
        let u = column_autocorr(&[1.0, 1.0, 1.0]);
        for (a, b) in u.iter().zip([3.0, 2.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let u = column_autocorr(&[1.0, 0.0, 0.0, 0.0, 0.0]);
        for (tau, a) in u.iter().enumerate() {
            assert!((a - if tau == 0 { 1.0 } else { 0.0 }).abs() < 1e-12);
        }
    }

    #[test]
    fn bartlett_weights() {
        let w = bartlett_window(&AutocorrEstimate::full(vec![1.0; 4])).unwrap();
        assert_eq!(w.r, vec![1.0, 0.75, 0.5, 0.25]);
        assert!(w.windowed);
    }

    #[test]
    fn white_autocorrelation_is_flat() {
        let mut r = vec![0.0; 17];
        r[0] = 1.0;
        let psd = psd_from_autocorr(&AutocorrEstimate::full(r), 1.0).unwrap();
        assert!(psd.s.iter().all(|&s| (s - 1.0).abs() < 1e-12));
        assert_eq!(psd.freqs.len(), 17);
        assert!(psd.freqs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn cosine_peaks_on_its_bin() {
        let t = 128;
        let l = (2 * t - 1) as f64;
        let k0 = 23;
        let dt = 0.01;
        let f = k0 as f64 / (l * dt);
        let r = (0..t).map(|tau| libm::cos(2.0 * core::f64::consts::PI * f * tau as f64 * dt)).collect();
        let psd = psd_from_autocorr(&AutocorrEstimate::full(r), dt).unwrap();
        let arg = (0..t).max_by(|&a, &b| psd.s[a].total_cmp(&psd.s[b])).unwrap();
        assert_eq!(arg, k0);
    }

    #[test]
    fn psd_rejects_invalid_lags() {
        let mut a = AutocorrEstimate::full(vec![1.0, 0.5, 0.2]);
        a.valid[1] = false;
        assert_eq!(psd_from_autocorr(&a, 1.0), Err(Error::InvalidLag { lag: 1 }));
    }

    #[test]
    fn pipeline_rejects_ragged_blocks() {
        let x = Matrix::zeros(10, 2);
        let cfg = PipelineConfig::new(SketchKind::Gaussian, 1, 3, 0);
        assert!(run_pipeline(MatrixSource::new(&x), &cfg).is_err());
    }
}
