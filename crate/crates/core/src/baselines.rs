//! Classical subsampling estimators: time subsampling (random, power
//! series, sparse ruler), particle subsampling, uniform entrywise
//! sparsification, and on-the-fly block and hierarchical correlators.
//!
//! Time indices are 0-based throughout: a series of length `T` has times
//! `0..T`.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{check_len, invalid, Error, Result};
use crate::fft::LagAccumulator;
use crate::matrix::{dot, Matrix};
use crate::rng::{rng_for, streams};
use crate::spectral::{autocorr_fft, AutocorrEstimate, TimeSeriesSource};
use crate::spline::CubicSpline;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeScheme {
    /// `⌈γT⌉` uniform draws with replacement.
    Random { gamma: f64 },
    /// `I₀ = {1, 2, 4, …, 2^k}` repeated at offsets `2^k, 2^{k+1}, …`.
    PowerSeries { k: u32 },
    /// Wichmann rulers spanning at least `2^k`, tiled end to end.
    SparseRuler { k: u32 },
}

/// Sorted, duplicate-free sample times within `0..t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeIndexSet {
    pub t: usize,
    pub indices: Vec<usize>,
    pub scheme: TimeScheme,
}

impl TimeIndexSet {
    pub fn from_indices(t: usize, mut indices: Vec<usize>, scheme: TimeScheme) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() {
            return Err(Error::EmptySample);
        }
        if indices[indices.len() - 1] >= t {
            return Err(invalid("indices", "time index out of range"));
        }
        Ok(Self { t, indices, scheme })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn fraction(&self) -> f64 {
        self.len() as f64 / self.t as f64
    }

    pub fn indicator(&self) -> Vec<f64> {
        let mut xi = vec![0.0; self.t];
        for &i in &self.indices {
            xi[i] = 1.0;
        }
        xi
    }
}

/// `⌈γ·len⌉` uniform draws from `0..len` with replacement, deduplicated.
fn draw_with_replacement(len: usize, gamma: f64, seed: u64) -> Result<Vec<usize>> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid("gamma", "must lie in (0, 1]"));
    }
    let draws = libm::ceil(gamma * len as f64) as usize;
    let mut rng = rng_for(seed, streams::SUBSAMPLE);
    let mut out: Vec<usize> = (0..draws).map(|_| rng.random_range(0..len)).collect();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

pub fn sample_time(scheme: TimeScheme, t: usize, seed: u64) -> Result<TimeIndexSet> {
    if t < 2 {
        return Err(invalid("T", "need at least two time points"));
    }
    let indices = match scheme {
        TimeScheme::Random { gamma } => draw_with_replacement(t, gamma, seed)?,
        TimeScheme::PowerSeries { k } => power_series(t, check_k(k)?),
        TimeScheme::SparseRuler { k } => {
            let span = 1usize << check_k(k)?;
            let ruler = WichmannRuler::covering(span);
            tile(&ruler.marks(), ruler.length(), t)
        }
    };
    TimeIndexSet::from_indices(t, indices, scheme)
}

fn check_k(k: u32) -> Result<u32> {
    if (1..usize::BITS - 1).contains(&k) {
        Ok(k)
    } else {
        Err(invalid("k", "must be at least 1"))
    }
}

fn power_series(t: usize, k: u32) -> Vec<usize> {
    let base: Vec<usize> = (0..=k).map(|j| 1usize << j).collect();
    let mut out = Vec::new();
    let mut offset = 0usize;
    let mut next = 1usize << k;
    while offset < t {
        // 1-based times offset + 2^j, stored 0-based.
        out.extend(base.iter().map(|b| offset + b - 1).filter(|&i| i < t));
        offset = next;
        next = match next.checked_mul(2) {
            Some(v) => v,
            None => break,
        };
    }
    out
}

fn tile(marks: &[usize], period: usize, t: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < t {
        out.extend(marks.iter().map(|m| start + m).filter(|&i| i < t));
        start += period;
    }
    out
}

/// The `k` whose deterministic scheme samples a fraction of `0..t` closest
/// to `gamma` (ties: larger `k`).
pub fn k_for_gamma(t: usize, gamma: f64, ruler: bool) -> Result<u32> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid("gamma", "must lie in (0, 1]"));
    }
    let max_k = (usize::BITS - t.leading_zeros()).max(1);
    let mut best = (f64::INFINITY, 1);
    for k in 1..=max_k {
        let scheme = if ruler {
            TimeScheme::SparseRuler { k }
        } else {
            TimeScheme::PowerSeries { k }
        };
        let set = sample_time(scheme, t, 0)?;
        let err = (set.fraction() - gamma).abs();
        // Ties go to the larger k, whose base block reaches longer lags.
        if err <= best.0 {
            best = (err, k);
        }
    }
    Ok(best.1)
}

/// Wichmann ruler `W(r, s)`: `4r + s + 3` marks measuring every integer
/// distance up to `4r² + 8r + 3 + s(4r + 3)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WichmannRuler {
    pub r: usize,
    pub s: usize,
}

impl WichmannRuler {
    pub fn length(&self) -> usize {
        let r = self.r;
        4 * r * r + 8 * r + 3 + self.s * (4 * r + 3)
    }

    pub fn n_marks(&self) -> usize {
        4 * self.r + self.s + 3
    }

    /// Segment lengths `[1×r, (r+1)×1, (2r+1)×r, (4r+3)×s, (2r+2)×(r+1), 1×r]`.
    pub fn segments(&self) -> Vec<usize> {
        let r = self.r;
        let mut seg = Vec::with_capacity(self.n_marks() - 1);
        seg.extend(core::iter::repeat(1).take(r));
        seg.push(r + 1);
        seg.extend(core::iter::repeat(2 * r + 1).take(r));
        seg.extend(core::iter::repeat(4 * r + 3).take(self.s));
        seg.extend(core::iter::repeat(2 * r + 2).take(r + 1));
        seg.extend(core::iter::repeat(1).take(r));
        seg
    }

    /// Mark positions, starting at 0 and ending at `length()`.
    pub fn marks(&self) -> Vec<usize> {
        let mut at = 0;
        let mut out = vec![0];
        for s in self.segments() {
            at += s;
            out.push(at);
        }
        out
    }

    /// Fewest-mark ruler with length at least `span` (ties: smaller `r`).
    pub fn covering(span: usize) -> Self {
        let mut best: Option<Self> = None;
        let mut r = 0;
        loop {
            let base = WichmannRuler { r, s: 0 }.length();
            let s = if base >= span { 0 } else { (span - base).div_ceil(4 * r + 3) };
            let cand = WichmannRuler { r, s };
            if best.is_none_or(|b| cand.n_marks() < b.n_marks()) {
                best = Some(cand);
            }
            if base >= span {
                break;
            }
            r += 1;
        }
        best.unwrap()
    }
}

/// Pair counts `z[τ] = #{t : t ∈ I, t+τ ∈ I}` via the autocorrelation of
/// the indicator vector.
pub fn lag_counts(set: &TimeIndexSet) -> Vec<u64> {
    let mut acc = LagAccumulator::new(set.t);
    acc.add(&set.indicator());
    acc.finish().iter().map(|&z| libm::round(z).max(0.0) as u64).collect()
}

/// Streams a source and keeps only the rows in `set` (`|I| × N`).
pub fn gather_rows<S: TimeSeriesSource>(src: &mut S, set: &TimeIndexSet) -> Result<Matrix> {
    let n = src.n_cols();
    let mut out = Matrix::zeros(set.len(), n);
    let mut row = vec![0.0; n];
    let mut next = 0;
    for t in 0..set.t {
        if !src.next_row(&mut row)? {
            return Err(Error::Source("stream shorter than the index set".into()));
        }
        if next < set.len() && set.indices[next] == t {
            out.row_mut(next).copy_from_slice(&row);
            next += 1;
        }
    }
    Ok(out)
}

/// Time-subsampled estimate: unsampled rows are zero-filled, column
/// autocorrelations summed, and lag `τ` divided by `N z[τ]`.
pub fn autocorr_time_subsampled(rows: &Matrix, set: &TimeIndexSet) -> Result<AutocorrEstimate> {
    check_len(set.len(), rows.rows())?;
    let n = rows.cols();
    let mut acc = LagAccumulator::new(set.t);
    let mut col = vec![0.0; set.t];
    for j in 0..n {
        for (k, &t) in set.indices.iter().enumerate() {
            col[t] = rows.get(k, j);
        }
        acc.add(&col);
    }
    AutocorrEstimate::from_lag_sums(&acc.finish(), lag_counts(set), n)
}

/// Fills invalid lags with a not-a-knot cubic spline through the valid
/// ones; lags past the last valid one take its value. Valid lags are left
/// untouched and newly filled lags are flagged in `filled`.
pub fn interpolate_missing_lags(a: &AutocorrEstimate) -> Result<AutocorrEstimate> {
    if a.all_valid() {
        return Ok(a.clone());
    }
    let knots: Vec<usize> = (0..a.len()).filter(|&t| a.valid[t]).collect();
    if knots.len() < 4 || !a.valid[0] {
        return Err(Error::TooFewValidLags {
            required: 4,
            found: knots.len(),
        });
    }
    let xs: Vec<f64> = knots.iter().map(|&t| t as f64).collect();
    let ys: Vec<f64> = knots.iter().map(|&t| a.r[t]).collect();
    let spline = CubicSpline::not_a_knot(&xs, &ys)?;
    let last = *knots.last().unwrap();
    let mut out = a.clone();
    for tau in 0..a.len() {
        if a.valid[tau] {
            continue;
        }
        out.r[tau] = if tau > last { a.r[last] } else { spline.eval(tau as f64) };
        out.valid[tau] = true;
        out.filled[tau] = true;
    }
    Ok(out)
}

/// Sorted, duplicate-free particle (column) indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    pub n: usize,
    pub indices: Vec<usize>,
}

impl ParticleSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// `⌈γN⌉` uniform column draws with replacement, deduplicated.
pub fn sample_particles(n: usize, gamma: f64, seed: u64) -> Result<ParticleSet> {
    if n < 1 {
        return Err(invalid("N", "need at least one column"));
    }
    let indices = draw_with_replacement(n, gamma, seed)?;
    Ok(ParticleSet { n, indices })
}

/// Streams a source and keeps the columns in `set` (`T × |I|`).
pub fn gather_columns<S: TimeSeriesSource>(src: &mut S, set: &ParticleSet) -> Result<Matrix> {
    check_len(set.n, src.n_cols())?;
    let t = src.n_rows();
    let mut out = Matrix::zeros(t, set.len());
    let mut row = vec![0.0; set.n];
    for s in 0..t {
        if !src.next_row(&mut row)? {
            return Err(Error::Source("stream ended early".into()));
        }
        for (k, &i) in set.indices.iter().enumerate() {
            out.set(s, k, row[i]);
        }
    }
    Ok(out)
}

/// Particle-subsampled estimate: the exact estimator on the kept columns,
/// normalized by `|I|` instead of `N`.
pub fn autocorr_particle_subsampled(cols: &Matrix) -> Result<AutocorrEstimate> {
    if cols.cols() == 0 {
        return Err(Error::EmptySample);
    }
    autocorr_fft(cols)
}

/// Per-column sorted sample times for uniform entrywise sparsification.
#[derive(Debug, Clone, PartialEq)]
pub struct EntrySampleSet {
    pub t: usize,
    pub n: usize,
    pub columns: Vec<Vec<usize>>,
}

impl EntrySampleSet {
    pub fn from_columns(t: usize, mut columns: Vec<Vec<usize>>) -> Result<Self> {
        for c in &mut columns {
            c.sort_unstable();
            c.dedup();
            if c.last().is_some_and(|&i| i >= t) {
                return Err(invalid("entries", "time index out of range"));
            }
        }
        let set = Self {
            t,
            n: columns.len(),
            columns,
        };
        if set.nnz() == 0 {
            return Err(Error::EmptySample);
        }
        Ok(set)
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }
}

/// `⌈γTN⌉` uniform entry draws with replacement, deduplicated per column.
pub fn sample_entries(t: usize, n: usize, gamma: f64, seed: u64) -> Result<EntrySampleSet> {
    if t < 1 || n < 1 {
        return Err(invalid("T", "need a nonempty matrix"));
    }
    let flat = draw_with_replacement(t * n, gamma, seed)?;
    let mut columns = vec![Vec::new(); n];
    for e in flat {
        columns[e % n].push(e / n);
    }
    EntrySampleSet::from_columns(t, columns)
}

/// Values at the sampled entries, aligned with `set.columns`.
pub fn gather_entries<S: TimeSeriesSource>(src: &mut S, set: &EntrySampleSet) -> Result<Vec<Vec<f64>>> {
    check_len(set.n, src.n_cols())?;
    let mut row = vec![0.0; set.n];
    let mut cursor = vec![0usize; set.n];
    let mut values: Vec<Vec<f64>> = set.columns.iter().map(|c| Vec::with_capacity(c.len())).collect();
    for t in 0..set.t {
        if !src.next_row(&mut row)? {
            return Err(Error::Source("stream ended early".into()));
        }
        for i in 0..set.n {
            let c = &set.columns[i];
            if cursor[i] < c.len() && c[cursor[i]] == t {
                values[i].push(row[i]);
                cursor[i] += 1;
            }
        }
    }
    Ok(values)
}

/// Entrywise estimate with pooled normalization:
/// `r[τ] = Σ_i Σ_t x x / Σ_i z_{τ,i}`.
pub fn autocorr_entrywise(set: &EntrySampleSet, values: &[Vec<f64>]) -> Result<AutocorrEstimate> {
    check_len(set.n, values.len())?;
    let mut num = LagAccumulator::new(set.t);
    let mut den = LagAccumulator::new(set.t);
    let mut col = vec![0.0; set.t];
    let mut ind = vec![0.0; set.t];
    for (times, vals) in set.columns.iter().zip(values) {
        check_len(times.len(), vals.len())?;
        if times.is_empty() {
            continue;
        }
        col.iter_mut().for_each(|v| *v = 0.0);
        ind.iter_mut().for_each(|v| *v = 0.0);
        for (&t, &v) in times.iter().zip(vals) {
            col[t] = v;
            ind[t] = 1.0;
        }
        num.add(&col);
        den.add(&ind);
    }
    let counts = den.finish().iter().map(|&z| libm::round(z).max(0.0) as u64).collect();
    AutocorrEstimate::from_lag_sums(&num.finish(), counts, 1)
}

/// Products of the newest sample against the last `ℓ` samples of one level.
#[derive(Debug, Clone)]
struct LagRing {
    n: usize,
    ell: usize,
    rows: VecDeque<Vec<f64>>,
    sums: Vec<f64>,
    pairs: Vec<u64>,
}

impl LagRing {
    fn new(n: usize, ell: usize) -> Self {
        Self {
            n,
            ell,
            rows: VecDeque::with_capacity(ell),
            sums: vec![0.0; ell],
            pairs: vec![0; ell],
        }
    }

    fn push(&mut self, row: Vec<f64>) {
        if self.rows.len() == self.ell {
            self.rows.pop_back();
        }
        self.rows.push_front(row);
        let newest = &self.rows[0];
        for (lag, prev) in self.rows.iter().enumerate() {
            self.sums[lag] += dot(newest, prev);
            self.pairs[lag] += 1;
        }
    }

    fn value(&self, lag: usize) -> Option<f64> {
        (self.pairs[lag] > 0).then(|| self.sums[lag] / (self.n as f64 * self.pairs[lag] as f64))
    }
}

/// On-the-fly correlator over a window of the last `ℓ` rows; estimates lags
/// `0..ℓ` only.
#[derive(Debug, Clone)]
pub struct BlockCorrelator {
    ring: LagRing,
    rows_seen: usize,
}

impl BlockCorrelator {
    pub fn new(n: usize, ell: usize) -> Result<Self> {
        if ell < 2 {
            return Err(invalid("ell", "block length must be at least 2"));
        }
        if n < 1 {
            return Err(invalid("N", "need at least one column"));
        }
        Ok(Self {
            ring: LagRing::new(n, ell),
            rows_seen: 0,
        })
    }

    pub fn push(&mut self, row: &[f64]) -> Result<()> {
        check_len(self.ring.n, row.len())?;
        self.ring.push(row.to_vec());
        self.rows_seen += 1;
        Ok(())
    }

    /// Total pair updates performed.
    pub fn pair_updates(&self) -> u64 {
        self.ring.pairs.iter().sum()
    }

    /// Estimate over `T = rows seen` lags; lags `≥ ℓ` are invalid.
    pub fn finish(&self) -> AutocorrEstimate {
        let t = self.rows_seen;
        let mut sums = vec![0.0; t];
        let mut counts = vec![0u64; t];
        for lag in 0..t.min(self.ring.ell) {
            sums[lag] = self.ring.sums[lag];
            counts[lag] = self.ring.pairs[lag];
        }
        AutocorrEstimate::from_lag_sums(&sums, counts, self.ring.n).expect("lengths agree")
    }
}

/// Multiple-tau correlator: level `j` correlates averages of `c^j`
/// consecutive samples over lags `c^j · (0..ℓ)`. Long lags are estimated
/// from coarse-grained data and are biased for signals that vary within a
/// coarse-graining window.
#[derive(Debug, Clone)]
pub struct HierarchicalCorrelator {
    c: usize,
    levels: Vec<LagRing>,
    /// Running sums feeding each coarser level, and how many samples each holds.
    pending: Vec<(Vec<f64>, usize)>,
    rows_seen: usize,
}

impl HierarchicalCorrelator {
    pub fn new(n: usize, ell: usize, c: usize, levels: usize) -> Result<Self> {
        if ell < 2 {
            return Err(invalid("ell", "block length must be at least 2"));
        }
        if c < 2 {
            return Err(invalid("c", "coarse-graining factor must be at least 2"));
        }
        if levels < 1 {
            return Err(invalid("L", "need at least one level"));
        }
        if n < 1 {
            return Err(invalid("N", "need at least one column"));
        }
        Ok(Self {
            c,
            levels: (0..levels).map(|_| LagRing::new(n, ell)).collect(),
            pending: (1..levels).map(|_| (vec![0.0; n], 0)).collect(),
            rows_seen: 0,
        })
    }

    pub fn push(&mut self, row: &[f64]) -> Result<()> {
        check_len(self.levels[0].n, row.len())?;
        self.rows_seen += 1;
        let mut sample = row.to_vec();
        for j in 0..self.levels.len() {
            if j + 1 < self.levels.len() {
                let (acc, count) = &mut self.pending[j];
                acc.iter_mut().zip(&sample).for_each(|(a, v)| *a += v);
                *count += 1;
                let carry = if *count == self.c {
                    let inv = 1.0 / self.c as f64;
                    let avg: Vec<f64> = acc.iter().map(|a| a * inv).collect();
                    acc.iter_mut().for_each(|a| *a = 0.0);
                    *count = 0;
                    Some(avg)
                } else {
                    None
                };
                self.levels[j].push(sample);
                match carry {
                    Some(avg) => sample = avg,
                    None => return Ok(()),
                }
            } else {
                self.levels[j].push(sample);
                return Ok(());
            }
        }
        Ok(())
    }

    pub fn pair_updates(&self) -> u64 {
        self.levels.iter().flat_map(|l| l.pairs.iter()).sum()
    }

    /// Level used for lag `tau`: the finest `j` with `c^j | τ` and `τ/c^j < ℓ`.
    pub fn level_for_lag(&self, tau: usize) -> Option<(usize, usize)> {
        let ell = self.levels[0].ell;
        let mut scale = 1usize;
        for j in 0..self.levels.len() {
            if tau % scale == 0 && tau / scale < ell && (j == 0 || tau > 0) {
                return Some((j, tau / scale));
            }
            scale = scale.checked_mul(self.c)?;
        }
        None
    }

    pub fn finish(&self) -> AutocorrEstimate {
        let t = self.rows_seen;
        let mut r = vec![0.0; t];
        let mut counts = vec![0u64; t];
        for tau in 0..t {
            if let Some((j, k)) = self.level_for_lag(tau) {
                if let Some(v) = self.levels[j].value(k) {
                    r[tau] = v;
                    counts[tau] = self.levels[j].pairs[k];
                }
            }
        }
        let mut est = AutocorrEstimate::from_lag_sums(&vec![0.0; t], counts, 1).expect("lengths agree");
        est.r = r;
        est
    }
}

/// Runs a correlator over every row of a source.
pub fn correlate_stream<S: TimeSeriesSource>(
    src: &mut S,
    mut push: impl FnMut(&[f64]) -> Result<()>,
) -> Result<()> {
    let mut row = vec![0.0; src.n_cols()];
    while src.next_row(&mut row)? {
        push(&row)?;
    }
    Ok(())
}
