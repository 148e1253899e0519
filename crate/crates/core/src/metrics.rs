//! Relative error norms, the deterministic sketch-error bounds, and storage
//! accounting that charges every method for its index meta-data.

use alloc::vec::Vec;

use crate::error::{check_len, invalid, Error, Result};
use crate::matrix::Matrix;

/// Relative errors of an estimate against a reference vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub rel_l1: f64,
    pub rel_l2: f64,
    /// Maximum relative error over entries where the reference is nonzero.
    pub rel_linf: f64,
    pub n_compared: usize,
}

pub fn psd_errors(est: &[f64], truth: &[f64]) -> Result<ErrorReport> {
    check_len(truth.len(), est.len())?;
    let (mut d1, mut t1, mut d2, mut t2, mut linf) = (0.0, 0.0, 0.0, 0.0, 0.0f64);
    for (&e, &s) in est.iter().zip(truth) {
        let d = (e - s).abs();
        d1 += d;
        t1 += s.abs();
        d2 += d * d;
        t2 += s * s;
        if s != 0.0 {
            linf = linf.max(d / s.abs());
        }
    }
    if t1 == 0.0 {
        return Err(invalid("truth", "reference vector is identically zero"));
    }
    Ok(ErrorReport {
        rel_l1: d1 / t1,
        rel_l2: libm::sqrt(d2) / libm::sqrt(t2),
        rel_linf: linf,
        n_compared: truth.len(),
    })
}

/// `R_τ[M] = 1/(N (T−τ)) Σ_t M[t, t+τ]`.
pub fn autocorr_of_gram(m: &Matrix, n: usize) -> Vec<f64> {
    let t = m.rows();
    (0..t)
        .map(|tau| {
            let s: f64 = (0..t - tau).map(|i| m.get(i, i + tau)).sum();
            s / (n as f64 * (t - tau) as f64)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma1Bounds {
    pub lhs_l1: f64,
    pub rhs_l1: f64,
    pub lhs_linf: f64,
    pub rhs_linf: f64,
}

impl Lemma1Bounds {
    pub fn holds(&self) -> bool {
        self.lhs_l1 <= self.rhs_l1 && self.lhs_linf <= self.rhs_linf
    }
}

/// For symmetric `Σ, Σ̂` with `Δ = Σ̂ − Σ`:
/// `‖R[Δ]‖₁ ≤ √(1 + ln T)/N · ‖Δ‖_F` and `‖R[Δ]‖_∞ ≤ ‖Δ‖_F / N`.
pub fn lemma1_bounds(sigma: &Matrix, sigma_hat: &Matrix, n: usize) -> Result<Lemma1Bounds> {
    let t = sigma.rows();
    if t < 1 || sigma.cols() != t {
        return Err(invalid("Sigma", "must be square and nonempty"));
    }
    check_len(t * t, sigma_hat.cells())?;
    check_len(t, sigma_hat.rows())?;
    if n < 1 {
        return Err(invalid("N", "must be positive"));
    }
    for m in [sigma, sigma_hat] {
        let scale = m.as_slice().iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let mut worst = 0.0f64;
        for i in 0..t {
            for j in i + 1..t {
                worst = worst.max((m.get(i, j) - m.get(j, i)).abs());
            }
        }
        if worst > 1e-10 * scale {
            return Err(Error::Asymmetric(worst));
        }
    }
    let delta = Matrix::from_fn(t, t, |i, j| sigma_hat.get(i, j) - sigma.get(i, j));
    let r = autocorr_of_gram(&delta, n);
    let fro = libm::sqrt(delta.frobenius_norm_sqr());
    let nf = n as f64;
    Ok(Lemma1Bounds {
        lhs_l1: r.iter().map(|v| v.abs()).sum(),
        rhs_l1: libm::sqrt(1.0 + libm::log(t as f64)) / nf * fro,
        lhs_linf: r.iter().fold(0.0, |a, v| a.max(v.abs())),
        rhs_linf: fro / nf,
    })
}

/// How a method stores its compressed data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StorageMethod {
    /// `T × m` sketch per block plus the operator descriptor.
    Sketch { t: usize, n: usize, m: usize, blocks: usize },
    /// `|I|` full rows plus their time indices.
    TimeSubsample { t: usize, n: usize, samples: usize },
    /// `|I|` full columns plus their particle indices.
    Particle { t: usize, n: usize, samples: usize },
    /// Sparse matrix in compressed sparse column form.
    Entrywise { t: usize, n: usize, nnz: usize },
    /// On-the-fly correlator: resident buffer of `rows` full rows.
    Correlator { t: usize, n: usize, rows: usize },
    Full { t: usize, n: usize },
}

impl StorageMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            StorageMethod::Sketch { .. } => "sketch",
            StorageMethod::TimeSubsample { .. } => "time",
            StorageMethod::Particle { .. } => "particle",
            StorageMethod::Entrywise { .. } => "entrywise",
            StorageMethod::Correlator { .. } => "correlator",
            StorageMethod::Full { .. } => "full",
        }
    }

    fn dims(&self) -> (usize, usize) {
        match *self {
            StorageMethod::Sketch { t, n, .. }
            | StorageMethod::TimeSubsample { t, n, .. }
            | StorageMethod::Particle { t, n, .. }
            | StorageMethod::Entrywise { t, n, .. }
            | StorageMethod::Correlator { t, n, .. }
            | StorageMethod::Full { t, n } => (t, n),
        }
    }
}

/// Value slots recorded per sketched block: kind/transform, `m`, `N`, seed.
pub const SKETCH_METADATA_SLOTS: usize = 4;

/// Bytes of header stored with each sketched block on disk.
pub const SKETCH_HEADER_BYTES: usize = 56;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageReport {
    pub method: StorageMethod,
    pub payload_values: usize,
    pub metadata_values: usize,
    /// `(payload + metadata) / (T N)`.
    pub gamma_eff: f64,
}

impl StorageReport {
    /// Byte counts `(payload, metadata)` with 8-byte values and indices.
    pub fn bytes(&self) -> (usize, usize) {
        let meta = match self.method {
            StorageMethod::Sketch { blocks, .. } => blocks * SKETCH_HEADER_BYTES,
            _ => 8 * self.metadata_values,
        };
        (8 * self.payload_values, meta)
    }

    /// Effective ratio in bytes relative to `8 T N`.
    pub fn gamma_eff_bytes(&self) -> f64 {
        let (t, n) = self.method.dims();
        let (p, m) = self.bytes();
        (p + m) as f64 / (8.0 * t as f64 * n as f64)
    }
}

pub fn storage_report(method: StorageMethod) -> Result<StorageReport> {
    let (t, n) = method.dims();
    if t < 1 || n < 1 {
        return Err(invalid("dims", "T and N must be positive"));
    }
    let (payload, meta) = match method {
        StorageMethod::Sketch { t, m, blocks, .. } => {
            if blocks < 1 || t % blocks != 0 {
                return Err(invalid("blocks", "T must be a positive multiple of the block count"));
            }
            (t * m, blocks * SKETCH_METADATA_SLOTS)
        }
        StorageMethod::TimeSubsample { n, samples, t } => {
            if samples > t {
                return Err(invalid("samples", "more sampled times than T"));
            }
            (samples * n, samples)
        }
        StorageMethod::Particle { t, samples, n } => {
            if samples > n {
                return Err(invalid("samples", "more sampled particles than N"));
            }
            (samples * t, samples)
        }
        StorageMethod::Entrywise { nnz, n, t } => {
            if nnz > t * n {
                return Err(invalid("nnz", "more entries than T N"));
            }
            (nnz, nnz + n + 1)
        }
        StorageMethod::Correlator { rows, n, .. } => (rows * n, 0),
        StorageMethod::Full { t, n } => (t * n, 0),
    };
    Ok(StorageReport {
        method,
        payload_values: payload,
        metadata_values: meta,
        gamma_eff: (payload + meta) as f64 / (t as f64 * n as f64),
    })
}
