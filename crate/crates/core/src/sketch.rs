//! Random sketching operators `Ω ∈ R^{m×N}`.
//!
//! Three distributions are provided, all unbiased (`E ΩᵀΩ = I`):
//!
//! * **Gaussian**: i.i.d. entries `N(0, 1/m)`.
//! * **Haar**: Gaussian rows orthonormalized by Gram–Schmidt and scaled by
//!   `sqrt(N/m)`. With `m = N` the operator is orthogonal.
//! * **FJLT**: `sqrt(Ñ/m) · Pᵀ H D`, with Rademacher signs `D`, an orthogonal
//!   fast transform `H` (Walsh–Hadamard or DCT-II) and `m` rows of the
//!   identity sampled uniformly with replacement (`P`).
//!
//! The Walsh–Hadamard transform needs a power-of-two length, so inputs are
//! zero-padded to `Ñ = 2^⌈log₂N⌉`. Padding is an isometry `R^N → R^Ñ`; the
//! FJLT is defined on `R^Ñ`, where `HᵀH = I`, and its scale is therefore
//! `sqrt(Ñ/m)`. That keeps the operator unbiased on the original coordinates
//! and it inherits the JL guarantee unchanged. With the DCT, `Ñ = N`.
//!
//! Operators are immutable once drawn. They are never serialized: the
//! 25-byte [`SketchSpec`] reconstructs the payload bit-for-bit.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_len, invalid, Result};
use crate::fft::{fwht_normalized, next_pow2, Dct2};
use crate::matrix::{dot, Matrix};
use crate::rng::{rng_for, streams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SketchKind {
    Gaussian,
    Haar,
    Fjlt,
}

impl SketchKind {
    pub const ALL: [SketchKind; 3] = [SketchKind::Gaussian, SketchKind::Haar, SketchKind::Fjlt];

    pub fn code(self) -> u8 {
        match self {
            SketchKind::Gaussian => 0,
            SketchKind::Haar => 1,
            SketchKind::Fjlt => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(SketchKind::Gaussian),
            1 => Some(SketchKind::Haar),
            2 => Some(SketchKind::Fjlt),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SketchKind::Gaussian => "gaussian",
            SketchKind::Haar => "haar",
            SketchKind::Fjlt => "fjlt",
        }
    }
}

/// The orthogonal transform inside an FJLT. Ignored by the dense kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Transform {
    #[default]
    WalshHadamard,
    Dct,
}

impl Transform {
    pub fn code(self) -> u8 {
        match self {
            Transform::WalshHadamard => 0,
            Transform::Dct => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Transform::WalshHadamard),
            1 => Some(Transform::Dct),
            _ => None,
        }
    }
}

/// Everything needed to reconstruct an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SketchSpec {
    pub kind: SketchKind,
    pub transform: Transform,
    /// Compressed dimension.
    pub m: usize,
    /// Ambient dimension.
    pub n: usize,
    pub seed: u64,
}

impl SketchSpec {
    pub const DESCRIPTOR_BYTES: usize = 25;

    pub fn new(kind: SketchKind, m: usize, n: usize, seed: u64) -> Self {
        Self {
            kind,
            transform: Transform::default(),
            m,
            n,
            seed,
        }
    }

    pub fn with_transform(mut self, transform: Transform) -> Self {
        self.transform = transform;
        self
    }

    /// Packed little-endian descriptor: `kind | transform << 4`, then `m`,
    /// `N` and `seed` as `u64`.
    pub fn to_descriptor(&self) -> [u8; Self::DESCRIPTOR_BYTES] {
        let mut out = [0u8; Self::DESCRIPTOR_BYTES];
        out[0] = self.kind.code() | (self.transform.code() << 4);
        out[1..9].copy_from_slice(&(self.m as u64).to_le_bytes());
        out[9..17].copy_from_slice(&(self.n as u64).to_le_bytes());
        out[17..25].copy_from_slice(&self.seed.to_le_bytes());
        out
    }

    pub fn from_descriptor(bytes: &[u8; Self::DESCRIPTOR_BYTES]) -> Option<Self> {
        let kind = SketchKind::from_code(bytes[0] & 0x0f)?;
        let transform = Transform::from_code(bytes[0] >> 4)?;
        let word = |r: core::ops::Range<usize>| u64::from_le_bytes(bytes[r].try_into().unwrap());
        Some(Self {
            kind,
            transform,
            m: usize::try_from(word(1..9)).ok()?,
            n: usize::try_from(word(9..17)).ok()?,
            seed: word(17..25),
        })
    }

    /// Length of the transformed vector (`Ñ`) for an FJLT, `N` otherwise.
    pub fn padded_dim(&self) -> usize {
        match (self.kind, self.transform) {
            (SketchKind::Fjlt, Transform::WalshHadamard) => next_pow2(self.n),
            _ => self.n,
        }
    }
}

#[derive(Debug, Clone)]
enum Payload {
    Dense(Matrix),
    Fast {
        signs: Vec<f64>,
        rows: Vec<usize>,
        scale: f64,
        dct: Option<Dct2>,
    },
}

#[derive(Debug, Clone)]
pub struct SketchOperator {
    spec: SketchSpec,
    payload: Payload,
}

/// Draws an operator with the default FJLT transform.
pub fn draw(kind: SketchKind, m: usize, n: usize, seed: u64) -> Result<SketchOperator> {
    SketchOperator::draw(SketchSpec::new(kind, m, n, seed))
}

impl SketchOperator {
    pub fn draw(spec: SketchSpec) -> Result<Self> {
        if spec.m < 1 {
            return Err(invalid("m", "compressed dimension must be at least 1"));
        }
        if spec.n < 1 {
            return Err(invalid("N", "ambient dimension must be at least 1"));
        }
        let payload = match spec.kind {
            SketchKind::Gaussian => Payload::Dense(gaussian_rows(spec.m, spec.n, spec.seed)),
            SketchKind::Haar => {
                if spec.m > spec.n {
                    return Err(invalid("m", "Haar sketch requires m <= N"));
                }
                let mut rows = gaussian_rows(spec.m, spec.n, spec.seed);
                orthonormalize_rows(&mut rows);
                let scale = libm::sqrt(spec.n as f64 / spec.m as f64);
                rows.as_mut_slice().iter_mut().for_each(|v| *v *= scale);
                Payload::Dense(rows)
            }
            SketchKind::Fjlt => {
                let padded = spec.padded_dim();
                let mut sign_rng = rng_for(spec.seed, streams::FJLT_SIGNS);
                let signs = (0..padded)
                    .map(|_| if sign_rng.random::<bool>() { 1.0 } else { -1.0 })
                    .collect();
                let mut row_rng = rng_for(spec.seed, streams::FJLT_ROWS);
                let rows = (0..spec.m).map(|_| row_rng.random_range(0..padded)).collect();
                let dct = match spec.transform {
                    Transform::WalshHadamard => None,
                    Transform::Dct => Some(Dct2::new(padded)),
                };
                Payload::Fast {
                    signs,
                    rows,
                    scale: libm::sqrt(padded as f64 / spec.m as f64),
                    dct,
                }
            }
        };
        Ok(Self { spec, payload })
    }

    pub fn spec(&self) -> &SketchSpec {
        &self.spec
    }

    pub fn m(&self) -> usize {
        self.spec.m
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    /// Number of `f64` cells the payload holds.
    pub fn state_cells(&self) -> usize {
        match &self.payload {
            Payload::Dense(m) => m.cells(),
            Payload::Fast { signs, rows, .. } => signs.len() + rows.len(),
        }
    }

    /// The dense `m × N` matrix for Gaussian/Haar operators.
    pub fn dense(&self) -> Option<&Matrix> {
        match &self.payload {
            Payload::Dense(m) => Some(m),
            Payload::Fast { .. } => None,
        }
    }

    /// FJLT sign vector `d` (length `Ñ`).
    pub fn fjlt_signs(&self) -> Option<&[f64]> {
        match &self.payload {
            Payload::Fast { signs, .. } => Some(signs),
            Payload::Dense(_) => None,
        }
    }

    /// FJLT sampled coordinates (0-based, length `m`, with repeats).
    pub fn fjlt_rows(&self) -> Option<&[usize]> {
        match &self.payload {
            Payload::Fast { rows, .. } => Some(rows),
            Payload::Dense(_) => None,
        }
    }

    /// `out = Ω x`.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.spec.n, x.len())?;
        check_len(self.spec.m, out.len())?;
        match &self.payload {
            Payload::Dense(rows) => {
                for (j, o) in out.iter_mut().enumerate() {
                    *o = dot(rows.row(j), x);
                }
            }
            Payload::Fast {
                signs,
                rows,
                scale,
                dct,
            } => {
                let mut buf = vec![0.0; signs.len()];
                for ((b, &v), &d) in buf.iter_mut().zip(x).zip(signs) {
                    *b = v * d;
                }
                match dct {
                    Some(plan) => plan.apply(&mut buf),
                    None => fwht_normalized(&mut buf),
                }
                for (o, &p) in out.iter_mut().zip(rows) {
                    *o = scale * buf[p];
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.spec.m];
        self.apply_into(x, &mut out)?;
        Ok(out)
    }

    /// Sketches `k` consecutive rows at once: `xs` is `k × N` row-major and
    /// `out` is `k × m`. Dense operators stream each row of `Ω` once per
    /// batch instead of once per input row.
    pub fn apply_rows(&self, xs: &[f64], out: &mut [f64]) -> Result<()> {
        let (n, m) = (self.spec.n, self.spec.m);
        if xs.len() % n != 0 {
            return Err(crate::Error::DimensionMismatch {
                expected: n * (xs.len() / n + 1),
                found: xs.len(),
            });
        }
        let k = xs.len() / n;
        check_len(k * m, out.len())?;
        match &self.payload {
            Payload::Dense(rows) => {
                for j in 0..m {
                    let w = rows.row(j);
                    for i in 0..k {
                        out[i * m + j] = dot(&xs[i * n..(i + 1) * n], w);
                    }
                }
            }
            Payload::Fast { .. } => {
                for i in 0..k {
                    self.apply_into(&xs[i * n..(i + 1) * n], &mut out[i * m..(i + 1) * m])?;
                }
            }
        }
        Ok(())
    }
}

fn gaussian_rows(m: usize, n: usize, seed: u64) -> Matrix {
    let mut rng = rng_for(seed, streams::DENSE_ENTRIES);
    let scale = 1.0 / libm::sqrt(m as f64);
    let mut out = Matrix::zeros(m, n);
    for v in out.as_mut_slice() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v = z * scale;
    }
    out
}

/// Modified Gram–Schmidt over the rows, run twice so the result is
/// orthonormal to working precision.
fn orthonormalize_rows(a: &mut Matrix) {
    let (m, n) = (a.rows(), a.cols());
    let data = a.as_mut_slice();
    for i in 0..m {
        let (done, rest) = data.split_at_mut(i * n);
        let row = &mut rest[..n];
        for _pass in 0..2 {
            for j in 0..i {
                let q = &done[j * n..(j + 1) * n];
                let c = dot(q, row);
                for (r, &qv) in row.iter_mut().zip(q) {
                    *r -= c * qv;
                }
            }
        }
        let norm = libm::sqrt(dot(row, row));
        for r in row.iter_mut() {
            *r /= norm;
        }
    }
}

/// Constant `C` in `m = ⌈C ε⁻² ln(d/δ)⌉` for Gaussian and Haar sketches.
///
/// Calibrated so that `ε = 1/3, δ = 0.1, d = 1000` gives `m = 536`, the first
/// integer above the 535 quoted for that configuration.
pub const GAUSSIAN_JLT_CONSTANT: f64 = 6.46;

/// Smallest compressed dimension for which the sketch is taken to be a
/// JLT(ε, δ, d).
///
/// * Gaussian / Haar: `⌈C ε⁻² ln(d/δ)⌉`.
/// * FJLT: `⌈C ε⁻² ln(d/δ') · L⁴⌉` with `L = max(1, ⌈log₂ N⌉)` and
///   `δ' = δ − N^{-(ln N)³}` clamped to `[δ·10⁻³, δ]`.
///
/// `ambient_dim` only enters the FJLT formula.
pub fn required_dim(kind: SketchKind, eps: f64, delta: f64, d: usize, ambient_dim: usize) -> Result<usize> {
    check_jlt_params(eps, delta, d)?;
    let base = GAUSSIAN_JLT_CONSTANT / (eps * eps);
    let m = match kind {
        SketchKind::Gaussian | SketchKind::Haar => base * libm::log(d as f64 / delta),
        SketchKind::Fjlt => {
            if ambient_dim < 1 {
                return Err(invalid("N", "ambient dimension must be at least 1"));
            }
            let delta = fjlt_corrected_delta(delta, ambient_dim);
            base * libm::log(d as f64 / delta) * fjlt_polylog(ambient_dim)
        }
    };
    Ok(libm::ceil(m) as usize)
}

/// `δ − N^{-(ln N)³}`, clamped into `[δ/1000, δ]`.
pub fn fjlt_corrected_delta(delta: f64, n: usize) -> f64 {
    let ln_n = libm::log(n as f64);
    let correction = libm::exp(-ln_n * ln_n * ln_n * ln_n);
    (delta - correction).clamp(delta * 1e-3, delta)
}

fn fjlt_polylog(n: usize) -> f64 {
    let l = libm::ceil(libm::log2(n as f64)).max(1.0);
    l * l * l * l
}

fn check_jlt_params(eps: f64, delta: f64, d: usize) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("eps", "must lie in (0, 1)"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", "must lie in (0, 1)"));
    }
    if d < 2 {
        return Err(invalid("d", "need at least two points"));
    }
    Ok(())
}

/// Order-of-magnitude compression ratio `γ = m/N` needed for an absolute
/// ℓ₁ autocorrelation error `ε` with bounded data, using the same constant
/// as [`required_dim`]: `C T² ln T ln(2T/δ) / (ε² N)` (times the FJLT
/// polylog factor). Informational only; nothing downstream relies on it.
pub fn compression_ratio_estimate(kind: SketchKind, eps: f64, delta: f64, t: usize, n: usize) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(invalid("eps", "must be positive"));
    }
    check_jlt_params(0.5, delta, 2 * t.max(1))?;
    if n < 1 {
        return Err(invalid("N", "ambient dimension must be at least 1"));
    }
    let tf = t as f64;
    let delta = match kind {
        SketchKind::Fjlt => fjlt_corrected_delta(delta, n),
        _ => delta,
    };
    let mut g = GAUSSIAN_JLT_CONSTANT * tf * tf * libm::log(tf.max(1.0)) * libm::log(2.0 * tf / delta) / (eps * eps * n as f64);
    if kind == SketchKind::Fjlt {
        g *= fjlt_polylog(n);
    }
    Ok(g)
}
