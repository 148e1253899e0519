//! Fast transforms: complex DFT of any length (radix-2, with Bluestein's
//! chirp-z for other lengths), the orthonormal Walsh–Hadamard transform, the
//! orthonormal DCT-II, and an FFT-backed accumulator of lag sums.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

pub use num_complex::Complex64;

/// Smallest power of two `>= n` (and `>= 1`).
pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

#[derive(Debug, Clone)]
struct Radix2 {
    n: usize,
    twiddles: Vec<Complex64>,
    rev: Vec<u32>,
}

impl Radix2 {
    fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let twiddles = (0..n / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        let bits = n.trailing_zeros();
        let rev = (0..n as u32)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) })
            .collect();
        Self { n, twiddles, rev }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            let j = self.rev[i] as usize;
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let step = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let w = self.twiddles[k * step];
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

#[derive(Debug, Clone)]
enum Algorithm {
    Radix2(Radix2),
    Bluestein {
        chirp: Vec<Complex64>,
        kernel: Vec<Complex64>,
        inner: Radix2,
    },
}

/// A planned forward/inverse DFT of fixed length.
///
/// The forward transform is `X_k = Σ_j x_j e^{-2πi jk/n}`; the inverse is
/// unnormalized (callers divide by `n`).
#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    algorithm: Algorithm,
}

impl Fft {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "transform length must be positive");
        if n.is_power_of_two() {
            return Self {
                n,
                algorithm: Algorithm::Radix2(Radix2::new(n)),
            };
        }
        let m = next_pow2(2 * n - 1);
        let inner = Radix2::new(m);
        // k^2 mod 2n keeps the chirp argument small and exact.
        let chirp: Vec<Complex64> = (0..n)
            .map(|k| {
                let k2 = ((k as u128 * k as u128) % (2 * n as u128)) as f64;
                let a = -PI * k2 / n as f64;
                Complex64::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        kernel[0] = chirp[0].conj();
        for k in 1..n {
            kernel[k] = chirp[k].conj();
            kernel[m - k] = chirp[k].conj();
        }
        inner.forward(&mut kernel);
        Self {
            n,
            algorithm: Algorithm::Bluestein {
                chirp,
                kernel,
                inner,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.n);
        match &self.algorithm {
            Algorithm::Radix2(r) => r.forward(buf),
            Algorithm::Bluestein {
                chirp,
                kernel,
                inner,
            } => {
                let m = inner.n;
                let mut work = vec![Complex64::new(0.0, 0.0); m];
                for k in 0..self.n {
                    work[k] = buf[k] * chirp[k];
                }
                inner.forward(&mut work);
                for (w, h) in work.iter_mut().zip(kernel) {
                    *w = (*w * h).conj();
                }
                // Inverse via conjugation: ifft(y) = conj(fft(conj(y))) / m.
                inner.forward(&mut work);
                let scale = 1.0 / m as f64;
                for k in 0..self.n {
                    buf[k] = work[k].conj() * scale * chirp[k];
                }
            }
        }
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        for z in buf.iter_mut() {
            *z = z.conj();
        }
        self.forward(buf);
        for z in buf.iter_mut() {
            *z = z.conj();
        }
    }
}

/// In-place Walsh–Hadamard transform scaled by `1/sqrt(n)`, so that it is
/// orthogonal (and its own inverse). `x.len()` must be a power of two.
pub fn fwht_normalized(x: &mut [f64]) {
    let n = x.len();
    assert!(n.is_power_of_two(), "Walsh–Hadamard length must be a power of two");
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for j in start..start + h {
                let (a, b) = (x[j], x[j + h]);
                x[j] = a + b;
                x[j + h] = a - b;
            }
        }
        h <<= 1;
    }
    let scale = 1.0 / libm::sqrt(n as f64);
    for v in x.iter_mut() {
        *v *= scale;
    }
}

/// Orthonormal DCT-II of a fixed length, computed through one complex FFT of
/// the same length (Makhoul's even/odd reordering).
#[derive(Debug, Clone)]
pub struct Dct2 {
    fft: Fft,
    rotation: Vec<Complex64>,
}

impl Dct2 {
    pub fn new(n: usize) -> Self {
        let rotation = (0..n)
            .map(|k| {
                let a = -PI * k as f64 / (2 * n) as f64;
                let s = if k == 0 {
                    libm::sqrt(1.0 / n as f64)
                } else {
                    libm::sqrt(2.0 / n as f64)
                };
                Complex64::new(libm::cos(a) * s, libm::sin(a) * s)
            })
            .collect();
        Self {
            fft: Fft::new(n),
            rotation,
        }
    }

    pub fn len(&self) -> usize {
        self.fft.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fft.is_empty()
    }

    /// `X_k = s_k Σ_j x_j cos(π (2j+1) k / 2n)`, in place.
    pub fn apply(&self, x: &mut [f64]) {
        let n = self.len();
        assert_eq!(x.len(), n);
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n.div_ceil(2) {
            v[j].re = x[2 * j];
        }
        for j in 0..n / 2 {
            v[n - 1 - j].re = x[2 * j + 1];
        }
        self.fft.forward(&mut v);
        for k in 0..n {
            x[k] = (v[k] * self.rotation[k]).re;
        }
    }
}

/// Accumulates `Σ_i Σ_t v_i[t] v_i[t+τ]` over many length-`T` columns.
///
/// Autocorrelation is linear in the power spectrum, so the per-column power
/// spectra are summed and a single inverse FFT is taken at the end. Columns
/// are packed two at a time into the real and imaginary parts of one complex
/// transform.
#[derive(Debug, Clone)]
pub struct LagAccumulator {
    t: usize,
    fft: Fft,
    power: Vec<f64>,
    work: Vec<Complex64>,
    pending: bool,
    columns: usize,
}

impl LagAccumulator {
    pub fn new(t: usize) -> Self {
        let l = next_pow2(2 * t.max(1) - 1);
        Self {
            t,
            fft: Fft::new(l),
            power: vec![0.0; l],
            work: vec![Complex64::new(0.0, 0.0); l],
            pending: false,
            columns: 0,
        }
    }

    pub fn lags(&self) -> usize {
        self.t
    }

    /// Number of columns added so far.
    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn add(&mut self, column: &[f64]) {
        assert_eq!(column.len(), self.t, "column length must equal T");
        self.columns += 1;
        if self.pending {
            for (w, &v) in self.work.iter_mut().zip(column) {
                w.im = v;
            }
            self.flush();
        } else {
            for w in self.work.iter_mut() {
                *w = Complex64::new(0.0, 0.0);
            }
            for (w, &v) in self.work.iter_mut().zip(column) {
                w.re = v;
            }
            self.pending = true;
        }
    }

    fn flush(&mut self) {
        if !self.pending {
            return;
        }
        self.fft.forward(&mut self.work);
        let l = self.work.len();
        // With z = a + ib: |A_k|^2 + |B_k|^2 = (|Z_k|^2 + |Z_{-k}|^2) / 2.
        for k in 0..l {
            let zk = self.work[k].norm_sqr();
            let zmk = self.work[(l - k) % l].norm_sqr();
            self.power[k] += 0.5 * (zk + zmk);
        }
        self.pending = false;
    }

    /// Lag sums for τ = 0..T−1.
    pub fn finish(mut self) -> Vec<f64> {
        self.flush();
        let l = self.power.len();
        let mut buf: Vec<Complex64> = self.power.iter().map(|&p| Complex64::new(p, 0.0)).collect();
        self.fft.inverse(&mut buf);
        let scale = 1.0 / l as f64;
        buf.iter().take(self.t).map(|z| z.re * scale).collect()
    }
}
