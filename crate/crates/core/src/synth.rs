//! Synthetic benchmark data.
//!
//! Row `s` of a generated matrix is the signal at time `t = s + 1`, so times
//! run over `1..=T`. Every value is a pure function of `(config, t, i)`:
//! per-particle frequencies and phases are drawn once from the seed, and the
//! noise of row `t` comes from its own random stream.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{check_len, invalid, Error, Result};
use crate::rng::{rng_for, streams};
use crate::spectral::TimeSeriesSource;

/// Particles oscillating at one of two frequencies with random phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoFrequencyConfig {
    pub n: usize,
    pub t: usize,
    /// Hz.
    pub f_fast: f64,
    /// Hz.
    pub f_slow: f64,
    /// Seconds per row.
    pub dt: f64,
    pub seed: u64,
}

impl Default for TwoFrequencyConfig {
    /// `N = 10⁴`, `T = 2000`, 5 Hz and 50 Hz sampled at 1 kHz. The
    /// frequencies are illustrative choices.
    fn default() -> Self {
        Self {
            n: 10_000,
            t: 2000,
            f_fast: 50.0,
            f_slow: 5.0,
            dt: 1e-3,
            seed: 0,
        }
    }
}

impl TwoFrequencyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid("n", "need at least two particles"));
        }
        if self.t < 1 {
            return Err(invalid("t", "need at least one time step"));
        }
        if !(self.dt > 0.0) {
            return Err(invalid("dt", "time step must be positive"));
        }
        let nyquist = 0.5 / self.dt;
        for (name, f) in [("f_fast", self.f_fast), ("f_slow", self.f_slow)] {
            if !(f >= 0.0 && f < nyquist) {
                return Err(invalid(name, "frequency must lie in [0, 1/(2 dt))"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TwoFrequencySource {
    cfg: TwoFrequencyConfig,
    /// Angular frequency per row, `2π f_i dt`.
    step: Vec<f64>,
    phase: Vec<f64>,
    pos: usize,
}

pub fn gen_two_frequency(cfg: &TwoFrequencyConfig) -> Result<TwoFrequencySource> {
    cfg.validate()?;
    let mut pick = rng_for(cfg.seed, streams::FREQUENCIES);
    let step = (0..cfg.n)
        .map(|_| {
            let f = if pick.random::<bool>() { cfg.f_fast } else { cfg.f_slow };
            2.0 * PI * f * cfg.dt
        })
        .collect();
    let mut ph = rng_for(cfg.seed, streams::PHASES);
    let phase = (0..cfg.n).map(|_| ph.random_range(0.0..2.0 * PI)).collect();
    Ok(TwoFrequencySource {
        cfg: *cfg,
        step,
        phase,
        pos: 0,
    })
}

impl TwoFrequencySource {
    pub fn config(&self) -> &TwoFrequencyConfig {
        &self.cfg
    }

    /// Number of particles assigned the fast frequency.
    pub fn n_fast(&self) -> usize {
        let fast = 2.0 * PI * self.cfg.f_fast * self.cfg.dt;
        self.step.iter().filter(|&&w| w == fast).count()
    }

    /// Row at time `t` (1-based).
    pub fn fill_row(&self, t: usize, out: &mut [f64]) -> Result<()> {
        check_len(self.cfg.n, out.len())?;
        let tf = t as f64;
        for ((o, &w), &p) in out.iter_mut().zip(&self.step).zip(&self.phase) {
            *o = libm::sin(w * tf + p);
        }
        Ok(())
    }

    /// Phase-averaged autocorrelation of the realized particles,
    /// `(1/N) Σ_i ½ cos(2π f_i τ dt)`, for lags `0..lags`.
    pub fn analytic_acf(&self, lags: usize) -> Vec<f64> {
        let n = self.cfg.n as f64;
        let fast = self.n_fast() as f64 / n;
        (0..lags)
            .map(|tau| {
                let tf = tau as f64;
                let a = libm::cos(2.0 * PI * self.cfg.f_fast * tf * self.cfg.dt);
                let b = libm::cos(2.0 * PI * self.cfg.f_slow * tf * self.cfg.dt);
                0.5 * (fast * a + (1.0 - fast) * b)
            })
            .collect()
    }
}

/// Ensemble autocorrelation with equal frequency probabilities: the fast
/// cosine modulated by the slow one,
/// `¼ (cos a + cos b) = ½ cos((a+b)/2) cos((a−b)/2)`.
pub fn two_frequency_expected_acf(cfg: &TwoFrequencyConfig, lags: usize) -> Vec<f64> {
    (0..lags)
        .map(|tau| {
            let s = PI * (cfg.f_fast + cfg.f_slow) * tau as f64 * cfg.dt;
            let d = PI * (cfg.f_fast - cfg.f_slow) * tau as f64 * cfg.dt;
            0.5 * libm::cos(s) * libm::cos(d)
        })
        .collect()
}

impl TimeSeriesSource for TwoFrequencySource {
    fn n_cols(&self) -> usize {
        self.cfg.n
    }
    fn n_rows(&self) -> usize {
        self.cfg.t
    }
    fn dt(&self) -> f64 {
        self.cfg.dt
    }
    fn next_row(&mut self, out: &mut [f64]) -> Result<bool> {
        if self.pos == self.cfg.t {
            return Ok(false);
        }
        self.fill_row(self.pos + 1, out)?;
        self.pos += 1;
        Ok(true)
    }
    fn rewind(&mut self) -> Result<()> {
        self.pos = 0;
        Ok(())
    }
}

/// Common particles share `ω`; the last `n_special` carry an extra strong
/// `ω′` component. Two pulses hit every particle.
///
/// ```text
/// x_i(t) = sin(ω t + φ_i) + p(t − t₁) + p(t − t₂) + ε_i(t)
///        [+ A sin(ω′ t + φ′_j) for special particles]
/// p(s)   = a_p sin(π s / δ) · 𝟙(|s| ≤ δ/2)
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdversarialConfig {
    pub n: usize,
    pub n_special: usize,
    pub t: usize,
    /// rad per unit time.
    pub omega: f64,
    /// rad per unit time.
    pub omega_prime: f64,
    pub special_amp: f64,
    pub pulse_amp: f64,
    /// `δ`; defaults to `0.6 · 2π/ω`.
    pub pulse_width: Option<f64>,
    /// Pulse centers; default `T/3` and `2T/3`.
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for AdversarialConfig {
    /// `N = 10⁴` with 3 special particles of amplitude 80 and pulses of
    /// amplitude 10 are fixed by the experiment; `ω = 2π/20`,
    /// `ω′ = 2π/5`, noise `σ = 0.3` and the pulse centers are our choices.
    fn default() -> Self {
        Self {
            n: 10_000,
            n_special: 3,
            t: 2048,
            omega: 2.0 * PI / 20.0,
            omega_prime: 2.0 * PI / 5.0,
            special_amp: 80.0,
            pulse_amp: 10.0,
            pulse_width: None,
            t1: None,
            t2: None,
            noise_sigma: 0.3,
            seed: 0,
        }
    }
}

impl AdversarialConfig {
    pub fn width(&self) -> f64 {
        self.pulse_width.unwrap_or(0.6 * 2.0 * PI / self.omega)
    }

    pub fn centers(&self) -> (f64, f64) {
        let t = self.t as f64;
        (self.t1.unwrap_or(libm::floor(t / 3.0)), self.t2.unwrap_or(libm::floor(2.0 * t / 3.0)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || self.t < 1 {
            return Err(invalid("n", "need a nonempty matrix"));
        }
        if self.n_special > self.n {
            return Err(invalid("n_special", "more special particles than particles"));
        }
        for (name, w) in [("omega", self.omega), ("omega_prime", self.omega_prime)] {
            if !(w >= 0.0 && w < PI) {
                return Err(invalid(name, "angular frequency must lie in [0, π)"));
            }
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(invalid("noise_sigma", "must be nonnegative"));
        }
        let d = self.width();
        if !(d > 0.0) {
            return Err(invalid("pulse_width", "must be positive"));
        }
        let (t1, t2) = self.centers();
        let (a, b) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        if a - d / 2.0 < 1.0 || b + d / 2.0 > self.t as f64 {
            return Err(invalid("t1", "pulse support must lie inside [1, T]"));
        }
        if b - a <= d {
            return Err(Error::OverlappingPulses(a - d / 2.0, a + d / 2.0, b - d / 2.0, b + d / 2.0));
        }
        Ok(())
    }

    /// The pulse shape `p(s)`, support inclusive at `±δ/2`.
    pub fn pulse(&self, s: f64) -> f64 {
        let d = self.width();
        if libm::fabs(s) <= d / 2.0 {
            self.pulse_amp * libm::sin(PI * s / d)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdversarialSource {
    cfg: AdversarialConfig,
    phase: Vec<f64>,
    special_phase: Vec<f64>,
    noise: Option<Normal<f64>>,
    pos: usize,
}

pub fn gen_adversarial(cfg: &AdversarialConfig) -> Result<AdversarialSource> {
    cfg.validate()?;
    let mut ph = rng_for(cfg.seed, streams::PHASES);
    let phase = (0..cfg.n).map(|_| ph.random_range(0.0..2.0 * PI)).collect();
    let special_phase = (0..cfg.n_special).map(|_| ph.random_range(0.0..2.0 * PI)).collect();
    let noise = (cfg.noise_sigma > 0.0).then(|| Normal::new(0.0, cfg.noise_sigma).expect("sigma checked"));
    Ok(AdversarialSource {
        cfg: *cfg,
        phase,
        special_phase,
        noise,
        pos: 0,
    })
}

impl AdversarialSource {
    pub fn config(&self) -> &AdversarialConfig {
        &self.cfg
    }

    /// Row at time `t` (1-based).
    pub fn fill_row(&self, t: usize, out: &mut [f64]) -> Result<()> {
        let cfg = &self.cfg;
        check_len(cfg.n, out.len())?;
        let tf = t as f64;
        let (t1, t2) = cfg.centers();
        let p = cfg.pulse(tf - t1) + cfg.pulse(tf - t2);
        for (o, &phi) in out.iter_mut().zip(&self.phase) {
            *o = libm::sin(cfg.omega * tf + phi) + p;
        }
        let first = cfg.n - cfg.n_special;
        for (o, &phi) in out[first..].iter_mut().zip(&self.special_phase) {
            *o += cfg.special_amp * libm::sin(cfg.omega_prime * tf + phi);
        }
        if let Some(dist) = &self.noise {
            let mut rng = rng_for(cfg.seed, streams::NOISE_ROWS + t as u64);
            for o in out.iter_mut() {
                *o += dist.sample(&mut rng);
            }
        }
        Ok(())
    }

    /// Phase of common particle `i`.
    pub fn phase(&self, i: usize) -> f64 {
        self.phase[i]
    }
}

impl TimeSeriesSource for AdversarialSource {
    fn n_cols(&self) -> usize {
        self.cfg.n
    }
    fn n_rows(&self) -> usize {
        self.cfg.t
    }
    fn next_row(&mut self, out: &mut [f64]) -> Result<bool> {
        if self.pos == self.cfg.t {
            return Ok(false);
        }
        self.fill_row(self.pos + 1, out)?;
        self.pos += 1;
        Ok(true)
    }
    fn rewind(&mut self) -> Result<()> {
        self.pos = 0;
        Ok(())
    }
}

/// Materializes any source (tests and small data only).
pub fn collect_matrix<S: TimeSeriesSource>(src: &mut S) -> Result<crate::Matrix> {
    let (t, n) = (src.n_rows(), src.n_cols());
    let mut data = vec![0.0; t * n];
    for row in data.chunks_exact_mut(n.max(1)) {
        if !src.next_row(row)? {
            return Err(Error::Source("stream ended early".into()));
        }
    }
    crate::Matrix::from_vec(t, n, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_super_nyquist() {
        let cfg = TwoFrequencyConfig {
            f_fast: 600.0,
            ..Default::default()
        };
        assert!(gen_two_frequency(&cfg).is_err());
    }

    #[test]
    fn same_seed_same_rows() {
        let cfg = TwoFrequencyConfig {
            n: 50,
            t: 4,
            seed: 11,
            ..Default::default()
        };
        let (mut a, mut b) = (gen_two_frequency(&cfg).unwrap(), gen_two_frequency(&cfg).unwrap());
        let (mut ra, mut rb) = (vec![0.0; 50], vec![0.0; 50]);
        a.next_row(&mut ra).unwrap();
        b.next_row(&mut rb).unwrap();
        assert!(ra.iter().zip(&rb).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn overlapping_pulses_rejected() {
        let cfg = AdversarialConfig {
            t: 200,
            t1: Some(100.0),
            t2: Some(105.0),
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::OverlappingPulses(..))));
    }

    #[test]
    fn pulse_shape() {
        let cfg = AdversarialConfig::default();
        assert_eq!(cfg.width(), 12.0 * (0.6 * 2.0 * PI / (2.0 * PI / 20.0)) / 12.0);
        assert_eq!(cfg.pulse(0.0), 0.0);
        assert!((cfg.pulse(3.0) - 10.0 * libm::sin(PI / 4.0)).abs() < 1e-12);
        assert_eq!(cfg.pulse(6.5), 0.0);
    }

    #[test]
    fn noiseless_common_particle_is_a_sinusoid() {
        let cfg = AdversarialConfig {
            n: 8,
            t: 300,
            noise_sigma: 0.0,
            ..Default::default()
        };
        let src = gen_adversarial(&cfg).unwrap();
        let mut row = vec![0.0; 8];
        src.fill_row(20, &mut row).unwrap();
        let want = libm::sin(cfg.omega * 20.0 + src.phase(0));
        assert!((row[0] - want).abs() < 1e-12);
    }
}
