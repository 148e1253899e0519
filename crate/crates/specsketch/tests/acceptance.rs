//! The twelve acceptance criteria, one PASS/FAIL line each.
//!
//! Seeds are fixed up front; a criterion that misses its tolerance is
//! reported as a failure rather than retried. `ACCEPTANCE_ONLY=3,7` runs a
//! subset.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use specsketch::bench::{median, repeat_seed, score, InputSpec};
use specsketch::io::{
    parse_lammps_dump, read_sketched, read_table, write_dmat, write_sketched, DmatSource, FieldSpec,
};
use specsketch::methods::{run_method, Method, MethodParams};
use specsketch_core::baselines::{
    autocorr_entrywise, autocorr_particle_subsampled, autocorr_time_subsampled, gather_columns, gather_entries,
    gather_rows, sample_entries, sample_particles, sample_time, TimeScheme,
};
use specsketch_core::metrics::{lemma1_bounds, storage_report, StorageMethod};
use specsketch_core::rng::{rng_for, streams};
use specsketch_core::spectral::autocorr_fft;
use specsketch_core::synth::{collect_matrix, gen_two_frequency, AdversarialConfig, TwoFrequencyConfig};
use specsketch_core::{
    autocorr_direct, draw, psd_from_autocorr, required_dim, run_pipeline, Matrix, MatrixSource, PipelineConfig,
    PowerSpectrum, SketchKind, SketchSpec, SketchedBlock, Transform,
};

type StdRng = rand::rngs::StdRng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("oracle equivalence", ac1),
        ("lossless CLI path", ac2),
        ("Gram-error bound property suite", ac3),
        ("sketch variance", ac4),
        ("sketch-dimension l1 bound", ac5),
        ("adversarial benchmark", ac6),
        ("90% accuracy at 10% data (surrogate)", ac7),
        ("two-frequency ordering", ac8),
        ("consistency trend", ac9),
        ("unbiasedness suite", ac10),
        ("storage accounting", ac11),
        ("format round-trips and golden files", ac12),
    ];
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|v| v.trim().parse().ok()).collect());
    let mut failed = Vec::new();
    let mut ran = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        println!(
            "AC{id:<2} {} {name}: {} [{secs:.1}s]",
            if res.pass { "PASS" } else { "FAIL" },
            res.detail
        );
        if !res.pass {
            failed.push(id);
        }
    }
    println!("acceptance: {}/{ran} passed", ran - failed.len());
    if !failed.is_empty() {
        println!("acceptance: failed {failed:?}");
        std::process::exit(1);
    }
}

fn brute_acf(x: &Matrix) -> Vec<f64> {
    let (t, n) = (x.rows(), x.cols());
    (0..t)
        .map(|tau| {
            let mut s = 0.0;
            for i in 0..n {
                for u in 0..t - tau {
                    s += x.get(u, i) * x.get(u + tau, i);
                }
            }
            s / (n * (t - tau)) as f64
        })
        .collect()
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let t = rng.random_range(1..=256);
        let n = rng.random_range(1..=16);
        let x = Matrix::from_fn(t, n, |_, _| rng.random_range(-1.0..1.0));
        let fft = autocorr_fft(&x).unwrap();
        worst = worst.max(max_rel(&fft.r, &brute_acf(&x)));
        worst = worst.max(max_rel(&fft.r, &autocorr_direct(&x).unwrap().r));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-10 && secs < 5.0,
        format!("max relative deviation {worst:.2e} (tol 1e-10) over 50 instances in {secs:.2}s (limit 5s)"),
    )
}

fn cli(dir: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["specsketch".to_string()];
    argv.extend(args.iter().map(|a| {
        if a.ends_with(".dmat") || a.ends_with(".txt") || *a == "sk" {
            dir.join(a).to_string_lossy().into_owned()
        } else {
            a.to_string()
        }
    }));
    specsketch::cli::run(argv)
}

fn ac2() -> Outcome {
    let d = tempfile::tempdir().unwrap();
    let dir = d.path();
    let steps: [&[&str]; 4] = [
        &["synth", "--kind", "two-freq", "--n", "100", "--t", "256", "--seed", "7", "--out", "a.dmat"],
        &["sketch", "--method", "haar", "--m", "100", "--blocks", "1", "--in", "a.dmat", "--out-dir", "sk"],
        &["estimate", "--in-dir", "sk", "--acf-out", "acf.txt", "--psd-out", "psd.txt"],
        &["baseline", "--method", "full", "--in", "a.dmat", "--acf-out", "facf.txt", "--psd-out", "fpsd.txt"],
    ];
    for s in steps {
        let code = cli(dir, s);
        if code != 0 {
            return outcome(false, format!("`{}` exited with {code}", s.join(" ")));
        }
    }
    let x = collect_matrix(&mut DmatSource::open(&dir.join("a.dmat")).unwrap()).unwrap();
    let exact = specsketch_core::AutocorrEstimate::full(brute_acf(&x));
    let psd = psd_from_autocorr(&exact, 1e-3).unwrap();
    let acf = read_table(&dir.join("acf.txt")).unwrap();
    let est = read_table(&dir.join("psd.txt")).unwrap();
    let full = read_table(&dir.join("fpsd.txt")).unwrap();
    let e_acf = max_rel(&acf.y, &exact.r);
    let e_psd = max_rel(&est.y, &psd.s);
    let e_full = max_rel(&est.y, &full.y);
    outcome(
        e_acf <= 1e-8 && e_psd <= 1e-8 && e_full <= 1e-8 && est.x == psd.freqs,
        format!("ACF {e_acf:.1e}, PSD {e_psd:.1e} vs direct, {e_full:.1e} vs `baseline --method full` (tol 1e-8)"),
    )
}

fn random_symmetric(rng: &mut StdRng, t: usize, scale: f64) -> Matrix {
    let mut a = Matrix::zeros(t, t);
    for i in 0..t {
        for j in i..t {
            let z: f64 = StandardNormal.sample(rng);
            let v = scale * z;
            a.set(i, j, v);
            a.set(j, i, v);
        }
    }
    a
}

fn ac3() -> Outcome {
    let mut rng = StdRng::seed_from_u64(3);
    let mut violations = 0;
    let mut tightest = f64::INFINITY;
    for k in 0..500 {
        let t = rng.random_range(2..=64);
        let n = rng.random_range(1..=32);
        let sigma = if k % 2 == 0 {
            // Gram matrix of real data, as in the estimator.
            let x = Matrix::from_fn(t, n, |_, _| StandardNormal.sample(&mut rng));
            x.gram_rows()
        } else {
            random_symmetric(&mut rng, t, 1.0)
        };
        let scale = 10f64.powf(rng.random_range(-3.0..1.0));
        let delta = random_symmetric(&mut rng, t, scale);
        let mut hat = sigma.clone();
        hat.as_mut_slice().iter_mut().zip(delta.as_slice()).for_each(|(h, d)| *h += d);
        let b = lemma1_bounds(&sigma, &hat, n).unwrap();
        if !(b.lhs_l1 <= b.rhs_l1 && b.lhs_linf <= b.rhs_linf) {
            violations += 1;
        }
        tightest = tightest.min(b.rhs_l1 / b.lhs_l1).min(b.rhs_linf / b.lhs_linf);
    }
    outcome(
        violations == 0,
        format!("{violations} violations in 500 pairs, T in 2..=64; smallest rhs/lhs ratio {tightest:.3}"),
    )
}

fn sample_var(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for x in xs {
        n += 1.0;
        let d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    m2 / (n - 1.0)
}

fn ac4() -> Outcome {
    let start = Instant::now();
    let n = 64;
    let draws = 100_000u64;
    let mut rng = StdRng::seed_from_u64(4);
    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let gauss = sample_var((0..draws).map(|s| {
        let y = draw(SketchKind::Gaussian, 1, n, s).unwrap().apply(&v).unwrap()[0];
        y * y
    }));

    // Ω = √N e_iᵀ with i uniform, applied to v = e_k.
    let k = 5;
    let mut pick = rng_for(4, streams::SUBSAMPLE);
    let sub = sample_var((0..draws).map(|_| if pick.random_range(0..n) == k { n as f64 } else { 0.0 }));
    let want = (n - 1) as f64;
    let secs = start.elapsed().as_secs_f64();
    let ok_g = (gauss - 2.0).abs() <= 0.1;
    let ok_s = (sub - want).abs() <= 0.05 * want;
    outcome(
        ok_g && ok_s && secs < 30.0,
        format!(
            "Gaussian m=1: {gauss:.4} (2 ± 0.1) {}; subsample N=64: {sub:.2} (63 ± 3.15) {}; {secs:.1}s",
            if ok_g { "ok" } else { "MISS" },
            if ok_s { "ok" } else { "MISS" }
        ),
    )
}

fn ac5() -> Outcome {
    let (t, n, eps) = (32, 256, 0.5);
    let m = required_dim(SketchKind::Gaussian, eps, 0.1, 2 * t, n).unwrap();
    let mut rng = StdRng::seed_from_u64(5);
    let x = Matrix::from_fn(t, n, |_, _| StandardNormal.sample(&mut rng));
    let truth = brute_acf(&x);
    let fro2 = x.frobenius_norm_sqr();
    let bound = (1.0 + (t as f64).ln()).sqrt() * eps;
    let trials = 200;
    let mut violations = 0;
    for seed in 0..trials {
        let est = run_pipeline(MatrixSource::new(&x), &PipelineConfig::new(SketchKind::Gaussian, m, 1, seed)).unwrap();
        let l1: f64 = est.acf.r.iter().zip(&truth).map(|(a, b)| (a - b).abs()).sum();
        violations += (l1 * n as f64 / fro2 > bound) as usize;
    }
    let limit = 0.1 + 3.0 * (0.1 * 0.9 / trials as f64).sqrt();
    let frac = violations as f64 / trials as f64;
    outcome(
        frac <= limit,
        format!("m = {m}; {violations}/{trials} seeds violate ({frac:.3} vs limit {limit:.3})"),
    )
}

/// A peak at bin `k`: the largest value within ±1 bin of `k` is the largest
/// within ±10 bins and at least 10× the median magnitude.
fn peak_detected(psd: &PowerSpectrum, k: usize) -> bool {
    let s = &psd.s;
    let win = |r: usize| s[k.saturating_sub(r)..(k + r + 1).min(s.len())].iter().copied().fold(f64::MIN, f64::max);
    let med = median(&s.iter().map(|v| v.abs()).collect::<Vec<_>>());
    win(1) >= win(10) && win(1) >= 10.0 * med
}

/// Adversarial set at desk scale: `N = 10⁴`, `T = 2048`, two blocks.
fn adversarial() -> (InputSpec, usize) {
    let cfg = AdversarialConfig {
        n: 10_000,
        t: 2048,
        seed: 0,
        ..Default::default()
    };
    (InputSpec::Adversarial(cfg), 2)
}

fn ac6() -> Outcome {
    let (input, blocks) = adversarial();
    let InputSpec::Adversarial(cfg) = &input else { unreachable!() };
    let base = MethodParams {
        gamma: Some(0.01),
        seed: 0,
        blocks,
        ..MethodParams::default()
    };
    let truth = run_method(input.open().unwrap(), Method::Full, &base).unwrap().psd;
    let k = truth.bin_of(cfg.omega_prime / (2.0 * PI));
    let mut pass = peak_detected(&truth, k);
    let mut parts = vec![format!("truth peak at bin {k}: {}", peak_detected(&truth, k))];
    for kind in SketchKind::ALL {
        let (run, err) = score(&input, Method::Sketch(kind), &base, &truth).unwrap();
        let det = peak_detected(&run.psd, k);
        pass &= det && err.rel_linf < 1.0;
        parts.push(format!("{} linf {:.3} peak {}", kind.name(), err.rel_linf, if det { "yes" } else { "NO" }));
    }
    for m in [Method::Particle, Method::TimeRandom, Method::Entries] {
        let (_, err) = score(&input, m, &base, &truth).unwrap();
        pass &= err.rel_linf > 1.0;
        parts.push(format!("{m} linf {:.4}{}", err.rel_linf, if err.rel_linf > 1.0 { "" } else { " (NOT > 1)" }));
    }
    outcome(pass, format!("gamma 0.01, B = {blocks}: {}", parts.join("; ")))
}

fn ac7() -> Outcome {
    let (input, blocks) = adversarial();
    let base = MethodParams {
        gamma: Some(0.10),
        blocks,
        ..MethodParams::default()
    };
    let truth = run_method(input.open().unwrap(), Method::Full, &base).unwrap().psd;
    let errs: Vec<f64> = (0..11)
        .map(|r| {
            let p = MethodParams {
                seed: repeat_seed(0, r),
                ..base
            };
            score(&input, Method::Sketch(SketchKind::Gaussian), &p, &truth).unwrap().1.rel_l2
        })
        .collect();
    let med = median(&errs);
    if med <= 0.10 {
        return outcome(true, format!("Gaussian gamma 0.10, B = {blocks}: median rel_l2 {med:.4} over 11 seeds (<= 0.10)"));
    }
    // Fallback form: sketch ≤ ⅓ of the best baseline at equal γ.
    let best = [Method::TimeRandom, Method::PowerSeries, Method::SparseRuler, Method::Particle, Method::Entries]
        .iter()
        .map(|&m| {
            let v: Vec<f64> = (0..11)
                .map(|r| {
                    let p = MethodParams {
                        seed: repeat_seed(0, r),
                        ..base
                    };
                    score(&input, m, &p, &truth).unwrap().1.rel_l2
                })
                .collect();
            median(&v)
        })
        .fold(f64::INFINITY, f64::min);
    outcome(
        med <= best / 3.0,
        format!("median rel_l2 {med:.4} > 0.10; fallback: best baseline {best:.4}, need <= {:.4}", best / 3.0),
    )
}

fn ac8() -> Outcome {
    let input = InputSpec::TwoFrequency(TwoFrequencyConfig::default());
    let base = MethodParams {
        gamma: Some(0.02),
        ..MethodParams::default()
    };
    let truth = run_method(input.open().unwrap(), Method::Full, &base).unwrap().psd;
    let mut med = Vec::new();
    let mut min_missing = usize::MAX;
    for m in [Method::Sketch(SketchKind::Gaussian), Method::TimeRandom, Method::PowerSeries] {
        let errs: Vec<f64> = (0..11)
            .map(|r| {
                let p = MethodParams {
                    seed: repeat_seed(0, r),
                    ..base
                };
                let (run, err) = score(&input, m, &p, &truth).unwrap();
                if m == Method::TimeRandom {
                    min_missing = min_missing.min(run.missing_lags);
                }
                err.rel_l2
            })
            .collect();
        med.push(median(&errs));
    }
    let pass = min_missing >= 1 && med[0] < med[1] && med[1] < med[2];
    outcome(
        pass,
        format!(
            "N=1e4, T=2000, gamma 0.02: median rel_l2 gaussian {:.4} < time-random {:.4} < power-series {:.4}; \
             time-random invalid lags before interpolation >= {min_missing}",
            med[0], med[1], med[2]
        ),
    )
}

fn ac9() -> Outcome {
    let n = 200;
    let m = (0.1 * n as f64).ceil() as usize;
    let lags = 15;
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in SketchKind::ALL {
        let mut meds = Vec::new();
        for e in [10, 12, 14, 16] {
            let t_long = 1usize << e;
            let blocks = (t_long as f64).sqrt().floor() as usize;
            let cfg = TwoFrequencyConfig {
                n,
                t: t_long,
                ..Default::default()
            };
            let truth = gen_two_frequency(&cfg).unwrap().analytic_acf(lags);
            let errs: Vec<f64> = (0..11)
                .map(|r| {
                    let pc = PipelineConfig::new(kind, m, blocks, repeat_seed(0, r));
                    let out = run_pipeline(gen_two_frequency(&cfg).unwrap(), &pc).unwrap();
                    out.acf.r[..lags].iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
                })
                .collect();
            meds.push(median(&errs));
        }
        let inversions = meds.windows(2).filter(|w| w[1] >= w[0]).count();
        pass &= inversions <= 1;
        parts.push(format!(
            "{} [{}] inversions {inversions}",
            kind.name(),
            meds.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ")
        ));
    }
    outcome(pass, format!("N={n}, m={m}, B=sqrt(T_long), T_long 2^10..2^16: {}", parts.join("; ")))
}

#[derive(Default, Clone)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }
}

/// Largest |mean − truth| in units of its standard error over lags with
/// at least 30 valid repetitions.
fn worst_z(stats: &[Moments], truth: &[f64]) -> f64 {
    stats
        .iter()
        .zip(truth)
        .filter(|(m, _)| m.n >= 30.0)
        .map(|(m, &t)| {
            let se = (m.m2 / (m.n - 1.0) / m.n).sqrt();
            let d = (m.mean - t).abs();
            if d <= 1e-12 * (1.0 + t.abs()) {
                0.0
            } else {
                d / se
            }
        })
        .fold(0.0, f64::max)
}

fn small_data(seed: u64, t: usize, n: usize) -> Matrix {
    let mut rng = StdRng::seed_from_u64(seed);
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.6)).collect();
    Matrix::from_fn(t, n, |s, i| (w[i] * s as f64 + i as f64).sin() + 0.3 * rng.random_range(-1.0..1.0))
}

fn ac10() -> Outcome {
    let reps = 500u64;
    let mut parts = Vec::new();
    let mut pass = true;
    let mut check = |name: &str, stats: Vec<Moments>, truth: &[f64]| {
        let z = worst_z(&stats, truth);
        pass &= z <= 4.0;
        parts.push(format!("{name} {z:.2}"));
    };

    let x = small_data(10, 16, 12);
    let truth = autocorr_direct(&x).unwrap().r;
    for kind in SketchKind::ALL {
        let mut st = vec![Moments::default(); 16];
        for seed in 0..reps {
            let est = run_pipeline(MatrixSource::new(&x), &PipelineConfig::new(kind, 4, 1, seed)).unwrap().acf;
            st.iter_mut().zip(&est.r).for_each(|(s, r)| s.push(*r));
        }
        check(kind.name(), st, &truth);
    }

    let x = small_data(11, 24, 6);
    let truth = autocorr_direct(&x).unwrap().r;
    let mut st = vec![Moments::default(); 24];
    for seed in 0..reps {
        let set = sample_time(TimeScheme::Random { gamma: 0.3 }, 24, seed).unwrap();
        let rows = gather_rows(&mut MatrixSource::new(&x), &set).unwrap();
        let est = autocorr_time_subsampled(&rows, &set).unwrap();
        for tau in (0..24).filter(|&k| est.valid[k]) {
            st[tau].push(est.r[tau]);
        }
    }
    check("time-random", st, &truth);

    let x = small_data(12, 16, 48);
    let truth = autocorr_direct(&x).unwrap().r;
    let mut st = vec![Moments::default(); 16];
    for seed in 0..reps {
        let set = sample_particles(48, 0.2, seed).unwrap();
        let cols = gather_columns(&mut MatrixSource::new(&x), &set).unwrap();
        let est = autocorr_particle_subsampled(&cols).unwrap();
        st.iter_mut().zip(&est.r).for_each(|(s, r)| s.push(*r));
    }
    check("particle", st, &truth);

    let x = small_data(13, 16, 12);
    let truth = autocorr_direct(&x).unwrap().r;
    let mut st = vec![Moments::default(); 16];
    for seed in 0..reps {
        let set = sample_entries(16, 12, 0.3, seed).unwrap();
        let vals = gather_entries(&mut MatrixSource::new(&x), &set).unwrap();
        let est = autocorr_entrywise(&set, &vals).unwrap();
        for tau in (0..16).filter(|&k| est.valid[k]) {
            st[tau].push(est.r[tau]);
        }
    }
    check("entries", st, &truth);

    outcome(pass, format!("{reps} reps; worst |mean - truth| / SE per estimator: {}", parts.join(", ")))
}

fn ac11() -> Outcome {
    let (t, n) = (10_000, 384);
    let nnz = t * n / 100;
    let csc = storage_report(StorageMethod::Entrywise { t, n, nnz }).unwrap();
    let nominal = nnz as f64 / (t * n) as f64;
    let sampled = sample_entries(2000, 384, 0.01, 0).unwrap();
    let real = storage_report(StorageMethod::Entrywise {
        t: 2000,
        n: 384,
        nnz: sampled.nnz(),
    })
    .unwrap();
    let real_nominal = sampled.nnz() as f64 / (2000.0 * 384.0);

    let blocks = 4;
    let sk = storage_report(StorageMethod::Sketch {
        t: 4 * 64,
        n: 384,
        m: 38,
        blocks,
    })
    .unwrap();
    let per_block = sk.bytes().1 / blocks;

    // On disk: everything beyond the T × m payload.
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("b.skb");
    let block = SketchedBlock {
        block_index: 0,
        spec: SketchSpec::new(SketchKind::Gaussian, 38, 384, 9),
        dt: 1.0,
        data: Matrix::zeros(64, 38),
    };
    write_sketched(&p, &block).unwrap();
    let on_disk = std::fs::metadata(&p).unwrap().len() as usize - 8 * 64 * 38;

    let pass = csc.gamma_eff > nominal && real.gamma_eff > real_nominal && per_block <= 64 && on_disk <= 64;
    outcome(
        pass,
        format!(
            "entrywise gamma_eff {:.5} > nominal {nominal:.5} (sampled: {:.5} > {real_nominal:.5}); \
             sketch metadata {per_block} B/block, {on_disk} B on disk (<= 64); sketch gamma_eff {:.4}",
            csc.gamma_eff, real.gamma_eff, sk.gamma_eff
        ),
    )
}

fn crate_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn ac12() -> Outcome {
    let mut problems = Vec::new();
    let d = tempfile::tempdir().unwrap();
    let bits = |m: &Matrix| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();

    let mut rng = StdRng::seed_from_u64(12);
    let x = Matrix::from_fn(100, 7, |_, _| rng.random_range(-1e6..1e6));
    let p = d.path().join("x.dmat");
    write_dmat(&p, &x, 0.125).unwrap();
    let y = collect_matrix(&mut DmatSource::open(&p).unwrap()).unwrap();
    if bits(&x) != bits(&y) {
        problems.push("DMAT round trip");
    }

    let block = SketchedBlock {
        block_index: 5,
        spec: SketchSpec::new(SketchKind::Fjlt, 6, 33, 77).with_transform(Transform::Dct),
        dt: 0.01,
        data: Matrix::from_fn(20, 6, |_, _| rng.random_range(-1.0..1.0)),
    };
    let p = d.path().join("b.skb");
    write_sketched(&p, &block).unwrap();
    let back = read_sketched(&p).unwrap().block;
    if back.spec != block.spec || back.block_index != 5 || bits(&back.data) != bits(&block.data) {
        problems.push("SKB1 round trip");
    }

    let rows = {
        let mut src = parse_lammps_dump(
            &crate_path("tests/fixtures/shuffled.dump"),
            &"vx".parse::<FieldSpec>().unwrap(),
            1.0,
        )
        .unwrap();
        collect_matrix(&mut src).unwrap()
    };
    if rows.as_slice() != [1.0, 2.0, 3.0, 4.0, 5.0, 6.0] {
        problems.push("LAMMPS fixture");
    }

    let dm = std::fs::read(crate_path("tests/golden/small.dmat")).unwrap();
    let want_dm: [u8; 30] = [
        b'D', b'M', b'A', b'T', 1, 0, 3, 0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0xE0, 0x3F,
    ];
    let g = collect_matrix(&mut DmatSource::open(&crate_path("tests/golden/small.dmat")).unwrap()).unwrap();
    let p = d.path().join("g.dmat");
    write_dmat(&p, &g, 0.5).unwrap();
    if dm[..30] != want_dm || std::fs::read(&p).unwrap() != dm {
        problems.push("golden DMAT");
    }

    let sk = std::fs::read(crate_path("tests/golden/block.skb")).unwrap();
    let gb = read_sketched(&crate_path("tests/golden/block.skb")).unwrap().block;
    let p = d.path().join("g.skb");
    write_sketched(&p, &gb).unwrap();
    let seed_ok = sk[40..48] == [0xEF, 0xCD, 0xAB, 0x89, 0x67, 0x45, 0x23, 0x01];
    if &sk[..4] != b"SKB1" || sk[38..40] != [2, 1] || !seed_ok || std::fs::read(&p).unwrap() != sk {
        problems.push("golden SKB1");
    }

    outcome(
        problems.is_empty(),
        if problems.is_empty() {
            "DMAT and SKB1 bit-exact, LAMMPS rows match, golden headers and rewrites byte-identical".to_string()
        } else {
            format!("mismatch in {}", problems.join(", "))
        },
    )
}
