//! Independent reference implementations and frozen reference values.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use specsketch_core::baselines::*;
use specsketch_core::fft::next_pow2;
use specsketch_core::sketch::{SketchKind, SketchOperator, SketchSpec, Transform};
use specsketch_core::spectral::*;
use specsketch_core::spline::CubicSpline;
use specsketch_core::Matrix;

fn fixed_matrix() -> Matrix {
    Matrix::from_fn(9, 3, |t, i| (0.37 * t as f64 + 1.3 * i as f64).sin() + 0.1 * ((t * i) % 7) as f64)
}

fn random_matrix(rng: &mut ChaCha20Rng, t: usize, n: usize) -> Matrix {
    Matrix::from_fn(t, n, |_, _| rng.random_range(-1.0..1.0))
}

/// Brute-force double loop over (t, τ), written independently of the crate.
fn brute_acf(x: &Matrix) -> Vec<f64> {
    let (t, n) = (x.rows(), x.cols());
    let mut out = vec![0.0; t];
    for (tau, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for a in 0..t - tau {
            for i in 0..n {
                s += x.get(a, i) * x.get(a + tau, i);
            }
        }
        *o = s / (n as f64 * (t - tau) as f64);
    }
    out
}

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for (k, (x, y)) in a.iter().zip(b).enumerate() {
        assert!((x - y).abs() <= tol * scale, "index {k}: {x} vs {y}");
    }
}

const FROZEN_ACF: [f64; 9] = [
    0.48534770375552644,
    0.4486374929188079,
    0.35596126661178723,
    0.2538223420919338,
    0.08994498961663328,
    -0.06022427877669409,
    -0.195817424606317,
    -0.34913381216755496,
    -0.3361066052640507,
];

#[test]
fn frozen_autocorrelation() {
    let x = fixed_matrix();
    assert_close(&autocorr_direct(&x).unwrap().r, &FROZEN_ACF, 1e-14);
    assert_close(&autocorr_fft(&x).unwrap().r, &FROZEN_ACF, 1e-13);
}

#[test]
fn frozen_spectra() {
    let psd = [
        8.9951564460461775e-01,
        3.6144453108202153e+00,
        2.8971411805025493e-03,
        -3.9063891433428810e-02,
        1.0047076006658306e-01,
        -7.3908194652251458e-02,
        1.5642274054930738e-01,
        -8.1182612436040635e-02,
        -4.3835944752209643e-03,
    ];
    let windowed = [
        1.861073079698383,
        2.0970094691551315,
        0.7660962204529063,
        0.03504740316796892,
        0.1406682899777699,
        0.0318440464335363,
        0.10159725437975732,
        0.00921825939481341,
        0.01343799911089959,
    ];
    let a = AutocorrEstimate::full(FROZEN_ACF.to_vec());
    let s = psd_from_autocorr(&a, 1.0).unwrap();
    assert_close(&s.s, &psd, 1e-13);
    let w = psd_from_autocorr(&bartlett_window(&a).unwrap(), 0.5).unwrap();
    assert_close(&w.s, &windowed, 1e-13);
    assert!(w.windowed);
    assert!((w.freqs[1] - 1.0 / (17.0 * 0.5)).abs() < 1e-15);
}

#[test]
fn frozen_not_a_knot_spline() {
    let xs = [0.0, 1.0, 2.0, 5.0, 6.0, 9.0, 10.0, 14.0];
    let ys: Vec<f64> = xs.iter().map(|&x: &f64| (0.4 * x).cos() * (-0.1 * x).exp()).collect();
    let s = CubicSpline::not_a_knot(&xs, &ys).unwrap();
    let q = [3.0, 4.0, 7.0, 8.0, 11.0, 12.0, 13.0];
    let want = [
        0.2726804653979832,
        -0.01508360063260041,
        -0.4645725724315135,
        -0.4454861012436191,
        -0.09724969675401064,
        0.03948099486319044,
        0.1441687243009835,
    ];
    for (x, w) in q.iter().zip(want) {
        assert!((s.eval(*x) - w).abs() < 1e-12);
    }
}

/// Dense spline oracle: solve the full 4(n−1) coefficient system
/// (interpolation, C¹, C² at interior knots, C³ at the second and
/// penultimate knots) with nalgebra.
fn dense_spline(xs: &[f64], ys: &[f64], q: f64) -> f64 {
    let n = xs.len();
    let p = n - 1;
    let dim = 4 * p;
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut b = DVector::<f64>::zeros(dim);
    let mut row = 0;
    // Piece j: c0 + c1 u + c2 u² + c3 u³ with u = x − xs[j].
    for j in 0..p {
        let h = xs[j + 1] - xs[j];
        a[(row, 4 * j)] = 1.0;
        b[row] = ys[j];
        row += 1;
        for k in 0..4 {
            a[(row, 4 * j + k)] = h.powi(k as i32);
        }
        b[row] = ys[j + 1];
        row += 1;
    }
    for j in 0..p - 1 {
        let h = xs[j + 1] - xs[j];
        // first derivative
        a[(row, 4 * j + 1)] = 1.0;
        a[(row, 4 * j + 2)] = 2.0 * h;
        a[(row, 4 * j + 3)] = 3.0 * h * h;
        a[(row, 4 * (j + 1) + 1)] = -1.0;
        row += 1;
        // second derivative
        a[(row, 4 * j + 2)] = 2.0;
        a[(row, 4 * j + 3)] = 6.0 * h;
        a[(row, 4 * (j + 1) + 2)] = -2.0;
        row += 1;
    }
    for j in [0, p - 2] {
        a[(row, 4 * j + 3)] = 1.0;
        a[(row, 4 * (j + 1) + 3)] = -1.0;
        row += 1;
    }
    assert_eq!(row, dim);
    let c = a.lu().solve(&b).unwrap();
    let j = (0..p).rev().find(|&j| xs[j] <= q).unwrap_or(0).min(p - 1);
    let u = q - xs[j];
    c[4 * j] + c[4 * j + 1] * u + c[4 * j + 2] * u * u + c[4 * j + 3] * u * u * u
}

#[test]
fn spline_matches_dense_system() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    for _ in 0..30 {
        let n = rng.random_range(4..12);
        let mut xs = vec![0.0];
        for _ in 1..n {
            let last = *xs.last().unwrap();
            xs.push(last + rng.random_range(1..4) as f64);
        }
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = CubicSpline::not_a_knot(&xs, &ys).unwrap();
        let end = *xs.last().unwrap();
        let mut q = 0.0;
        while q <= end {
            let want = dense_spline(&xs, &ys, q);
            assert!((s.eval(q) - want).abs() < 1e-8 * (1.0 + want.abs()), "q={q}");
            q += 0.25;
        }
    }
}

#[test]
fn fft_path_matches_direct_fifty_instances() {
    let mut rng = ChaCha20Rng::seed_from_u64(42);
    for _ in 0..50 {
        let t = rng.random_range(1..=256);
        let n = rng.random_range(1..=16);
        let x = random_matrix(&mut rng, t, n);
        let want = brute_acf(&x);
        assert_close(&autocorr_fft(&x).unwrap().r, &want, 1e-10);
        assert_close(&autocorr_direct(&x).unwrap().r, &want, 1e-12);
    }
}

#[test]
fn column_autocorr_matches_direct_sum() {
    let mut rng = ChaCha20Rng::seed_from_u64(64);
    let v: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
    let want: Vec<f64> = (0..64).map(|tau| (0..64 - tau).map(|t| v[t] * v[t + tau]).sum()).collect();
    assert_close(&column_autocorr(&v), &want, 1e-10);
}

#[test]
fn random_seven_by_three() {
    let mut rng = ChaCha20Rng::seed_from_u64(42);
    let x = random_matrix(&mut rng, 7, 3);
    assert_close(&autocorr_direct(&x).unwrap().r, &brute_acf(&x), 1e-12);
}

/// Sylvester Hadamard matrix, orthonormalized.
fn hadamard(n: usize) -> Matrix {
    let s = 1.0 / (n as f64).sqrt();
    Matrix::from_fn(n, n, |i, j| if (i & j).count_ones() % 2 == 0 { s } else { -s })
}

/// Orthonormal DCT-II matrix.
fn dct_matrix(n: usize) -> Matrix {
    Matrix::from_fn(n, n, |k, j| {
        let c = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        c * (std::f64::consts::PI * (j as f64 + 0.5) * k as f64 / n as f64).cos()
    })
}

/// `sqrt(Ñ/m) Pᵀ H D` restricted to the first `N` columns, column by column.
fn materialize_fjlt(op: &SketchOperator, h: &Matrix) -> Matrix {
    let (m, n) = (op.m(), op.n());
    let padded = h.rows();
    let signs = op.fjlt_signs().unwrap();
    let rows = op.fjlt_rows().unwrap();
    let scale = (padded as f64 / m as f64).sqrt();
    let mut out = Matrix::zeros(m, n);
    for j in 0..n {
        for (r, &p) in rows.iter().enumerate() {
            out.set(r, j, scale * h.get(p, j) * signs[j]);
        }
    }
    out
}

#[test]
fn fjlt_equals_dense_materialization() {
    for transform in [Transform::WalshHadamard, Transform::Dct] {
        for n in [3, 4, 5, 8, 16] {
            for m in 1..=n {
                let spec = SketchSpec::new(SketchKind::Fjlt, m, n, (n * 100 + m) as u64).with_transform(transform);
                let op = SketchOperator::draw(spec).unwrap();
                let padded = match transform {
                    Transform::WalshHadamard => next_pow2(n),
                    Transform::Dct => n,
                };
                assert_eq!(op.fjlt_signs().unwrap().len(), padded);
                let h = match transform {
                    Transform::WalshHadamard => hadamard(padded),
                    Transform::Dct => dct_matrix(padded),
                };
                let dense = materialize_fjlt(&op, &h);
                for j in 0..n {
                    let mut e = vec![0.0; n];
                    e[j] = 1.0;
                    let col = op.apply(&e).unwrap();
                    for r in 0..m {
                        assert!((col[r] - dense.get(r, j)).abs() < 1e-12);
                    }
                }
            }
        }
    }
}

fn brute_pairs(set: &TimeIndexSet) -> Vec<u64> {
    let mut z = vec![0u64; set.t];
    for &a in &set.indices {
        for &b in &set.indices {
            if b >= a {
                z[b - a] += 1;
            }
        }
    }
    z
}

#[test]
fn lag_counts_match_brute_force() {
    let mut rng = ChaCha20Rng::seed_from_u64(128);
    for case in 0..100 {
        let t = if case == 0 { 128 } else { rng.random_range(2..300) };
        let gamma = rng.random_range(0.01..1.0);
        let set = sample_time(TimeScheme::Random { gamma }, t, case).unwrap();
        assert_eq!(lag_counts(&set), brute_pairs(&set));
    }
    for k in 1..6 {
        let set = sample_time(TimeScheme::SparseRuler { k }, 200, 0).unwrap();
        assert_eq!(lag_counts(&set), brute_pairs(&set));
        let set = sample_time(TimeScheme::PowerSeries { k }, 200, 0).unwrap();
        assert_eq!(lag_counts(&set), brute_pairs(&set));
    }
}

#[test]
fn full_lag_counts() {
    let set = TimeIndexSet::from_indices(10, (0..10).collect(), TimeScheme::Random { gamma: 1.0 }).unwrap();
    assert_eq!(lag_counts(&set), (0..10).map(|tau| 10 - tau as u64).collect::<Vec<_>>());
}

#[test]
fn sparse_ruler_blocks_cover_their_span() {
    for k in 1..8 {
        let set = sample_time(TimeScheme::SparseRuler { k }, 5000, 0).unwrap();
        let z = lag_counts(&set);
        let span = 1usize << k;
        assert!(z[..=span].iter().all(|&c| c > 0), "k={k}");
    }
}

#[test]
fn entrywise_hand_example() {
    // Column 0 fully sampled, column 1 at times {0, 2}.
    let x = [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
    let set = EntrySampleSet::from_columns(3, vec![vec![0, 1, 2], vec![0, 2]]).unwrap();
    let values = vec![vec![1.0, 3.0, 5.0], vec![2.0, 6.0]];
    let est = autocorr_entrywise(&set, &values).unwrap();
    let want = [
        (1.0 + 9.0 + 25.0 + 4.0 + 36.0) / 5.0,
        (3.0 + 15.0) / 2.0,
        (5.0 + 12.0) / 2.0,
    ];
    assert_eq!(est.counts, vec![5, 2, 2]);
    assert_close(&est.r, &want, 1e-14);
    let _ = x;
}

#[test]
fn every_estimator_is_exact_at_full_sampling() {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let (t, n) = (40, 5);
    let x = random_matrix(&mut rng, t, n);
    let truth = brute_acf(&x);

    let set = TimeIndexSet::from_indices(t, (0..t).collect(), TimeScheme::Random { gamma: 1.0 }).unwrap();
    let rows = gather_rows(&mut MatrixSource::new(&x), &set).unwrap();
    assert_close(&autocorr_time_subsampled(&rows, &set).unwrap().r, &truth, 1e-10);

    let ps = ParticleSet { n, indices: (0..n).collect() };
    let cols = gather_columns(&mut MatrixSource::new(&x), &ps).unwrap();
    assert_close(&autocorr_particle_subsampled(&cols).unwrap().r, &truth, 1e-10);

    let es = EntrySampleSet::from_columns(t, vec![(0..t).collect(); n]).unwrap();
    let vals = gather_entries(&mut MatrixSource::new(&x), &es).unwrap();
    assert_close(&autocorr_entrywise(&es, &vals).unwrap().r, &truth, 1e-10);

    let mut bc = BlockCorrelator::new(n, t).unwrap();
    let mut hc = HierarchicalCorrelator::new(n, t, 2, 1).unwrap();
    for s in 0..t {
        bc.push(x.row(s)).unwrap();
        hc.push(x.row(s)).unwrap();
    }
    assert_close(&bc.finish().r, &truth, 1e-12);
    assert_eq!(bc.finish().r, hc.finish().r);
}

#[test]
fn particle_single_column() {
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let x = random_matrix(&mut rng, 30, 4);
    let ps = ParticleSet { n: 4, indices: vec![2] };
    let cols = gather_columns(&mut MatrixSource::new(&x), &ps).unwrap();
    let alone = Matrix::from_fn(30, 1, |t, _| x.get(t, 2));
    assert_close(&autocorr_particle_subsampled(&cols).unwrap().r, &brute_acf(&alone), 1e-12);
}

#[test]
fn block_correlator_truncates_direct() {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let x = random_matrix(&mut rng, 100, 2);
    let truth = brute_acf(&x);
    let mut bc = BlockCorrelator::new(2, 4).unwrap();
    for s in 0..100 {
        bc.push(x.row(s)).unwrap();
    }
    let est = bc.finish();
    assert_close(&est.r[..4], &truth[..4], 1e-12);
    assert!(est.valid[..4].iter().all(|&v| v) && !est.valid[4..].iter().any(|&v| v));
    let expected_updates: u64 = (0..4).map(|lag| 100 - lag as u64).sum();
    assert_eq!(bc.pair_updates(), expected_updates);
}

#[test]
fn hierarchical_single_level_is_block() {
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    let x = random_matrix(&mut rng, 64, 3);
    let mut bc = BlockCorrelator::new(3, 6).unwrap();
    let mut hc = HierarchicalCorrelator::new(3, 6, 2, 1).unwrap();
    for s in 0..64 {
        bc.push(x.row(s)).unwrap();
        hc.push(x.row(s)).unwrap();
    }
    let (a, b) = (bc.finish(), hc.finish());
    assert_eq!(a.r, b.r);
    assert_eq!(a.valid, b.valid);
}

fn sinusoid(t: usize, period: f64) -> Matrix {
    Matrix::from_fn(t, 4, |s, i| (2.0 * std::f64::consts::PI * s as f64 / period + i as f64).sin())
}

#[test]
fn hierarchical_tracks_slow_and_fails_fast_signals() {
    let (ell, c, levels, t) = (16, 2, 4, 4096);
    let run = |x: &Matrix| {
        let mut hc = HierarchicalCorrelator::new(4, ell, c, levels).unwrap();
        for s in 0..t {
            hc.push(x.row(s)).unwrap();
        }
        (hc.finish(), brute_acf(x))
    };
    // Slow: period far beyond the longest covered lag ℓ c^{L−1} = 128.
    let (est, truth) = run(&sinusoid(t, 2000.0));
    for tau in 0..t {
        if est.valid[tau] {
            let err = (est.r[tau] - truth[tau]).abs() / truth[tau].abs();
            assert!(err < 0.1, "slow: lag {tau} err {err}");
        }
    }
    // Fast: period below c; coarse levels average the signal away.
    let (est, truth) = run(&sinusoid(t, 1.7));
    let worst = (0..t)
        .filter(|&tau| est.valid[tau] && tau >= ell && truth[tau].abs() > 0.05)
        .map(|tau| (est.r[tau] - truth[tau]).abs() / truth[tau].abs())
        .fold(0.0, f64::max);
    assert!(worst > 0.5, "fast worst {worst}");
}

#[test]
fn interpolation_oracle_on_quadratic() {
    let mut a = AutocorrEstimate::full((0..7).map(|t| (t * t) as f64).collect());
    a.valid[4] = false;
    a.counts[4] = 0;
    a.r[4] = 0.0;
    let b = interpolate_missing_lags(&a).unwrap();
    assert!((b.r[4] - 16.0).abs() < 1e-9);
    for tau in [0, 1, 2, 3, 5, 6] {
        assert_eq!(b.r[tau].to_bits(), a.r[tau].to_bits());
    }
}

#[test]
fn interpolation_needs_four_lags() {
    let mut a = AutocorrEstimate::full(vec![1.0; 8]);
    for tau in 3..8 {
        a.valid[tau] = false;
    }
    assert!(interpolate_missing_lags(&a).is_err());
}
