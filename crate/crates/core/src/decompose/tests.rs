use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::*;

fn rms(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

fn step_image() -> PlanarImage {
    let data = (0..64).map(|i| if i % 8 < 4 { 0.2 } else { 0.8 }).collect();
    PlanarImage::gray(8, 8, data).unwrap()
}

/// Dense `Id + lambda * sum_e w_e (e_i - e_j)(e_i - e_j)^T`, built pixel pair
/// by pixel pair without going through the operator code.
fn dense_system(v: &PlanarImage, lambda: f64, epsilon: f64) -> DMatrix<f64> {
    let (w, h) = (v.width(), v.height());
    let n = w * h;
    let weight = |a: f64, b: f64| 1.0 / (((a + 1e-3).ln() - (b + 1e-3).ln()).abs() + epsilon);
    let mut m = DMatrix::<f64>::identity(n, n);
    let mut couple = |i: usize, j: usize, we: f64| {
        m[(i, i)] += lambda * we;
        m[(j, j)] += lambda * we;
        m[(i, j)] -= lambda * we;
        m[(j, i)] -= lambda * we;
    };
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                couple(i, i + 1, weight(v.plane(0)[i], v.plane(0)[i + 1]));
            }
            if y + 1 < h {
                couple(i, i + w, weight(v.plane(0)[i], v.plane(0)[i + w]));
            }
        }
    }
    m
}

fn dense_solve(v: &PlanarImage, lambda: f64, epsilon: f64) -> Vec<f64> {
    let m = dense_system(v, lambda, epsilon);
    let b = DVector::from_column_slice(v.plane(0));
    m.lu().solve(&b).unwrap().iter().copied().collect()
}

fn operator_matrix<A: LinearOperator>(op: &A) -> DMatrix<f64> {
    let n = op.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        for i in 0..n {
            m[(i, j)] = col[i];
        }
        e[j] = 0.0;
    }
    m
}

fn noisy_ramp(w: usize, h: usize, std: f64, seed: u64) -> (Vec<f64>, PlanarImage) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, std).unwrap();
    let ramp: Vec<f64> = (0..w * h).map(|i| 0.3 + 0.4 * (i % w) as f64 / (w - 1) as f64).collect();
    let noisy = ramp.iter().map(|r| (r + normal.sample(&mut rng)).clamp(0.0, 1.0)).collect();
    (ramp, PlanarImage::gray(w, h, noisy).unwrap())
}

fn std_dev(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

#[test]
fn constant_image_is_its_own_illumination() {
    let v = PlanarImage::filled(10, 7, ColorSpace::Gray, 0.42).unwrap();
    let d = decompose(&v, &SolverConfig::default()).unwrap();
    assert!(d.illumination.plane(0).iter().all(|&i| (i - 0.42).abs() < 1e-12));
    assert!(d.reflectance.plane(0).iter().all(|&r| (r - 1.0).abs() < 1e-12));
}

#[test]
fn black_image_hits_the_floor() {
    let v = PlanarImage::filled(5, 5, ColorSpace::Gray, 0.0).unwrap();
    let d = decompose(&v, &SolverConfig::default()).unwrap();
    assert!(d.illumination.plane(0).iter().all(|&i| i == ILLUMINATION_FLOOR));
    assert!(d.reflectance.plane(0).iter().all(|&r| r == 0.0));
}

#[test]
fn step_image_matches_dense_solve() {
    let v = step_image();
    let cfg = SolverConfig {
        lambda: 0.1,
        ..Default::default()
    };
    let expected = dense_solve(&v, 0.1, cfg.epsilon);
    let system = assemble_system(&v, &cfg).unwrap();
    let out = solve_cg(&system, &system.rhs, &cfg).unwrap();
    assert!(rms(&out.solution, &expected) < 1e-5, "rms {}", rms(&out.solution, &expected));
    for pair in out.history.windows(2) {
        assert!(pair[1] <= pair[0], "residual rose: {:?}", out.history);
    }

    let d = decompose(&v, &cfg).unwrap();
    let clamped: Vec<f64> = expected.iter().zip(v.plane(0)).map(|(e, v)| e.max(*v).max(1e-4)).collect();
    assert!(rms(d.illumination.plane(0), &clamped) < 1e-5);
}

#[test]
fn operator_matches_dense_assembly() {
    let (_, v) = noisy_ramp(5, 4, 0.1, 3);
    let cfg = SolverConfig {
        lambda: 0.7,
        ..Default::default()
    };
    let system = assemble_system(&v, &cfg).unwrap();
    let a = operator_matrix(&system);
    let d = dense_system(&v, 0.7, cfg.epsilon);
    assert!((a - d).abs().max() < 1e-9);
    let diag = system.diagonal();
    let a = operator_matrix(&system);
    for i in 0..20 {
        assert!((diag[i] - a[(i, i)]).abs() < 1e-12);
    }
}

#[test]
fn three_by_three_unit_weights_is_laplacian_plus_identity() {
    let system = SmoothnessSystem {
        width: 3,
        height: 3,
        lambda: 1.0,
        horizontal: vec![1.0; 6],
        vertical: vec![1.0; 6],
        rhs: vec![0.0; 9],
    };
    #[rustfmt::skip]
    let expected = DMatrix::from_row_slice(9, 9, &[
         3.0, -1.0,  0.0, -1.0,  0.0,  0.0,  0.0,  0.0,  0.0,
        -1.0,  4.0, -1.0,  0.0, -1.0,  0.0,  0.0,  0.0,  0.0,
         0.0, -1.0,  3.0,  0.0,  0.0, -1.0,  0.0,  0.0,  0.0,
        -1.0,  0.0,  0.0,  4.0, -1.0,  0.0, -1.0,  0.0,  0.0,
         0.0, -1.0,  0.0, -1.0,  5.0, -1.0,  0.0, -1.0,  0.0,
         0.0,  0.0, -1.0,  0.0, -1.0,  4.0,  0.0,  0.0, -1.0,
         0.0,  0.0,  0.0, -1.0,  0.0,  0.0,  3.0, -1.0,  0.0,
         0.0,  0.0,  0.0,  0.0, -1.0,  0.0, -1.0,  4.0, -1.0,
         0.0,  0.0,  0.0,  0.0,  0.0, -1.0,  0.0, -1.0,  3.0,
    ]);
    assert_eq!(operator_matrix(&system), expected);
}

#[test]
fn zero_lambda_is_identity() {
    let (_, v) = noisy_ramp(6, 6, 0.05, 9);
    let cfg = SolverConfig {
        lambda: 0.0,
        ..Default::default()
    };
    let system = assemble_system(&v, &cfg).unwrap();
    assert_eq!(operator_matrix(&system), DMatrix::identity(36, 36));
    let d = decompose(&v, &cfg).unwrap();
    for (i, v) in d.illumination.plane(0).iter().zip(v.plane(0)) {
        assert_eq!(*i, v.max(ILLUMINATION_FLOOR));
    }
}

#[test]
fn operator_is_symmetric() {
    let (_, v) = noisy_ramp(13, 9, 0.08, 1);
    let system = assemble_system(&v, &SolverConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let x: Vec<f64> = (0..117).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..117).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (mut ax, mut ay) = (vec![0.0; 117], vec![0.0; 117]);
        system.apply(&x, &mut ax);
        system.apply(&y, &mut ay);
        let lhs: f64 = ax.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&ay).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-8 * lhs.abs().max(1.0));
    }
}

#[test]
fn illumination_carries_less_noise_than_the_input() {
    for seed in 0..5 {
        let (ramp, v) = noisy_ramp(48, 32, 0.05, seed);
        let d = decompose(&v, &SolverConfig::default()).unwrap();
        let err: Vec<f64> = d.illumination.plane(0).iter().zip(&ramp).map(|(i, r)| i - r).collect();
        let injected: Vec<f64> = v.plane(0).iter().zip(&ramp).map(|(v, r)| v - r).collect();
        assert!(std_dev(&err) < std_dev(&injected), "seed {seed}: {} vs {}", std_dev(&err), std_dev(&injected));
        assert!(std_dev(&err) < 0.05);
    }
}

#[test]
fn reports_non_convergence() {
    let (_, v) = noisy_ramp(32, 32, 0.05, 2);
    let cfg = SolverConfig {
        max_iters: 2,
        tolerance: 1e-9,
        ..Default::default()
    };
    match decompose(&v, &cfg) {
        Err(Error::NotConverged { residual, iterations, .. }) => {
            assert_eq!(iterations, 2);
            assert!(residual > 1e-9);
        }
        other => panic!("expected NotConverged, got {other:?}"),
    }
    let partial = decompose_best_effort(&v, &cfg).unwrap();
    assert!(partial.residual > 1e-9);
}

#[test]
fn rejects_bad_config_and_color_input() {
    let v = step_image();
    for cfg in [
        SolverConfig { lambda: -1.0, ..Default::default() },
        SolverConfig { epsilon: 0.0, ..Default::default() },
        SolverConfig { tolerance: 1.0, ..Default::default() },
        SolverConfig { max_iters: 0, ..Default::default() },
    ] {
        assert!(matches!(decompose(&v, &cfg), Err(Error::InvalidParameter { .. })));
    }
    let rgb = PlanarImage::filled(4, 4, ColorSpace::Rgb, 0.3).unwrap();
    assert!(matches!(decompose(&rgb, &SolverConfig::default()), Err(Error::InvalidInput(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn layer_invariants(w in 2usize..24, h in 2usize..24, seed in any::<u64>(), std in 0.0..0.1f64, lambda in 0.05..2.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, std.max(1e-12)).unwrap();
        let (fx, fy) = (rng.random_range(0.5..4.0), rng.random_range(0.5..4.0));
        let data: Vec<f64> = (0..w * h)
            .map(|i| {
                let (x, y) = ((i % w) as f64 / w as f64, (i / w) as f64 / h as f64);
                (0.45 + 0.35 * (fx * x).sin() * (fy * y).cos() + normal.sample(&mut rng)).clamp(0.0, 1.0)
            })
            .collect();
        let v = PlanarImage::gray(w, h, data).unwrap();
        let cfg = SolverConfig { lambda, ..Default::default() };
        let d = decompose(&v, &cfg).unwrap();
        for (i, x) in d.illumination.plane(0).iter().zip(v.plane(0)) {
            prop_assert!(*i >= x - 1e-6);
        }
        prop_assert!(d.reflectance.plane(0).iter().all(|r| (0.0..=1.0).contains(r)));
        prop_assert!(rms(&d.recombine(), v.plane(0)) <= 1e-4);
        prop_assert!(total_variation(&d.illumination) <= total_variation(&v) + 1e-9);
    }

    #[test]
    fn residual_history_ends_below_tolerance(seed in any::<u64>()) {
        let (_, v) = noisy_ramp(16, 12, 0.05, seed);
        let cfg = SolverConfig::default();
        let system = assemble_system(&v, &cfg).unwrap();
        let out = solve_cg(&system, &system.rhs, &cfg).unwrap();
        prop_assert_eq!(out.history.len(), out.iterations + 1);
        prop_assert!(*out.history.last().unwrap() <= cfg.tolerance);
    }
}
