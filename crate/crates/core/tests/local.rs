use kolmokit::field::{Rep, SpectralField, C64};
use kolmokit::local::*;
use kolmokit::testfield::{make_test_field, Envelope, TestFieldSpec};
use kolmokit::GridSpec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

#[test]
fn gaussian_value_at_unit_time() {
    let want = 3f64.sqrt() / (2.0 * PI);
    assert!((g1_eval(1.0, &[0.0], &[0.0]) - want).abs() < 1e-15);
    assert!((want - 0.275664).abs() < 1e-6);
    assert_eq!(g1_eval(0.0, &[0.0], &[0.0]), 0.0);
    assert_eq!(g1_eval(-1.0, &[0.1], &[0.2]), 0.0);
    assert_eq!(kernel_kij(-0.5, &[0.1], &[0.2], 0, 0), 0.0);
}

#[test]
fn gaussian_is_a_probability_density() {
    for t in [0.25, 1.0, 4.0] {
        let m = g1_mass(t, 1).unwrap();
        assert!((m - 1.0).abs() < 1e-8, "t={t}: {m}");
    }
    assert!((g1_mass(1.0, 2).unwrap() - 1.0).abs() < 1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let t = rng.gen_range(0.01..5.0);
        assert!(g1_eval(t, &[rng.gen_range(-5.0..5.0)], &[rng.gen_range(-5.0..5.0)]) >= 0.0);
    }
}

#[test]
fn chapman_kolmogorov() {
    for (t1, t2, x, v) in [(0.4, 0.7, 0.3, -0.2), (1.0, 1.0, -1.0, 0.5), (0.25, 2.0, 2.0, 1.0)] {
        let a = g1_compose(t1, t2, x, v);
        let b = g1_eval(t1 + t2, &[x], &[v]);
        assert!((a - b).abs() < 1e-5 * b, "{a} {b}");
    }
}

#[test]
fn semigroup_matches_gaussian_convolution() {
    let grid = GridSpec::new(1, 8.0, 8.0, 64, 64, vec![0.0]).unwrap();
    let r = g1_vs_spectral(&grid, 1.0, 0.5).unwrap();
    assert!(r.max_rel_dev < 1e-5, "{r:?}");
    for m in [r.mass_spectral, r.mass_direct] {
        assert!((m / r.mass_initial - 1.0).abs() < 1e-10);
    }
    // shorter times stay closer to the initial bump
    let short = GridSpec::new(1, 4.0, 8.0, 64, 64, vec![0.0]).unwrap();
    let s = g1_vs_spectral(&short, 0.5, 0.5).unwrap();
    assert!(s.max_rel_dev < 1e-5, "{s:?}");
    assert!(s.distance_from_bump < r.distance_from_bump, "{} {}", s.distance_from_bump, r.distance_from_bump);
}

fn random_point(rng: &mut ChaCha8Rng, d: usize) -> (f64, Vec<f64>, Vec<f64>) {
    let tau: f64 = rng.gen_range(0.2..3.0);
    let zeta = (0..d).map(|_| rng.gen_range(-1.5..1.5) * tau.powf(1.5)).collect();
    let eta = (0..d).map(|_| rng.gen_range(-1.5..1.5) * tau.sqrt()).collect();
    (tau, zeta, eta)
}

/// Fourth-order central difference of `f` along `dir` with step `h`.
fn diff4(f: &dyn Fn(f64) -> f64, h: f64) -> f64 {
    (8.0 * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h))) / (12.0 * h)
}

#[test]
fn matrix_kernel_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for d in [1, 2] {
        for _ in 0..40 {
            let (tau, zeta, eta) = random_point(&mut rng, d);
            let (hz, he) = (1e-3 * tau.powf(1.5), 1e-3 * tau.sqrt());
            let mut scale: f64 = 0.0;
            let mut errs = vec![];
            for i in 0..d {
                // d_eta_i G by differences of G
                let grad = |z: &[f64], e: &[f64]| {
                    diff4(&|s| {
                        let mut e2 = e.to_vec();
                        e2[i] += s;
                        g1_eval(tau, z, &e2)
                    }, he)
                };
                let g_fd = grad(&zeta, &eta);
                let g_an = g1_grad_eta(tau, &zeta, &eta, i);
                assert!((g_fd - g_an).abs() < 1e-7 * (g_an.abs() + g1_eval(tau, &zeta, &eta) / tau.sqrt()));
                for j in 0..d {
                    let dz = diff4(&|s| {
                        let mut z2 = zeta.clone();
                        z2[j] += s;
                        grad(&z2, &eta)
                    }, hz);
                    let de = diff4(&|s| {
                        let mut e2 = eta.clone();
                        e2[j] += s;
                        grad(&zeta, &e2)
                    }, he);
                    let fd = tau * dz + de;
                    let an = kernel_kij(tau, &zeta, &eta, i, j);
                    scale = scale.max(an.abs());
                    errs.push((fd - an).abs());
                }
            }
            let scale = scale.max(g1_eval(tau, &zeta, &eta) / tau);
            for e in errs {
                assert!(e < 1e-6 * scale, "d={d} tau={tau}: {e} vs {scale}");
            }
        }
    }
}

proptest! {
    #[test]
    fn matrix_kernel_homogeneity(seed in 0u64..1000, r in 0.2f64..5.0, d in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (tau, zeta, eta) = random_point(&mut rng, d);
        let (t2, z2, e2) = dilate10(r, tau, &zeta, &eta);
        prop_assert!((rho10(t2, &z2, &e2) - r * rho10(tau, &zeta, &eta)).abs() < 1e-12 * r);
        let p = -(4.0 * d as f64 + 2.0);
        for i in 0..d {
            for j in 0..d {
                let a = kernel_kij(t2, &z2, &e2, i, j);
                let b = r.powf(p) * kernel_kij(tau, &zeta, &eta, i, j);
                prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(r.powf(p) * g1_eval(tau, &zeta, &eta) / tau));
            }
        }
    }
}

#[test]
fn kernel_profile_bounded() {
    for d in [1, 2] {
        let a = kernel_profile_sup(d, 20000, 1);
        let b = kernel_profile_sup(d, 80000, 2);
        assert!(a.is_finite() && a > 0.0);
        assert!(b / a < 2.0 && a / b < 2.0, "d={d}: {a} {b}");
    }
}

#[test]
fn constant_matrix_scale_free() {
    let c: Vec<f64> = [1.0, 0.5, 0.25].iter().map(|e| constant_matrix_c(1, *e).unwrap()[0]).collect();
    assert!((c[0] - c[1]).abs() < 1e-6 && (c[0] - c[2]).abs() < 1e-6, "{c:?}");
    assert!((c[0] - constant_matrix_c_with(1, 1.0, 3).unwrap()[0]).abs() < 1e-6);
    assert!((c[0] - constant_c1()).abs() < 1e-15);
    let m = constant_matrix_c(2, 1.0).unwrap();
    assert!((m[1] - m[2]).abs() < 1e-12 && m[1].abs() < 1e-12, "{m:?}");
    assert!((m[0] - m[3]).abs() < 1e-12);
    assert!(constant_matrix_c(3, 1.0).is_err() && constant_matrix_c(1, 0.0).is_err());
}

fn pv_grid() -> GridSpec {
    GridSpec::new(1, PI, PI, 16, 16, GridSpec::uniform_times(0.0, 1.0, 257)).unwrap()
}

fn source(seed: u64) -> SpectralField {
    let env = Envelope::Bump { center: 0.5, half_width: 0.3 };
    make_test_field(&TestFieldSpec::new(seed, [0.5, 2.5], [0.5, 3.0], env).shifted(), &pv_grid()).unwrap()
}

#[test]
fn pv_of_zero_is_zero() {
    let z = SpectralField::zeros(pv_grid(), Rep::Shifted);
    assert_eq!(pv_apply(&z, 0.01).unwrap().max_abs(), 0.0);
}

#[test]
fn pv_rejects_bad_inputs() {
    let s = source(1);
    assert!(pv_apply(&s, 0.5).is_err());
    assert!(pv_apply(&s, 0.0).is_err());
    let g2 = GridSpec::new(2, PI, PI, 8, 8, GridSpec::uniform_times(0.0, 1.0, 17)).unwrap();
    assert!(pv_apply(&SpectralField::zeros(g2, Rep::Shifted), 0.01).is_err());
}

#[test]
fn pv_converges_in_eps() {
    let s = source(4);
    let outs: Vec<_> = [0.04, 0.02, 0.01].iter().map(|e| pv_apply(&s, *e).unwrap()).collect();
    let d1 = outs[0].sub(&outs[1]).unwrap().l2_norm();
    let d2 = outs[1].sub(&outs[2]).unwrap().l2_norm();
    assert!(d2 <= 0.5 * d1, "{d1} {d2}");
}

#[test]
fn pv_commutes_with_translations() {
    let s = source(6);
    // kinetic convolution commutes with x-translations (velocity shifts mix into x over time)
    let a = translate(&pv_apply(&s, 0.02).unwrap(), 0.37, 0.0);
    let b = pv_apply(&translate(&s, 0.37, 0.0), 0.02).unwrap();
    assert!(a.sub(&b).unwrap().l2_norm() < 1e-12 * a.l2_norm());
}

#[test]
fn representation_formula_holds() {
    for seed in [11, 12, 13] {
        let r = representation_check(&source(seed), 0.005).unwrap();
        assert!(r.defect < 1e-3, "{r:?}");
        assert!((r.c_fit - r.c_quadrature).abs() < 1e-3, "{r:?}");
    }
    let s = source(11);
    let a = representation_check(&s, 0.02).unwrap().defect;
    let b = representation_check(&s, 0.01).unwrap().defect;
    assert!(b < a, "{a} {b}");
}

#[test]
fn velocity_independent_source_gives_zero_on_both_sides() {
    // S0 depending on t only: div_v S0 = 0, so grad_v f = 0 and T_eps S0 + c S0 must vanish
    let grid = pv_grid();
    let mut s = SpectralField::zeros(grid.clone(), Rep::Shifted);
    let (kx, kv) = (grid.kx_index([0, 0]).unwrap(), grid.kv_index([0, 0]).unwrap());
    let env = Envelope::Bump { center: 0.5, half_width: 0.3 };
    for it in 0..grid.nt() {
        let i = s.idx(it, kx, kv);
        s.coeffs[i] = C64::new(env.eval(grid.t_grid[it]), 0.0);
    }
    assert_eq!(grad_v_solution(&s).unwrap().max_abs(), 0.0);
    let rhs = pv_apply(&s, 0.01).unwrap().add(&s.scale(constant_c1())).unwrap();
    assert!(rhs.l2_norm() < 1e-3 * s.l2_norm(), "{}", rhs.l2_norm() / s.l2_norm());
    assert!(representation_check(&s, 0.01).is_err());
}
