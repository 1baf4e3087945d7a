use kolmokit::field::{Rep, SpectralField, C64};
use kolmokit::solver::*;
use kolmokit::testfield::{make_test_field, Envelope, TestFieldSpec};
use kolmokit::GridSpec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn midpoint(t: f64, s: f64, phi: &[f64; 2], xi: &[f64; 2], beta: f64, n: usize) -> f64 {
    let h = (t - s) / n as f64;
    (0..n)
        .map(|i| {
            let tau = s + (i as f64 + 0.5) * h;
            let a = [xi[0] - tau * phi[0], xi[1] - tau * phi[1]];
            (a[0] * a[0] + a[1] * a[1]).powf(beta)
        })
        .sum::<f64>()
        * h
}

#[test]
fn char_exponent_matches_midpoint_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 0..100 {
        let d2 = k % 5 == 0;
        let phi = [rng.gen_range(-3.0..3.0), if d2 { rng.gen_range(-3.0..3.0) } else { 0.0 }];
        let xi = [rng.gen_range(-3.0..3.0), if d2 { rng.gen_range(-3.0..3.0) } else { 0.0 }];
        let s = rng.gen_range(-1.0..1.0);
        let t = s + rng.gen_range(0.1..2.0);
        let v = char_exponent(t, s, &phi, &xi, 0.75).unwrap();
        let o = midpoint(t, s, &phi, &xi, 0.75, 1_000_000);
        assert!((v - o).abs() < 1e-8 * o, "k={k}: {v} vs {o}");
    }
}

#[test]
fn propagator_basics() {
    assert_eq!(propagator(1.0, 1.0, &[1.0, 0.0], &[2.0, 0.0], 0.5).unwrap(), 1.0);
    let v = propagator(2.0, 0.5, &[0.0, 0.0], &[1.7, 0.0], 0.75).unwrap();
    assert!((v - (-(1.7f64).powf(1.5) * 1.5).exp()).abs() < 1e-15);
}

/// Heat modes (phi = 0) against RK4 on f' = -|xi|^(2b) f + S.
#[test]
fn heat_mode_matches_ode_oracle() {
    let beta = 0.75;
    let g = GridSpec::new(1, PI, PI, 8, 8, GridSpec::uniform_times(0.0, 2.0, 201)).unwrap();
    let env = |t: f64| Envelope::Bump { center: 0.8, half_width: 0.7 }.eval(t);
    let mut s = SpectralField::zeros(g.clone(), Rep::Shifted);
    let (kx, kv) = (g.kx_index([0, 0]).unwrap(), g.kv_index([2, 0]).unwrap());
    for it in 0..g.nt() {
        let i = s.idx(it, kx, kv);
        s.coeffs[i] = C64::new(env(g.t_grid[it]), 0.0);
    }
    let f = kolmogorov_apply(&s, Direction::Forward, beta).unwrap();
    let rate = 2f64.powf(2.0 * beta);
    let (mut y, mut t) = (0.0, 0.0);
    let h = 1e-4;
    let rhs = |t: f64, y: f64| -rate * y + env(t);
    let mut worst: f64 = 0.0;
    for step in 0..20000 {
        let k1 = rhs(t, y);
        let k2 = rhs(t + h / 2.0, y + h / 2.0 * k1);
        let k3 = rhs(t + h / 2.0, y + h / 2.0 * k2);
        let k4 = rhs(t + h, y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
        if (step + 1) % 100 == 0 {
            let it = (step + 1) / 100;
            worst = worst.max((f.coeffs[f.idx(it, kx, kv)] - C64::new(y, 0.0)).norm());
        }
    }
    assert!(worst < 1e-8, "{worst}");
}

fn solver_grid(nt: usize) -> GridSpec {
    GridSpec::new(1, 2.0 * PI, 2.0 * PI, 64, 64, GridSpec::uniform_times(0.0, 1.0, nt)).unwrap()
}

#[test]
fn cauchy_residual_is_small() {
    for beta in [0.5, 1.0] {
        let g = solver_grid(257);
        let psi = make_test_field(
            &TestFieldSpec::new(1, [0.5, 2.0], [0.5, 2.5], Envelope::Constant),
            &g.with_times(vec![0.0]),
        )
        .unwrap();
        let s = make_test_field(
            &TestFieldSpec::new(2, [0.5, 2.0], [0.5, 2.5], Envelope::Bump { center: 0.5, half_width: 0.4 }).shifted(),
            &g,
        )
        .unwrap();
        let prob = CauchyProblem { beta, psi: psi.clone(), source: Some(s.clone()), grid: g.clone() };
        let f = cauchy_solve(&prob).unwrap();
        let r = residual(&f, Some(&s), beta).unwrap();
        assert!(r < 1e-6, "beta={beta}: residual {r}");
        assert_eq!(f.slice(0), psi.slice(0));
        let both = transport_term(&f, Some(&s), beta).unwrap();
        let fd = transport_term(&f, None, beta).unwrap();
        let d = both.sub(&fd).unwrap().l2_norm() / both.l2_norm();
        assert!(d < 1e-6, "transport paths differ by {d}");
    }
}

#[test]
fn pure_flow_residual_is_small() {
    let g = solver_grid(257);
    let psi = make_test_field(&TestFieldSpec::new(4, [0.5, 2.0], [0.5, 2.5], Envelope::Constant), &g.with_times(vec![0.0])).unwrap();
    let f = cauchy_solve(&CauchyProblem { beta: 0.5, psi: psi.clone(), source: None, grid: g }).unwrap();
    let r = residual(&f, None, 0.5).unwrap();
    assert!(r < 1e-6 * psi.l2_norm(), "{r}");
}

#[test]
fn random_field_fails_the_equation() {
    let g = solver_grid(65);
    let f = make_test_field(&TestFieldSpec::new(9, [0.5, 2.0], [0.5, 2.5], Envelope::Bump { center: 0.5, half_width: 0.4 }).shifted(), &g).unwrap();
    let s = make_test_field(&TestFieldSpec::new(10, [0.5, 2.0], [0.5, 2.5], Envelope::Bump { center: 0.5, half_width: 0.4 }).shifted(), &g).unwrap();
    assert!(residual(&f, Some(&s), 1.0).unwrap() > 0.1);
}

#[test]
fn zero_inputs_give_zero() {
    let g = solver_grid(17);
    let z = SpectralField::zeros(g.clone(), Rep::Shifted);
    let f = kolmogorov_apply(&z, Direction::Forward, 0.5).unwrap();
    assert_eq!(f.max_abs(), 0.0);
    assert_eq!(transport_term(&z, None, 0.5).unwrap().max_abs(), 0.0);
    assert_eq!(pairing_derivative_check(&z, &z, Some(&z), Some(&z), 0.5).unwrap(), 0.0);
    let c = cauchy_solve(&CauchyProblem { beta: 1.0, psi: SpectralField::zeros(g.with_times(vec![0.0]), Rep::Plain), source: None, grid: g }).unwrap();
    assert_eq!(c.max_abs(), 0.0);
}

#[test]
fn source_must_be_time_compact() {
    let g = solver_grid(17);
    let s = make_test_field(&TestFieldSpec::new(1, [0.5, 2.0], [0.5, 2.5], Envelope::Constant).shifted(), &g).unwrap();
    assert!(matches!(kolmogorov_apply(&s, Direction::Forward, 0.5), Err(kolmokit::Error::NotTimeCompact(_))));
}

#[test]
fn fractional_laplacian_composes() {
    let g = solver_grid(1);
    let f = make_test_field(&TestFieldSpec::new(3, [0.5, 2.0], [0.5, 2.5], Envelope::Constant), &g).unwrap();
    let a = fractional_laplacian_v(&fractional_laplacian_v(&f, 0.3), 0.45);
    let b = fractional_laplacian_v(&f, 0.75);
    assert!(a.sub(&b).unwrap().max_abs() < 1e-12 * b.max_abs());
    // beta = 1 is minus the spectral second derivative
    let xis = g.xis();
    let second = f.apply_multiplier(|_, x| x[0] * x[0]);
    let c = fractional_laplacian_v(&f, 1.0);
    assert_eq!(second.coeffs, c.coeffs);
    let _ = xis;
}

#[test]
fn semigroup_property_and_heat_reduction() {
    let beta = 0.5;
    // lx = lv so every integer time is an aligned shear
    let g = GridSpec::new(1, PI, PI, 64, 64, vec![0.0]).unwrap();
    for seed in 0..5 {
        let f = make_test_field(&TestFieldSpec::new(seed, [1.0, 3.0], [1.0, 4.0], Envelope::Constant), &g).unwrap();
        let ab = semigroup_apply(&semigroup_apply(&f, 1.0, Direction::Forward, beta).unwrap(), 2.0, Direction::Forward, beta).unwrap();
        let c = semigroup_apply(&f, 3.0, Direction::Forward, beta).unwrap();
        let scale = c.max_abs().max(1e-300);
        assert!(ab.sub(&c).unwrap().max_abs() < 1e-9 * f.max_abs(), "seed {seed} {scale}");
        assert_eq!(semigroup_apply(&f, 0.0, Direction::Forward, beta).unwrap().coeffs, f.coeffs);
    }
    let mut h = SpectralField::zeros(g.clone(), Rep::Plain);
    let (kx, kv) = (g.kx_index([0, 0]).unwrap(), g.kv_index([3, 0]).unwrap());
    let i = h.idx(0, kx, kv);
    h.coeffs[i] = C64::new(1.0, 0.0);
    let out = semigroup_apply(&h, 2.0, Direction::Forward, 0.75).unwrap();
    assert!((out.coeffs[i].re - (-2.0 * 3f64.powf(1.5)).exp()).abs() < 1e-15);
    let half = semigroup_apply(&h, 0.5, Direction::Forward, 0.75);
    assert!(half.is_err() || g.lv / g.lx * 0.5 == 0.5f64.round());
}

#[test]
fn semigroup_agrees_with_cauchy_solver() {
    let beta = 0.75;
    let g = GridSpec::new(1, PI, PI, 64, 64, GridSpec::uniform_times(0.0, 1.0, 9)).unwrap();
    let psi = make_test_field(&TestFieldSpec::new(8, [1.0, 3.0], [1.0, 4.0], Envelope::Constant), &g.with_times(vec![0.0])).unwrap();
    let f = cauchy_solve(&CauchyProblem { beta, psi: psi.clone(), source: None, grid: g.clone() }).unwrap();
    let r = semigroup_apply(&psi, 1.0, Direction::Forward, beta).unwrap();
    let from_solver = f.plain_samples(8, None);
    let from_semigroup = r.to_physical().samples;
    let err = from_solver.iter().zip(&from_semigroup).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let scale = from_semigroup.iter().map(|c| c.norm()).fold(0.0, f64::max);
    assert!(err < 1e-10 * scale.max(1e-12), "{err} {scale}");
}

#[test]
fn duality_of_forward_and_backward_operators() {
    let g = solver_grid(257);
    for beta in [0.5, 0.75, 1.0] {
        for seed in 0..5u64 {
            let env = Envelope::Bump { center: 0.5, half_width: 0.45 };
            let s = make_test_field(&TestFieldSpec::new(seed, [0.5, 2.0], [0.5, 2.5], env).shifted(), &g).unwrap();
            let t = make_test_field(&TestFieldSpec::new(seed + 100, [0.5, 2.0], [0.5, 2.5], env).shifted(), &g).unwrap();
            let kf = kolmogorov_apply(&s, Direction::Forward, beta).unwrap();
            let kb = kolmogorov_apply(&t, Direction::Backward, beta).unwrap();
            let a = kf.inner(&t).unwrap();
            let b = s.inner(&kb).unwrap();
            let scale = kf.l2_norm() * t.l2_norm();
            assert!((a - b).norm() < 1e-9 * scale, "beta {beta} seed {seed}: {a} vs {b}");
            let defect = pairing_derivative_check(&kf, &kb, Some(&s), Some(&t), beta).unwrap();
            assert!(defect < 1e-5, "beta {beta} seed {seed}: energy identity defect {defect}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn propagator_in_unit_interval_and_monotone(p in -4.0f64..4.0, x in -4.0f64..4.0, s in -1.0f64..1.0, h1 in 0.0f64..1.0, h2 in 0.0f64..1.0, beta in 0.3f64..1.0) {
        let a = propagator(s + h1, s, &[p, 0.0], &[x, 0.0], beta).unwrap();
        let b = propagator(s + h1 + h2, s, &[p, 0.0], &[x, 0.0], beta).unwrap();
        prop_assert!(a > 0.0 && a <= 1.0 && b <= a + 1e-15);
    }

    #[test]
    fn nondegeneracy_ratio_in_bounds(p in -10.0f64..10.0, x in -10.0f64..10.0) {
        prop_assume!(p.abs() + x.abs() > 1e-3);
        for beta in [0.5, 0.75, 1.0] {
            let (c1, c2) = nondegeneracy_constants(beta).unwrap();
            let r = nondegeneracy_ratio(&[p, 0.0], &[x, 0.0], beta).unwrap();
            prop_assert!(r >= c1 * (1.0 - 1e-9) && r <= c2 * (1.0 + 1e-9));
        }
    }
}
