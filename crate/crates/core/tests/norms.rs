use kolmokit::field::{Rep, SpectralField, C64};
use kolmokit::lp::Profile;
use kolmokit::norms::*;
use kolmokit::shift::kinetic_dilate;
use kolmokit::solver::{kolmogorov_apply, transport_term, Direction};
use kolmokit::testfield::{make_test_field, Envelope, TestFieldSpec};
use kolmokit::GridSpec;
use std::f64::consts::PI;

fn grid() -> GridSpec {
    GridSpec::new(1, 2.0 * PI, 2.0 * PI, 32, 32, vec![0.0]).unwrap()
}

fn field(seed: u64) -> SpectralField {
    make_test_field(&TestFieldSpec::new(seed, [0.5, 3.0], [0.5, 4.0], Envelope::Constant), &grid()).unwrap()
}

fn spread(v: &[f64]) -> f64 {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(0.0, f64::max);
    hi / lo
}

#[test]
fn gamma_zero_p_two_is_l2() {
    let f = field(1);
    let n = sobolev_v_norm(&f, 0.0, 2.0, Method::Multiplier, Profile::default()).unwrap().total;
    assert!((n - f.l2_norm()).abs() < 1e-10 * n);
    let a = aniso_sobolev_norm(&f, 0.0, 3.0, 0.75, Method::Multiplier, Profile::default()).unwrap().total;
    let l = lp_norm(&f, 3.0).total;
    assert!((a - l).abs() < 1e-10 * l);
    // at order zero each split term is the plain norm
    let s = aniso_sobolev_norm(&f, 0.0, 3.0, 0.75, Method::Split, Profile::default()).unwrap().total;
    assert!((s - 2.0 * l).abs() < 1e-10 * l);
    assert!(sobolev_v_norm(&f, 0.0, 1.0, Method::Multiplier, Profile::default()).is_err());
}

#[test]
fn single_velocity_mode_scales_as_power() {
    let g = grid();
    let mut f = SpectralField::zeros(g.clone(), Rep::Plain);
    let m = 5i64;
    let i = f.idx(0, g.kx_index([0, 0]).unwrap(), g.kv_index([m, 0]).unwrap());
    f.coeffs[i] = C64::new(1.0, 0.0);
    let xi0 = m as f64 * g.dxi();
    for gamma in [-0.5, 0.5, 1.3] {
        let n = dv_norm(&f, gamma, 3.0).total;
        let base = lp_norm(&f, 3.0).total;
        assert!((n / base - xi0.powf(gamma)).abs() < 1e-12 * xi0.powf(gamma));
    }
}

#[test]
fn velocity_square_function_tracks_multiplier() {
    for (gamma, p) in [(0.5, 2.0), (1.0, 3.0), (-0.5, 1.5)] {
        let r: Vec<f64> = (0..20)
            .map(|s| {
                let f = field(s);
                let a = sobolev_v_norm(&f, gamma, p, Method::SquareFunction, Profile::default()).unwrap().total;
                let b = sobolev_v_norm(&f, gamma, p, Method::Multiplier, Profile::default()).unwrap().total;
                a / b
            })
            .collect();
        assert!(spread(&r) < 1.1, "gamma {gamma} p {p}: {r:?}");
    }
}

#[test]
fn anisotropic_square_function_vs_split() {
    for beta in [0.5, 0.75, 1.0] {
        for gamma in [beta, 2.0 * beta, -beta] {
            let r: Vec<f64> = (0..20)
                .map(|s| {
                    let f = field(s);
                    let a = aniso_sobolev_norm(&f, gamma, 2.0, beta, Method::SquareFunction, Profile::default()).unwrap().total;
                    let b = aniso_sobolev_norm(&f, gamma, 2.0, beta, Method::Split, Profile::default()).unwrap().total;
                    a / b
                })
                .collect();
            assert!(r.iter().all(|x| x.is_finite() && *x > 0.0), "beta {beta} gamma {gamma}: {r:?}");
            assert!(spread(&r) < 2.0, "beta {beta} gamma {gamma}: {r:?}");
        }
    }
}

#[test]
fn velocity_term_dominates_for_velocity_heavy_fields() {
    let g = GridSpec::new(1, 8.0 * PI, PI, 32, 64, vec![0.0]).unwrap();
    // |phi| ~ 1/4 (gauge 0.63), |xi| ~ 20
    let f = make_test_field(&TestFieldSpec::new(3, [0.125, 0.375], [16.0, 24.0], Envelope::Constant), &g).unwrap();
    let v = dv_norm(&f, 1.0, 2.0).total;
    let x = dx_norm(&f, 1.0 / 3.0, 2.0).total;
    let s = aniso_sobolev_norm(&f, 1.0, 2.0, 1.0, Method::Split, Profile::default()).unwrap().total;
    assert!(v > 10.0 * x && (s - v) / s < 0.1);
}

#[test]
fn besov_equals_square_function_at_p2_up_to_constants() {
    let beta = 0.75;
    for gamma in [0.0, 0.75, -0.5] {
        let r: Vec<f64> = (0..20)
            .map(|s| {
                let f = field(s);
                let b = besov_norm(&f, gamma, 2.0, beta, BesovMode::Dyadic, Profile::default()).unwrap();
                let x = aniso_sobolev_norm(&f, gamma, 2.0, beta, Method::SquareFunction, Profile::default()).unwrap().total;
                b / x
            })
            .collect();
        // at p = 2 both are l2 sums of the same blocks: the ratio is exactly 1
        assert!(r.iter().all(|x| (x - 1.0).abs() < 1e-10), "{r:?}");
    }
}

#[test]
fn narrow_annulus_hits_at_most_two_blocks() {
    let g = grid();
    let mut f = SpectralField::zeros(g.clone(), Rep::Plain);
    let i = f.idx(0, g.kx_index([0, 0]).unwrap(), g.kv_index([8, 0]).unwrap());
    f.coeffs[i] = C64::new(1.0, 0.0);
    let j = f.idx(0, g.kx_index([0, 0]).unwrap(), g.kv_index([-8, 0]).unwrap());
    f.coeffs[j] = C64::new(1.0, 0.0);
    let gauge = kolmokit::gauge::Gauge::new(1.0).unwrap();
    let fam = kolmokit::lp::LpFamily::new(gauge, Profile::default(), -4, 6, false).unwrap();
    let live: Vec<i32> = fam.js().filter(|&j| fam.project(&f, j).unwrap().max_abs() > 0.0).collect();
    assert!(live.len() <= 2 && live.windows(2).all(|w| w[1] == w[0] + 1), "{live:?}");
    let total = fam.js().fold(SpectralField::zeros(g.clone(), Rep::Plain), |acc, j| acc.add(&fam.project(&f, j).unwrap()).unwrap());
    assert!(total.sub(&f).unwrap().max_abs() < 1e-12);
}

#[test]
fn dyadic_and_continuous_besov_are_comparable() {
    for p in [1.5, 2.0, 3.0] {
        let r: Vec<f64> = (0..20)
            .map(|s| {
                let f = field(s);
                let a = besov_norm(&f, 0.5, p, 0.5, BesovMode::Dyadic, Profile::default()).unwrap();
                let b = besov_norm(&f, 0.5, p, 0.5, BesovMode::Continuous, Profile::default()).unwrap();
                a / b
            })
            .collect();
        assert!(spread(&r) < 1.5, "p {p}: {r:?}");
    }
}

#[test]
fn profile_change_gives_equivalent_norms() {
    let other = Profile::new(0.9).unwrap();
    let r: Vec<f64> = (0..20)
        .map(|s| {
            let f = field(s);
            let a = aniso_sobolev_norm(&f, 0.5, 3.0, 0.5, Method::SquareFunction, Profile::default()).unwrap().total;
            let b = aniso_sobolev_norm(&f, 0.5, 3.0, 0.5, Method::SquareFunction, other).unwrap().total;
            a / b
        })
        .collect();
    assert!(spread(&r) < 1.5, "{r:?}");
}

#[test]
fn besov_duality_pairing_is_bounded() {
    let (gamma, p) = (0.5, 3.0);
    let pp = p / (p - 1.0);
    let c: Vec<f64> = (0..20)
        .map(|s| {
            let f = field(s);
            let g = field(s + 50);
            let pair = f.inner(&g).unwrap().norm();
            let a = besov_norm(&f, gamma, p, 0.75, BesovMode::Dyadic, Profile::default()).unwrap();
            let b = besov_norm(&g, -gamma, pp, 0.75, BesovMode::Dyadic, Profile::default()).unwrap();
            pair / (a * b)
        })
        .collect();
    assert!(c.iter().all(|x| x.is_finite() && *x < 10.0), "{c:?}");
}

#[test]
fn z_norm_candidates() {
    let g = GridSpec::new(1, 2.0 * PI, 2.0 * PI, 32, 32, GridSpec::uniform_times(0.0, 1.0, 65)).unwrap();
    let zero = SpectralField::zeros(g.clone(), Rep::Plain);
    assert_eq!(z_norm(&zero, 0.75, 2.0, 0.75).unwrap().value, 0.0);
    let wide = make_test_field(&TestFieldSpec::new(2, [0.5, 3.0], [0.5, 4.0], Envelope::Bump { center: 0.5, half_width: 0.45 }), &g).unwrap();
    let z = z_norm(&wide, 0.75, 2.0, 0.75).unwrap();
    let xonly = z.candidates.iter().find(|c| c.0 == "s2_zero").unwrap().1;
    assert!(z.value <= xonly);
    // a narrow pulse in time has small L^1_t norm compared with its L^p_t norm
    let pulse = make_test_field(&TestFieldSpec::new(2, [0.5, 3.0], [0.5, 4.0], Envelope::Bump { center: 0.5, half_width: 0.05 }), &g).unwrap();
    let z = z_norm(&pulse, 0.75, 3.0, 0.75).unwrap();
    let xonly = z.candidates.iter().find(|c| c.0 == "s2_zero").unwrap().1;
    assert!(z.value < xonly && z.chosen != "s2_zero", "{z:?}");
}

#[test]
fn y_norm_of_constant_profile() {
    let g = GridSpec::new(1, 2.0 * PI, 2.0 * PI, 32, 32, GridSpec::uniform_times(0.0, 2.0, 5)).unwrap();
    let f = make_test_field(&TestFieldSpec::new(4, [0.5, 3.0], [0.5, 4.0], Envelope::Constant), &g).unwrap();
    let y = y_norm(&f, 0.5, 3.0, 0.5).unwrap();
    let slice = y_norm(&f.at_time(0), 0.5, 3.0, 0.5).unwrap();
    assert!((y.lp_x - 2f64.powf(1.0 / 3.0) * slice.lp_x).abs() < 1e-12 * y.lp_x);
    assert!((y.sup_b - slice.sup_b).abs() < 1e-12 * y.sup_b);
    assert_eq!(y_norm(&SpectralField::zeros(g, Rep::Plain), 0.5, 3.0, 0.5).unwrap().value, 0.0);
}

#[test]
fn kinetic_norms_order_and_zero() {
    let g = GridSpec::new(1, 2.0 * PI, 2.0 * PI, 32, 32, GridSpec::uniform_times(0.0, 1.0, 65)).unwrap();
    let zero = SpectralField::zeros(g.clone(), Rep::Shifted);
    for k in [KineticKind::F, KineticKind::G, KineticKind::L] {
        assert_eq!(kinetic_norm(&zero, &zero, k, 0.5, 2.0, 0.5).unwrap(), 0.0);
    }
    for seed in 0..3 {
        let s = make_test_field(&TestFieldSpec::new(seed, [0.5, 3.0], [0.5, 4.0], Envelope::Bump { center: 0.5, half_width: 0.45 }).shifted(), &g).unwrap();
        let beta = 0.5;
        let f = kolmogorov_apply(&s, Direction::Forward, beta).unwrap();
        let tr = transport_term(&f, Some(&s), beta).unwrap();
        for gamma in [0.25, 0.5, 0.75] {
            let nf = kinetic_norm(&f, &tr, KineticKind::F, gamma, 2.0, beta).unwrap();
            let ng = kinetic_norm(&f, &tr, KineticKind::G, gamma, 2.0, beta).unwrap();
            let nl = kinetic_norm(&f, &tr, KineticKind::L, gamma, 2.0, beta).unwrap();
            assert!(nl <= ng * (1.0 + 1e-12) && ng <= nf * (1.0 + 1e-12), "{nl} {ng} {nf}");
            assert!(nl.is_finite() && nl > 0.0);
        }
        assert!(kinetic_norm(&f, &tr, KineticKind::F, 1.5, 2.0, beta).is_err());
    }
}

#[test]
fn dilation_scaling_of_velocity_norm() {
    let g = GridSpec::new(1, 2.0 * PI, 2.0 * PI, 32, 32, GridSpec::uniform_times(0.0, 1.0, 33)).unwrap();
    for beta in [0.5, 0.75, 1.0] {
        let kdim = 2.0 * beta + (2.0 * beta + 2.0);
        let f = make_test_field(&TestFieldSpec::new(5, [0.5, 3.0], [0.5, 4.0], Envelope::Bump { center: 0.5, half_width: 0.45 }).shifted(), &g).unwrap();
        let fl = kinetic_dilate(&f, 2.0, beta).unwrap();
        for (gamma, p) in [(0.0, 2.0), (beta, 1.5), (2.0 * beta, 3.0)] {
            let a = dv_norm(&f, gamma, p).total;
            let b = dv_norm(&fl, gamma, p).total;
            let expect = 2f64.powf(gamma - kdim / p);
            assert!(((b / a) / expect - 1.0).abs() < 0.01, "beta {beta} gamma {gamma} p {p}");
        }
    }
}
