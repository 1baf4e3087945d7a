use kolmokit::levy::{bad_density, levy_constant, LevySplit};
use kolmokit::solver::char_exponent;
use kolmokit::GridSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Closed forms of `int_0^inf int_S (1 - cos(u w_1)) u^(-1-2b) dw du`.
fn normalization_oracle(beta: f64, d: usize) -> f64 {
    let a = 2.0 * beta;
    if d == 1 {
        PI / (libm::tgamma(1.0 + a) * (PI * beta).sin())
    } else {
        2.0 * PI * 2f64.powf(-a) * libm::tgamma(1.0 - beta) / (a * libm::tgamma(1.0 + beta))
    }
}

#[test]
fn half_laplacian_constant_is_one_over_pi() {
    let c = levy_constant(0.5, 1).unwrap();
    assert!((c - 1.0 / PI).abs() < 1e-6, "{c}");
    assert!((c - 1.0 / normalization_oracle(0.5, 1)).abs() < 1e-10);
}

#[test]
fn constants_match_gamma_oracle() {
    for d in [1, 2] {
        for beta in [0.2, 0.35, 0.5, 0.75, 0.9] {
            let c = levy_constant(beta, d).unwrap();
            let want = 1.0 / normalization_oracle(beta, d);
            assert!(c > 0.0);
            assert!((c / want - 1.0).abs() < 1e-8, "beta={beta} d={d}: {c} vs {want}");
        }
    }
}

#[test]
fn representation_is_homogeneous() {
    for d in [1, 2] {
        for beta in [0.3, 0.5, 0.8] {
            let l = LevySplit::new(beta, d).unwrap();
            for s in [0.1f64, 0.7, 2.0, 13.0, 400.0, 5000.0] {
                let want = s.powf(2.0 * beta);
                assert!((l.represent(s) / want - 1.0).abs() < 1e-8, "d={d} beta={beta} s={s}");
            }
        }
    }
}

#[test]
fn rejects_out_of_range() {
    assert!(LevySplit::new(1.0, 1).is_err());
    assert!(LevySplit::new(0.0, 1).is_err());
    assert!(LevySplit::new(0.5, 3).is_err());
}

#[test]
fn split_adds_up_to_exponent() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (beta, d) in [(0.5, 1), (0.75, 1), (0.3, 2)] {
        let l = LevySplit::new(beta, d).unwrap();
        for _ in 0..100 {
            let mut p = [rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0)];
            let mut x = [rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0)];
            if d == 1 {
                p[1] = 0.0;
                x[1] = 0.0;
            }
            let g = l.psi_good(&p, &x).unwrap();
            let b = l.psi_bad(&p, &x).unwrap();
            let e = char_exponent(1.0, 0.0, &p, &x, beta).unwrap();
            assert!(g >= 0.0 && b >= 0.0);
            assert!(((g + b) / e - 1.0).abs() < 1e-6, "{p:?} {x:?}: {g}+{b} vs {e}");
        }
    }
}

#[test]
fn bad_part_on_velocity_axis_is_half_plus_bounded_tail() {
    let l = LevySplit::new(0.5, 1).unwrap();
    let mut worst: f64 = 0.0;
    for x in [0.5, 1.0, 4.0, 16.0, 64.0, 256.0] {
        let b = l.psi_bad(&[0.0, 0.0], &[x, 0.0]).unwrap();
        let tail = b - 0.5 * x;
        assert!(tail >= 0.0);
        worst = worst.max(tail);
    }
    // large jumps of size > 1 contribute at most c * int_1^inf 4 rho^-2 / 2
    assert!(worst <= 2.0 / PI + 1e-9, "{worst}");
}

#[test]
fn good_part_is_coercive() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for beta in [0.5, 0.75] {
        let l = LevySplit::new(beta, 1).unwrap();
        let mut lo = f64::MAX;
        for _ in 0..300 {
            let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
            let p = [scale * rng.gen_range(-1.0..1.0), 0.0];
            let x = [scale * rng.gen_range(-1.0..1.0), 0.0];
            lo = lo.min(l.coercivity_ratio(&p, &x).unwrap());
        }
        assert!(lo > 1e-3, "beta={beta}: c0={lo}");
    }
}

#[test]
fn bad_density_is_a_probability_density() {
    for beta in [0.5, 0.75] {
        let grid = GridSpec::new(1, 4.0, 4.0, 128, 128, vec![0.0]).unwrap();
        let b = bad_density(&grid, beta).unwrap();
        assert!((b.mass - 1.0).abs() < 1e-6, "mass {}", b.mass);
        assert!(b.min >= -1e-6 * b.peak, "min {} peak {} edge {}", b.min, b.peak, b.edge_symbol);
        assert!(b.v_profile_ratio.1.is_finite() && b.x_profile_ratio.1.is_finite());
    }
}
