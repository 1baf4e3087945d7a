use kolmokit::exponents::*;
use kolmokit::field::{SpectralField, ZERO};
use kolmokit::grid::norm;
use kolmokit::norms::dx_norm;
use kolmokit::solver::{kolmogorov_apply, Direction};
use kolmokit::verify::*;
use kolmokit::Error;
use proptest::prelude::*;

fn setup(beta: f64, gamma: f64, p: f64) -> CheckSetup {
    CheckSetup::new(KineticParams::new(beta, gamma, p, 1).unwrap())
}

#[test]
fn table_for_beta_one_line() {
    let t = exponent_table(1.0, 1, 2.0, 1.0).unwrap();
    assert_eq!(t.k_dim, 6.0);
    assert_eq!(t.kappa, 1.5);
    assert_eq!(t.p_kappa, 3.0);
    assert_eq!(t.two_lower, 1.5);
    assert_eq!(t.two_upper, 3.0);
    assert_eq!(t.trace_index, 0.0);
    assert_eq!(t.transfer_index, 1.0 / 3.0);
    // 1/q = 1/2 - 1/4
    assert_eq!(t.besov_sobolev_q, Some(4.0));
    // a = 2: a* = 12/4, a** = 18/3, a_flat = 6 * 4/6
    let h = t.hls.unwrap();
    assert_eq!((h.a_star, h.a_star_star, h.a_flat), (3.0, 6.0, 4.0));
}

#[test]
fn semigroup_target_exponent() {
    assert_eq!(semigroup_target(2.0, 1.0, 1).unwrap(), 3.0);
    assert_eq!(homogeneous_dim(0.5, 2), 1.0 + 6.0);
}

#[test]
fn range_errors_name_the_inequality() {
    let msg = |r: Result<ExponentTable, Error>| r.unwrap_err().to_string();
    assert!(msg(exponent_table(1.0, 1, 2.0, 3.0)).contains("gamma <= 2 beta"));
    assert!(msg(exponent_table(1.0, 1, 1.0, 1.0)).contains("1 < p"));
    assert!(msg(exponent_table(1.0, 1, 2.0, 0.0)).contains("0 < gamma"));
    // K/p = 6/4 < gamma = 2 = 2 beta
    assert!(msg(exponent_table(1.0, 1, 4.0, 2.0)).contains("gamma < K/p"));
    assert!(msg(exponent_table(1.5, 1, 2.0, 1.0)).contains("beta <= 1"));
    assert!(hls_exponents(3.0, 1.0, 1).unwrap_err().to_string().contains("a < K/(2 beta)"));
    assert!(hls_exponents(1.0, 1.0, 1).unwrap_err().to_string().contains("1 < a"));
    // p beyond K/(2 beta) drops the HLS block without failing
    assert!(exponent_table(1.0, 1, 3.5, 1.0).unwrap().hls.is_none());
}

proptest! {
    #[test]
    fn table_is_its_formulas(beta in 0.1f64..1.0, d in 1usize..4, p in 1.05f64..4.0, g in 0.01f64..1.0) {
        let k = 2.0 * beta + (2.0 * beta + 2.0) * d as f64;
        let gamma = g * (2.0 * beta).min(k / p) * 0.999;
        let t = exponent_table(beta, d, p, gamma).unwrap();
        prop_assert_eq!(t.k_dim, k);
        prop_assert_eq!(t.kappa, k / (k - gamma * p));
        prop_assert_eq!(t.p_kappa, p * (k / (k - gamma * p)));
        prop_assert_eq!(t.two_lower, 2.0 * k / (k + 2.0 * beta));
        prop_assert_eq!(t.two_upper, 2.0 * k / (k - 2.0 * beta));
        prop_assert_eq!(t.trace_index, gamma - 2.0 * beta / p);
        prop_assert_eq!(t.transfer_index, gamma / (2.0 * beta + 1.0));
        if let Some(h) = t.hls {
            let s1 = p * k / (k - p * beta);
            let s2 = s1 * k / (k - s1 * beta);
            prop_assert_eq!((h.a_star, h.a_star_star, h.a_flat), (s1, s2, s2 * (k - 2.0 * beta) / k));
        }
    }
}

#[test]
fn transfer_ratio_is_scale_robust() {
    // p = 2, gamma = beta: the L2 transfer setting
    for beta in [0.5, 1.0] {
        let st = transfer_check(&setup(beta, beta, 2.0)).unwrap();
        assert!(st.passes(0.02, 0.05), "{st:?}");
        assert!(st.max > 0.0 && st.skipped == 0);
    }
}

#[test]
fn x_independent_solution_has_no_x_regularity() {
    let s = setup(1.0, 1.0, 2.0).source(0, false).unwrap();
    // keep only phi = 0
    let phis = s.grid.phis();
    let nkv = s.grid.nkv();
    let mut s0 = s.clone();
    for (i, c) in s0.coeffs.iter_mut().enumerate() {
        if norm(&phis[(i / nkv) % phis.len()]) != 0.0 {
            *c = ZERO;
        }
    }
    let f = kolmogorov_apply(&s0, Direction::Forward, 1.0).unwrap();
    assert_eq!(dx_norm(&f, 1.0 / 3.0, 2.0).total, 0.0);
}

#[test]
fn sobolev_gain_exponent_is_sharp() {
    let r = sobolev_gain_check(&setup(1.0, 1.0, 2.0), 0.25).unwrap();
    assert_eq!(r.p_kappa, 3.0);
    assert!(r.stats.passes(0.02, 0.05), "{:?}", r.stats);
    assert_eq!(r.off_critical.len(), 2);
    for d in &r.off_critical {
        assert!((d.predicted - 1.0).abs() > 0.05, "off-critical q should drift");
        assert!(d.rel_err < 0.05, "{d:?}");
    }
}

#[test]
fn zero_source_is_skipped() {
    let st = setup(1.0, 1.0, 2.0);
    let z = SpectralField::zeros(st.source(0, false).unwrap().grid, kolmokit::Rep::Shifted);
    assert_eq!(sobolev_gain_ratio(&z, &st.params, 3.0).unwrap(), None);
    assert_eq!(transfer_ratio(&z, &st.params).unwrap(), None);
}

#[test]
fn sobolev_gain_rejects_supercritical_gamma() {
    // beta = 1, d = 1, p = 4: K/p = 1.5
    let e = sobolev_gain_check(&setup(1.0, 1.8, 4.0), 0.25).unwrap_err();
    assert!(e.to_string().contains("gamma < K/p"));
}

#[test]
fn lions_ratios_are_two_sided() {
    let r = lions_check(&setup(0.75, 0.75, 1.5)).unwrap();
    assert!(r.upper.passes(0.02, 0.05), "{:?}", r.upper);
    assert!(r.trace.passes(0.02, 0.05), "{:?}", r.trace);
    assert!(r.trace.min > 0.0 && r.trace.spread() < 10.0);
}

#[test]
fn hls_ratios_are_dilation_invariant() {
    let r = hls_check(&setup(1.0, 1.0, 2.0), 2.0, 2.0).unwrap();
    assert_eq!((r.a_star_star, r.semigroup_exponent), (6.0, 3.0));
    assert!(r.kolmogorov.passes(0.02, 0.05), "{:?}", r.kolmogorov);
    assert!(r.semigroup.passes(0.02, 0.05), "{:?}", r.semigroup);
    assert!(hls_check(&setup(1.0, 1.0, 2.0), 3.5, 2.0).is_err());
}

#[test]
fn decay_times_follow_the_gauge_law() {
    for beta in [0.5, 0.75, 1.0] {
        let r = uniqueness_decay(beta, &decay_grid(beta).unwrap(), 1e-12).unwrap();
        assert!((r.slope / (-2.0 * beta) - 1.0).abs() < 0.05, "beta {beta}: slope {}", r.slope);
        assert_eq!(r.outside_window, 0);
        assert!(r.heat_rate_rel_err < 0.01);
        assert!(r.fit_count > 1000);
        assert!(r.modes.iter().all(|m| norm(&m.phi) > 0.0 && m.t_star.is_finite()));
    }
}

#[test]
fn decay_time_of_heat_mode_is_explicit() {
    let t = decay_time(&[0.0, 0.0], &[2.0, 0.0], 1.0, 10.0).unwrap();
    assert!((t - 2.5).abs() < 1e-10);
    assert!(decay_time(&[0.0, 0.0], &[0.0, 0.0], 1.0, 10.0).is_err());
}
