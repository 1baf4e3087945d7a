//! Embedding, trace and HLS experiments as ratio statistics over random data, and the
//! mode-decay experiment behind uniqueness.
//!
//! A ratio is scale critical when both sides pick up the same power under the kinetic
//! dilation, so `r(f_lambda) = r(f)` up to discretisation. The dilated data live on the
//! rescaled box and are pushed through the solvers again, which makes the drift a test of the
//! solvers as much as of the exponents.

use crate::error::{Error, Result};
use crate::exponents::{hls_exponents, homogeneous_dim, semigroup_target, KineticParams};
use crate::field::SpectralField;
use crate::gauge::Gauge;
use crate::grid::{norm, GridSpec, V2};
use crate::lp::Profile;
use crate::norms::{aniso_sobolev_norm, besov_norm, besov_norms, dv_norm, dx_norm, lp_norm, z_norm, BesovMode, Method};
use crate::par;
use crate::shift::kinetic_dilate;
use crate::solver::{cauchy_solve, char_exponent, kolmogorov_apply, transport_term, CauchyProblem, Direction};
use crate::testfield::{make_test_field, Envelope, TestFieldSpec};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Random data and grids shared by the checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSetup {
    pub params: KineticParams,
    /// Modes per axis (`nx = nv`) on the `2 pi` box.
    pub n: usize,
    /// Time nodes on `[0, 1]` for sources.
    pub nt: usize,
    pub n_fields: usize,
    /// How many of the fields are recomputed on the refined grid.
    pub refine_fields: usize,
    pub seed: u64,
    pub lambda: f64,
    /// Horizon and node count of the semigroup experiments.
    pub horizon: f64,
    pub horizon_nt: usize,
    pub phi_annulus: [f64; 2],
    pub xi_annulus: [f64; 2],
}

impl CheckSetup {
    pub fn new(params: KineticParams) -> Self {
        CheckSetup {
            params,
            n: 32,
            nt: 33,
            n_fields: 4,
            refine_fields: 1,
            seed: 1,
            lambda: 2.0,
            horizon: 16.0,
            horizon_nt: 513,
            phi_annulus: [0.5, 3.0],
            xi_annulus: [0.5, 4.0],
        }
    }

    fn box_grid(&self, refine: bool, times: Vec<f64>) -> Result<GridSpec> {
        let n = if refine { 2 * self.n } else { self.n };
        GridSpec::new(self.params.d, 2.0 * PI, 2.0 * PI, n, n, times)
    }

    fn source_grid(&self, refine: bool) -> Result<GridSpec> {
        let nt = if refine { 2 * self.nt - 1 } else { self.nt };
        self.box_grid(refine, GridSpec::uniform_times(0.0, 1.0, nt))
    }

    /// Time-compact source in the shifted representation.
    pub fn source(&self, k: usize, refine: bool) -> Result<SpectralField> {
        let spec = TestFieldSpec::new(
            self.seed.wrapping_add(k as u64),
            self.phi_annulus,
            self.xi_annulus,
            Envelope::Bump { center: 0.5, half_width: 0.45 },
        )
        .shifted();
        make_test_field(&spec, &self.source_grid(refine)?)
    }

    /// Single-time plain datum.
    pub fn datum(&self, k: usize, refine: bool) -> Result<SpectralField> {
        let spec = TestFieldSpec::new(self.seed.wrapping_add(k as u64), self.phi_annulus, self.xi_annulus, Envelope::Constant);
        make_test_field(&spec, &self.box_grid(refine, vec![0.0])?)
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n_fields == 0 {
            return Err(Error::InvalidParameter("n_fields must be positive".into()));
        }
        if !(self.horizon > 0.0) || self.horizon_nt < 2 {
            return Err(Error::InvalidParameter("semigroup horizon needs T > 0 and two nodes".into()));
        }
        Ok(())
    }
}

/// Ratio statistics. `dilation_drift` is the worst `|r(f_lambda)/r(f) - 1|`,
/// `refinement_drift` the worst relative change under doubling every resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioStats {
    pub values: Vec<f64>,
    pub dilated: Vec<f64>,
    pub max: f64,
    pub min: f64,
    pub median: f64,
    pub dilation_drift: f64,
    pub refinement_drift: f64,
    /// Data with a zero denominator.
    pub skipped: usize,
}

impl RatioStats {
    fn from_parts(values: Vec<f64>, dilated: Vec<f64>, refined: &[(f64, f64)], skipped: usize) -> Self {
        let all: Vec<f64> = values.iter().chain(&dilated).copied().collect();
        let max = all.iter().copied().fold(f64::NAN, f64::max);
        let min = all.iter().copied().fold(f64::NAN, f64::min);
        let dilation_drift = values.iter().zip(&dilated).map(|(a, b)| (b / a - 1.0).abs()).fold(0.0, f64::max);
        let refinement_drift = refined.iter().map(|(a, b)| (b / a - 1.0).abs()).fold(0.0, f64::max);
        RatioStats { median: median(&values), values, dilated, max, min, dilation_drift, refinement_drift, skipped }
    }

    /// `max / min` over the data and their dilations.
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }

    pub fn passes(&self, dilation_tol: f64, refinement_tol: f64) -> bool {
        self.max.is_finite() && self.dilation_drift < dilation_tol && self.refinement_drift < refinement_tol
    }
}

pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// `num / den`, or `None` when the denominator vanishes.
fn guarded(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

/// Runs `ratio` on every datum, its dilation and the refined copies.
fn collect<D, R>(setup: &CheckSetup, datum: D, dilate: impl Fn(&SpectralField) -> Result<SpectralField>, ratio: R) -> Result<RatioStats>
where
    D: Fn(usize, bool) -> Result<SpectralField>,
    R: Fn(&SpectralField) -> Result<Option<f64>>,
{
    let (mut values, mut dilated, mut refined, mut skipped) = (Vec::new(), Vec::new(), Vec::new(), 0);
    for k in 0..setup.n_fields {
        let g = datum(k, false)?;
        let (Some(a), Some(b)) = (ratio(&g)?, ratio(&dilate(&g)?)?) else {
            skipped += 1;
            continue;
        };
        values.push(a);
        dilated.push(b);
        if k < setup.refine_fields {
            if let Some(c) = ratio(&datum(k, true)?)? {
                refined.push((a, c));
            }
        }
    }
    Ok(RatioStats::from_parts(values, dilated, &refined, skipped))
}

struct Solved {
    f: SpectralField,
    transport: SpectralField,
}

fn solve(s: &SpectralField, beta: f64) -> Result<Solved> {
    let f = kolmogorov_apply(s, Direction::Forward, beta)?;
    let transport = transport_term(&f, Some(s), beta)?;
    Ok(Solved { f, transport })
}

/// `||D_v^gamma f||_p + ||transport||_Z`, the right side shared by the embeddings.
fn kinetic_rhs(sol: &Solved, p: &KineticParams) -> Result<f64> {
    Ok(dv_norm(&sol.f, p.gamma, p.p).total + z_norm(&sol.transport, p.gamma, p.p, p.beta)?.value)
}

/// `||D_x^{gamma/(2 beta+1)} f||_p / (||D_v^gamma f||_p + ||transport||_Z)` for `f = K+ S`;
/// `None` when the right side vanishes.
pub fn transfer_ratio(s: &SpectralField, p: &KineticParams) -> Result<Option<f64>> {
    let sol = solve(s, p.beta)?;
    Ok(guarded(dx_norm(&sol.f, p.gamma / (2.0 * p.beta + 1.0), p.p).total, kinetic_rhs(&sol, p)?))
}

/// Transfer of velocity regularity to position over the setup's sources.
pub fn transfer_check(setup: &CheckSetup) -> Result<RatioStats> {
    setup.validate()?;
    let p = setup.params;
    collect(setup, |k, r| setup.source(k, r), |s| kinetic_dilate(s, setup.lambda, p.beta), |s| transfer_ratio(s, &p))
}

/// `||f||_{L^q} / RHS` for `f = K+ S`.
pub fn sobolev_gain_ratio(s: &SpectralField, p: &KineticParams, q: f64) -> Result<Option<f64>> {
    let sol = solve(s, p.beta)?;
    Ok(guarded(lp_norm(&sol.f, q).total, kinetic_rhs(&sol, p)?))
}

/// `||f||_{L^p_t X^{gamma,p}} / ||g||_B` for `f = R+ g`, Besov order `gamma - 2 beta/p`.
pub fn trace_ratio(g: &SpectralField, f: &SpectralField, p: &KineticParams) -> Result<Option<f64>> {
    let num = aniso_sobolev_norm(f, p.gamma, p.p, p.beta, Method::Multiplier, Profile::default())?.total;
    let s = p.gamma - 2.0 * p.beta / p.p;
    Ok(guarded(num, besov_norm(g, s, p.p, p.beta, BesovMode::Dyadic, Profile::default())?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LionsReport {
    /// `sup_t ||f(t)||_B / RHS` for `f = K+ S`.
    pub upper: RatioStats,
    /// `||R+ g||_{L^p_t X^{gamma,p}} / ||g||_B`, Besov order `gamma - 2 beta/p`.
    pub trace: RatioStats,
}

/// Two-sided trace ratio of the forward semigroup.
pub fn trace_check(setup: &CheckSetup) -> Result<RatioStats> {
    setup.validate()?;
    let p = setup.params;
    semigroup_ratio(setup, |g, f| trace_ratio(g, f, &p))
}

/// Ratio over `(g, R+ g)` with the solution on `[0, horizon]`; the dilated datum is evolved
/// over the dilated horizon so both see the same part of the orbit.
fn semigroup_ratio<R>(setup: &CheckSetup, ratio: R) -> Result<RatioStats>
where
    R: Fn(&SpectralField, &SpectralField) -> Result<Option<f64>>,
{
    let beta = setup.params.beta;
    let base_lv = 2.0 * PI;
    let run = |g: &SpectralField| -> Result<Option<f64>> {
        // the dilation shrinks lv by lambda and time by lambda^(2 beta)
        let ts = (g.grid.lv / base_lv).powf(2.0 * beta);
        let nt = if g.grid.nv > setup.n { 2 * setup.horizon_nt - 1 } else { setup.horizon_nt };
        let grid = g.grid.with_times(GridSpec::uniform_times(0.0, setup.horizon * ts, nt));
        let f = cauchy_solve(&CauchyProblem { beta, psi: g.clone(), source: None, grid })?;
        ratio(g, &f)
    };
    collect(setup, |k, r| setup.datum(k, r), |g| kinetic_dilate(g, setup.lambda, beta), run)
}

pub fn lions_check(setup: &CheckSetup) -> Result<LionsReport> {
    setup.validate()?;
    let p = setup.params;
    let s = p.gamma - 2.0 * p.beta / p.p;
    let upper = collect(
        setup,
        |k, r| setup.source(k, r),
        |s| kinetic_dilate(s, setup.lambda, p.beta),
        |src| {
            let sol = solve(src, p.beta)?;
            let sup = besov_norms(&sol.f, s, p.p, p.beta, BesovMode::Dyadic, Profile::default())?
                .into_iter()
                .fold(0.0, f64::max);
            Ok(guarded(sup, kinetic_rhs(&sol, &p)?))
        },
    )?;
    Ok(LionsReport { upper, trace: trace_check(setup)? })
}

/// Dilation factor of the `L^q` ratio against the prediction `lambda^{K/(p kappa) - K/q}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentDrift {
    pub q: f64,
    pub predicted: f64,
    /// Measured factor per datum.
    pub measured: Vec<f64>,
    /// Worst `|measured / predicted - 1|`.
    pub rel_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevGainReport {
    pub p_kappa: f64,
    pub stats: RatioStats,
    pub off_critical: Vec<ExponentDrift>,
}

/// `||f||_{L^{p kappa}} / RHS`, plus the drift of the same ratio at `q = p kappa +- q_offset`.
pub fn sobolev_gain_check(setup: &CheckSetup, q_offset: f64) -> Result<SobolevGainReport> {
    setup.validate()?;
    let p = setup.params;
    let k = homogeneous_dim(p.beta, p.d);
    if !(p.gamma > 0.0 && p.gamma < k / p.p) {
        return Err(Error::ExponentRange(format!("0 < gamma < K/p = {} fails for gamma = {}", k / p.p, p.gamma)));
    }
    let pk = p.p * k / (k - p.gamma * p.p);
    let qs: Vec<f64> = [pk - q_offset, pk + q_offset].into_iter().filter(|&q| q > 1.0 && q_offset > 0.0).collect();
    // base and dilated norms per datum: ([L^{p kappa}, L^q...], rhs)
    let measure = |src: &SpectralField| -> Result<(Vec<f64>, f64)> {
        let sol = solve(src, p.beta)?;
        let mut v = vec![lp_norm(&sol.f, pk).total];
        v.extend(qs.iter().map(|&q| lp_norm(&sol.f, q).total));
        Ok((v, kinetic_rhs(&sol, &p)?))
    };
    let stats = collect(
        setup,
        |k, r| setup.source(k, r),
        |s| kinetic_dilate(s, setup.lambda, p.beta),
        |src| sobolev_gain_ratio(src, &p, pk),
    )?;
    let mut measured = vec![Vec::new(); qs.len()];
    for j in 0..setup.n_fields {
        let s = setup.source(j, false)?;
        let (a, ra) = measure(&s)?;
        let (b, rb) = measure(&kinetic_dilate(&s, setup.lambda, p.beta)?)?;
        if ra == 0.0 || rb == 0.0 {
            continue;
        }
        for (i, m) in measured.iter_mut().enumerate() {
            m.push((b[i + 1] / rb) / (a[i + 1] / ra));
        }
    }
    let off_critical = qs
        .iter()
        .zip(measured)
        .map(|(&q, measured)| {
            let predicted = setup.lambda.powf(k / pk - k / q);
            let rel_err = measured.iter().map(|m| (m / predicted - 1.0).abs()).fold(0.0, f64::max);
            ExponentDrift { q, predicted, measured, rel_err }
        })
        .collect();
    Ok(SobolevGainReport { p_kappa: pk, stats, off_critical })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HlsReport {
    pub a: f64,
    pub a_star_star: f64,
    pub b: f64,
    pub semigroup_exponent: f64,
    /// `||K+ S||_{a**} / ||S||_a`.
    pub kolmogorov: RatioStats,
    /// `||R+ psi||_{b K/(K - 2 beta)} / ||psi||_b`.
    pub semigroup: RatioStats,
}

/// Source exponent `a` and datum exponent `b`; `setup.params` supplies `beta` and `d`.
pub fn hls_check(setup: &CheckSetup, a: f64, b: f64) -> Result<HlsReport> {
    setup.validate()?;
    let beta = setup.params.beta;
    let h = hls_exponents(a, beta, setup.params.d)?;
    let r = semigroup_target(b, beta, setup.params.d)?;
    let kolmogorov = collect(
        setup,
        |k, rf| setup.source(k, rf),
        |s| kinetic_dilate(s, setup.lambda, beta),
        |s| {
            let f = kolmogorov_apply(s, Direction::Forward, beta)?;
            Ok(guarded(lp_norm(&f, h.a_star_star).total, lp_norm(s, a).total))
        },
    )?;
    let semigroup = semigroup_ratio(setup, |g, f| Ok(guarded(lp_norm(f, r).total, lp_norm(g, b).total)))?;
    Ok(HlsReport { a, a_star_star: h.a_star_star, b, semigroup_exponent: r, kolmogorov, semigroup })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeDecay {
    pub phi: V2,
    pub xi: V2,
    pub radius: f64,
    /// First time the forward propagator falls to the threshold.
    pub t_star: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub beta: f64,
    pub threshold: f64,
    /// Modes with `phi != 0`.
    pub modes: Vec<ModeDecay>,
    /// Gauge radii `[R/4, R]` of the fit, `R` the largest ball the grid holds whole. Complete
    /// shells carry the same angular mix at every radius, so the fit is not biased by the
    /// box shape.
    pub fit_band: [f64; 2],
    pub fit_count: usize,
    /// Log-log slope of `t_star` against the gauge radius, and its intercept.
    pub slope: f64,
    pub intercept: f64,
    /// Range of `t_star * radius^(2 beta)` over the unit gauge sphere.
    pub window: [f64; 2],
    pub outside_window: usize,
    /// Worst relative error of the rate `ln(1/threshold) / t_star` against `|xi|^(2 beta)`
    /// over the `phi = 0` modes.
    pub heat_rate_rel_err: f64,
}

/// Time at which `exp(-int_0^t |xi - r phi|^(2 beta) dr)` reaches `exp(-level)`.
pub fn decay_time(phi: &V2, xi: &V2, beta: f64, level: f64) -> Result<f64> {
    if norm(phi) == 0.0 && norm(xi) == 0.0 {
        return Err(Error::InvalidParameter("the zero mode does not decay".into()));
    }
    let g = |t: f64| char_exponent(t, 0.0, phi, xi, beta).map(|e| e - level);
    let (mut lo, mut hi) = (0.0, 1.0 / Gauge::new(beta)?.eval(phi, xi).powf(2.0 * beta));
    while g(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    // the exponent is increasing and convex past its kink, so bisection then secant is safe
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Extremes of `t_star * d^(2 beta)` over the unit gauge sphere. In one dimension the sphere is
/// a curve parametrised by the direction of `(phi, xi)`; in two, the angle between `phi` and
/// `xi` is sampled as well.
fn decay_window(beta: f64, d: usize, level: f64, samples: usize) -> Result<[f64; 2]> {
    let gauge = Gauge::new(beta)?;
    let n_alpha = if d == 1 { 2 } else { 33 };
    let vals = par::map(samples * n_alpha, |i| -> Result<f64> {
        let th = PI * (i / n_alpha) as f64 / samples as f64;
        let al = if d == 1 { PI * (i % n_alpha) as f64 } else { PI * (i % n_alpha) as f64 / (n_alpha - 1) as f64 };
        let (c, s) = (th.cos(), th.sin());
        let phi = [c.abs(), 0.0];
        let xi = [s * al.cos(), s * al.sin()];
        let r = gauge.eval(&phi, &xi);
        let (p1, x1) = gauge.dilate(1.0 / r, &phi, &xi);
        decay_time(&p1, &x1, beta, level)
    });
    let mut w = [f64::INFINITY, 0.0f64];
    for v in vals {
        let v = v?;
        w[0] = w[0].min(v);
        w[1] = w[1].max(v);
    }
    Ok(w)
}

/// Decay times of every resolved nonzero mode of `grid`, the log-log fit against the gauge
/// radius and the window predicted by homogeneity.
pub fn uniqueness_decay(beta: f64, grid: &GridSpec, threshold: f64) -> Result<DecayReport> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!("threshold {threshold} outside (0, 1)")));
    }
    let gauge = Gauge::new(beta)?;
    let level = -threshold.ln();
    let phis = grid.phis();
    let xis = grid.xis();
    let nkv = grid.nkv();
    let all = par::map(phis.len() * nkv, |i| -> Result<Option<ModeDecay>> {
        let (phi, xi) = (phis[i / nkv], xis[i % nkv]);
        if norm(&phi) == 0.0 && norm(&xi) == 0.0 {
            return Ok(None);
        }
        let t_star = decay_time(&phi, &xi, beta, level)?;
        Ok(Some(ModeDecay { phi, xi, radius: gauge.eval(&phi, &xi), t_star }))
    });
    let mut modes = Vec::new();
    let mut heat_rate_rel_err: f64 = 0.0;
    for m in all {
        let Some(m) = m? else { continue };
        if norm(&m.phi) == 0.0 {
            let rate = level / m.t_star;
            heat_rate_rel_err = heat_rate_rel_err.max((rate / norm(&m.xi).powf(2.0 * beta) - 1.0).abs());
        } else {
            modes.push(m);
        }
    }
    if modes.is_empty() {
        return Err(Error::EmptySample);
    }
    let q = gauge.q();
    let big = (grid.max_mode(grid.nx, 0) as f64 * grid.dphi()).powf(1.0 / q).min(grid.max_mode(grid.nv, 0) as f64 * grid.dxi());
    let fit_band = [big / 4.0, big];
    let in_band: Vec<(f64, f64)> = modes
        .iter()
        .filter(|m| m.radius >= fit_band[0] && m.radius <= fit_band[1])
        .map(|m| (m.radius, m.t_star))
        .collect();
    if in_band.len() < 2 {
        return Err(Error::EmptySample);
    }
    let (slope, intercept) = log_log_fit(in_band.iter().copied());
    let w = decay_window(beta, grid.d, level, 2048)?;
    // the sampled extremes miss the true ones by O(h^2); allow a small margin
    let window = [w[0] * (1.0 - 1e-3), w[1] * (1.0 + 1e-3)];
    let outside_window = modes
        .iter()
        .filter(|m| {
            let c = m.t_star * m.radius.powf(2.0 * beta);
            c < window[0] || c > window[1]
        })
        .count();
    Ok(DecayReport { beta, threshold, modes, fit_band, fit_count: in_band.len(), slope, intercept, window, outside_window, heat_rate_rel_err })
}

/// One-dimensional grid whose resolved modes hold the gauge ball of radius 8 with
/// `xi`-spacing `1/4`, so the shells between 2 and 8 are well sampled.
pub fn decay_grid(beta: f64) -> Result<GridSpec> {
    let r: f64 = 8.0;
    let dphi = r.powf(2.0 * beta + 1.0) / 256.0;
    GridSpec::new(1, 2.0 * PI / dphi, 8.0 * PI, 1024, 128, vec![0.0])
}

/// Least-squares slope and intercept of `ln y` against `ln x`.
pub fn log_log_fit(pts: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = pts.map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
