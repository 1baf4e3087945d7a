//! Velocity Sobolev, anisotropic Sobolev and Besov norms, the source/target space norms and
//! the kinetic norms. All `L^p` norms are grid sums over the box, trapezoid in time.

use crate::error::{Error, Result};
use crate::field::{lp_pow_of_samples, SpectralField, C64};
use crate::gauge::Gauge;
use crate::grid::{norm, V2};
use crate::lp::{field_radius_range, log_bump, LpFamily, Profile};
use crate::par;
use crate::quad;
use serde::{Deserialize, Serialize};

/// Norm of every time slice plus the `L^p_t` aggregate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceNorms {
    pub per_time: Vec<f64>,
    pub total: f64,
}

impl SliceNorms {
    fn from_powers(f: &SpectralField, pows: Vec<f64>, p: f64) -> Self {
        let w = f.grid.time_weights();
        let total = pows.iter().zip(&w).map(|(a, w)| a * w).sum::<f64>().powf(1.0 / p);
        SliceNorms { per_time: pows.iter().map(|a| a.powf(1.0 / p)).collect(), total }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Littlewood–Paley square function.
    SquareFunction,
    /// Fourier multiplier (`|xi|^gamma` for the velocity space, `d^gamma` for the anisotropic one).
    Multiplier,
    /// Sum of the velocity and position pieces (anisotropic space only).
    Split,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BesovMode {
    Dyadic,
    Continuous,
}

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::LpRange(format!("p = {p} must lie in (1, inf)")))
    }
}

/// `|r|^a`, with 0 at the origin for negative powers (the test class avoids it).
#[inline]
fn pow0(r: f64, a: f64) -> f64 {
    if r == 0.0 {
        if a == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        r.powf(a)
    }
}

/// `|| F^-1(m f^) ||_{L^p}` per slice and aggregated.
pub fn multiplier_lp<M>(f: &SpectralField, m: M, p: f64) -> SliceNorms
where
    M: Fn(&V2, &V2) -> f64 + Sync + Send,
{
    let pows = par::map(f.grid.nt(), |it| {
        let s = f.plain_samples(it, Some(&m));
        lp_pow_of_samples(&f.grid, &s, p)
    });
    SliceNorms::from_powers(f, pows, p)
}

/// `|| (sum_j |c_j theta_j * f|^2)^(1/2) ||_{L^p}`.
pub fn square_function_lp(f: &SpectralField, fam: &LpFamily, gamma: f64, p: f64) -> SliceNorms {
    let js: Vec<i32> = fam.js().collect();
    let pows = par::map(f.grid.nt(), |it| {
        let mut acc = vec![0.0; f.grid.slice_len()];
        for &j in &js {
            let c = 2f64.powf(j as f64 * gamma);
            let m = |p: &V2, x: &V2| c * fam.weight(j, fam.radius(p, x));
            let s = f.plain_samples(it, Some(&m));
            acc.iter_mut().zip(&s).for_each(|(a, z)| *a += z.norm_sqr());
        }
        let s: Vec<C64> = acc.into_iter().map(|a| C64::new(a.sqrt(), 0.0)).collect();
        lp_pow_of_samples(&f.grid, &s, p)
    });
    SliceNorms::from_powers(f, pows, p)
}

/// Plain `L^p` norm.
pub fn lp_norm(f: &SpectralField, p: f64) -> SliceNorms {
    multiplier_lp(f, |_, _| 1.0, p)
}

/// `|| D_v^gamma f ||_{L^p}`.
pub fn dv_norm(f: &SpectralField, gamma: f64, p: f64) -> SliceNorms {
    multiplier_lp(f, |_, x| pow0(norm(x), gamma), p)
}

/// `|| D_x^a f ||_{L^p}`.
pub fn dx_norm(f: &SpectralField, a: f64, p: f64) -> SliceNorms {
    multiplier_lp(f, |ph, _| pow0(norm(ph), a), p)
}

/// Velocity Sobolev norm.
pub fn sobolev_v_norm(f: &SpectralField, gamma: f64, p: f64, method: Method, profile: Profile) -> Result<SliceNorms> {
    check_p(p)?;
    match method {
        Method::Multiplier => Ok(dv_norm(f, gamma, p)),
        Method::SquareFunction => {
            let fam = LpFamily::for_field(Gauge::new(1.0)?, profile, f, true)?;
            Ok(square_function_lp(f, &fam, gamma, p))
        }
        Method::Split => Err(Error::InvalidParameter("split applies to the anisotropic space".into())),
    }
}

/// Anisotropic Sobolev norm.
pub fn aniso_sobolev_norm(
    f: &SpectralField,
    gamma: f64,
    p: f64,
    beta: f64,
    method: Method,
    profile: Profile,
) -> Result<SliceNorms> {
    check_p(p)?;
    let gauge = Gauge::new(beta)?;
    let q = gauge.q();
    match method {
        Method::SquareFunction => {
            let fam = LpFamily::for_field(gauge, profile, f, false)?;
            Ok(square_function_lp(f, &fam, gamma, p))
        }
        Method::Multiplier => Ok(multiplier_lp(f, |ph, x| pow0(gauge.eval(ph, x), gamma), p)),
        Method::Split if gamma >= 0.0 => {
            let a = dv_norm(f, gamma, p);
            let b = dx_norm(f, gamma / q, p);
            Ok(sum_norms(&a, &b))
        }
        Method::Split => {
            if touches_axes(f) {
                return Err(Error::SupportOutOfRange("negative order split needs support off both axes".into()));
            }
            // S1 = |xi|^-g S / (|phi|^(-g/q) + |xi|^-g), S2 the rest
            let w1 = move |ph: &V2, x: &V2| {
                let (a, b) = (norm(ph).powf(-gamma / q), norm(x).powf(-gamma));
                b / (a + b)
            };
            let n1 = multiplier_lp(f, move |ph, x| w1(ph, x) * pow0(norm(x), gamma), p);
            let n2 = multiplier_lp(f, move |ph, x| (1.0 - w1(ph, x)) * pow0(norm(ph), gamma / q), p);
            Ok(sum_norms(&n1, &n2))
        }
    }
}

fn sum_norms(a: &SliceNorms, b: &SliceNorms) -> SliceNorms {
    SliceNorms {
        per_time: a.per_time.iter().zip(&b.per_time).map(|(x, y)| x + y).collect(),
        total: a.total + b.total,
    }
}

/// True when a nonzero coefficient sits on `phi = 0` or on plain `xi = 0`.
pub fn touches_axes(f: &SpectralField) -> bool {
    let g = &f.grid;
    let phis = g.phis();
    let xis = g.xis();
    let (nkx, nkv) = (g.nkx(), g.nkv());
    (0..g.nt()).any(|it| {
        (0..nkx).any(|kx| {
            (0..nkv).any(|kv| {
                f.coeffs[(it * nkx + kx) * nkv + kv] != crate::field::ZERO
                    && (norm(&phis[kx]) == 0.0 || norm(&f.plain_xi(g.t_grid[it], &phis[kx], &xis[kv])) == 0.0)
            })
        })
    })
}

/// Besov norm of every slice.
pub fn besov_norms(f: &SpectralField, gamma: f64, p: f64, beta: f64, mode: BesovMode, profile: Profile) -> Result<Vec<f64>> {
    check_p(p)?;
    let gauge = Gauge::new(beta)?;
    let Some((lo, hi)) = field_radius_range(f, &gauge, false) else {
        return Ok(vec![0.0; f.grid.nt()]);
    };
    match mode {
        BesovMode::Dyadic => {
            let fam = LpFamily::covering(gauge, profile, lo, hi, false)?;
            let js: Vec<i32> = fam.js().collect();
            Ok(par::map(f.grid.nt(), |it| {
                js.iter()
                    .map(|&j| {
                        let m = |ph: &V2, x: &V2| fam.weight(j, fam.radius(ph, x));
                        let s = f.plain_samples(it, Some(&m));
                        2f64.powf(j as f64 * gamma * p) * lp_pow_of_samples(&f.grid, &s, p)
                    })
                    .sum::<f64>()
                    .powf(1.0 / p)
            }))
        }
        BesovMode::Continuous => {
            // the block at scale s is log_bump(s^(1/(2 beta)) d): active for s^(1/(2b)) in (1/(2 hi), 2/lo)
            let b2 = 2.0 * beta;
            let (s0, s1) = ((0.5 / hi).powf(b2), (2.0 / lo).powf(b2));
            let panels = ((s1 / s0).log2().ceil() as usize).max(1) * 2;
            let nodes = quad::log_nodes(s0, s1, panels, 6);
            Ok(par::map(f.grid.nt(), |it| {
                nodes
                    .iter()
                    .map(|&(s, w)| {
                        let sc = s.powf(1.0 / b2);
                        let m = |ph: &V2, x: &V2| log_bump(sc * gauge.eval(ph, x));
                        let v = f.plain_samples(it, Some(&m));
                        // w carries ds; divide by s for ds/s
                        w / s * lp_pow_of_samples(&f.grid, &v, p) * s.powf(-gamma * p / b2)
                    })
                    .sum::<f64>()
                    .powf(1.0 / p)
            }))
        }
    }
}

/// Besov norm of a single-time field.
pub fn besov_norm(g: &SpectralField, gamma: f64, p: f64, beta: f64, mode: BesovMode, profile: Profile) -> Result<f64> {
    if g.grid.nt() != 1 {
        return Err(Error::DimensionMismatch("besov_norm takes a single time slice".into()));
    }
    Ok(besov_norms(g, gamma, p, beta, mode, profile)?[0])
}

/// Upper bound for the source-space norm and the splitting that attains it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZNorm {
    pub value: f64,
    pub chosen: String,
    pub candidates: Vec<(String, f64)>,
}

/// `min` over the candidate splittings `S = S1 + S2` of
/// `||S1||_{L^p_t X^{gamma-2beta,p}} + ||S2||_{L^1_t B^{gamma-2beta/p,p}}`.
/// Candidates: `S2 = 0`, `S1 = 0`, and `S2` the gauge-low part below `2^j` for each dyadic `j`
/// in the support. The anisotropic norm uses the gauge multiplier.
pub fn z_norm(s: &SpectralField, gamma: f64, p: f64, beta: f64) -> Result<ZNorm> {
    check_p(p)?;
    let gauge = Gauge::new(beta)?;
    let profile = Profile::default();
    let x_part = |f: &SpectralField| aniso_sobolev_norm(f, gamma - 2.0 * beta, p, beta, Method::Multiplier, profile).map(|n| n.total);
    let b_part = |f: &SpectralField| -> Result<f64> {
        let w = f.grid.time_weights();
        let b = besov_norms(f, gamma - 2.0 * beta / p, p, beta, BesovMode::Dyadic, profile)?;
        Ok(b.iter().zip(&w).map(|(a, w)| a * w).sum())
    };
    let mut candidates = vec![("s2_zero".to_string(), x_part(s)?), ("s1_zero".to_string(), b_part(s)?)];
    if let Some((lo, hi)) = field_radius_range(s, &gauge, false) {
        let j0 = lo.log2().floor() as i32;
        let j1 = hi.log2().ceil() as i32 + 1;
        for j in j0..=j1 {
            let c = 2f64.powi(j);
            let low = s.apply_multiplier(|ph, x| profile.eta(gauge.eval(ph, x) / c));
            let high = s.sub(&low)?;
            candidates.push((format!("low_cut_2^{j}"), x_part(&high)? + b_part(&low)?));
        }
    }
    let (chosen, value) = candidates
        .iter()
        .cloned()
        .fold((String::new(), f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
    Ok(ZNorm { value, chosen, candidates })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YNorm {
    /// `||f||_{L^p_t X^{gamma,p}}`.
    pub lp_x: f64,
    /// `sup_t ||f(t)||_{B^{gamma-2beta/p,p}}`.
    pub sup_b: f64,
    pub value: f64,
}

pub fn y_norm(f: &SpectralField, gamma: f64, p: f64, beta: f64) -> Result<YNorm> {
    let profile = Profile::default();
    let lp_x = aniso_sobolev_norm(f, gamma, p, beta, Method::Multiplier, profile)?.total;
    let sup_b = besov_norms(f, gamma - 2.0 * beta / p, p, beta, BesovMode::Dyadic, profile)?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(YNorm { lp_x, sup_b, value: lp_x.max(sup_b) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KineticKind {
    F,
    G,
    L,
}

/// `(||D_v^gamma f||^p + ||transport||^p)^(1/p)` with the transport measured in
/// `L^p_t H_v^{gamma-2beta}` (F), `L^p_t X^{gamma-2beta}` (G) or the source space (L).
pub fn kinetic_norm(f: &SpectralField, transport: &SpectralField, kind: KineticKind, gamma: f64, p: f64, beta: f64) -> Result<f64> {
    check_p(p)?;
    if !(0.0..=2.0 * beta).contains(&gamma) {
        return Err(Error::ExponentRange(format!("gamma = {gamma} outside [0, 2 beta]")));
    }
    let a = dv_norm(f, gamma, p).total;
    let g = gamma - 2.0 * beta;
    let b = match kind {
        KineticKind::F => dv_norm(transport, g, p).total,
        KineticKind::G => aniso_sobolev_norm(transport, g, p, beta, Method::Multiplier, Profile::default())?.total,
        KineticKind::L => z_norm(transport, gamma, p, beta)?.value,
    };
    Ok((a.powf(p) + b.powf(p)).powf(1.0 / p))
}
