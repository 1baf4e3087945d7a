//! Characteristic exponent, propagator, semigroups, Kolmogorov operators and the Cauchy solver.
//!
//! Everything runs in the shifted frame, where each Fourier mode `(phi, xi)` evolves by the
//! scalar equation `F' = -|xi - t phi|^(2 beta) F + G`.

use crate::error::{Error, Result};
use crate::field::{Rep, SpectralField, C64, ZERO};
use crate::grid::{dot, GridSpec, V2};
use crate::par;
use crate::quad;
use crate::shift::{kinetic_shift, ShiftDir};

pub const DEFAULT_RTOL: f64 = 1e-10;

/// `int_s^t |xi - tau phi|^(2 beta) dtau`.
pub fn char_exponent(t: f64, s: f64, phi: &V2, xi: &V2, beta: f64) -> Result<f64> {
    char_exponent_tol(t, s, phi, xi, beta, DEFAULT_RTOL)
}

pub fn char_exponent_tol(t: f64, s: f64, phi: &V2, xi: &V2, beta: f64, rtol: f64) -> Result<f64> {
    if t < s {
        return Err(Error::InvalidParameter(format!("char_exponent needs t >= s, got t={t}, s={s}")));
    }
    let h = t - s;
    if h == 0.0 {
        return Ok(0.0);
    }
    // reduce to int_0^h |a - r phi|^(2 beta) dr with a = xi - s phi
    let a = [xi[0] - s * phi[0], xi[1] - s * phi[1]];
    if beta == 1.0 {
        let v = dot(&a, &a) * h - dot(&a, phi) * h * h + dot(phi, phi) * h * h * h / 3.0;
        return Ok(v.max(0.0));
    }
    let aa = dot(phi, phi);
    if aa == 0.0 {
        return Ok(dot(&a, &a).powf(beta) * h);
    }
    let cross = a[0] * phi[1] - a[1] * phi[0];
    if cross == 0.0 {
        // collinear: a = alpha phi, integrand |phi|^(2b) |alpha - r|^(2b)
        let alpha = dot(&a, phi) / aa;
        return Ok(aa.powf(beta) * abs_power_integral(alpha, h, 2.0 * beta));
    }
    let b = -2.0 * dot(&a, phi);
    let c = dot(&a, &a);
    let f = |r: f64| ((aa * r + b) * r + c).max(0.0).powf(beta);
    let vertex = -b / (2.0 * aa);
    let mut total = 0.0;
    let mut lo = 0.0;
    for cut in [vertex, h] {
        if cut > lo && cut <= h {
            total += quad::adaptive(f, lo, cut, 32, rtol, 0.0)?;
            lo = cut;
        }
    }
    Ok(total)
}

/// `int_0^h |alpha - r|^e dr` in closed form, avoiding cancellation for short intervals.
fn abs_power_integral(alpha: f64, h: f64, e: f64) -> f64 {
    let q = e + 1.0;
    let b = alpha - h;
    if alpha == 0.0 || b == 0.0 || (alpha > 0.0) != (b > 0.0) {
        return (alpha.abs().powf(q) + b.abs().powf(q)) / q;
    }
    // same side of the vertex: | |alpha|^q - |b|^q | / q
    let diff = -alpha.abs().powf(q) * (q * (-h / alpha).ln_1p()).exp_m1();
    diff.abs() / q
}

pub fn propagator(t: f64, s: f64, phi: &V2, xi: &V2, beta: f64) -> Result<f64> {
    Ok((-char_exponent(t, s, phi, xi, beta)?).exp())
}

/// `int_0^1 |xi - r phi|^(2 beta) dr / (|phi|^(2 beta) + |xi|^(2 beta))`.
pub fn nondegeneracy_ratio(phi: &V2, xi: &V2, beta: f64) -> Result<f64> {
    let den = dot(phi, phi).powf(beta) + dot(xi, xi).powf(beta);
    if den == 0.0 {
        return Err(Error::InvalidParameter("nondegeneracy ratio at the origin".into()));
    }
    Ok(char_exponent(1.0, 0.0, phi, xi, beta)? / den)
}

/// Exact extreme values `(c1, c2)` of the nondegeneracy ratio. By homogeneity and rotation the
/// ratio depends on `xi / |phi|` only; the minimum sits on the line through `phi` and the
/// maximum at the axes, so a one-dimensional search suffices.
pub fn nondegeneracy_constants(beta: f64) -> Result<(f64, f64)> {
    let r = |x: f64| nondegeneracy_ratio(&[1.0, 0.0], &[x, 0.0], beta).unwrap_or(f64::NAN);
    // the minimiser is x = 1/2 by the symmetry x -> 1 - x; confirm by a scan
    let mut best = (0.5, r(0.5));
    for k in 0..=4000 {
        let x = -2.0 + 5.0 * k as f64 / 4000.0;
        let v = r(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let (mut a, mut b) = (best.0 - 0.002, best.0 + 0.002);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if r(c) < r(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let c1 = r(0.5 * (a + b)).min(best.1);
    let mut c2: f64 = 1.0 / (2.0 * beta + 1.0);
    for k in 0..=4000 {
        let x = -50.0 + 100.0 * k as f64 / 4000.0;
        c2 = c2.max(r(x));
    }
    Ok((c1, c2.max(1.0)))
}

/// Direction of the semigroups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

/// Whole number of xi-lattice steps the shear `xi -> xi + t phi` moves per unit x-mode.
fn shear_steps(grid: &GridSpec, t: f64) -> Result<i64> {
    let n = t * grid.lv / grid.lx;
    let r = n.round();
    if (n - r).abs() > 1e-9 * n.abs().max(1.0) {
        return Err(Error::UnresolvedShear(format!(
            "t = {t} gives a shear of {n} xi-steps per x-mode; needs an integer"
        )));
    }
    Ok(r as i64)
}

/// The initial value semigroups on a single-time plain field. Forward needs `t >= 0`,
/// backward `t <= 0`; the frequency shear `xi -> xi + t phi` must map lattice to lattice.
pub fn semigroup_apply(g: &SpectralField, t: f64, dir: Direction, beta: f64) -> Result<SpectralField> {
    if g.grid.nt() != 1 {
        return Err(Error::DimensionMismatch("semigroup_apply takes a single-time field".into()));
    }
    if g.rep != Rep::Plain {
        return Err(Error::RepMismatch { expected: "plain", found: g.rep.name() });
    }
    match dir {
        Direction::Forward if t < 0.0 => return Err(Error::InvalidParameter("forward semigroup needs t >= 0".into())),
        Direction::Backward if t > 0.0 => return Err(Error::InvalidParameter("backward semigroup needs t <= 0".into())),
        _ => {}
    }
    let grid = &g.grid;
    let n = shear_steps(grid, t)?;
    let phis = grid.phis();
    let xis = grid.xis();
    let mut out = SpectralField::zeros(grid.clone(), Rep::Plain);
    for kx in 0..grid.nkx() {
        let mk = grid.kx_modes(kx);
        for kv in 0..grid.nkv() {
            let c = g.coeffs[g.idx(0, kx, kv)];
            if c == ZERO {
                continue;
            }
            // source mode m' feeds target m = m' - n k
            let mm = grid.kv_modes(kv);
            let target = [mm[0] - n * mk[0], mm[1] - n * mk[1]];
            let Some(tv) = grid.kv_index(target) else {
                return Err(Error::UnresolvedShear(format!("mode {mk:?},{mm:?} is sheared off the grid")));
            };
            let phi = &phis[kx];
            let xi = &xis[tv];
            let e = match dir {
                Direction::Forward => char_exponent(t, 0.0, phi, &[-xi[0], -xi[1]], beta)?,
                Direction::Backward => char_exponent(-t, 0.0, phi, xi, beta)?,
            };
            let i = out.idx(0, kx, tv);
            out.coeffs[i] = c * (-e).exp();
        }
    }
    Ok(out)
}

/// Precomputed per-interval quadrature: Gauss nodes and Lagrange weights onto the time grid.
struct IntervalRule {
    nodes: Vec<(f64, f64)>,
    start: usize,
    lag: Vec<Vec<f64>>,
}

const PANEL_NODES: usize = 8;
const STENCIL: usize = 8;

fn interval_rules(times: &[f64]) -> Vec<IntervalRule> {
    let width = STENCIL.min(times.len());
    (0..times.len().saturating_sub(1))
        .map(|i| {
            let nodes = quad::composite_nodes(times[i], times[i + 1], 1, PANEL_NODES);
            let mid = 0.5 * (times[i] + times[i + 1]);
            let start = quad::stencil_start(times, mid, width);
            let stencil = &times[start..start + width];
            let lag = nodes.iter().map(|(s, _)| quad::lagrange_weights(stencil, *s)).collect();
            IntervalRule { nodes, start, lag }
        })
        .collect()
}

/// Nodes, weights and interpolated source values on one interval. An interval containing the
/// mode's kink time is split there so each panel sees a smooth integrand.
fn panel_values(rule: &IntervalRule, times: &[f64], src: &[C64], kink: Option<f64>) -> Vec<(f64, f64, C64)> {
    let width = rule.lag[0].len();
    let window = &src[rule.start..rule.start + width];
    let (a, b) = (rule.nodes[0].0, rule.nodes[rule.nodes.len() - 1].0);
    match kink {
        Some(c) if c > a.min(times[0]) && c < b.max(times[times.len() - 1]) && inside_interval(rule, times, c) => {
            let lo = times[times.partition_point(|&t| t < a) - 1];
            let hi = times[times.partition_point(|&t| t <= b)];
            let stencil = &times[rule.start..rule.start + width];
            let mut nodes = quad::composite_nodes(lo, c, 1, PANEL_NODES);
            nodes.extend(quad::composite_nodes(c, hi, 1, PANEL_NODES));
            nodes
                .into_iter()
                .map(|(s, w)| {
                    let l = quad::lagrange_weights(stencil, s);
                    let v: C64 = window.iter().zip(&l).map(|(g, c)| g * c).sum();
                    (s, w, v)
                })
                .collect()
        }
        _ => rule
            .nodes
            .iter()
            .zip(&rule.lag)
            .map(|((s, w), l)| {
                let v: C64 = window.iter().zip(l).map(|(g, c)| g * c).sum();
                (*s, *w, v)
            })
            .collect(),
    }
}

fn inside_interval(rule: &IntervalRule, times: &[f64], c: f64) -> bool {
    let i = times.partition_point(|&t| t < rule.nodes[0].0);
    i >= 1 && i < times.len() && c > times[i - 1] && c < times[i]
}

/// Per-mode Duhamel recursion in the shifted frame.
/// `init`: value at the first (forward) or last (backward) time.
fn evolve_modes(
    grid: &GridSpec,
    src: Option<&SpectralField>,
    init: Option<&[C64]>,
    dir: Direction,
    beta: f64,
) -> Result<SpectralField> {
    let nt = grid.nt();
    let nkx = grid.nkx();
    let nkv = grid.nkv();
    let times = &grid.t_grid;
    let rules = interval_rules(times);
    let phis = grid.phis();
    let xis = grid.xis();
    let rows: Vec<Result<Vec<C64>>> = par::map(nkx, |kx| {
        let phi = &phis[kx];
        let mut row = vec![ZERO; nkv * nt];
        let mut series = vec![ZERO; nt];
        for kv in 0..nkv {
            let xi = &xis[kv];
            let start = init.map(|v| v[kx * nkv + kv]).unwrap_or(ZERO);
            if let Some(s) = src {
                for (it, v) in series.iter_mut().enumerate() {
                    *v = s.coeffs[(it * nkx + kx) * nkv + kv];
                }
            }
            let has_src = src.is_some() && series.iter().any(|c| *c != ZERO);
            if start == ZERO && !has_src {
                continue;
            }
            let out = &mut row[kv * nt..(kv + 1) * nt];
            let kink = kink_time(phi, xi, beta);
            match dir {
                Direction::Forward => {
                    out[0] = start;
                    for i in 0..nt - 1 {
                        let (a, b) = (times[i], times[i + 1]);
                        let mut acc = out[i] * (-char_exponent(b, a, phi, xi, beta)?).exp();
                        if has_src {
                            for (s, w, g) in panel_values(&rules[i], times, &series, kink) {
                                acc += g * (w * (-char_exponent(b, s, phi, xi, beta)?).exp());
                            }
                        }
                        out[i + 1] = acc;
                    }
                }
                Direction::Backward => {
                    out[nt - 1] = start;
                    for i in (0..nt - 1).rev() {
                        let (a, b) = (times[i], times[i + 1]);
                        let mut acc = out[i + 1] * (-char_exponent(b, a, phi, xi, beta)?).exp();
                        if has_src {
                            for (s, w, g) in panel_values(&rules[i], times, &series, kink) {
                                acc += g * (w * (-char_exponent(s, a, phi, xi, beta)?).exp());
                            }
                        }
                        out[i] = acc;
                    }
                }
            }
        }
        Ok(row)
    });
    let mut f = SpectralField::zeros(grid.clone(), Rep::Shifted);
    for (kx, row) in rows.into_iter().enumerate() {
        let row = row?;
        for kv in 0..nkv {
            for it in 0..nt {
                f.coeffs[(it * nkx + kx) * nkv + kv] = row[kv * nt + it];
            }
        }
    }
    Ok(f)
}

/// The field in the shifted frame (a copy if it already is).
pub fn to_shifted(f: &SpectralField) -> Result<SpectralField> {
    match f.rep {
        Rep::Shifted => Ok(f.clone()),
        Rep::Plain => kinetic_shift(f, ShiftDir::Forward),
    }
}

/// Relative size of the first and last slices; a time-compact source vanishes there.
fn check_time_compact(s: &SpectralField) -> Result<()> {
    let peak = s.max_abs();
    if peak == 0.0 {
        return Ok(());
    }
    let nt = s.grid.nt();
    let edge = s.slice(0).iter().chain(s.slice(nt - 1)).map(|c| c.norm()).fold(0.0, f64::max);
    if edge > 1e-14 * peak {
        return Err(Error::NotTimeCompact(format!("source is {:.3e} of its peak at the time-grid ends", edge / peak)));
    }
    Ok(())
}

/// Forward (`f(t) = int_{-inf}^t`) or backward (`int_t^inf`) Kolmogorov operator. The result is
/// returned in the shifted representation, which evaluates exactly to plain samples.
pub fn kolmogorov_apply(s: &SpectralField, dir: Direction, beta: f64) -> Result<SpectralField> {
    check_time_compact(s)?;
    let ss = to_shifted(s)?;
    evolve_modes(&s.grid, Some(&ss), None, dir, beta)
}

/// `(-Lap_v)^beta` as the multiplier `|xi|^(2 beta)` in the function's own frequencies.
pub fn fractional_laplacian_v(f: &SpectralField, beta: f64) -> SpectralField {
    f.apply_multiplier(|_, x| dot(x, x).powf(beta))
}

/// Time derivative of each coefficient by sixth-order differences on a uniform grid.
pub fn time_derivative(f: &SpectralField) -> Result<SpectralField> {
    time_derivative_split(f, |_, _| None)
}

/// Time of the velocity-frequency zero crossing `xi = t phi` of a shifted-frame mode, where
/// the rate `|xi - t phi|^(2 beta)` fails to be smooth for `beta < 1`.
pub fn kink_time(phi: &V2, xi: &V2, beta: f64) -> Option<f64> {
    if beta == 1.0 {
        return None;
    }
    let pp = dot(phi, phi);
    if pp == 0.0 || xi[0] * phi[1] - xi[1] * phi[0] != 0.0 {
        return None;
    }
    Some(dot(xi, phi) / pp)
}

/// Sixth-order differences per mode whose stencils never straddle the mode's `kink` time.
pub fn time_derivative_split<K>(f: &SpectralField, kink: K) -> Result<SpectralField>
where
    K: Fn(&V2, &V2) -> Option<f64> + Sync + Send,
{
    let g = &f.grid;
    let nt = g.nt();
    if nt < 7 {
        return Err(Error::TimeGrid("sixth-order differences need at least 7 times".into()));
    }
    if !g.is_uniform_in_time() {
        return Err(Error::TimeGrid("time derivative needs a uniform time grid".into()));
    }
    let (nkx, nkv) = (g.nkx(), g.nkv());
    let phis = g.phis();
    let xis = g.xis();
    let rows: Vec<Vec<C64>> = par::map(nkx, |kx| {
        let mut row = vec![ZERO; nkv * nt];
        let mut series = vec![ZERO; nt];
        for kv in 0..nkv {
            for (it, v) in series.iter_mut().enumerate() {
                *v = f.coeffs[(it * nkx + kx) * nkv + kv];
            }
            if series.iter().all(|c| *c == ZERO) {
                continue;
            }
            let d = series_derivative(&series, &g.t_grid, kink(&phis[kx], &xis[kv]));
            row[kv * nt..(kv + 1) * nt].copy_from_slice(&d);
        }
        row
    });
    let mut out = SpectralField::zeros(g.clone(), f.rep);
    for (kx, row) in rows.iter().enumerate() {
        for kv in 0..nkv {
            for it in 0..nt {
                out.coeffs[(it * nkx + kx) * nkv + kv] = row[kv * nt + it];
            }
        }
    }
    Ok(out)
}

/// Derivative of one uniformly sampled series, smooth on either side of `kink`.
pub fn series_derivative(y: &[C64], t: &[f64], kink: Option<f64>) -> Vec<C64> {
    let nt = y.len();
    let dt = (t[nt - 1] - t[0]) / (nt - 1) as f64;
    let split = kink.filter(|&c| c > t[0] && c < t[nt - 1]).map(|c| t.partition_point(|&s| s <= c));
    (0..nt)
        .map(|it| {
            let (lo, hi) = match split {
                Some(k) if it < k => (0, k),
                Some(k) => (k, nt),
                None => (0, nt),
            };
            let w = STENCIL_FD.min(hi - lo);
            if w < 2 {
                return ZERO;
            }
            let start = it.saturating_sub(w / 2).max(lo).min(hi - w);
            let nodes: Vec<f64> = (0..w).map(|i| i as f64).collect();
            let weights = derivative_weights(&nodes, (it - start) as f64);
            y[start..start + w].iter().zip(&weights).map(|(v, c)| v * (c / dt)).sum()
        })
        .collect()
}

const STENCIL_FD: usize = 7;

/// Seven-point first-derivative weights at positions 0..=6 of a uniform stencil.
#[cfg(test)]
fn fd_stencils() -> Vec<Vec<f64>> {
    let nodes: Vec<f64> = (0..7).map(|i| i as f64).collect();
    (0..7).map(|p| derivative_weights(&nodes, p as f64)).collect()
}

/// First-derivative weights of the Lagrange interpolant at `x`.
fn derivative_weights(nodes: &[f64], x: f64) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|i| {
            let mut total = 0.0;
            for k in 0..n {
                if k == i {
                    continue;
                }
                let mut term = 1.0 / (nodes[i] - nodes[k]);
                for j in 0..n {
                    if j != i && j != k {
                        term *= (x - nodes[j]) / (nodes[i] - nodes[j]);
                    }
                }
                total += term;
            }
            total
        })
        .collect()
}

/// `(d_t + v.grad_x) f`. With a source: `S - (-Lap_v)^beta f`. Without: the time derivative of
/// the shifted coefficients. Both are returned in the shifted representation.
pub fn transport_term(f: &SpectralField, s: Option<&SpectralField>, beta: f64) -> Result<SpectralField> {
    let fs = to_shifted(f)?;
    match s {
        Some(s) => to_shifted(s)?.sub(&fractional_laplacian_v(&fs, beta)),
        None => time_derivative_split(&fs, |p, x| kink_time(p, x, beta)),
    }
}

/// `d_t Gf + |xi - t phi|^(2 beta) Gf - GS` in the shifted frame.
pub fn residual_field(f: &SpectralField, s: Option<&SpectralField>, beta: f64) -> Result<SpectralField> {
    let fs = to_shifted(f)?;
    let mut r = time_derivative_split(&fs, |p, x| kink_time(p, x, beta))?.add(&fractional_laplacian_v(&fs, beta))?;
    if let Some(s) = s {
        r = r.sub(&to_shifted(s)?)?;
    }
    Ok(r)
}

/// Space-time L2 residual of the equation, relative to the source norm when it is nonzero.
pub fn residual(f: &SpectralField, s: Option<&SpectralField>, beta: f64) -> Result<f64> {
    let r = residual_field(f, s, beta)?.l2_norm();
    let sn = s.map(|s| s.l2_norm()).unwrap_or(0.0);
    Ok(if sn > 0.0 { r / sn } else { r })
}

#[derive(Clone, Debug)]
pub struct CauchyProblem {
    pub beta: f64,
    /// Initial datum: a single-time field (its time value is ignored).
    pub psi: SpectralField,
    /// Source on the solution's time grid, or none.
    pub source: Option<SpectralField>,
    /// Output time grid, starting at 0.
    pub grid: GridSpec,
}

/// `f(t) = R_t psi + int_0^t R_{t-s} S(s) ds`, returned in the shifted representation.
pub fn cauchy_solve(p: &CauchyProblem) -> Result<SpectralField> {
    if p.grid.t_grid[0] != 0.0 {
        return Err(Error::TimeGrid("the Cauchy problem starts at t = 0".into()));
    }
    if !(p.beta > 0.0 && p.beta <= 1.0) {
        return Err(Error::InvalidParameter(format!("beta = {} outside (0, 1]", p.beta)));
    }
    if p.psi.grid.nt() != 1 || p.psi.grid.with_times(p.grid.t_grid.clone()) != p.grid {
        return Err(Error::DimensionMismatch("initial datum must be one slice on the solution box".into()));
    }
    let src = match &p.source {
        Some(s) => {
            if s.grid != p.grid {
                return Err(Error::DimensionMismatch("source grid differs from the solution grid".into()));
            }
            Some(to_shifted(s)?)
        }
        None => None,
    };
    // at t = 0 the shift is the identity, so either representation of psi is its own shift
    evolve_modes(&p.grid, src.as_ref(), Some(&p.psi.coeffs), Direction::Forward, p.beta)
}

/// Defect of the polarized energy identity `d/dt <f, g> = <S, g> - <f, T>` for a forward
/// solution `f` with source `S` and a backward solution `g` with source `T`.
/// The left side is differentiated mode by mode (each product is smooth away from its own
/// kink time). Returns `max_t |lhs - rhs|` relative to `max_t |rhs|` (absolute when rhs vanishes).
pub fn pairing_derivative_check(
    f: &SpectralField,
    g: &SpectralField,
    s: Option<&SpectralField>,
    t: Option<&SpectralField>,
    beta: f64,
) -> Result<f64> {
    let fs = to_shifted(f)?;
    let gs = to_shifted(g)?;
    let grid = &fs.grid;
    let nt = grid.nt();
    let mut prod = fs.clone();
    prod.coeffs.iter_mut().zip(&gs.coeffs).for_each(|(a, b)| *a *= b.conj());
    let d = time_derivative_split(&prod, |p, x| kink_time(p, x, beta))?;
    let vol = grid.volume();
    let ss = s.map(to_shifted).transpose()?;
    let ts = t.map(to_shifted).transpose()?;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for it in 0..nt {
        let mut rhs = ZERO;
        if let Some(ss) = &ss {
            rhs += ss.inner_slice(it, &gs, it);
        }
        if let Some(ts) = &ts {
            rhs -= fs.inner_slice(it, ts, it);
        }
        let l: C64 = d.slice(it).iter().sum::<C64>() * vol;
        worst = worst.max((l - rhs).norm());
        scale = scale.max(rhs.norm());
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_values() {
        let v = char_exponent(1.0, 0.0, &[1.0, 0.0], &[1.0, 0.0], 1.0).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
        let v = char_exponent(1.0, 0.0, &[2.0, 0.0], &[1.0, 0.0], 0.5).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        assert!(char_exponent(0.0, 1.0, &[1.0, 0.0], &[1.0, 0.0], 0.5).is_err());
    }

    #[test]
    fn closed_form_matches_quadrature_path() {
        // a slightly rotated phi forces the quadrature branch
        let (p, x) = ([1.3, 0.0], [0.4, 0.0]);
        let exact = char_exponent(2.0, 0.5, &p, &x, 0.75).unwrap();
        let tilt = [1.3, 1e-9];
        let q = char_exponent(2.0, 0.5, &tilt, &x, 0.75).unwrap();
        assert!((exact - q).abs() < 1e-8 * exact);
    }

    #[test]
    fn short_interval_is_stable() {
        let v = abs_power_integral(3.0, 1e-12, 1.5);
        assert!((v - 3f64.powf(1.5) * 1e-12).abs() < 1e-20);
    }

    #[test]
    fn difference_weights_are_sixth_order() {
        let st = fd_stencils();
        let c = [-1.0 / 60.0, 3.0 / 20.0, -0.75, 0.0, 0.75, -3.0 / 20.0, 1.0 / 60.0];
        for (a, b) in st[3].iter().zip(c) {
            assert!((a - b).abs() < 1e-13);
        }
        for w in &st {
            for k in 0..=6 {
                let got: f64 = w.iter().enumerate().map(|(i, wi)| wi * (i as f64).powi(k)).sum();
                let pos = st.iter().position(|s| std::ptr::eq(s, w)).unwrap() as f64;
                let expect = if k == 0 { 0.0 } else { k as f64 * pos.powi(k - 1) };
                assert!((got - expect).abs() < 1e-8, "k={k}");
            }
        }
    }

    #[test]
    fn nondegeneracy_minimum_at_half() {
        let (c1, c2) = nondegeneracy_constants(1.0).unwrap();
        // beta = 1: ratio (x^2 - x + 1/3)/(1 + x^2), minimised in closed form
        let f = |x: f64| (x * x - x + 1.0 / 3.0) / (1.0 + x * x);
        let brute = (0..200001).map(|k| f(-1.0 + 3.0 * k as f64 / 200000.0)).fold(f64::INFINITY, f64::min);
        assert!((c1 - brute).abs() < 1e-9, "{c1} {brute}");
        assert!(c2 >= 1.0);
    }
}
