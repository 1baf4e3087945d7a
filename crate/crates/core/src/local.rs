//! The local (beta = 1) theory: the Gaussian fundamental solution, its second-derivative matrix
//! kernel, the constant matrix of the principal-value representation, and the truncated
//! principal-value operator.
//!
//! The truncated operator is evaluated per Fourier mode. Away from the cut-off region the kernel
//! has the closed-form transform `-eta_i (tau phi_j + eta_j) exp(-int_0^tau |eta + r phi|^2 dr)`;
//! the removed near region `(1 - chi_eps) K` is handled through its moments, which are tabulated
//! once at unit scale and rescaled by homogeneity.

use crate::error::{Error, Result};
use crate::field::{Rep, SpectralField, C64, ZERO};
use crate::grid::{GridSpec, V2};
use crate::par;
use crate::quad::{composite_nodes, lagrange_weights, log_nodes, smooth_step, smooth_step_deriv, stencil_start};
use crate::solver::{kolmogorov_apply, semigroup_apply, to_shifted, Direction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::OnceLock;

fn sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// `(|t|^3 + |x|^2 + |v|^6)^(1/6)`.
pub fn rho10(t: f64, x: &[f64], v: &[f64]) -> f64 {
    (t.abs().powi(3) + sq(x) + sq(v).powi(3)).powf(1.0 / 6.0)
}

/// `(r^2 t, r^3 x, r v)`.
pub fn dilate10(r: f64, t: f64, x: &[f64], v: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    (r * r * t, x.iter().map(|a| r.powi(3) * a).collect(), v.iter().map(|a| r * a).collect())
}

/// Cut-off profile: 0 on [0, 1], 1 on [2, inf).
pub fn chi(r: f64) -> f64 {
    smooth_step(r - 1.0)
}

pub fn chi_deriv(r: f64) -> f64 {
    smooth_step_deriv(r - 1.0)
}

/// Gaussian fundamental solution of `d_t + v.grad_x - Lap_v`, dimension taken from `x.len()`.
pub fn g1_eval(t: f64, x: &[f64], v: &[f64]) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let d = x.len() as i32;
    let q: f64 = x.iter().zip(v).map(|(a, b)| (a - 0.5 * t * b).powi(2)).sum();
    3f64.powf(0.5 * d as f64) / ((2.0 * PI).powi(d) * t.powi(2 * d)) * (-sq(v) / (4.0 * t) - 3.0 * q / t.powi(3)).exp()
}

/// `Q_eta` and `tau Q_zeta + Q_eta` with `d_eta G = -Q_eta G`, `d_zeta G = -Q_zeta G`.
fn log_grads(tau: f64, zeta: &[f64], eta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let q: Vec<f64> = zeta.iter().zip(eta).map(|(z, e)| z - 0.5 * tau * e).collect();
    let qe = eta.iter().zip(&q).map(|(e, q)| e / (2.0 * tau) - 3.0 * q / (tau * tau)).collect();
    let l = eta.iter().zip(&q).map(|(e, q)| e / (2.0 * tau) + 3.0 * q / (tau * tau)).collect();
    (qe, l)
}

/// `(tau d_zeta_j + d_eta_j) d_eta_i G_1` at `(tau, zeta, eta)`; zero for `tau <= 0`.
pub fn kernel_kij(tau: f64, zeta: &[f64], eta: &[f64], i: usize, j: usize) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    let (qe, l) = log_grads(tau, zeta, eta);
    let delta = if i == j { 1.0 / tau } else { 0.0 };
    g1_eval(tau, zeta, eta) * (qe[i] * l[j] + delta)
}

/// `d_eta_i G_1`.
pub fn g1_grad_eta(tau: f64, zeta: &[f64], eta: &[f64], i: usize) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    -log_grads(tau, zeta, eta).0[i] * g1_eval(tau, zeta, eta)
}

/// `int int G_1(t, x, v) dx dv` by tensor Gauss quadrature over a box of 14 standard deviations.
pub fn g1_mass(t: f64, d: usize) -> Result<f64> {
    if t <= 0.0 || !(1..=2).contains(&d) {
        return Err(Error::InvalidParameter("g1_mass needs t > 0 and d in {1, 2}".into()));
    }
    let (sx, sv) = ((2.0 * t.powi(3) / 3.0).sqrt(), (2.0 * t).sqrt());
    let panels = if d == 1 { 28 } else { 12 };
    let xs = composite_nodes(-14.0 * sx, 14.0 * sx, panels, 8);
    let vs = composite_nodes(-14.0 * sv, 14.0 * sv, panels, 8);
    if d == 1 {
        return Ok(xs.iter().map(|(x, wx)| vs.iter().map(|(v, wv)| wx * wv * g1_eval(t, &[*x], &[*v])).sum::<f64>()).sum());
    }
    Ok(par::sum(xs.len(), |a| {
        let (x0, w0) = xs[a];
        let mut acc = 0.0;
        for (x1, w1) in &xs {
            for (v0, w2) in &vs {
                for (v1, w3) in &vs {
                    acc += w1 * w2 * w3 * g1_eval(t, &[x0, *x1], &[*v0, *v1]);
                }
            }
        }
        acc * w0
    }))
}

/// `int G_1(t2, x - y - t2 w, v - w) G_1(t1, y, w) dy dw` at a point, `d = 1`.
pub fn g1_compose(t1: f64, t2: f64, x: f64, v: f64) -> f64 {
    let (sx, sv) = ((2.0 * t1.powi(3) / 3.0).sqrt(), (2.0 * t1).sqrt());
    let ys = composite_nodes(-14.0 * sx, 14.0 * sx, 32, 12);
    let ws = composite_nodes(-14.0 * sv, 14.0 * sv, 32, 12);
    let mut acc = 0.0;
    for (w, ww) in &ws {
        for (y, wy) in &ys {
            acc += ww * wy * g1_eval(t2, &[x - y - t2 * w], &[v - w]) * g1_eval(t1, &[*y], &[*w]);
        }
    }
    acc
}

/// The largest value of `|K_ij(z)| rho10(z)^(4d+2)` over random points at random scales.
pub fn kernel_profile_sup(d: usize, n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..n {
        let tau = 10f64.powf(rng.gen_range(-3.0..3.0));
        let zeta: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0) * tau.powf(1.5)).collect();
        let eta: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0) * tau.sqrt()).collect();
        let r = rho10(tau, &zeta, &eta).powi(4 * d as i32 + 2);
        for i in 0..d {
            for j in 0..d {
                best = best.max(kernel_kij(tau, &zeta, &eta, i, j).abs() * r);
            }
        }
    }
    best
}

/// `c_ij = int d_eta_i G_1 (tau d_zeta_j + d_eta_j) chi(rho10 / eps)` over the annulus where the
/// cut-off varies. Returned row-major, `d x d`.
pub fn constant_matrix_c(d: usize, eps: f64) -> Result<Vec<f64>> {
    // level 2 in d = 1 and level 1 in d = 2 both sit within 2e-7 of the next refinement
    constant_matrix_c_with(d, eps, if d == 1 { 2 } else { 1 })
}

/// The `d = 1` constant at unit scale, computed once.
pub fn constant_c1() -> f64 {
    static CELL: OnceLock<f64> = OnceLock::new();
    *CELL.get_or_init(|| constant_matrix_c(1, 1.0).map(|c| c[0]).unwrap_or(f64::NAN))
}

/// Same with the quadrature refined `level` times (node counts scale with `level`).
pub fn constant_matrix_c_with(d: usize, eps: f64, level: usize) -> Result<Vec<f64>> {
    if !(eps > 0.0) || !(1..=2).contains(&d) || level == 0 {
        return Err(Error::InvalidParameter("constant_matrix_c needs eps > 0, d in {1, 2}".into()));
    }
    // tau beyond 4 eps^2 puts every point outside rho10 < 2 eps
    let taus = log_nodes(eps * eps / 400.0, 4.0 * eps * eps, 16 * level, 8);
    let span = 10.0;
    if d == 1 {
        let ab = composite_nodes(-span, span, 40 * level, 8);
        let total = par::sum(taus.len(), |k| {
            let (tau, wt) = taus[k];
            let (sq_, se) = ((tau.powi(3) / 6.0).sqrt(), (2.0 * tau).sqrt());
            let mut acc = 0.0;
            for (a, wa) in &ab {
                let q = sq_ * a;
                for (b, wb) in &ab {
                    let eta = se * b;
                    let zeta = q + 0.5 * tau * eta;
                    let rho = rho10(tau, &[zeta], &[eta]);
                    let c = chi_deriv(rho / eps);
                    if c == 0.0 {
                        continue;
                    }
                    let lchi = c / eps * (2.0 * tau * zeta + 6.0 * eta.powi(5)) / (6.0 * rho.powi(5));
                    let qe = eta / (2.0 * tau) - 3.0 * q / (tau * tau);
                    let dens = (-(a * a + b * b) / 2.0).exp() / (2.0 * PI);
                    acc += wa * wb * dens * (-qe) * lchi;
                }
            }
            acc * wt
        });
        return Ok(vec![total]);
    }
    // d = 2: the integrand is equivariant under joint rotations of (zeta, eta), so the angular
    // average of u_i w_j is (u.w) I / 2 + (u x w) J / 2 with J = [[0, 1], [-1, 0]]
    let rs = composite_nodes(0.0, span, 16 * level, 8);
    let nth = 48 * level;
    let (diag, off) = par::map(taus.len(), |k| {
        let (tau, wt) = taus[k];
        let (sq_, se) = ((tau.powi(3) / 6.0).sqrt(), (2.0 * tau).sqrt());
        let (mut dg, mut of) = (0.0, 0.0);
        for (ra, wa) in &rs {
            let q = [sq_ * ra, 0.0];
            for (rb, wb) in &rs {
                // Gaussian density, polar Jacobian and the integral over the common angle
                let dens = (-(ra * ra + rb * rb) / 2.0).exp() / (4.0 * PI * PI) * ra * rb * 2.0 * PI;
                let w = wa * wb * dens * 2.0 * PI / nth as f64;
                for it in 0..nth {
                    let th = 2.0 * PI * it as f64 / nth as f64;
                    let eta = [se * rb * th.cos(), se * rb * th.sin()];
                    let zeta = [q[0] + 0.5 * tau * eta[0], q[1] + 0.5 * tau * eta[1]];
                    let rho = rho10(tau, &zeta, &eta);
                    let c = chi_deriv(rho / eps);
                    if c == 0.0 {
                        continue;
                    }
                    let e4 = sq(&eta).powi(2);
                    let f = c / eps / (6.0 * rho.powi(5));
                    let lw = [f * (2.0 * tau * zeta[0] + 6.0 * e4 * eta[0]), f * (2.0 * tau * zeta[1] + 6.0 * e4 * eta[1])];
                    let u = [-(eta[0] / (2.0 * tau) - 3.0 * q[0] / (tau * tau)), -(eta[1] / (2.0 * tau) - 3.0 * q[1] / (tau * tau))];
                    dg += w * 0.5 * (u[0] * lw[0] + u[1] * lw[1]);
                    of += w * 0.5 * (u[0] * lw[1] - u[1] * lw[0]);
                }
            }
        }
        (dg * wt, of * wt)
    })
    .into_iter()
    .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(vec![diag, off, -off, diag])
}

const M_MAX: usize = 6;
const N_MAX: usize = 40;

/// Moments `int int (1 - chi(rho10)) K(tau, zeta, eta) zeta^m eta^n` at unit scale, `d = 1`,
/// on a fixed set of tau nodes covering (0, 4].
struct NearMoments {
    taus: Vec<(f64, f64)>,
    mu: Vec<Vec<f64>>,
}

impl NearMoments {
    fn idx(m: usize, n: usize) -> usize {
        m * (N_MAX + 1) + n
    }

    fn get() -> &'static NearMoments {
        static CELL: OnceLock<NearMoments> = OnceLock::new();
        CELL.get_or_init(|| {
            let mut taus = composite_nodes(0.0, 1e-6, 1, 8);
            taus.extend(log_nodes(1e-6, 4.0, 44, 8));
            let ab = composite_nodes(-1.0, 1.0, 24, 8);
            let mu = par::map(taus.len(), |k| {
                let tau = taus[k].0;
                let (sq_, se) = ((tau.powi(3) / 6.0).sqrt(), (2.0 * tau).sqrt());
                // the factor (1 - chi) vanishes for |eta| > 2 or |zeta| > 8
                let (sa, sb) = ((8.0 + tau).min(14.0 * sq_), 2f64.min(14.0 * se));
                let mut out = vec![0.0; (M_MAX + 1) * (N_MAX + 1)];
                for (b, wb) in &ab {
                    let eta = sb * b;
                    let mut row = [0.0; M_MAX + 1];
                    for (a, wa) in &ab {
                        let q = sa * a;
                        let zeta = q + 0.5 * tau * eta;
                        let cut = 1.0 - chi(rho10(tau, &[zeta], &[eta]));
                        if cut == 0.0 {
                            continue;
                        }
                        let qe = eta / (2.0 * tau) - 3.0 * q / (tau * tau);
                        let l = eta / (2.0 * tau) + 3.0 * q / (tau * tau);
                        let g = 3f64.sqrt() / (2.0 * PI * tau * tau) * (-eta * eta / (4.0 * tau) - 3.0 * q * q / tau.powi(3)).exp();
                        let mut k = wa * sa * cut * g * (qe * l + 1.0 / tau);
                        for r in row.iter_mut() {
                            *r += k;
                            k *= zeta;
                        }
                    }
                    let mut p = wb * sb;
                    for n in 0..=N_MAX {
                        for (m, r) in row.iter().enumerate() {
                            out[Self::idx(m, n)] += r * p;
                        }
                        p *= eta;
                    }
                }
                out
            });
            NearMoments { taus, mu }
        })
    }
}

/// Smallest order after which `x^n / n!` stays below `1e-16` times the largest term.
fn series_order(x: f64, cap: usize) -> Option<usize> {
    let mut term = 1.0;
    let mut peak: f64 = 1.0;
    for n in 1..=cap {
        term *= x / n as f64;
        peak = peak.max(term);
        if term < 1e-16 * peak && n > x as usize {
            return Some(n);
        }
    }
    None
}

fn require_local_field(s0: &SpectralField) -> Result<SpectralField> {
    if s0.grid.d != 1 {
        return Err(Error::InvalidParameter("the principal-value operator is implemented for d = 1".into()));
    }
    if !s0.grid.is_uniform_in_time() || s0.grid.nt() < 9 {
        return Err(Error::InvalidParameter("needs a uniform time grid with at least 9 points".into()));
    }
    to_shifted(s0)
}

/// Shifted-frame coefficient of `i (xi - t phi) * f`, the velocity derivative (`d = 1`).
pub fn grad_v(f: &SpectralField) -> SpectralField {
    let g = &f.grid;
    let (phis, xis) = (g.phis(), g.xis());
    let mut out = f.clone();
    let (nkx, nkv) = (g.nkx(), g.nkv());
    for it in 0..g.nt() {
        let t = g.t_grid[it];
        for kx in 0..nkx {
            for kv in 0..nkv {
                let i = f.idx(it, kx, kv);
                let eta = f.plain_xi(t, &phis[kx], &xis[kv])[0];
                out.coeffs[i] = f.coeffs[i] * C64::new(0.0, eta);
            }
        }
    }
    out
}

/// `grad_v f` for `f` the forward Kolmogorov solution with source `div_v S0`, from the solver.
pub fn grad_v_solution(s0: &SpectralField) -> Result<SpectralField> {
    let s = require_local_field(s0)?;
    let f = kolmogorov_apply(&grad_v(&s), Direction::Forward, 1.0)?;
    Ok(grad_v(&f))
}

/// The truncated operator `int chi_eps(z w^-1) K(z w^-1) S0(w) dw`, `d = 1`, in the shifted
/// representation. `eps` must keep the near-field expansion convergent on the active modes.
pub fn pv_apply(s0: &SpectralField, eps: f64) -> Result<SpectralField> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let s = require_local_field(s0)?;
    let g = s.grid.clone();
    let (phis, xis) = (g.phis(), g.xis());
    let times = &g.t_grid;
    let nt = g.nt();
    let (nkx, nkv) = (g.nkx(), g.nkv());

    let active: Vec<(usize, usize)> = (0..nkx)
        .flat_map(|kx| (0..nkv).map(move |kv| (kx, kv)))
        .filter(|&(kx, kv)| (0..nt).any(|it| s.coeffs[s.idx(it, kx, kv)] != ZERO))
        .collect();
    let (t0, t1) = (times[0], times[nt - 1]);
    let (mut phi_max, mut eta_max): (f64, f64) = (0.0, 0.0);
    for &(kx, kv) in &active {
        let (p, x) = (phis[kx][0], xis[kv][0]);
        phi_max = phi_max.max(p.abs());
        eta_max = eta_max.max((x - t0 * p).abs()).max((x - t1 * p).abs());
    }
    let too_big = || Error::InvalidParameter(format!("eps = {eps} is too large for the near-field expansion"));
    let n_ord = series_order(2.0 * eps * eta_max, N_MAX).ok_or_else(too_big)?;
    let m_ord = series_order(8.0 * eps.powi(3) * phi_max, M_MAX).ok_or_else(too_big)?;
    let near = NearMoments::get();

    // per output time: A[(m, n)][l] = sum_tau w mu_mn(tau) eps^2 W_l(t - eps^2 tau), scaled by eps^(3m+n)
    let width = 8.min(nt);
    let pairs: Vec<(usize, usize)> = (0..=m_ord)
        .flat_map(|m| (0..=n_ord).map(move |n| (m, n)))
        .filter(|(m, n)| (m + n) % 2 == 0)
        .collect();
    let stencils: Vec<(usize, Vec<Vec<f64>>)> = par::map(nt, |i| {
        let t = times[i];
        let lo = stencil_start(times, t - 4.0 * eps * eps, width);
        let hi = stencil_start(times, t, width) + width;
        let mut a = vec![vec![0.0; hi - lo]; pairs.len()];
        for (k, (tau, w)) in near.taus.iter().enumerate() {
            let tn = t - eps * eps * tau;
            let start = stencil_start(times, tn, width);
            let lw = lagrange_weights(&times[start..start + width], tn);
            for (p, &(m, n)) in pairs.iter().enumerate() {
                // dtau = eps^2 dtau1 cancels the eps^-2 of the kernel homogeneity
                let c = w * near.mu[k][NearMoments::idx(m, n)] * eps.powi((3 * m + n) as i32);
                for (l, x) in lw.iter().enumerate() {
                    a[p][start - lo + l] += c * x;
                }
            }
        }
        (lo, a)
    });
    let fact: Vec<f64> = (0..=N_MAX).scan(1.0, |f, n| {
        let v = *f;
        *f *= (n + 1) as f64;
        Some(v)
    }).collect();
    // (-i)^k
    let mi = |k: usize| [C64::new(1.0, 0.0), C64::new(0.0, -1.0), C64::new(-1.0, 0.0), C64::new(0.0, 1.0)][k % 4];

    // full-space kernel: -eta(t) int (xi - s phi) exp(-(A(t) - A(s))) S(s) ds, A' = |xi - r phi|^2
    let gl = crate::quad::gauss_legendre(8);
    let per_mode: Vec<Vec<C64>> = par::map(active.len(), |k| {
        let (kx, kv) = active[k];
        let (p, x) = (phis[kx][0], xis[kv][0]);
        let big_a = |t: f64| x * x * t - x * p * t * t + p * p * t.powi(3) / 3.0;
        let series: Vec<C64> = (0..nt).map(|it| s.coeffs[s.idx(it, kx, kv)]).collect();
        let mut out = vec![ZERO; nt];
        let mut acc = ZERO;
        for i in 0..nt {
            if i > 0 {
                let (a, b) = (times[i - 1], times[i]);
                let ab = big_a(b);
                acc *= (-(ab - big_a(a))).exp();
                let start = stencil_start(times, 0.5 * (a + b), width);
                let st = &times[start..start + width];
                for (u, w) in gl.0.iter().zip(&gl.1) {
                    let sn = 0.5 * (a + b) + 0.5 * (b - a) * u;
                    let lw = lagrange_weights(st, sn);
                    let val: C64 = lw.iter().zip(&series[start..start + width]).map(|(c, z)| z * c).sum();
                    acc += val * (0.5 * (b - a) * w * (x - sn * p) * (-(ab - big_a(sn))).exp());
                }
            }
            let eta = x - times[i] * p;
            let mut corr = ZERO;
            let (start, a) = &stencils[i];
            for (q, &(m, n)) in pairs.iter().enumerate() {
                let b: C64 = a[q].iter().zip(&series[*start..]).map(|(c, z)| z * c).sum();
                if b == ZERO {
                    continue;
                }
                corr += b * mi(m + n) * (p.powi(m as i32) * eta.powi(n as i32) / (fact[m] * fact[n]));
            }
            out[i] = -acc * eta - corr;
        }
        out
    });
    let mut out = SpectralField::zeros(g, Rep::Shifted);
    for (k, &(kx, kv)) in active.iter().enumerate() {
        for it in 0..nt {
            let i = out.idx(it, kx, kv);
            out.coeffs[i] = per_mode[k][it];
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct RepresentationReport {
    pub eps: f64,
    /// `|grad_v f - (T_eps S0 + c S0)| / |grad_v f|`
    pub defect: f64,
    pub c_quadrature: f64,
    /// the constant minimising the defect
    pub c_fit: f64,
    pub fit_defect: f64,
}

/// Compares the solver's `grad_v f` with the principal-value representation (`d = 1`).
pub fn representation_check(s0: &SpectralField, eps: f64) -> Result<RepresentationReport> {
    let s = require_local_field(s0)?;
    let lhs = grad_v_solution(&s)?;
    let t = pv_apply(&s, eps)?;
    let c = constant_c1();
    let r = lhs.sub(&t)?;
    let norm = lhs.l2_norm();
    let ss = s.inner(&s)?.re;
    if norm == 0.0 || ss == 0.0 {
        return Err(Error::InvalidParameter("representation check needs a source with nonzero velocity divergence".into()));
    }
    let c_fit = s.inner(&r)?.re / ss;
    let defect = r.sub(&s.scale(c))?.l2_norm() / norm;
    let fit_defect = r.sub(&s.scale(c_fit))?.l2_norm() / norm;
    Ok(RepresentationReport { eps, defect, c_quadrature: c, c_fit, fit_defect })
}

#[derive(Clone, Debug, Serialize)]
pub struct G1Comparison {
    pub t: f64,
    /// max pointwise deviation relative to the max of the spectral solution
    pub max_rel_dev: f64,
    pub mass_initial: f64,
    pub mass_spectral: f64,
    pub mass_direct: f64,
    /// relative L2 distance of the solution from the initial bump
    pub distance_from_bump: f64,
}

/// Evolves a Gaussian bump of width `width` by the forward semigroup (spectral path) and by
/// periodised kinetic convolution with `G_1` (direct path), `d = 1`.
pub fn g1_vs_spectral(grid: &GridSpec, t: f64, width: f64) -> Result<G1Comparison> {
    if grid.d != 1 {
        return Err(Error::InvalidParameter("g1_vs_spectral runs in d = 1".into()));
    }
    let g = grid.with_times(vec![0.0]);
    let (xs, vs) = (g.xs(), g.vs());
    let (nx, nv) = (g.nx, g.nv);
    let bump: Vec<f64> = (0..nx)
        .flat_map(|i| {
            let x = xs[i][0];
            vs.iter().map(move |v| (-(x * x + v[0] * v[0]) / (2.0 * width * width)).exp())
        })
        .collect();
    let phys = crate::field::PhysicalField { grid: g.clone(), samples: bump.iter().map(|b| C64::new(*b, 0.0)).collect() };
    // keep the modes whose sheared image stays on the grid; both paths start from this field
    let mut init = SpectralField::from_physical(&phys, Rep::Plain);
    let steps = (t * g.lv / g.lx).round() as i64;
    let (mx, mv) = (g.max_mode(nx, 0), g.max_mode(nv, 0));
    for kx in 0..g.nkx() {
        let a = g.kx_modes(kx)[0];
        for kv in 0..g.nkv() {
            let b = g.kv_modes(kv)[0];
            if a.abs() > mx || b.abs() > mv || (b - steps * a).abs() > mv {
                let i = init.idx(0, kx, kv);
                init.coeffs[i] = ZERO;
            }
        }
    }
    let bump: Vec<f64> = init.to_physical().samples.iter().map(|z| z.re).collect();
    let spec = semigroup_apply(&init, t, Direction::Forward, 1.0)?;
    let sol: Vec<f64> = spec.to_physical().samples.iter().map(|z| z.re).collect();

    // direct path: periodised convolution; x-offsets are lattice steps only when t lv / lx is whole
    let (hx, hv) = (g.hx(), g.hv());
    let (px, pv) = (2.0 * g.lx, 2.0 * g.lv);
    let reach = |s: f64, p: f64| ((12.0 * s) / p).ceil() as i64 + 1;
    let iv_img = reach((2.0 * t).sqrt(), pv);
    let (sq_, norm) = ((t.powi(3) / 6.0).sqrt(), 3f64.sqrt() / (2.0 * PI * t * t));
    let direct: Vec<f64> = par::map(nx * nv, |idx| {
        let (i, j) = (idx / nv, idx % nv);
        let (x, v) = (xs[i][0], vs[j][0]);
        let mut acc = 0.0;
        for l in 0..nv {
            for mv in -iv_img..=iv_img {
                let w = vs[l][0] + pv * mv as f64;
                let dv = v - w;
                let ev = -dv * dv / (4.0 * t);
                if ev < -700.0 {
                    continue;
                }
                // x - y - t w - t dv / 2 over the x-images within 40 standard deviations
                let c = x - t * w - 0.5 * t * dv;
                for k in 0..nx {
                    let b = bump[k * nv + l];
                    let base = c - xs[k][0];
                    let lo = ((base - 40.0 * sq_) / px).ceil() as i64;
                    let hi = ((base + 40.0 * sq_) / px).floor() as i64;
                    for mx in lo..=hi {
                        let q = base - px * mx as f64;
                        acc += b * (ev - 3.0 * q * q / t.powi(3)).exp();
                    }
                }
            }
        }
        acc * hx * hv * norm
    });
    let peak = sol.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let dev = sol.iter().zip(&direct).fold(0.0f64, |a, (s, d)| a.max((s - d).abs()));
    let cell = hx * hv;
    let l2 = |a: &[f64]| a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = sol.iter().zip(&bump).map(|(a, b)| a - b).collect();
    Ok(G1Comparison {
        t,
        max_rel_dev: dev / peak,
        mass_initial: bump.iter().sum::<f64>() * cell,
        mass_spectral: sol.iter().sum::<f64>() * cell,
        mass_direct: direct.iter().sum::<f64>() * cell,
        distance_from_bump: l2(&diff) / l2(&bump),
    })
}

/// Translation of a `d = 1` field by `(dx, dv)` as a phase on the coefficients.
pub fn translate(f: &SpectralField, dx: f64, dv: f64) -> SpectralField {
    let g = &f.grid;
    let (phis, xis) = (g.phis(), g.xis());
    let mut out = f.clone();
    for it in 0..g.nt() {
        let t = g.t_grid[it];
        for kx in 0..g.nkx() {
            for kv in 0..g.nkv() {
                let i = f.idx(it, kx, kv);
                let p: &V2 = &phis[kx];
                let eta = f.plain_xi(t, p, &xis[kv]);
                let ph = -(p[0] * dx + eta[0] * dv);
                out.coeffs[i] = f.coeffs[i] * C64::from_polar(1.0, ph);
            }
        }
    }
    out
}
