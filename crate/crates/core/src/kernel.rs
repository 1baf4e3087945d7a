//! The singular kernel of the weighted Kolmogorov operator in shifted variables,
//!
//! `K^(t,s,phi,xi) = d(phi, xi - t phi)^gamma d(phi, xi - s phi)^(2b - gamma) exp(-int_s^t |xi - r phi|^(2b) dr)`,
//!
//! its rescaled profile at `(t, s) = (1, 0)`, marginal bounds, the truncated operator
//! and Hörmander-type difference integrals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{Rep, SpectralField, C64};
use crate::gauge::Gauge;
use crate::grid::{norm, GridSpec, V2};
use crate::norms::lp_norm;
use crate::par;
use crate::quad::{log_nodes, smooth_step, smooth_step_deriv};
use crate::solver::{char_exponent, to_shifted};
use crate::testfield::{make_test_field, Envelope, TestFieldSpec};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Extra factor applied to the kernel symbol.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Deriv {
    None,
    /// `(t-s) d_s`
    TimeS,
    /// `(t-s)^(1/(2b)) (d_v - s d_x)` along one axis
    VelocityAlongChar(usize),
    /// `(t-s) |xi - s phi|^(2b)`, the first derivative symbol at rescaled level
    M1,
    /// `(t-s) phi.grad_xi d / d` at `(phi, xi - s phi)`
    M2,
}

/// Symbol of the kernel (times an optional derivative factor) at one frequency.
pub fn kernel_symbol(t: f64, s: f64, phi: &V2, xi: &V2, gamma: f64, gauge: &Gauge, deriv: Deriv) -> Result<C64> {
    if t <= s {
        return Ok(ZERO);
    }
    let beta = gauge.beta;
    let xs = [xi[0] - s * phi[0], xi[1] - s * phi[1]];
    let xt = [xi[0] - t * phi[0], xi[1] - t * phi[1]];
    let (dt, ds) = (gauge.eval(phi, &xt), gauge.eval(phi, &xs));
    if dt == 0.0 || ds == 0.0 {
        return Ok(ZERO);
    }
    let base = dt.powf(gamma) * ds.powf(2.0 * beta - gamma) * (-char_exponent(t, s, phi, xi, beta)?).exp();
    let tau = t - s;
    let m1 = || tau * norm(&xs).powf(2.0 * beta);
    let m2 = || tau * gauge.m2(phi, &xs);
    Ok(match deriv {
        Deriv::None => C64::new(base, 0.0),
        Deriv::M1 => C64::new(base * m1(), 0.0),
        Deriv::M2 => C64::new(base * m2(), 0.0),
        Deriv::TimeS => C64::new(base * (m1() - (2.0 * beta - gamma) * m2()), 0.0),
        Deriv::VelocityAlongChar(a) => C64::new(0.0, base * tau.powf(0.5 / beta) * xs[a]),
    })
}

/// Real kernel samples on a single-time grid.
#[derive(Clone, Debug)]
pub struct KernelGrid {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    /// largest symbol modulus on the outermost retained modes, relative to the overall largest
    pub edge_ratio: f64,
}

/// Samples of `K(t, s, x, v)`, or of `K(t, s, x - s v, v)` when `along_char` is set.
pub fn kernel_field(
    t: f64,
    s: f64,
    gamma: f64,
    beta: f64,
    grid: &GridSpec,
    deriv: Deriv,
    along_char: bool,
) -> Result<KernelGrid> {
    let gauge = Gauge::new(beta)?;
    let g = grid.with_times(vec![0.0]);
    let (phis, xis) = (g.phis(), g.xis());
    let (mx, mv) = (g.max_mode(g.nx, 0), g.max_mode(g.nv, 0));
    let vol = g.volume();
    let nkv = g.nkv();
    let rows: Vec<Result<(Vec<C64>, f64, f64)>> = par::map(g.nkx(), |kx| {
        let km = g.kx_modes(kx);
        let mut row = vec![ZERO; nkv];
        let (mut edge, mut peak) = (0.0f64, 0.0f64);
        if km.iter().any(|k| k.abs() > mx) {
            return Ok((row, edge, peak));
        }
        let p = phis[kx];
        for (kv, c) in row.iter_mut().enumerate() {
            let vm = g.kv_modes(kv);
            if vm.iter().any(|k| k.abs() > mv) {
                continue;
            }
            let x = if along_char { [xis[kv][0] + s * p[0], xis[kv][1] + s * p[1]] } else { xis[kv] };
            let z = kernel_symbol(t, s, &p, &x, gamma, &gauge, deriv)?;
            let a = z.norm();
            peak = peak.max(a);
            if km.iter().any(|k| k.abs() == mx) || vm.iter().any(|k| k.abs() == mv) {
                edge = edge.max(a);
            }
            *c = z / vol;
        }
        Ok((row, edge, peak))
    });
    let mut coeffs = Vec::with_capacity(g.slice_len());
    let (mut edge, mut peak) = (0.0f64, 0.0f64);
    for r in rows {
        let (row, e, p) = r?;
        coeffs.extend(row);
        edge = edge.max(e);
        peak = peak.max(p);
    }
    let phys = SpectralField::from_coeffs(g.clone(), Rep::Plain, coeffs)?.to_physical();
    Ok(KernelGrid {
        values: phys.samples.iter().map(|z| z.re).collect(),
        grid: g,
        edge_ratio: if peak > 0.0 { edge / peak } else { 0.0 },
    })
}

/// Samples of the shifted fundamental solution, the inverse transform of `exp(-int_s^t |xi - r phi|^(2b) dr)`.
pub fn fundamental_field(t: f64, s: f64, beta: f64, grid: &GridSpec) -> Result<KernelGrid> {
    let g = grid.with_times(vec![0.0]);
    let (phis, xis) = (g.phis(), g.xis());
    let (mx, mv) = (g.max_mode(g.nx, 0), g.max_mode(g.nv, 0));
    let vol = g.volume();
    let nkv = g.nkv();
    let rows: Vec<Result<Vec<C64>>> = par::map(g.nkx(), |kx| {
        let mut row = vec![ZERO; nkv];
        if g.kx_modes(kx).iter().any(|k| k.abs() > mx) {
            return Ok(row);
        }
        for (kv, c) in row.iter_mut().enumerate() {
            if g.kv_modes(kv).iter().any(|k| k.abs() > mv) {
                continue;
            }
            *c = C64::new((-char_exponent(t, s, &phis[kx], &xis[kv], beta)?).exp() / vol, 0.0);
        }
        Ok(row)
    });
    let coeffs: Vec<C64> = rows.into_iter().collect::<Result<Vec<_>>>()?.concat();
    let phys = SpectralField::from_coeffs(g.clone(), Rep::Plain, coeffs)?.to_physical();
    Ok(KernelGrid { values: phys.samples.iter().map(|z| z.re).collect(), grid: g, edge_ratio: 0.0 })
}

/// The rescaled profile `K~_gamma`, i.e. the kernel at `(t, s) = (1, 0)`.
pub fn kernel_rescaled(gamma: f64, beta: f64, grid: &GridSpec) -> Result<KernelGrid> {
    kernel_field(1.0, 0.0, gamma, beta, grid, Deriv::None, false)
}

/// Rescaled kernels `grad_v K~`, `m1(D) K~`, `m2(D) K~`.
pub fn derivative_kernels(gamma: f64, beta: f64, grid: &GridSpec) -> Result<Vec<(Deriv, KernelGrid)>> {
    let mut out = Vec::new();
    for a in 0..grid.d {
        out.push((Deriv::VelocityAlongChar(a), kernel_field(1.0, 0.0, gamma, beta, grid, Deriv::VelocityAlongChar(a), false)?));
    }
    for d in [Deriv::M1, Deriv::M2] {
        out.push((d, kernel_field(1.0, 0.0, gamma, beta, grid, d, false)?));
    }
    Ok(out)
}

impl KernelGrid {
    /// `int |K| dx` as a function of the velocity index.
    pub fn marginal_over_x(&self) -> Vec<f64> {
        let g = &self.grid;
        let (nkx, nkv) = (g.nkx(), g.nkv());
        let h = g.hx().powi(g.d as i32);
        (0..nkv).map(|kv| (0..nkx).map(|kx| self.values[kx * nkv + kv].abs()).sum::<f64>() * h).collect()
    }

    /// `int |K| dv` as a function of the position index.
    pub fn marginal_over_v(&self) -> Vec<f64> {
        let g = &self.grid;
        let nkv = g.nkv();
        let h = g.hv().powi(g.d as i32);
        (0..g.nkx()).map(|kx| self.values[kx * nkv..(kx + 1) * nkv].iter().map(|v| v.abs()).sum::<f64>() * h).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell()
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// The box scaled to the kernel's natural size at time separation `tau`.
pub fn kinetic_box(base: &GridSpec, tau: f64, beta: f64) -> Result<GridSpec> {
    let a = 0.5 / beta;
    GridSpec::new(base.d, base.lx * tau.powf(1.0 + a), base.lv * tau.powf(a), base.nx, base.nv, vec![0.0])
}

/// Bound ratios of the integrated kernel estimates at one `(t, s)`.
#[derive(Clone, Debug)]
pub struct MarginalReport {
    pub tau: f64,
    /// `sup_v int |K| dx * (tau^(1/(2b)) + |v|)^(d+2b)`
    pub x_marginal: f64,
    /// `sup_x int |K(x - s v, v)| dv * (tau^(1/(2b)) + |x|^(1/(2b+1)))^((2b+1)d+2b)`
    pub v_marginal: f64,
    /// `tau * int int |K|`
    pub mass: f64,
    pub edge_ratio: f64,
}

/// Marginal bound ratios at `(t, s)`; `base` is the box used at `t - s = 1` and gets rescaled.
pub fn marginal_report(t: f64, s: f64, gamma: f64, beta: f64, base: &GridSpec, deriv: Deriv) -> Result<MarginalReport> {
    let tau = t - s;
    if tau <= 0.0 {
        return Err(Error::InvalidParameter(format!("marginals need t > s, got tau = {tau}")));
    }
    let grid = kinetic_box(base, tau, beta)?;
    let d = grid.d as f64;
    let q = 2.0 * beta + 1.0;
    let ts = tau.powf(0.5 / beta);
    // the shear x -> x - s v preserves dx at fixed v, so both marginals come from the
    // unsheared samples K(t, s, x - s v, v), which the rescaled box resolves for any s
    let kc = kernel_field(t, s, gamma, beta, &grid, deriv, true)?;
    let x_marginal = kc
        .marginal_over_x()
        .iter()
        .zip(grid.vs())
        .map(|(m, v)| m * (ts + norm(&v)).powf(d + 2.0 * beta))
        .fold(0.0, f64::max);
    let v_marginal = kc
        .marginal_over_v()
        .iter()
        .zip(grid.xs())
        .map(|(m, x)| m * (ts + norm(&x).powf(1.0 / q)).powf(q * d + 2.0 * beta))
        .fold(0.0, f64::max);
    Ok(MarginalReport { tau, x_marginal, v_marginal, mass: tau * kc.total_mass(), edge_ratio: kc.edge_ratio })
}

/// A point `(t, x, v)` of phase space-time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub t: f64,
    pub x: V2,
    pub v: V2,
}

impl Point {
    pub fn new(t: f64, x: V2, v: V2) -> Self {
        Point { t, x, v }
    }

    /// Kinetic dilation `(r^(2b) t, r^(2b+1) x, r v)`.
    pub fn dilate(&self, r: f64, beta: f64) -> Point {
        let (a, b) = (r.powf(2.0 * beta), r.powf(2.0 * beta + 1.0));
        Point { t: a * self.t, x: [b * self.x[0], b * self.x[1]], v: [r * self.v[0], r * self.v[1]] }
    }
}

/// Symmetrised kinetic quasi-distance in shifted variables.
pub fn quasi_distance(z: &Point, w: &Point, beta: f64) -> f64 {
    let q = 2.0 * beta + 1.0;
    let dv = [z.v[0] - w.v[0], z.v[1] - w.v[1]];
    let dx = [z.x[0] - w.x[0], z.x[1] - w.x[1]];
    let a = [dx[0] + z.t * dv[0], dx[1] + z.t * dv[1]];
    let b = [dx[0] + w.t * dv[0], dx[1] + w.t * dv[1]];
    (z.t - w.t).abs().powf(0.5 / beta) + 0.5 * norm(&a).powf(1.0 / q) + 0.5 * norm(&b).powf(1.0 / q) + norm(&dv)
}

/// Largest `rho(a,c) / (rho(a,b) + rho(b,c))` over random triples in `[-scale, scale]^(1+2d)`.
pub fn quasi_triangle_constant(beta: f64, d: usize, n: usize, scale: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pt = |rng: &mut ChaCha8Rng| {
        let mut v = [0.0; 5];
        v.iter_mut().for_each(|c| *c = rng.gen_range(-scale..scale));
        let (x, y) = if d == 1 { ([v[1], 0.0], [v[2], 0.0]) } else { ([v[1], v[2]], [v[3], v[4]]) };
        Point::new(v[0], x, y)
    };
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let (a, b, c) = (pt(&mut rng), pt(&mut rng), pt(&mut rng));
        let den = quasi_distance(&a, &b, beta) + quasi_distance(&b, &c, beta);
        if den > 0.0 {
            worst = worst.max(quasi_distance(&a, &c, beta) / den);
        }
    }
    worst
}

/// Monte Carlo volume of the quasi-distance ball `B(center, r)`.
pub fn ball_volume(center: &Point, r: f64, beta: f64, d: usize, n: usize, rng: &mut ChaCha8Rng) -> f64 {
    let q = 2.0 * beta + 1.0;
    let (ht, hx, hv) = (r.powf(2.0 * beta), (2.0 * r).powf(q), r);
    let mut hits = 0usize;
    for _ in 0..n {
        let tau = rng.gen_range(-ht..ht);
        let mut nu = [0.0; 2];
        let mut chi = [0.0; 2];
        for a in 0..d {
            nu[a] = rng.gen_range(-hv..hv);
            chi[a] = rng.gen_range(-hx..hx);
        }
        // chi = x - y + s (v - w), so the sample is a volume-preserving shear of the box
        let z = Point::new(
            center.t + tau,
            [center.x[0] + chi[0] - center.t * nu[0], center.x[1] + chi[1] - center.t * nu[1]],
            [center.v[0] + nu[0], center.v[1] + nu[1]],
        );
        if quasi_distance(&z, center, beta) < r {
            hits += 1;
        }
    }
    let boxv = 2.0 * ht * (2.0 * hx).powi(d as i32) * (2.0 * hv).powi(d as i32);
    boxv * hits as f64 / n as f64
}

/// Least-squares slope of `log |B(z, r)|` against `log r` and the largest doubling ratio
/// `|B(z, 2r)| / |B(z, r)|` over the radii `rs`.
pub fn doubling_fit(center: &Point, rs: &[f64], beta: f64, d: usize, n: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let logs: Vec<(f64, f64)> = rs.iter().map(|&r| (r.ln(), ball_volume(center, r, beta, d, n, &mut rng).ln())).collect();
    let m = logs.len() as f64;
    let (sx, sy) = logs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = logs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    let mut ratio: f64 = 0.0;
    for &r in rs {
        let a = ball_volume(center, r, beta, d, n, &mut rng);
        let b = ball_volume(center, 2.0 * r, beta, d, n, &mut rng);
        ratio = ratio.max(b / a);
    }
    (num / den, ratio)
}

/// Smooth time cutoff equal to 1 on `[eps, 1/eps]` and supported in `[eps/2, 2/eps]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cutoff {
    pub eps: f64,
}

impl Cutoff {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!("cutoff needs eps in (0,1), got {eps}")));
        }
        Ok(Cutoff { eps })
    }

    pub fn eval(&self, r: f64) -> f64 {
        let e = self.eps;
        smooth_step(2.0 * r / e - 1.0) * (1.0 - smooth_step(e * r - 1.0))
    }

    /// `sup_r |r zeta'(r)|`, attained on the lower ramp and independent of `eps`.
    pub fn m_zeta(&self) -> f64 {
        (1..2000).map(|i| i as f64 / 2000.0).map(|u| (1.0 + u) * smooth_step_deriv(u)).fold(0.0, f64::max)
    }
}

fn time_phase(phi: &V2, xi: &V2, times: &[f64], beta: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; times.len()];
    for i in 1..times.len() {
        out[i] = out[i - 1] + char_exponent(times[i], times[i - 1], phi, xi, beta)?;
    }
    Ok(out)
}

/// Per-mode time-integral matrix `a_ij = zeta(t_i - s_j) K^(t_i, s_j)` (without quadrature weights).
fn mode_matrix(phi: &V2, xi: &V2, times: &[f64], gamma: f64, gauge: &Gauge, cut: &Cutoff) -> Result<Vec<f64>> {
    let beta = gauge.beta;
    let nt = times.len();
    let ph = time_phase(phi, xi, times, beta)?;
    let dw: Vec<f64> = times.iter().map(|&t| gauge.eval(phi, &[xi[0] - t * phi[0], xi[1] - t * phi[1]])).collect();
    let out_w: Vec<f64> = dw.iter().map(|d| if *d == 0.0 { 0.0 } else { d.powf(gamma) }).collect();
    let in_w: Vec<f64> = dw.iter().map(|d| if *d == 0.0 { 0.0 } else { d.powf(2.0 * beta - gamma) }).collect();
    let mut a = vec![0.0; nt * nt];
    for i in 0..nt {
        for j in 0..i {
            let z = cut.eval(times[i] - times[j]);
            if z != 0.0 {
                a[i * nt + j] = z * out_w[i] * in_w[j] * (ph[j] - ph[i]).exp();
            }
        }
    }
    Ok(a)
}

fn active_modes(f: &SpectralField) -> Vec<(usize, usize)> {
    let g = &f.grid;
    let mut out = Vec::new();
    for kx in 0..g.nkx() {
        for kv in 0..g.nkv() {
            if (0..g.nt()).any(|it| f.coeffs[f.idx(it, kx, kv)] != ZERO) {
                out.push((kx, kv));
            }
        }
    }
    out
}

/// The discretized truncated operator restricted to a set of modes.
struct ModeOperators {
    modes: Vec<(usize, usize)>,
    mats: Vec<Vec<f64>>,
}

impl ModeOperators {
    fn build(grid: &GridSpec, modes: Vec<(usize, usize)>, gamma: f64, eps: f64, beta: f64) -> Result<Self> {
        let gauge = Gauge::new(beta)?;
        let cut = Cutoff::new(eps)?;
        let (phis, xis) = (grid.phis(), grid.xis());
        let mats: Vec<Result<Vec<f64>>> =
            par::map(modes.len(), |m| mode_matrix(&phis[modes[m].0], &xis[modes[m].1], &grid.t_grid, gamma, &gauge, &cut));
        Ok(ModeOperators { modes, mats: mats.into_iter().collect::<Result<_>>()? })
    }

    fn apply(&self, gs: &SpectralField) -> SpectralField {
        let grid = &gs.grid;
        let w = grid.time_weights();
        let nt = grid.nt();
        let outs: Vec<Vec<C64>> = par::map(self.modes.len(), |m| {
            let (kx, kv) = self.modes[m];
            let a = &self.mats[m];
            let src: Vec<C64> = (0..nt).map(|j| gs.coeffs[gs.idx(j, kx, kv)] * w[j]).collect();
            (0..nt).map(|i| (0..i).fold(ZERO, |acc, j| acc + src[j] * a[i * nt + j])).collect()
        });
        let mut out = SpectralField::zeros(grid.clone(), Rep::Shifted);
        for (m, o) in outs.into_iter().enumerate() {
            let (kx, kv) = self.modes[m];
            for (it, z) in o.into_iter().enumerate() {
                let i = out.idx(it, kx, kv);
                out.coeffs[i] = z;
            }
        }
        out
    }

    fn schur(&self, w: &[f64]) -> f64 {
        let nt = w.len();
        let vals = par::map(self.mats.len(), |m| {
            let a = &self.mats[m];
            let row = (0..nt).map(|i| (0..nt).map(|j| a[i * nt + j].abs() * w[j]).sum::<f64>()).fold(0.0, f64::max);
            let col = (0..nt).map(|j| (0..nt).map(|i| a[i * nt + j].abs() * w[i]).sum::<f64>()).fold(0.0, f64::max);
            (row * col).sqrt()
        });
        vals.into_iter().fold(0.0, f64::max)
    }
}

/// Truncated operator `T_{gamma,eps}` acting in shifted variables; returns the shifted representation.
pub fn truncated_apply(g: &SpectralField, gamma: f64, eps: f64, beta: f64) -> Result<SpectralField> {
    let gs = to_shifted(g)?;
    let ops = ModeOperators::build(&gs.grid, active_modes(&gs), gamma, eps, beta)?;
    Ok(ops.apply(&gs))
}

/// Schur-test bound of the `L^2` operator norm of the discretized truncated operator, as the
/// supremum over the given modes of `sqrt(max row sum * max column sum)` in the weighted time metric.
pub fn schur_bound(grid: &GridSpec, modes: &[(usize, usize)], gamma: f64, eps: f64, beta: f64) -> Result<f64> {
    Ok(ModeOperators::build(grid, modes.to_vec(), gamma, eps, beta)?.schur(&grid.time_weights()))
}

/// Lower-bound estimate of `||T_{gamma,eps}||_{L^p -> L^p}` from random band-limited data.
#[derive(Clone, Debug)]
pub struct OpNormEstimate {
    pub value: f64,
    pub ratios: Vec<f64>,
    /// Schur bound over the modes the samples touch
    pub schur: f64,
}

/// Test data for operator-norm sampling: shifted-frame band-limited fields with a smooth time bump.
pub fn opnorm_samples(grid: &GridSpec, n: usize, seed: u64) -> Result<Vec<SpectralField>> {
    let (t0, t1) = (grid.t_grid[0], *grid.t_grid.last().unwrap_or(&0.0));
    let env = Envelope::Bump { center: t0 + 0.35 * (t1 - t0), half_width: 0.25 * (t1 - t0) };
    (0..n)
        .map(|k| make_test_field(&TestFieldSpec::new(seed + k as u64, [0.5, 2.5], [0.5, 3.0], env).shifted(), grid))
        .collect()
}

pub fn empirical_opnorm(grid: &GridSpec, gamma: f64, p: f64, eps: f64, beta: f64, n_samples: usize, seed: u64) -> Result<OpNormEstimate> {
    Ok(empirical_opnorms(grid, gamma, &[p], eps, beta, n_samples, seed)?.remove(0))
}

/// Estimates for several exponents from one operator build.
pub fn empirical_opnorms(grid: &GridSpec, gamma: f64, ps: &[f64], eps: f64, beta: f64, n_samples: usize, seed: u64) -> Result<Vec<OpNormEstimate>> {
    if n_samples < 10 {
        return Err(Error::InvalidParameter(format!("need at least 10 samples, got {n_samples}")));
    }
    let samples = opnorm_samples(grid, n_samples, seed)?;
    let mut modes: Vec<(usize, usize)> = samples.iter().flat_map(active_modes).collect();
    modes.sort_unstable();
    modes.dedup();
    let ops = ModeOperators::build(grid, modes, gamma, eps, beta)?;
    let schur = ops.schur(&grid.time_weights());
    let outs: Vec<SpectralField> = samples.iter().map(|g| ops.apply(g)).collect();
    Ok(ps
        .iter()
        .map(|&p| {
            let ratios: Vec<f64> = samples.iter().zip(&outs).map(|(g, o)| lp_norm(o, p).total / lp_norm(g, p).total).collect();
            let value = ratios.iter().cloned().fold(0.0, f64::max);
            OpNormEstimate { value, ratios, schur }
        })
        .collect())
}

/// Rescaled kernel tabulated on a periodic grid, read back with bicubic interpolation and
/// taken as zero outside the box.
#[derive(Clone, Debug)]
pub struct KernelTable {
    pub beta: f64,
    pub gamma: f64,
    pub kernel: KernelGrid,
}

fn keys(u: f64) -> [f64; 4] {
    // Keys cubic convolution weights for offsets -1, 0, 1, 2
    let a = -0.5;
    let w = |x: f64| {
        let x = x.abs();
        if x <= 1.0 {
            (a + 2.0) * x * x * x - (a + 3.0) * x * x + 1.0
        } else if x < 2.0 {
            a * x * x * x - 5.0 * a * x * x + 8.0 * a * x - 4.0 * a
        } else {
            0.0
        }
    };
    [w(1.0 + u), w(u), w(1.0 - u), w(2.0 - u)]
}

impl KernelTable {
    pub fn new(gamma: f64, beta: f64, grid: &GridSpec) -> Result<Self> {
        if grid.d != 1 {
            return Err(Error::InvalidParameter("kernel tables are one-dimensional in x and v".into()));
        }
        Ok(KernelTable { beta, gamma, kernel: kernel_rescaled(gamma, beta, grid)? })
    }

    /// Interpolated `K~(x, v)`; zero outside the tabulated box.
    pub fn eval(&self, x: f64, v: f64) -> f64 {
        let g = &self.kernel.grid;
        let (hx, hv) = (g.hx(), g.hv());
        let (ux, uv) = ((x + g.lx) / hx, (v + g.lv) / hv);
        if ux < 1.0 || uv < 1.0 || ux > (g.nx - 3) as f64 || uv > (g.nv - 3) as f64 {
            return 0.0;
        }
        let (ix, iv) = (ux.floor() as usize, uv.floor() as usize);
        let (wx, wv) = (keys(ux - ix as f64), keys(uv - iv as f64));
        let mut acc = 0.0;
        for (a, wa) in wx.iter().enumerate() {
            let row = (ix + a - 1) * g.nv;
            let mut s = 0.0;
            for (b, wb) in wv.iter().enumerate() {
                s += wb * self.kernel.values[row + iv + b - 1];
            }
            acc += wa * s;
        }
        acc
    }
}

#[derive(Clone, Debug)]
pub struct HormanderResult {
    pub value: f64,
    /// kernel mass near the box edge, times the cutoff-weighted time measure
    pub tail: f64,
}

/// `int_{rho(z, base) >= n r0} |K_eps(t, s, x - y, v - w) - K_eps(t, s', x - y', v - w')| dz`.
///
/// The space integral at each time separation runs over the rescaled box of the table (every
/// `stride`-th node); the time separation uses Gauss panels uniform in `log tau`.
pub fn hormander_integral(
    table: &KernelTable,
    base: &Point,
    other: &Point,
    r0: f64,
    n: f64,
    eps: f64,
    stride: usize,
) -> Result<HormanderResult> {
    let beta = table.beta;
    if quasi_distance(base, other, beta) > r0 * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter("base points farther apart than r0".into()));
    }
    let cut = Cutoff::new(eps)?;
    let g = &table.kernel.grid;
    let (xs, vs) = (g.xs(), g.vs());
    let stride = stride.max(1);
    let q = 2.0 * beta + 1.0;
    let (a, b) = (0.5 / beta, 1.0 + 0.5 / beta);
    let jac = 1.0 + 1.0 / beta; // d + d/beta with d = 1
    let cell = g.cell() * (stride * stride) as f64;
    let shift = other.t - base.t;
    let mut breaks = vec![eps / 2.0, eps, 1.0 / eps, 2.0 / eps];
    for p in [eps / 2.0, eps, 1.0 / eps, 2.0 / eps] {
        breaks.push(p + shift);
    }
    breaks.retain(|&p| p > 0.0);
    breaks.sort_by(|x, y| x.total_cmp(y));
    breaks.dedup();
    let lo = breaks[0];
    let hi = *breaks.last().unwrap_or(&lo);
    if hi <= lo {
        return Ok(HormanderResult { value: 0.0, tail: 0.0 });
    }
    let mut nodes = Vec::new();
    for w in breaks.windows(2) {
        let octaves = (w[1] / w[0]).log2().ceil().max(1.0) as usize;
        nodes.extend(log_nodes(w[0], w[1], 2 * octaves, 8));
    }
    let edge_mass = {
        let (nkx, nkv) = (g.nkx(), g.nkv());
        let mut m = 0.0;
        for ix in 0..nkx {
            for iv in 0..nkv {
                if xs[ix][0].abs() > 0.75 * g.lx || vs[iv][0].abs() > 0.75 * g.lv {
                    m += table.kernel.values[ix * nkv + iv].abs();
                }
            }
        }
        m * g.cell()
    };
    let (dy, dw) = (base.x[0] - other.x[0], base.v[0] - other.v[0]);
    let vals: Vec<(f64, f64)> = par::map(nodes.len(), |k| {
        let (tau, wt) = nodes[k];
        let tau2 = tau - shift;
        let z1 = cut.eval(tau);
        let z2 = if tau2 > 0.0 { cut.eval(tau2) } else { 0.0 };
        if z1 == 0.0 && z2 == 0.0 {
            return (0.0, 0.0);
        }
        let (ta, tb) = (tau.powf(a), tau.powf(b));
        let c1 = z1 * tau.powf(-jac - 1.0);
        let (t2a, t2b) = if tau2 > 0.0 { (tau2.powf(a), tau2.powf(b)) } else { (1.0, 1.0) };
        let c2 = if tau2 > 0.0 { z2 * tau2.powf(-jac - 1.0) } else { 0.0 };
        let mut acc = 0.0;
        for ix in (0..g.nkx()).step_by(stride) {
            let xx = xs[ix][0];
            for iv in (0..g.nkv()).step_by(stride) {
                let vv = vs[iv][0];
                let rho = ta * (1.0 + 0.5 * (xx + vv).abs().powf(1.0 / q) + 0.5 * xx.abs().powf(1.0 / q) + vv.abs());
                if rho < n * r0 {
                    continue;
                }
                // nodes outside the interpolation range count as zero, matching `eval`
                let inside = ix >= 1 && iv >= 1 && ix + 3 <= g.nx && iv + 3 <= g.nv;
                let k1 = if inside { c1 * table.kernel.values[ix * g.nkv() + iv] } else { 0.0 };
                let k2 = if c2 != 0.0 {
                    // physical offsets from the base point
                    let dv = ta * vv;
                    let dx = tb * xx - base.t * dv;
                    let (dv2, dx2) = (dv + dw, dx + dy);
                    c2 * table.eval((dx2 + other.t * dv2) / t2b, dv2 / t2a)
                } else {
                    0.0
                };
                acc += (k1 - k2).abs();
            }
        }
        let scale = tau.powf(jac) * cell;
        (wt * acc * scale, wt * (z1 + z2) / tau)
    });
    let value = vals.iter().map(|v| v.0).sum();
    let tail = edge_mass * vals.iter().map(|v| v.1).sum::<f64>();
    Ok(HormanderResult { value, tail })
}

/// `base` displaced along the dilation orbit of `dir` to quasi-distance `r0`.
pub fn perturb(base: &Point, dir: &Point, r0: f64, beta: f64) -> Point {
    let at = |lam: f64| {
        let u = dir.dilate(lam, beta);
        Point::new(base.t + u.t, [base.x[0] + u.x[0], base.x[1] + u.x[1]], [base.v[0] + u.v[0], base.v[1] + u.v[1]])
    };
    let (mut lo, mut hi) = (1e-12 * r0, 1.0 * r0.max(1.0));
    while quasi_distance(&at(hi), base, beta) < r0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if quasi_distance(&at(mid), base, beta) < r0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(lo)
}
