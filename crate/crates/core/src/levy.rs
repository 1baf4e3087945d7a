//! Good/bad splitting of the velocity exponent through the Lévy representation
//! `|a|^(2 beta) = c * int_0^inf int_S (1 - cos(rho a.w)) rho^(-1-2 beta) dw drho`.
//!
//! With `h(u) = int_S (1 - cos(u w_1)) dw` and `I(X) = int_0^X h(u) u^(-1-2 beta) du`,
//! the small-jump part of `|a|^(2 beta)` is `c |a|^(2 beta) I(|a|)` and the large-jump part
//! is `c |a|^(2 beta) (I(inf) - I(|a|))`. The good exponent keeps half the small jumps.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{PhysicalField, Rep, SpectralField, C64};
use crate::grid::{norm, GridSpec, V2};
use crate::par;
use crate::quad::{adaptive, gl};

const PANEL: f64 = PI / 4.0;
const X_MAX: f64 = 2048.0;
const GL_N: usize = 16;

#[derive(Clone, Debug)]
pub struct LevySplit {
    pub beta: f64,
    pub d: usize,
    /// normalization constant
    pub c: f64,
    /// `I(k * PANEL)`
    head: Vec<f64>,
    /// `int_{k PANEL}^inf h(u) u^(-1-2beta) du`
    tail: Vec<f64>,
    i_inf: f64,
    rtol: f64,
}

fn sphere_profile(d: usize, u: f64) -> f64 {
    if d == 1 {
        2.0 * (1.0 - u.cos())
    } else {
        2.0 * PI * (1.0 - libm::j0(u))
    }
}

/// Series for `I(X)` at small `X`.
fn head_series(d: usize, beta: f64, x: f64) -> f64 {
    let a = 2.0 * beta;
    let mut s = 0.0;
    let mut term = 1.0; // coefficient of u^(2k) in h
    let x2 = x * x;
    let mut xp = 1.0;
    for k in 1..40 {
        let kf = k as f64;
        term *= if d == 1 { -1.0 / ((2.0 * kf - 1.0) * (2.0 * kf)) } else { -0.25 / (kf * kf) };
        xp *= x2;
        let coef = if d == 1 { -2.0 * term } else { -2.0 * PI * term };
        let add = coef * xp / (2.0 * kf - a) * x.powf(-a);
        s += add;
        if add.abs() < 1e-18 * s.abs() {
            break;
        }
    }
    s
}

/// Asymptotic `int_X^inf h(u) u^(-m) du` for large `X`, `m = 1 + 2 beta`.
fn tail_asymptotic(d: usize, beta: f64, x: f64) -> f64 {
    let m = 1.0 + 2.0 * beta;
    let pow_part = x.powf(1.0 - m) / (m - 1.0);
    if d == 1 {
        // int_X^inf cos(u) u^-m du by repeated parts
        let (s, c) = x.sin_cos();
        let cos_int = -s * x.powf(-m) + m * c * x.powf(-m - 1.0) + m * (m + 1.0) * s * x.powf(-m - 2.0)
            - m * (m + 1.0) * (m + 2.0) * c * x.powf(-m - 3.0);
        2.0 * (pow_part - cos_int)
    } else {
        let n = m + 0.5;
        let (s, c) = (x - PI / 4.0).sin_cos();
        let j_int = (2.0 / PI).sqrt() * (-s * x.powf(-n) + (n + 0.125) * c * x.powf(-n - 1.0));
        2.0 * PI * (pow_part - j_int)
    }
}

impl LevySplit {
    pub fn new(beta: f64, d: usize) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidParameter(format!("levy split needs beta in (0,1), got {beta}")));
        }
        if d != 1 && d != 2 {
            return Err(Error::InvalidParameter(format!("dimension {d} not supported")));
        }
        let k = |u: f64| sphere_profile(d, u) * u.powf(-1.0 - 2.0 * beta);
        let n = (X_MAX / PANEL).ceil() as usize;
        let mut panels = Vec::with_capacity(n);
        panels.push(head_series(d, beta, PANEL));
        for j in 1..n {
            panels.push(gl(k, j as f64 * PANEL, (j + 1) as f64 * PANEL, GL_N));
        }
        let x_end = n as f64 * PANEL;
        let far = tail_asymptotic(d, beta, x_end);
        let mut head = vec![0.0; n + 1];
        for j in 0..n {
            head[j + 1] = head[j] + panels[j];
        }
        let mut tail = vec![0.0; n + 1];
        tail[n] = far;
        for j in (0..n).rev() {
            tail[j] = tail[j + 1] + panels[j];
        }
        let i_inf = tail[0];
        if !(i_inf.is_finite() && i_inf > 0.0) {
            return Err(Error::Quadrature(format!("levy normalization integral {i_inf}")));
        }
        Ok(LevySplit { beta, d, c: 1.0 / i_inf, head, tail, i_inf, rtol: 1e-11 })
    }

    fn kernel(&self, u: f64) -> f64 {
        sphere_profile(self.d, u) * u.powf(-1.0 - 2.0 * self.beta)
    }

    /// `I(X)`: integral of the jump profile up to `X`.
    pub fn small_jumps(&self, x: f64) -> f64 {
        if x <= PANEL {
            return head_series(self.d, self.beta, x);
        }
        let n = self.head.len() - 1;
        if x >= n as f64 * PANEL {
            return self.i_inf - tail_asymptotic(self.d, self.beta, x);
        }
        let j = (x / PANEL).floor() as usize;
        self.head[j] + gl(|u| self.kernel(u), j as f64 * PANEL, x, GL_N)
    }

    /// `I(inf) - I(X)`, summed from the far end.
    pub fn large_jumps(&self, x: f64) -> f64 {
        let n = self.head.len() - 1;
        if x >= n as f64 * PANEL {
            return tail_asymptotic(self.d, self.beta, x);
        }
        if x <= PANEL {
            return self.tail[1] + (head_series(self.d, self.beta, PANEL) - head_series(self.d, self.beta, x));
        }
        let j = (x / PANEL).floor() as usize;
        self.tail[j + 1] + gl(|u| self.kernel(u), x, (j + 1) as f64 * PANEL, GL_N)
    }

    /// The full normalization integral `I(inf)`.
    pub fn total_integral(&self) -> f64 {
        self.i_inf
    }

    /// Right side of the representation at `|a| = s`, for self-checks (should be `s^(2 beta)`).
    pub fn represent(&self, s: f64) -> f64 {
        self.c * s.powf(2.0 * self.beta) * (self.small_jumps(s) + self.large_jumps(s))
    }

    fn r_integral<F: Fn(f64) -> f64>(&self, phi: &V2, xi: &V2, g: F) -> Result<f64> {
        let f = |r: f64| g(norm(&[xi[0] - r * phi[0], xi[1] - r * phi[1]]));
        let pp = phi[0] * phi[0] + phi[1] * phi[1];
        let vertex = if pp > 0.0 { (xi[0] * phi[0] + xi[1] * phi[1]) / pp } else { -1.0 };
        if vertex > 0.0 && vertex < 1.0 {
            Ok(adaptive(f, 0.0, vertex, GL_N, self.rtol, 1e-300)? + adaptive(f, vertex, 1.0, GL_N, self.rtol, 1e-300)?)
        } else {
            adaptive(f, 0.0, 1.0, GL_N, self.rtol, 1e-300)
        }
    }

    /// Good exponent: half of the small-jump part.
    pub fn psi_good(&self, phi: &V2, xi: &V2) -> Result<f64> {
        let (c, a) = (self.c, 2.0 * self.beta);
        self.r_integral(phi, xi, |s| if s == 0.0 { 0.0 } else { 0.5 * c * s.powf(a) * self.small_jumps(s) })
    }

    /// Bad exponent: the other half of the small jumps plus all large jumps.
    pub fn psi_bad(&self, phi: &V2, xi: &V2) -> Result<f64> {
        let (c, a) = (self.c, 2.0 * self.beta);
        self.r_integral(phi, xi, |s| {
            if s == 0.0 {
                0.0
            } else {
                c * s.powf(a) * (0.5 * self.small_jumps(s) + self.large_jumps(s))
            }
        })
    }

    /// `psi_good / min(|phi|^2 + |xi|^2, |phi|^(2b) + |xi|^(2b))`.
    pub fn coercivity_ratio(&self, phi: &V2, xi: &V2) -> Result<f64> {
        let (p, x) = (norm(phi), norm(xi));
        let a = 2.0 * self.beta;
        let den = (p * p + x * x).min(p.powf(a) + x.powf(a));
        Ok(self.psi_good(phi, xi)? / den)
    }
}

/// Lévy normalization constant for `(-Lap)^beta` in dimension `d`.
pub fn levy_constant(beta: f64, d: usize) -> Result<f64> {
    Ok(LevySplit::new(beta, d)?.c)
}

/// Density of the bad measure on a grid, with diagnostics.
#[derive(Clone, Debug)]
pub struct BadDensity {
    pub density: PhysicalField,
    pub mass: f64,
    pub peak: f64,
    pub min: f64,
    /// largest symbol value on the outermost retained modes
    pub edge_symbol: f64,
    /// (min, max) over grid velocities of the x-integrated density times `(1+|v|)^(d+2beta)`
    pub v_profile_ratio: (f64, f64),
    /// (min, max) over grid positions of the v-integrated density times `(1+|x|)^(d+2beta)`
    pub x_profile_ratio: (f64, f64),
}

/// Inverse transform of `exp(-psi_bad)` on the single-time grid.
pub fn bad_density(grid: &GridSpec, beta: f64) -> Result<BadDensity> {
    let split = LevySplit::new(beta, grid.d)?;
    let g = grid.with_times(vec![0.0]);
    let phis = g.phis();
    let xis = g.xis();
    let (mx, mv) = (g.max_mode(g.nx, 0), g.max_mode(g.nv, 0));
    let vol = g.volume();
    let nkv = g.nkv();
    let rows: Vec<Result<(Vec<C64>, f64)>> = par::map(g.nkx(), |kx| {
        let km = g.kx_modes(kx);
        let mut row = vec![C64::new(0.0, 0.0); nkv];
        let mut edge: f64 = 0.0;
        if km.iter().any(|k| k.abs() > mx) {
            return Ok((row, edge));
        }
        for (kv, c) in row.iter_mut().enumerate() {
            let vm = g.kv_modes(kv);
            if vm.iter().any(|k| k.abs() > mv) {
                continue;
            }
            let e = (-split.psi_bad(&phis[kx], &xis[kv])?).exp();
            if km.iter().any(|k| k.abs() == mx) || vm.iter().any(|k| k.abs() == mv) {
                edge = edge.max(e);
            }
            *c = C64::new(e / vol, 0.0);
        }
        Ok((row, edge))
    });
    let mut coeffs = Vec::with_capacity(g.slice_len());
    let mut edge_symbol: f64 = 0.0;
    for r in rows {
        let (row, e) = r?;
        coeffs.extend(row);
        edge_symbol = edge_symbol.max(e);
    }
    let density = SpectralField::from_coeffs(g.clone(), Rep::Plain, coeffs)?.to_physical();
    let cell = g.cell();
    let vals: Vec<f64> = density.samples.iter().map(|c| c.re).collect();
    let mass = vals.iter().sum::<f64>() * cell;
    let peak = vals.iter().cloned().fold(f64::MIN, f64::max);
    let min = vals.iter().cloned().fold(f64::MAX, f64::min);
    let expo = g.d as f64 + 2.0 * beta;
    let (xs, vs) = (g.xs(), g.vs());
    let (hx, hv) = (g.hx().powi(g.d as i32), g.hv().powi(g.d as i32));
    let ratio_range = |marg: Vec<f64>, pts: &[V2]| {
        marg.iter().zip(pts).fold((f64::MAX, f64::MIN), |(lo, hi), (m, p)| {
            let r = m * (1.0 + norm(p)).powf(expo);
            (lo.min(r), hi.max(r))
        })
    };
    let v_marg: Vec<f64> = (0..nkv).map(|kv| (0..g.nkx()).map(|kx| vals[kx * nkv + kv]).sum::<f64>() * hx).collect();
    let x_marg: Vec<f64> = (0..g.nkx()).map(|kx| vals[kx * nkv..(kx + 1) * nkv].iter().sum::<f64>() * hv).collect();
    Ok(BadDensity {
        v_profile_ratio: ratio_range(v_marg, &vs),
        x_profile_ratio: ratio_range(x_marg, &xs),
        density,
        mass,
        peak,
        min,
        edge_symbol,
    })
}
