use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Small fixed-size vector; only the first `d` components are used.
pub type V2 = [f64; 2];

#[inline]
pub fn dot(a: &V2, b: &V2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}
#[inline]
pub fn norm(a: &V2) -> f64 {
    dot(a, a).sqrt()
}
#[inline]
pub fn axpy(a: &V2, s: f64, b: &V2) -> V2 {
    [a[0] + s * b[0], a[1] + s * b[1]]
}

/// Periodic box `[-lx, lx)^d x [-lv, lv)^d` with `nx`, `nv` modes per axis and a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: usize,
    pub lx: f64,
    pub lv: f64,
    pub nx: usize,
    pub nv: usize,
    pub t_grid: Vec<f64>,
}

/// Signed integer frequency of FFT index `i` on an axis of length `n`.
#[inline]
pub fn signed_mode(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// FFT index of signed mode `k`, if representable.
#[inline]
pub fn mode_index(k: i64, n: usize) -> Option<usize> {
    let h = (n / 2) as i64;
    if k >= -h && k < h {
        Some(if k >= 0 { k as usize } else { (k + n as i64) as usize })
    } else {
        None
    }
}

impl GridSpec {
    pub fn new(d: usize, lx: f64, lv: f64, nx: usize, nv: usize, t_grid: Vec<f64>) -> Result<Self> {
        let g = GridSpec { d, lx, lv, nx, nv, t_grid };
        g.validate()?;
        Ok(g)
    }

    /// Uniform time grid of `nt` points on `[t0, t1]`.
    pub fn uniform_times(t0: f64, t1: f64, nt: usize) -> Vec<f64> {
        if nt == 1 {
            return vec![t0];
        }
        (0..nt).map(|i| t0 + (t1 - t0) * i as f64 / (nt - 1) as f64).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.d != 1 && self.d != 2 {
            return Err(Error::InvalidGrid(format!("d = {} (must be 1 or 2)", self.d)));
        }
        for (name, n) in [("nx", self.nx), ("nv", self.nv)] {
            if n < 8 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!("{name} = {n} (must be even and >= 8)")));
            }
        }
        if !(self.lx > 0.0 && self.lv > 0.0 && self.lx.is_finite() && self.lv.is_finite()) {
            return Err(Error::InvalidGrid("box half-lengths must be positive".into()));
        }
        if self.t_grid.is_empty() {
            return Err(Error::InvalidGrid("empty time grid".into()));
        }
        if self.t_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("time grid not strictly increasing".into()));
        }
        Ok(())
    }

    pub fn with_times(&self, t_grid: Vec<f64>) -> Self {
        GridSpec { t_grid, ..self.clone() }
    }

    pub fn nt(&self) -> usize {
        self.t_grid.len()
    }
    /// Number of x-modes (`nx^d`).
    pub fn nkx(&self) -> usize {
        self.nx.pow(self.d as u32)
    }
    pub fn nkv(&self) -> usize {
        self.nv.pow(self.d as u32)
    }
    pub fn slice_len(&self) -> usize {
        self.nkx() * self.nkv()
    }
    /// Shape of one time slice for the FFT helpers.
    pub fn slice_shape(&self) -> Vec<usize> {
        let mut s = vec![self.nx; self.d];
        s.extend(std::iter::repeat(self.nv).take(self.d));
        s
    }
    pub fn x_axes(&self) -> Vec<bool> {
        let mut a = vec![true; self.d];
        a.extend(std::iter::repeat(false).take(self.d));
        a
    }
    pub fn v_axes(&self) -> Vec<bool> {
        let mut a = vec![false; self.d];
        a.extend(std::iter::repeat(true).take(self.d));
        a
    }

    pub fn dphi(&self) -> f64 {
        PI / self.lx
    }
    pub fn dxi(&self) -> f64 {
        PI / self.lv
    }
    pub fn hx(&self) -> f64 {
        2.0 * self.lx / self.nx as f64
    }
    pub fn hv(&self) -> f64 {
        2.0 * self.lv / self.nv as f64
    }
    /// Phase-space volume of one sample cell.
    pub fn cell(&self) -> f64 {
        (self.hx() * self.hv()).powi(self.d as i32)
    }
    pub fn volume(&self) -> f64 {
        (4.0 * self.lx * self.lv).powi(self.d as i32)
    }

    /// Signed integer mode multi-index of flattened x-mode `kx`.
    pub fn kx_modes(&self, kx: usize) -> [i64; 2] {
        multi(kx, self.nx, self.d)
    }
    pub fn kv_modes(&self, kv: usize) -> [i64; 2] {
        multi(kv, self.nv, self.d)
    }

    /// Frequency vectors of all x-modes.
    pub fn phis(&self) -> Vec<V2> {
        let dp = self.dphi();
        (0..self.nkx())
            .map(|k| {
                let m = self.kx_modes(k);
                [m[0] as f64 * dp, m[1] as f64 * dp]
            })
            .collect()
    }
    pub fn xis(&self) -> Vec<V2> {
        let dx = self.dxi();
        (0..self.nkv())
            .map(|k| {
                let m = self.kv_modes(k);
                [m[0] as f64 * dx, m[1] as f64 * dx]
            })
            .collect()
    }
    /// Physical sample positions.
    pub fn xs(&self) -> Vec<V2> {
        let h = self.hx();
        (0..self.nkx())
            .map(|i| {
                let j = unsigned_multi(i, self.nx, self.d);
                let mut p = [0.0; 2];
                for a in 0..self.d {
                    p[a] = -self.lx + h * j[a] as f64;
                }
                p
            })
            .collect()
    }
    pub fn vs(&self) -> Vec<V2> {
        let h = self.hv();
        (0..self.nkv())
            .map(|i| {
                let j = unsigned_multi(i, self.nv, self.d);
                let mut p = [0.0; 2];
                for a in 0..self.d {
                    p[a] = -self.lv + h * j[a] as f64;
                }
                p
            })
            .collect()
    }

    /// Flattened x-mode index of signed modes `m`, if representable.
    pub fn kx_index(&self, m: [i64; 2]) -> Option<usize> {
        flat(m, self.nx, self.d)
    }
    pub fn kv_index(&self, m: [i64; 2]) -> Option<usize> {
        flat(m, self.nv, self.d)
    }

    /// Largest |mode| per axis still clear of `guard` modes at the Nyquist edge.
    pub fn max_mode(&self, n: usize, guard: usize) -> i64 {
        (n / 2) as i64 - 1 - guard as i64
    }

    /// Trapezoid weights of the time grid (unit weight for a single time).
    pub fn time_weights(&self) -> Vec<f64> {
        trapezoid_weights(&self.t_grid)
    }

    pub fn is_uniform_in_time(&self) -> bool {
        let t = &self.t_grid;
        if t.len() < 2 {
            return true;
        }
        let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
        t.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs().max(1e-300))
    }

    /// Compact identifier used in reports.
    pub fn id(&self) -> String {
        format!(
            "d{}_nx{}_nv{}_nt{}_lx{}_lv{}",
            self.d,
            self.nx,
            self.nv,
            self.nt(),
            self.lx,
            self.lv
        )
    }
}

pub fn trapezoid_weights(t: &[f64]) -> Vec<f64> {
    let n = t.len();
    if n == 1 {
        return vec![1.0];
    }
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let h = t[i + 1] - t[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

fn multi(i: usize, n: usize, d: usize) -> [i64; 2] {
    let u = unsigned_multi(i, n, d);
    let mut m = [0i64; 2];
    for a in 0..d {
        m[a] = signed_mode(u[a], n);
    }
    m
}

fn unsigned_multi(i: usize, n: usize, d: usize) -> [usize; 2] {
    if d == 1 {
        [i, 0]
    } else {
        [i / n, i % n]
    }
}

fn flat(m: [i64; 2], n: usize, d: usize) -> Option<usize> {
    if d == 1 {
        mode_index(m[0], n)
    } else {
        Some(mode_index(m[0], n)? * n + mode_index(m[1], n)?)
    }
}
