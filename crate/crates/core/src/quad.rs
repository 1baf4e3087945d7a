//! Gauss–Legendre rules and a few quadrature helpers.

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights of the `n`-point rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&n) {
        return r.clone();
    }
    let r = Arc::new(compute_gl(n));
    cache.lock().unwrap().insert(n, r.clone());
    r
}

fn compute_gl(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Fixed `n`-point rule on [a, b].
pub fn gl<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let r = gauss_legendre(n);
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    r.0.iter().zip(&r.1).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

/// Nodes and weights of `panels` equal `n`-point panels on [a, b].
pub fn composite_nodes(a: f64, b: f64, panels: usize, n: usize) -> Vec<(f64, f64)> {
    let r = gauss_legendre(n);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * n);
    for p in 0..panels {
        let lo = a + h * p as f64;
        for (x, w) in r.0.iter().zip(&r.1) {
            out.push((lo + 0.5 * h * (x + 1.0), 0.5 * h * w));
        }
    }
    out
}

/// Nodes and weights on [a, b] (a > 0) from panels uniform in log r.
pub fn log_nodes(a: f64, b: f64, panels: usize, n: usize) -> Vec<(f64, f64)> {
    composite_nodes(a.ln(), b.ln(), panels, n)
        .into_iter()
        .map(|(u, w)| {
            let r = u.exp();
            (r, w * r)
        })
        .collect()
}

/// Adaptive bisection with an `n`-point rule per panel, relative tolerance `rtol`
/// (plus an absolute floor `atol`).
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize, rtol: f64, atol: f64) -> Result<f64> {
    let whole = gl(&mut f, a, b, n);
    let mut total = 0.0;
    let mut stack = vec![(a, b, whole, 0u32)];
    let mut scale = whole.abs();
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let l = gl(&mut f, lo, mid, n);
        let r = gl(&mut f, mid, hi, n);
        let refined = l + r;
        scale = scale.max(refined.abs());
        let width = (hi - lo) / (b - a);
        if (refined - est).abs() <= (rtol * scale).max(atol) * width.max(1e-3) || (refined - est).abs() < 1e-300 {
            total += refined;
        } else if depth >= 40 {
            return Err(Error::Quadrature(format!("no convergence on [{lo}, {hi}]")));
        } else {
            stack.push((lo, mid, l, depth + 1));
            stack.push((mid, hi, r, depth + 1));
        }
    }
    Ok(total)
}

/// Barycentric-free Lagrange weights for interpolating at `x` from `nodes`.
pub fn lagrange_weights(nodes: &[f64], x: f64) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![1.0; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                w[i] *= (x - nodes[j]) / (nodes[i] - nodes[j]);
            }
        }
    }
    w
}

/// Start index of a `width`-point stencil around `x` in sorted `grid`.
pub fn stencil_start(grid: &[f64], x: f64, width: usize) -> usize {
    let n = grid.len();
    if n <= width {
        return 0;
    }
    let i = grid.partition_point(|&g| g <= x).saturating_sub(1);
    let half = width / 2;
    i.saturating_sub(half - 1).min(n - width)
}

/// Smooth step: 0 for r ≤ 0, 1 for r ≥ 1, built from exp(-1/s).
pub fn smooth_step(r: f64) -> f64 {
    fn h(s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else {
            (-1.0 / s).exp()
        }
    }
    if r <= 0.0 {
        0.0
    } else if r >= 1.0 {
        1.0
    } else {
        let a = h(r);
        a / (a + h(1.0 - r))
    }
}

/// Derivative of [`smooth_step`].
pub fn smooth_step_deriv(r: f64) -> f64 {
    if r <= 0.0 || r >= 1.0 {
        return 0.0;
    }
    let s = 1.0 - r;
    // step = 1/(1+e^{1/r-1/s}); derivative via q = 1/r - 1/s
    let q = 1.0 / r - 1.0 / s;
    if q.abs() > 700.0 {
        return 0.0;
    }
    // e^q / (1 + e^q)^2 is even in q; evaluate with the decaying exponential
    let e = (-q.abs()).exp();
    let dq = -1.0 / (r * r) - 1.0 / (s * s);
    -e * dq / ((1.0 + e) * (1.0 + e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 8, 32] {
            let deg = 2 * n - 1;
            let v = gl(|x| x.powi(deg as i32) + 1.0, 0.0, 2.0, n);
            let exact = 2f64.powi(deg as i32 + 1) / (deg + 1) as f64 + 2.0;
            assert!((v - exact).abs() < 1e-12 * exact, "n={n}");
        }
    }

    #[test]
    fn adaptive_handles_kink() {
        let v = adaptive(|x: f64| (x - 0.3).abs().sqrt(), 0.0, 1.0, 16, 1e-12, 0.0).unwrap();
        let exact = (2.0 / 3.0) * (0.3f64.powf(1.5) + 0.7f64.powf(1.5));
        assert!((v - exact).abs() < 1e-10);
    }

    #[test]
    fn smooth_step_derivative_matches_difference() {
        for r in [0.1, 0.37, 0.5, 0.81] {
            let h = 1e-6;
            let fd = (smooth_step(r + h) - smooth_step(r - h)) / (2.0 * h);
            assert!((fd - smooth_step_deriv(r)).abs() < 1e-7);
        }
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lagrange_reproduces_cubic() {
        let nodes = [0.0, 1.0, 2.5, 3.0];
        let f = |x: f64| 2.0 * x * x * x - x + 4.0;
        let w = lagrange_weights(&nodes, 1.7);
        let v: f64 = nodes.iter().zip(&w).map(|(x, w)| w * f(*x)).sum();
        assert!((v - f(1.7)).abs() < 1e-12);
    }
}
