//! The anisotropic frequency gauge: the Minkowski gauge of
//! `|phi|^2 lambda^(-2(2 beta+1)) + |xi|^2 lambda^(-2) = 1`.

use crate::error::{Error, Result};
use crate::grid::{norm, V2};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gauge {
    pub beta: f64,
    pub tol: f64,
}

impl Gauge {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidParameter(format!("beta = {beta} outside (0, 1]")));
        }
        Ok(Gauge { beta, tol: 1e-12 })
    }

    /// Exponent of the x-frequency: `2 beta + 1`.
    #[inline]
    pub fn q(&self) -> f64 {
        2.0 * self.beta + 1.0
    }

    /// Gauge value; 0 at the origin.
    pub fn eval(&self, phi: &V2, xi: &V2) -> f64 {
        self.eval_norms(norm(phi), norm(xi))
    }

    /// Gauge value from `|phi|` and `|xi|`.
    pub fn eval_norms(&self, a: f64, b: f64) -> f64 {
        let q = self.q();
        if a == 0.0 {
            return b;
        }
        if b == 0.0 {
            return a.powf(1.0 / q);
        }
        // G(u) = a^2 e^{-2qu} + b^2 e^{-2u} - 1 is convex and decreasing in u = ln lambda,
        // and G >= 0 at the lower bracket, so Newton increases monotonically to the root.
        let lo = b.max(a.powf(1.0 / q));
        let hi = lo * std::f64::consts::SQRT_2;
        let (a2, b2) = (a * a, b * b);
        let mut u = lo.ln();
        let uhi = hi.ln();
        for _ in 0..100 {
            let e1 = a2 * (-2.0 * q * u).exp();
            let e2 = b2 * (-2.0 * u).exp();
            let g = e1 + e2 - 1.0;
            let dg = -2.0 * q * e1 - 2.0 * e2;
            let step = -g / dg;
            let next = (u + step).min(uhi);
            if step.abs() <= self.tol * 0.01 {
                u = next;
                break;
            }
            u = next;
        }
        u.exp()
    }

    /// `(grad_phi d, grad_xi d)` by implicit differentiation of the gauge equation.
    pub fn grad(&self, phi: &V2, xi: &V2) -> (V2, V2) {
        let a = norm(phi);
        let b = norm(xi);
        if a == 0.0 && b == 0.0 {
            return ([0.0; 2], [0.0; 2]);
        }
        let q = self.q();
        let l = self.eval_norms(a, b);
        let lq = l.powf(-2.0 * q);
        let den = q * a * a * lq / l + b * b / (l * l * l);
        let sp = lq / den;
        let sx = 1.0 / (l * l * den);
        ([phi[0] * sp, phi[1] * sp], [xi[0] * sx, xi[1] * sx])
    }

    /// The degree-zero symbol `phi . grad_xi d / d`.
    pub fn m2(&self, phi: &V2, xi: &V2) -> f64 {
        let d = self.eval(phi, xi);
        if d == 0.0 {
            return 0.0;
        }
        let (_, gx) = self.grad(phi, xi);
        (phi[0] * gx[0] + phi[1] * gx[1]) / d
    }

    /// The comparison quasi-norm `|phi|^(1/(2 beta+1)) + |xi|`.
    pub fn quasi_norm(&self, phi: &V2, xi: &V2) -> f64 {
        norm(phi).powf(1.0 / self.q()) + norm(xi)
    }

    /// Kinetic frequency dilation `(lambda^(2 beta+1) phi, lambda xi)`.
    pub fn dilate(&self, lambda: f64, phi: &V2, xi: &V2) -> (V2, V2) {
        let s = lambda.powf(self.q());
        ([phi[0] * s, phi[1] * s], [xi[0] * lambda, xi[1] * lambda])
    }

    /// Min and max of `d / quasi_norm` over the sample, skipping the origin.
    pub fn equivalence_constants(&self, sample: &[(V2, V2)]) -> Result<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for (p, x) in sample {
            let qn = self.quasi_norm(p, x);
            if qn == 0.0 {
                continue;
            }
            let r = self.eval(p, x) / qn;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if !lo.is_finite() {
            return Err(Error::EmptySample);
        }
        Ok((lo, hi))
    }
}
