//! Exponent arithmetic: homogeneous dimension, Sobolev gain, trace and transfer indices and the
//! kinetic Hardy–Littlewood–Sobolev exponents.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Equation order, regularity and integrability in `d` dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KineticParams {
    pub beta: f64,
    pub gamma: f64,
    pub p: f64,
    pub d: usize,
}

impl KineticParams {
    pub fn new(beta: f64, gamma: f64, p: f64, d: usize) -> Result<Self> {
        let k = KineticParams { beta, gamma, p, d };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::ExponentRange(format!("0 < beta <= 1 fails for beta = {}", self.beta)));
        }
        if !(1..=3).contains(&self.d) {
            return Err(Error::ExponentRange(format!("1 <= d <= 3 fails for d = {}", self.d)));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::ExponentRange(format!("1 < p < inf fails for p = {}", self.p)));
        }
        if !(0.0..=2.0 * self.beta).contains(&self.gamma) {
            return Err(Error::ExponentRange(format!(
                "0 <= gamma <= 2 beta fails for gamma = {}, beta = {}",
                self.gamma, self.beta
            )));
        }
        Ok(())
    }

    pub fn homogeneous_dim(&self) -> f64 {
        homogeneous_dim(self.beta, self.d)
    }
}

/// `2 beta + (2 beta + 2) d`.
pub fn homogeneous_dim(beta: f64, d: usize) -> f64 {
    2.0 * beta + (2.0 * beta + 2.0) * d as f64
}

/// `a* = a K / (K - a beta)` for `1 < a < K / beta`.
pub fn star(a: f64, beta: f64, d: usize) -> Result<f64> {
    let k = homogeneous_dim(beta, d);
    if !(a > 1.0) {
        return Err(Error::ExponentRange(format!("1 < a fails for a = {a}")));
    }
    if !(a < k / beta) {
        return Err(Error::ExponentRange(format!("a < K/beta = {} fails for a = {a}", k / beta)));
    }
    Ok(a * k / (k - a * beta))
}

/// Exponents of the kinetic HLS estimate with source exponent `a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HlsExponents {
    pub a: f64,
    pub a_star: f64,
    pub a_star_star: f64,
    /// `a** (K - 2 beta) / K`, the exponent of the matching initial datum.
    pub a_flat: f64,
}

pub fn hls_exponents(a: f64, beta: f64, d: usize) -> Result<HlsExponents> {
    let k = homogeneous_dim(beta, d);
    if !(a > 1.0 && a < k / (2.0 * beta)) {
        return Err(Error::ExponentRange(format!("1 < a < K/(2 beta) = {} fails for a = {a}", k / (2.0 * beta))));
    }
    let a_star = star(a, beta, d)?;
    let a_star_star = star(a_star, beta, d)?;
    Ok(HlsExponents { a, a_star, a_star_star, a_flat: a_star_star * (k - 2.0 * beta) / k })
}

/// Lebesgue exponent reached by the semigroup from an `L^b` datum: `b K / (K - 2 beta)`.
pub fn semigroup_target(b: f64, beta: f64, d: usize) -> Result<f64> {
    if !(b >= 1.0 && b.is_finite()) {
        return Err(Error::ExponentRange(format!("1 <= b < inf fails for b = {b}")));
    }
    let k = homogeneous_dim(beta, d);
    Ok(b * k / (k - 2.0 * beta))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentTable {
    pub params: KineticParams,
    pub k_dim: f64,
    /// `K / (K - gamma p)`; needs `0 < gamma < K/p`.
    pub kappa: f64,
    pub p_kappa: f64,
    /// HLS exponents with `a = p`, present when `1 < p < K/(2 beta)`.
    pub hls: Option<HlsExponents>,
    pub two_lower: f64,
    pub two_upper: f64,
    /// `gamma - 2 beta / p`.
    pub trace_index: f64,
    /// `gamma / (2 beta + 1)`.
    pub transfer_index: f64,
    /// `1/q = 1/p - gamma/(K - 2 beta)`, absent when the right side is not positive.
    pub besov_sobolev_q: Option<f64>,
}

pub fn exponent_table(beta: f64, d: usize, p: f64, gamma: f64) -> Result<ExponentTable> {
    let params = KineticParams::new(beta, gamma, p, d)?;
    let k = params.homogeneous_dim();
    if !(gamma > 0.0) {
        return Err(Error::ExponentRange(format!("0 < gamma fails for gamma = {gamma}")));
    }
    if !(gamma < k / p) {
        return Err(Error::ExponentRange(format!("gamma < K/p = {} fails for gamma = {gamma}", k / p)));
    }
    let kappa = k / (k - gamma * p);
    let hls = if p < k / (2.0 * beta) { Some(hls_exponents(p, beta, d)?) } else { None };
    let inv_q = 1.0 / p - gamma / (k - 2.0 * beta);
    Ok(ExponentTable {
        params,
        k_dim: k,
        kappa,
        p_kappa: p * kappa,
        hls,
        two_lower: 2.0 * k / (k + 2.0 * beta),
        two_upper: 2.0 * k / (k - 2.0 * beta),
        trace_index: gamma - 2.0 * beta / p,
        transfer_index: gamma / (2.0 * beta + 1.0),
        besov_sobolev_q: (inv_q > 0.0).then(|| 1.0 / inv_q),
    })
}
