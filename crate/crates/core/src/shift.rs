//! The kinetic shift and kinetic dilations.

use crate::error::{Error, Result};
use crate::field::{shear_phase, v_to_physical, v_to_spectral, Rep, SpectralField, ZERO};
use crate::grid::GridSpec;
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftDir {
    Forward,
    Inverse,
}

/// Forward: plain coefficients of `f` to coefficients of `f(t, x + t v, v)`. Inverse undoes it.
/// Each slice is taken to physical v, multiplied by `exp(+-i t phi.v)`, and transformed back.
pub fn kinetic_shift(f: &SpectralField, dir: ShiftDir) -> Result<SpectralField> {
    let (need, out_rep, sign) = match dir {
        ShiftDir::Forward => (Rep::Plain, Rep::Shifted, 1.0),
        ShiftDir::Inverse => (Rep::Shifted, Rep::Plain, -1.0),
    };
    if f.rep != need {
        return Err(Error::RepMismatch { expected: need.name(), found: f.rep.name() });
    }
    let g = &f.grid;
    let mut out = f.clone();
    out.rep = out_rep;
    let n = g.slice_len();
    par::chunks_mut(&mut out.coeffs, n, |it, s| {
        let t = g.t_grid[it];
        if t == 0.0 {
            return;
        }
        v_to_physical(g, s);
        shear_phase(g, s, sign * t);
        v_to_spectral(g, s);
    });
    Ok(out)
}

fn check_power_of_two(lambda: f64) -> Result<i32> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::NotPowerOfTwo(lambda));
    }
    let k = lambda.log2().round();
    if (2f64.powi(k as i32) - lambda).abs() > 1e-12 * lambda {
        return Err(Error::NotPowerOfTwo(lambda));
    }
    Ok(k as i32)
}

/// `f_lambda(t, x, v) = f(lambda^(2b) t, lambda^(2b+1) x, lambda v)` by rescaling the box and
/// the time grid; the coefficients are unchanged and the identity is exact in either representation.
pub fn kinetic_dilate(f: &SpectralField, lambda: f64, beta: f64) -> Result<SpectralField> {
    check_power_of_two(lambda)?;
    let q = 2.0 * beta + 1.0;
    let g = &f.grid;
    let ts = 1.0 / lambda.powf(2.0 * beta);
    let grid = GridSpec::new(
        g.d,
        g.lx / lambda.powf(q),
        g.lv / lambda,
        g.nx,
        g.nv,
        g.t_grid.iter().map(|t| t * ts).collect(),
    )?;
    Ok(SpectralField { grid, rep: f.rep, coeffs: f.coeffs.clone() })
}

/// Same dilation on the same box by moving mode `(k, m)` to `(lambda^(2b+1) k, lambda m)`.
/// Needs integer targets for every nonzero coefficient; the time grid is rescaled.
pub fn kinetic_dilate_remap(f: &SpectralField, lambda: f64, beta: f64) -> Result<SpectralField> {
    check_power_of_two(lambda)?;
    let sx = lambda.powf(2.0 * beta + 1.0);
    let sv = lambda;
    let g = &f.grid;
    let ts = 1.0 / lambda.powf(2.0 * beta);
    let grid = g.with_times(g.t_grid.iter().map(|t| t * ts).collect());
    let mut out = SpectralField::zeros(grid, f.rep);
    let target = |m: i64, s: f64| -> Option<i64> {
        let v = m as f64 * s;
        let r = v.round();
        ((v - r).abs() < 1e-9).then_some(r as i64)
    };
    for it in 0..g.nt() {
        for kx in 0..g.nkx() {
            for kv in 0..g.nkv() {
                let c = f.coeffs[f.idx(it, kx, kv)];
                if c == ZERO {
                    continue;
                }
                let mk = g.kx_modes(kx);
                let mm = g.kv_modes(kv);
                let nk = [target(mk[0], sx), target(mk[1], sx)];
                let nm = [target(mm[0], sv), target(mm[1], sv)];
                let (Some(a0), Some(a1), Some(b0), Some(b1)) = (nk[0], nk[1], nm[0], nm[1]) else {
                    return Err(Error::LatticeMisalignment(format!(
                        "mode ({mk:?}, {mm:?}) has no lattice image under lambda = {lambda}"
                    )));
                };
                let (Some(tx), Some(tv)) = (g.kx_index([a0, a1]), g.kv_index([b0, b1])) else {
                    return Err(Error::LatticeMisalignment(format!(
                        "image of mode ({mk:?}, {mm:?}) leaves the grid"
                    )));
                };
                let i = out.idx(it, tx, tv);
                out.coeffs[i] = c;
            }
        }
    }
    Ok(out)
}
