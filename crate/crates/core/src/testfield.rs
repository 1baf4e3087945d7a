//! Seeded band-limited test fields with Fourier support in annuli away from the axes.

use crate::error::{Error, Result};
use crate::field::{Rep, SpectralField, C64};
use crate::grid::{norm, GridSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Real time profile multiplying every coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    /// `exp(1 - 1/(1 - u^2))` with `u = (t - center)/half_width`, zero for `|u| >= 1`.
    Bump { center: f64, half_width: f64 },
    Constant,
}

impl Envelope {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Envelope::Bump { center, half_width } => {
                let u = (t - center) / half_width;
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - u * u)).exp()
                }
            }
            Envelope::Constant => 1.0,
        }
    }

    /// Closed support, or `None` for the constant profile.
    pub fn support(&self) -> Option<(f64, f64)> {
        match *self {
            Envelope::Bump { center, half_width } => Some((center - half_width, center + half_width)),
            Envelope::Constant => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFieldSpec {
    pub seed: u64,
    /// `|phi|` range (frequency units), must stay away from 0.
    pub phi_annulus: [f64; 2],
    /// `|xi|` range (frequency units), must stay away from 0.
    pub xi_annulus: [f64; 2],
    pub envelope: Envelope,
    /// Representation the coefficients are drawn in.
    pub rep: Rep,
}

impl TestFieldSpec {
    pub fn new(seed: u64, phi_annulus: [f64; 2], xi_annulus: [f64; 2], envelope: Envelope) -> Self {
        TestFieldSpec { seed, phi_annulus, xi_annulus, envelope, rep: Rep::Plain }
    }

    pub fn shifted(mut self) -> Self {
        self.rep = Rep::Shifted;
        self
    }
}

pub const GUARD_MODES: usize = 4;

/// Deterministic Hermitian random field; the physical samples are real.
pub fn make_test_field(spec: &TestFieldSpec, grid: &GridSpec) -> Result<SpectralField> {
    let [plo, phi_hi] = spec.phi_annulus;
    let [xlo, xhi] = spec.xi_annulus;
    if !(plo > 0.0 && plo <= phi_hi && xlo > 0.0 && xlo <= xhi) {
        return Err(Error::SupportOutOfRange("annuli must be nonempty and avoid the origin".into()));
    }
    let pmax = grid.max_mode(grid.nx, GUARD_MODES) as f64 * grid.dphi();
    let xmax = grid.max_mode(grid.nv, GUARD_MODES) as f64 * grid.dxi();
    if phi_hi > pmax + 1e-12 || xhi > xmax + 1e-12 {
        return Err(Error::SupportOutOfRange(format!(
            "annuli reach ({phi_hi}, {xhi}) beyond the guarded range ({pmax}, {xmax})"
        )));
    }
    let phis = grid.phis();
    let xis = grid.xis();
    let inside = |r: f64, lo: f64, hi: f64| r >= lo - 1e-12 && r <= hi + 1e-12;
    let mut slots = Vec::new();
    for (kx, p) in phis.iter().enumerate() {
        let mk = grid.kx_modes(kx);
        if mk.iter().any(|&m| m.unsigned_abs() as usize > grid.max_mode(grid.nx, GUARD_MODES) as usize) {
            continue;
        }
        if !inside(norm(p), plo, phi_hi) {
            continue;
        }
        for (kv, x) in xis.iter().enumerate() {
            let mm = grid.kv_modes(kv);
            if mm.iter().any(|&m| m.unsigned_abs() as usize > grid.max_mode(grid.nv, GUARD_MODES) as usize) {
                continue;
            }
            if !inside(norm(x), xlo, xhi) {
                continue;
            }
            // keep one representative of each (k, m) ~ (-k, -m) pair
            let key = (mk, mm);
            let neg = ([-mk[0], -mk[1]], [-mm[0], -mm[1]]);
            if key < neg {
                let nk = grid.kx_index(neg.0).unwrap();
                let nv = grid.kv_index(neg.1).unwrap();
                slots.push((kx, kv, nk, nv));
            }
        }
    }
    if slots.is_empty() {
        return Err(Error::SupportOutOfRange("no lattice modes inside the annuli".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let amp = 1.0 / (slots.len() as f64).sqrt();
    let base: Vec<(usize, usize, usize, usize, C64)> = slots
        .into_iter()
        .map(|(a, b, c, d)| {
            let r = rng.gen_range(0.5..1.0) * amp;
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            (a, b, c, d, C64::from_polar(r, th))
        })
        .collect();
    let mut f = SpectralField::zeros(grid.clone(), spec.rep);
    for it in 0..grid.nt() {
        let e = spec.envelope.eval(grid.t_grid[it]);
        if e == 0.0 {
            continue;
        }
        for &(a, b, c, d, z) in &base {
            let i = f.idx(it, a, b);
            f.coeffs[i] = z * e;
            let j = f.idx(it, c, d);
            f.coeffs[j] = z.conj() * e;
        }
    }
    Ok(f)
}
