//! Dyadic Littlewood–Paley families built from the gauge (or from `|xi|`).

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::gauge::Gauge;
use crate::grid::{norm, GridSpec, V2};
use crate::quad::smooth_step;
use serde::{Deserialize, Serialize};

/// Low-pass transition: 1 on `r <= a`, 0 on `r >= 2a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub a: f64,
}

impl Default for Profile {
    fn default() -> Self {
        Profile { a: 0.75 }
    }
}

impl Profile {
    /// Admissible iff the annulus `(a, 4a)` sits in `(1/2, 4)` and covers `[1, 2]`.
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.5 && a < 1.0) {
            return Err(Error::InvalidParameter(format!("profile transition start {a} outside (1/2, 1)")));
        }
        Ok(Profile { a })
    }

    #[inline]
    pub fn eta(&self, r: f64) -> f64 {
        1.0 - smooth_step(r / self.a - 1.0)
    }

    /// Annulus profile `eta(r/2) - eta(r)`, supported in `(a, 4a)`.
    #[inline]
    pub fn chi(&self, r: f64) -> f64 {
        self.eta(0.5 * r) - self.eta(r)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpFamily {
    pub gauge: Gauge,
    pub profile: Profile,
    pub j_min: i32,
    pub j_max: i32,
    pub normalized: bool,
    /// Use `|xi|` instead of the gauge (the velocity-only family).
    pub isotropic: bool,
}

impl LpFamily {
    pub fn new(gauge: Gauge, profile: Profile, j_min: i32, j_max: i32, isotropic: bool) -> Result<Self> {
        if j_min > j_max {
            return Err(Error::InvalidParameter(format!("empty j range {j_min}..={j_max}")));
        }
        Ok(LpFamily { gauge, profile, j_min, j_max, normalized: true, isotropic })
    }

    /// Smallest family whose telescoping sum is exactly 1 on every nonzero grid frequency.
    pub fn for_grid(gauge: Gauge, profile: Profile, grid: &GridSpec, isotropic: bool) -> Result<Self> {
        let (lo, hi) = radius_range(&gauge, grid, isotropic);
        LpFamily::covering(gauge, profile, lo, hi, isotropic)
    }

    /// Error unless the family sums to one on `[lo, hi]`.
    pub fn check_covers(&self, lo: f64, hi: f64) -> Result<()> {
        let a = self.profile.a;
        let ok_lo = 2.0 * a * 2f64.powi(self.j_min) <= lo * (1.0 + 1e-12);
        let ok_hi = a * 2f64.powi(self.j_max + 1) >= hi * (1.0 - 1e-12);
        if ok_lo && ok_hi {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "j range {}..={} does not cover radii [{lo}, {hi}]",
                self.j_min, self.j_max
            )))
        }
    }

    pub fn radius(&self, phi: &V2, xi: &V2) -> f64 {
        if self.isotropic {
            norm(xi)
        } else {
            self.gauge.eval(phi, xi)
        }
    }

    /// Raw block weight `chi(2^-j r)`.
    #[inline]
    pub fn chi_j(&self, j: i32, r: f64) -> f64 {
        self.profile.chi(r * 2f64.powi(-j))
    }

    /// Block weight, divided by the family sum when normalized.
    pub fn weight(&self, j: i32, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let w = self.chi_j(j, r);
        if !self.normalized || w == 0.0 {
            return w;
        }
        let s = self.sum(r);
        if s > 0.0 {
            w / s
        } else {
            0.0
        }
    }

    pub fn sum(&self, r: f64) -> f64 {
        (self.j_min..=self.j_max).map(|j| self.chi_j(j, r)).sum()
    }

    pub fn js(&self) -> impl Iterator<Item = i32> {
        self.j_min..=self.j_max
    }

    /// The block `theta_j * f`, applied in the function's own frequency variables.
    pub fn project(&self, f: &SpectralField, j: i32) -> Result<SpectralField> {
        if j < self.j_min || j > self.j_max {
            return Err(Error::InvalidParameter(format!("block {j} outside {}..={}", self.j_min, self.j_max)));
        }
        Ok(f.apply_multiplier(|p, x| self.weight(j, self.radius(p, x))))
    }
}

/// Smallest and largest nonzero radius over the nonzero coefficients of `f`, measured in the
/// function's own frequencies.
pub fn field_radius_range(f: &SpectralField, gauge: &Gauge, isotropic: bool) -> Option<(f64, f64)> {
    let g = &f.grid;
    let phis = g.phis();
    let xis = g.xis();
    let (nkx, nkv) = (g.nkx(), g.nkv());
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for it in 0..g.nt() {
        let t = g.t_grid[it];
        for kx in 0..nkx {
            for kv in 0..nkv {
                if f.coeffs[(it * nkx + kx) * nkv + kv] == crate::field::ZERO {
                    continue;
                }
                let xp = f.plain_xi(t, &phis[kx], &xis[kv]);
                let r = if isotropic { norm(&xp) } else { gauge.eval(&phis[kx], &xp) };
                if r > 0.0 {
                    lo = lo.min(r);
                    hi = hi.max(r);
                }
            }
        }
    }
    lo.is_finite().then_some((lo, hi))
}

impl LpFamily {
    /// Smallest family summing to one on `[lo, hi]`.
    pub fn covering(gauge: Gauge, profile: Profile, lo: f64, hi: f64, isotropic: bool) -> Result<Self> {
        let j_min = ((lo / (2.0 * profile.a)).log2().floor()) as i32;
        let j_max = ((hi / profile.a).log2().ceil()) as i32 - 1;
        let fam = LpFamily::new(gauge, profile, j_min, j_max.max(j_min), isotropic)?;
        fam.check_covers(lo, hi)?;
        Ok(fam)
    }

    /// Family adapted to the frequency support of `f`.
    pub fn for_field(gauge: Gauge, profile: Profile, f: &SpectralField, isotropic: bool) -> Result<Self> {
        match field_radius_range(f, &gauge, isotropic) {
            Some((lo, hi)) => LpFamily::covering(gauge, profile, lo, hi, isotropic),
            None => LpFamily::new(gauge, profile, 0, 0, isotropic),
        }
    }
}

/// Smallest and largest nonzero radius over the grid's frequencies.
pub fn radius_range(gauge: &Gauge, grid: &GridSpec, isotropic: bool) -> (f64, f64) {
    let phis = grid.phis();
    let xis = grid.xis();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for p in &phis {
        for x in &xis {
            let r = if isotropic { norm(x) } else { gauge.eval(p, x) };
            if r > 0.0 {
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
    }
    (lo, hi)
}

/// Smooth log-scale bump: positive on `(1/2, 2)`, used for the continuous family.
pub fn log_bump(r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let u = r.log2();
    if u.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}
