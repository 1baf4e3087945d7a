use crate::error::{Error, Result};
use crate::fft::{fft_axes, Dir};
use crate::grid::{GridSpec, V2};
use crate::par;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

pub type C64 = Complex64;
pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Whether the coefficients describe `f` itself or its kinetically shifted version.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rep {
    Plain,
    Shifted,
}

impl Rep {
    pub fn name(self) -> &'static str {
        match self {
            Rep::Plain => "plain",
            Rep::Shifted => "shifted",
        }
    }
}

/// Fourier coefficients of a space-time function, layout row-major `(t, k, m)`.
///
/// The represented function at time `t` is `sum c[k,m] exp(i(phi_k.x + xi_m.v))` for the plain
/// representation and `sum c[k,m] exp(i(phi_k.(x - t v) + xi_m.v))` for the shifted one.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    pub grid: GridSpec,
    pub rep: Rep,
    pub coeffs: Vec<C64>,
}

/// Samples on the physical grid, same layout as the coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField {
    pub grid: GridSpec,
    pub samples: Vec<C64>,
}

#[inline]
fn parity_sign(grid: &GridSpec, kx: usize, kv: usize) -> f64 {
    let (a, b) = if grid.d == 1 {
        (kx, kv)
    } else {
        (kx / grid.nx + kx % grid.nx, kv / grid.nv + kv % grid.nv)
    };
    if (a + b) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl SpectralField {
    pub fn zeros(grid: GridSpec, rep: Rep) -> Self {
        let n = grid.nt() * grid.slice_len();
        SpectralField { grid, rep, coeffs: vec![ZERO; n] }
    }

    pub fn from_coeffs(grid: GridSpec, rep: Rep, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != grid.nt() * grid.slice_len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a grid needing {}",
                coeffs.len(),
                grid.nt() * grid.slice_len()
            )));
        }
        Ok(SpectralField { grid, rep, coeffs })
    }

    #[inline]
    pub fn idx(&self, it: usize, kx: usize, kv: usize) -> usize {
        (it * self.grid.nkx() + kx) * self.grid.nkv() + kv
    }

    pub fn slice(&self, it: usize) -> &[C64] {
        let n = self.grid.slice_len();
        &self.coeffs[it * n..(it + 1) * n]
    }

    pub fn slice_mut(&mut self, it: usize) -> &mut [C64] {
        let n = self.grid.slice_len();
        &mut self.coeffs[it * n..(it + 1) * n]
    }

    /// The slice at time index `it` as a single-time field.
    pub fn at_time(&self, it: usize) -> SpectralField {
        SpectralField {
            grid: self.grid.with_times(vec![self.grid.t_grid[it]]),
            rep: self.rep,
            coeffs: self.slice(it).to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest violation of `c(-k,-m) = conj c(k,m)` relative to the largest coefficient.
    /// Nyquist modes have no partner and are skipped.
    pub fn hermitian_defect(&self) -> f64 {
        let g = &self.grid;
        let scale = self.max_abs().max(1e-300);
        let mut worst: f64 = 0.0;
        for it in 0..g.nt() {
            for kx in 0..g.nkx() {
                let mk = g.kx_modes(kx);
                let Some(nkx) = g.kx_index([-mk[0], -mk[1]]) else { continue };
                for kv in 0..g.nkv() {
                    let mm = g.kv_modes(kv);
                    let Some(nkv) = g.kv_index([-mm[0], -mm[1]]) else { continue };
                    let a = self.coeffs[self.idx(it, kx, kv)];
                    let b = self.coeffs[self.idx(it, nkx, nkv)];
                    worst = worst.max((a - b.conj()).norm());
                }
            }
        }
        worst / scale
    }

    pub fn scale(&self, s: f64) -> SpectralField {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    fn check_compatible(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::DimensionMismatch("fields live on different grids".into()));
        }
        if self.rep != other.rep {
            return Err(Error::RepMismatch { expected: self.rep.name(), found: other.rep.name() });
        }
        Ok(())
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.coeffs.iter_mut().zip(&other.coeffs).for_each(|(a, b)| *a += b);
        Ok(out)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.coeffs.iter_mut().zip(&other.coeffs).for_each(|(a, b)| *a -= b);
        Ok(out)
    }

    /// `sum |c|^2 * volume` of one slice: the squared L2 norm over the box (Parseval).
    pub fn l2_sq_slice(&self, it: usize) -> f64 {
        self.slice(it).iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.volume()
    }

    /// Space-time L2 norm with trapezoid weights in time.
    pub fn l2_norm(&self) -> f64 {
        let w = self.grid.time_weights();
        (0..self.grid.nt()).map(|it| w[it] * self.l2_sq_slice(it)).sum::<f64>().sqrt()
    }

    /// Space-time L2 pairing `<self, other>` (conjugate-linear in `other`).
    pub fn inner(&self, other: &SpectralField) -> Result<C64> {
        self.check_compatible(other)?;
        let w = self.grid.time_weights();
        let vol = self.grid.volume();
        let mut acc = ZERO;
        for it in 0..self.grid.nt() {
            let s: C64 = self.slice(it).iter().zip(other.slice(it)).map(|(a, b)| a * b.conj()).sum();
            acc += s * (w[it] * vol);
        }
        Ok(acc)
    }

    /// Spatial pairing of two slices (same grid, same representation).
    pub fn inner_slice(&self, it: usize, other: &SpectralField, jt: usize) -> C64 {
        let s: C64 = self.slice(it).iter().zip(other.slice(jt)).map(|(a, b)| a * b.conj()).sum();
        s * self.grid.volume()
    }

    /// The plain frequency `xi - t phi` carried by coefficient `(phi, xi)` at time `t`.
    #[inline]
    pub fn plain_xi(&self, t: f64, phi: &V2, xi: &V2) -> V2 {
        match self.rep {
            Rep::Plain => *xi,
            Rep::Shifted => [xi[0] - t * phi[0], xi[1] - t * phi[1]],
        }
    }

    /// Multiply every coefficient by `m(phi, xi_plain)`, the symbol in the function's own
    /// frequency variables. Works for either representation.
    pub fn apply_multiplier<F>(&self, m: F) -> SpectralField
    where
        F: Fn(&V2, &V2) -> f64 + Sync + Send,
    {
        let phis = self.grid.phis();
        let xis = self.grid.xis();
        let mut out = self.clone();
        let nkv = self.grid.nkv();
        let nkx = self.grid.nkx();
        let times = self.grid.t_grid.clone();
        let rep = self.rep;
        par::chunks_mut(&mut out.coeffs, nkv, |row, chunk| {
            let it = row / nkx;
            let kx = row % nkx;
            let t = if rep == Rep::Shifted { times[it] } else { 0.0 };
            let phi = &phis[kx];
            for (kv, c) in chunk.iter_mut().enumerate() {
                if *c == ZERO {
                    continue;
                }
                let xi = &xis[kv];
                let xp = [xi[0] - t * phi[0], xi[1] - t * phi[1]];
                *c *= m(phi, &xp);
            }
        });
        out
    }

    /// Samples of the coefficient-frame function (inverse DFT per slice).
    pub fn to_physical(&self) -> PhysicalField {
        let g = &self.grid;
        let n = g.slice_len();
        let shape = g.slice_shape();
        let axes = vec![true; 2 * g.d];
        let mut samples = self.coeffs.clone();
        par::chunks_mut(&mut samples, n, |_, s| {
            apply_parity(g, s);
            fft_axes(s, &shape, &axes, Dir::Inverse);
        });
        PhysicalField { grid: g.clone(), samples }
    }

    pub fn from_physical(p: &PhysicalField, rep: Rep) -> SpectralField {
        let g = &p.grid;
        let n = g.slice_len();
        let shape = g.slice_shape();
        let axes = vec![true; 2 * g.d];
        let norm = 1.0 / n as f64;
        let mut coeffs = p.samples.clone();
        par::chunks_mut(&mut coeffs, n, |_, s| {
            fft_axes(s, &shape, &axes, Dir::Forward);
            apply_parity(g, s);
            s.iter_mut().for_each(|c| *c *= norm);
        });
        SpectralField { grid: g.clone(), rep, coeffs }
    }

    /// Samples at time index `it` of the represented (plain-variable) function, after
    /// multiplying by the symbol `m(phi, xi_plain)` if given.
    pub fn plain_samples(&self, it: usize, m: Option<&(dyn Fn(&V2, &V2) -> f64 + Sync)>) -> Vec<C64> {
        let g = &self.grid;
        let t = g.t_grid[it];
        let mut s = self.slice(it).to_vec();
        if let Some(m) = m {
            let phis = g.phis();
            let xis = g.xis();
            let nkv = g.nkv();
            for (i, c) in s.iter_mut().enumerate() {
                if *c == ZERO {
                    continue;
                }
                let phi = &phis[i / nkv];
                let xp = self.plain_xi(t, phi, &xis[i % nkv]);
                *c *= m(phi, &xp);
            }
        }
        apply_parity(g, &mut s);
        let shape = g.slice_shape();
        match self.rep {
            Rep::Plain => fft_axes(&mut s, &shape, &vec![true; 2 * g.d], Dir::Inverse),
            Rep::Shifted => {
                fft_axes(&mut s, &shape, &g.v_axes(), Dir::Inverse);
                shear_phase(g, &mut s, -t);
                fft_axes(&mut s, &shape, &g.x_axes(), Dir::Inverse);
            }
        }
        s
    }

    /// Write the binary container: magic, little-endian header length, JSON header, data.
    pub fn write_container<W: Write>(&self, mut w: W) -> Result<()> {
        let header = ContainerHeader {
            format: "kolmokit-field".into(),
            version: 1,
            grid: self.grid.clone(),
            rep: self.rep,
            endianness: "little".into(),
            layout: "row-major (t, k, m)".into(),
            dtype: "complex128".into(),
        };
        let h = serde_json::to_vec(&header)?;
        w.write_all(MAGIC)?;
        w.write_all(&(h.len() as u64).to_le_bytes())?;
        w.write_all(&h)?;
        let mut buf = Vec::with_capacity(self.coeffs.len() * 16);
        for c in &self.coeffs {
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_container<R: Read>(mut r: R) -> Result<SpectralField> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Config("not a field container".into()));
        }
        let mut len = [0u8; 8];
        r.read_exact(&mut len)?;
        let mut h = vec![0u8; u64::from_le_bytes(len) as usize];
        r.read_exact(&mut h)?;
        let header: ContainerHeader = serde_json::from_slice(&h)?;
        if header.endianness != "little" || header.dtype != "complex128" {
            return Err(Error::Config("unsupported container encoding".into()));
        }
        header.grid.validate()?;
        let n = header.grid.nt() * header.grid.slice_len();
        let mut raw = vec![0u8; n * 16];
        r.read_exact(&mut raw)?;
        let coeffs = raw
            .chunks_exact(16)
            .map(|b| {
                C64::new(
                    f64::from_le_bytes(b[0..8].try_into().unwrap()),
                    f64::from_le_bytes(b[8..16].try_into().unwrap()),
                )
            })
            .collect();
        SpectralField::from_coeffs(header.grid, header.rep, coeffs)
    }
}

const MAGIC: &[u8; 4] = b"KMKF";

#[derive(Serialize, Deserialize)]
struct ContainerHeader {
    format: String,
    version: u32,
    grid: GridSpec,
    rep: Rep,
    endianness: String,
    layout: String,
    dtype: String,
}

impl PhysicalField {
    /// Discrete L^p norm over one time slice (box measure).
    pub fn lp_slice(&self, it: usize, p: f64) -> f64 {
        lp_of_samples(&self.grid, &self.samples[it * self.grid.slice_len()..(it + 1) * self.grid.slice_len()], p)
    }
}

/// `(sum |s|^p * cell)^(1/p)`.
pub fn lp_of_samples(grid: &GridSpec, s: &[C64], p: f64) -> f64 {
    lp_pow_of_samples(grid, s, p).powf(1.0 / p)
}

pub fn lp_pow_of_samples(grid: &GridSpec, s: &[C64], p: f64) -> f64 {
    let sum: f64 = if p == 2.0 {
        s.iter().map(|c| c.norm_sqr()).sum()
    } else {
        s.iter().map(|c| c.norm().powf(p)).sum()
    };
    sum * grid.cell()
}

/// Multiply by `(-1)^(sum of indices)`, which maps the box `[-L, L)` onto FFT ordering.
pub(crate) fn apply_parity(g: &GridSpec, s: &mut [C64]) {
    let nkv = g.nkv();
    for (i, c) in s.iter_mut().enumerate() {
        if parity_sign(g, i / nkv, i % nkv) < 0.0 {
            *c = -*c;
        }
    }
}

/// Parity factor over the velocity axes only.
fn apply_v_parity(g: &GridSpec, s: &mut [C64]) {
    let nkv = g.nkv();
    for (i, c) in s.iter_mut().enumerate() {
        if parity_sign(g, 0, i % nkv) < 0.0 {
            *c = -*c;
        }
    }
}

/// Spectral in (x, v) to spectral in x, physical in v.
pub(crate) fn v_to_physical(g: &GridSpec, s: &mut [C64]) {
    apply_v_parity(g, s);
    fft_axes(s, &g.slice_shape(), &g.v_axes(), Dir::Inverse);
}

/// Inverse of [`v_to_physical`].
pub(crate) fn v_to_spectral(g: &GridSpec, s: &mut [C64]) {
    fft_axes(s, &g.slice_shape(), &g.v_axes(), Dir::Forward);
    apply_v_parity(g, s);
    let norm = 1.0 / g.nkv() as f64;
    s.iter_mut().for_each(|c| *c *= norm);
}

/// On an array that is spectral in x and physical in v, multiply by `exp(i t phi.v)`.
pub(crate) fn shear_phase(g: &GridSpec, s: &mut [C64], t: f64) {
    if t == 0.0 {
        return;
    }
    let phis = g.phis();
    let vs = g.vs();
    let nkv = g.nkv();
    for (i, c) in s.iter_mut().enumerate() {
        let ph = t * crate::grid::dot(&phis[i / nkv], &vs[i % nkv]);
        *c *= C64::from_polar(1.0, ph);
    }
}
