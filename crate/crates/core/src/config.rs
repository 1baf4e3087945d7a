//! Experiment configuration: a TOML file with a list of `[[experiment]]` tables.
//!
//! ```toml
//! output = "out"
//!
//! [[experiment]]
//! name = "trace"
//! kind = "trace"
//! params = { beta = [0.5, 1.0], gamma_factor = [0.0, 1.0], p = [2.0] }
//! fields = { seed = 3, count = 20 }
//! tolerances = { spread = 10.0 }
//! ```
//!
//! Everything except `name` and `kind` is optional; each kind fills the gaps with its
//! reference values.

use crate::error::{Error, Result};
use crate::exponents::KineticParams;
use serde::{Deserialize, Serialize};
use sha1::{Digest, Sha1};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Exponents,
    Propagator,
    Residual,
    Semigroup,
    Scaling,
    Levy,
    Marginals,
    Hormander,
    Opnorm,
    Local,
    Trace,
    Uniqueness,
    Transfer,
    Lions,
    SobolevGain,
    Hls,
}

/// CLI subcommand families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Solve,
    Norms,
    Kernel,
    Local,
    Hormander,
    Verify,
    Exponents,
}

impl Kind {
    pub fn family(self) -> Family {
        use Kind::*;
        match self {
            Propagator | Residual | Semigroup => Family::Solve,
            Scaling | Levy => Family::Norms,
            Marginals | Opnorm => Family::Kernel,
            Hormander => Family::Hormander,
            Local => Family::Local,
            Exponents => Family::Exponents,
            Trace | Uniqueness | Transfer | Lions | SobolevGain | Hls => Family::Verify,
        }
    }

    pub fn name(self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
    }

    /// Tolerance keys the kind reads, with their reference values.
    pub fn default_tolerances(self) -> &'static [(&'static str, f64)] {
        use Kind::*;
        match self {
            Exponents => &[("exact", 0.0)],
            Propagator => &[("analytic", 1e-12), ("oracle", 1e-8)],
            Residual => &[("residual", 1e-6)],
            Semigroup => &[("identity", 1e-9), ("duality", 1e-9)],
            Scaling => &[("norm_scaling", 0.01), ("critical_ratio", 0.02), ("off_critical", 0.05)],
            Levy => &[("split", 1e-6), ("constant", 1e-6), ("mass", 1e-6), ("negativity", 1e-6)],
            Marginals => &[("refinement_factor", 2.0), ("tau_factor", 2.0)],
            Hormander => &[("r0_factor", 3.0), ("eps_drift", 0.1)],
            Opnorm => &[("refinement_drift", 0.1), ("eps_drift", 0.1), ("schur_slack", 1e-12)],
            Local => &[("defect", 1e-3), ("constant_fit", 1e-3), ("constant_eps", 1e-6), ("g1_value", 1e-15), ("g1_mass", 1e-8)],
            Trace => &[("spread", 10.0)],
            Uniqueness => &[("slope", 0.05), ("heat_rate", 0.01), ("outside_window", 0.0)],
            Transfer | Lions | SobolevGain | Hls => &[("dilation", 0.02), ("refinement", 0.05)],
        }
    }
}

/// Parameter matrix. `gamma = gamma_factor * beta`; an explicit `gamma` list overrides the factors.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub beta: Option<Vec<f64>>,
    pub gamma_factor: Option<Vec<f64>>,
    pub gamma: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
    pub d: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Modes per axis.
    pub n: Option<usize>,
    pub nt: Option<usize>,
    /// `GridSpec::lx` and `GridSpec::lv`.
    pub lx: Option<f64>,
    pub lv: Option<f64>,
    pub t_end: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldsConfig {
    pub seed: Option<u64>,
    pub count: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub lambda: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
    /// Number of resolution doublings.
    pub refinements: Option<usize>,
    /// Other scale parameters (time separations, radii), kind-specific.
    pub scales: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: Kind,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub fields: FieldsConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    /// Expected values (exponent tables).
    #[serde(default)]
    pub expect: BTreeMap<String, f64>,
    /// Also write a gnuplot-ready `.dat` file for this experiment.
    #[serde(default)]
    pub dat: bool,
}

impl ExperimentConfig {
    pub fn new(name: &str, kind: Kind) -> Self {
        ExperimentConfig {
            name: name.into(),
            kind,
            params: ParamsConfig::default(),
            grid: GridConfig::default(),
            fields: FieldsConfig::default(),
            sweep: SweepConfig::default(),
            tolerances: BTreeMap::new(),
            expect: BTreeMap::new(),
            dat: false,
        }
    }

    /// Override or reference value of a tolerance.
    pub fn tol(&self, key: &str) -> f64 {
        if let Some(v) = self.tolerances.get(key) {
            return *v;
        }
        self.kind.default_tolerances().iter().find(|(k, _)| *k == key).map(|p| p.1).unwrap_or(f64::NAN)
    }

    pub fn betas(&self, default: &[f64]) -> Vec<f64> {
        self.params.beta.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn ps(&self, default: &[f64]) -> Vec<f64> {
        self.params.p.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn d(&self) -> usize {
        self.params.d.unwrap_or(1)
    }

    /// Gamma values at a given beta.
    pub fn gammas(&self, beta: f64, default_factors: &[f64]) -> Vec<f64> {
        if let Some(g) = &self.params.gamma {
            return g.clone();
        }
        self.params.gamma_factor.clone().unwrap_or_else(|| default_factors.to_vec()).iter().map(|f| f * beta).collect()
    }

    pub fn seed(&self, default: u64) -> u64 {
        self.fields.seed.unwrap_or(default)
    }

    pub fn count(&self, default: usize) -> usize {
        self.fields.count.unwrap_or(default)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("experiment '{}': {m}", self.name)));
        if self.name.trim().is_empty() {
            return bad("empty name".into());
        }
        for k in self.tolerances.keys() {
            if !self.kind.default_tolerances().iter().any(|(d, _)| d == k) {
                return bad(format!("unknown tolerance '{k}' for kind {}", self.kind.name()));
            }
        }
        for (k, v) in &self.tolerances {
            if !(v.is_finite() && *v >= 0.0) {
                return bad(format!("tolerance '{k}' = {v} must be finite and nonnegative"));
            }
        }
        if !self.expect.is_empty() && self.kind != Kind::Exponents {
            return bad("'expect' applies to exponent tables only".into());
        }
        let d = self.d();
        for beta in self.betas(&[0.5]) {
            for gamma in self.gammas(beta, &[0.0]) {
                for p in self.ps(&[2.0]) {
                    if let Err(e) = KineticParams::new(beta, gamma, p, d) {
                        return bad(e.to_string());
                    }
                }
            }
        }
        if self.grid.n.is_some_and(|n| n < 8 || n % 2 != 0) {
            return bad("grid.n must be even and at least 8".into());
        }
        if self.grid.nt.is_some_and(|n| n < 2) {
            return bad("grid.nt must be at least 2".into());
        }
        for v in [self.grid.lx, self.grid.lv, self.grid.t_end].into_iter().flatten() {
            if !(v > 0.0 && v.is_finite()) {
                return bad("grid lengths must be positive".into());
            }
        }
        if self.fields.count == Some(0) {
            return bad("fields.count must be positive".into());
        }
        for l in self.sweep.lambda.iter().flatten() {
            let k = l.log2().round();
            if !(*l > 0.0) || (2f64.powf(k) - l).abs() > 1e-12 * l || k == 0.0 {
                return bad(format!("dilation {l} must be a power of two other than 1"));
            }
        }
        if self.sweep.eps.iter().flatten().any(|e| !(*e > 0.0)) {
            return bad("eps values must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub output: Option<PathBuf>,
    #[serde(default, rename = "experiment")]
    pub experiments: Vec<ExperimentConfig>,
}

impl SuiteConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: SuiteConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok((Self::parse(&text)?, text))
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.experiments {
            e.validate()?;
            if !seen.insert(e.name.as_str()) {
                return Err(Error::Config(format!("duplicate experiment name '{}'", e.name)));
            }
        }
        Ok(())
    }
}

/// Content hash as git computes it for a blob: SHA-1 of `blob <len>\0<content>`.
pub fn git_blob_hash(content: &[u8]) -> String {
    let mut h = Sha1::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Reference suite covering every acceptance threshold.
pub const DEFAULT_SUITE: &str = include_str!("../configs/default.toml");
