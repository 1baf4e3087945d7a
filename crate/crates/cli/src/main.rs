use clap::{Args, Parser, Subcommand};
use kolmokit::config::{ExperimentConfig, Family, Kind, SuiteConfig, DEFAULT_SUITE};
use kolmokit::exponents::exponent_table;
use kolmokit::norms::{dv_norm, lp_norm};
use kolmokit::report::{exit_code, run_suite, write_report, RunReport};
use kolmokit::solver::{cauchy_solve, residual, CauchyProblem};
use kolmokit::testfield::{make_test_field, Envelope, TestFieldSpec};
use kolmokit::{Error, GridSpec, Result};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "kolmokit", version, about = "Spectral solver and verification toolkit for the fractional kinetic Kolmogorov equation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a Cauchy problem with random band-limited data; without --config writes the field and a JSON report.
    Solve(Flags),
    /// Scaling of the velocity Sobolev norms and the Levy split.
    Norms(Flags),
    /// Kernel marginals, Hormander integrals and truncated operator norms.
    Kernel(Flags),
    /// Local (beta = 1) representation and its constant.
    Local(Flags),
    /// Hormander integrals over an r0 sweep.
    Hormander(Flags),
    /// Every experiment of the config, or the bundled reference suite.
    Verify(Flags),
    /// Exponent table.
    Exponents(Flags),
}

#[derive(Args, Clone, Default)]
struct Flags {
    /// Experiment file (TOML). Other flags override the matching fields of each experiment.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    beta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    gamma: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long)]
    d: Option<usize>,
    /// NX,NV,NT
    #[arg(long, value_delimiter = ',', num_args = 1)]
    grid: Option<Vec<usize>>,
    /// Final time.
    #[arg(long = "T")]
    t_end: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "eps-sweep", value_delimiter = ',')]
    eps_sweep: Option<Vec<f64>>,
}

impl Flags {
    fn apply(&self, e: &mut ExperimentConfig) -> Result<()> {
        if let Some(b) = &self.beta {
            e.params.beta = Some(b.clone());
        }
        if let Some(g) = &self.gamma {
            e.params.gamma = Some(g.clone());
        }
        if let Some(p) = &self.p {
            e.params.p = Some(p.clone());
        }
        if let Some(d) = self.d {
            e.params.d = Some(d);
        }
        if let Some(g) = &self.grid {
            let [nx, nv, nt] = g[..] else {
                return Err(Error::Config(format!("--grid wants NX,NV,NT, got {} values", g.len())));
            };
            if nx != nv {
                return Err(Error::Config("--grid: the solver grids use NX = NV".into()));
            }
            e.grid.n = Some(nx);
            e.grid.nt = Some(nt);
        }
        if let Some(t) = self.t_end {
            e.grid.t_end = Some(t);
        }
        if let Some(s) = self.seed {
            e.fields.seed = Some(s);
        }
        if let Some(eps) = &self.eps_sweep {
            e.sweep.eps = Some(eps.clone());
        }
        Ok(())
    }
}

fn family_kinds(f: Family) -> &'static [Kind] {
    match f {
        Family::Solve => &[Kind::Residual],
        Family::Norms => &[Kind::Scaling, Kind::Levy],
        Family::Kernel => &[Kind::Marginals, Kind::Opnorm, Kind::Hormander],
        Family::Local => &[Kind::Local],
        Family::Hormander => &[Kind::Hormander],
        Family::Exponents => &[Kind::Exponents],
        Family::Verify => &[],
    }
}

/// Suite from the config file, or one experiment per kind of the family built from flags.
fn build_suite(family: Family, flags: &Flags) -> Result<(SuiteConfig, String, Option<PathBuf>)> {
    let (mut cfg, text, path) = match &flags.config {
        Some(p) => {
            let (c, t) = SuiteConfig::load(p)?;
            (c, t, Some(p.clone()))
        }
        None if family == Family::Verify => (SuiteConfig::parse(DEFAULT_SUITE)?, DEFAULT_SUITE.to_string(), None),
        None => {
            let experiments = family_kinds(family).iter().map(|k| ExperimentConfig::new(&k.name(), *k)).collect();
            (SuiteConfig { output: None, experiments }, String::new(), None)
        }
    };
    // the kernel family also covers hormander experiments
    cfg.experiments.retain(|e| {
        family == Family::Verify || e.kind.family() == family || (family == Family::Kernel && e.kind == Kind::Hormander)
    });
    for e in &mut cfg.experiments {
        flags.apply(e)?;
    }
    cfg.validate()?;
    Ok((cfg, text, path))
}

fn print_report(r: &RunReport, dir: &Path) {
    for e in &r.experiments {
        let status = if e.pass { "PASS" } else { "FAIL" };
        println!("{status} {} ({}, {:.1} s)", e.name, e.kind.name(), e.elapsed_s);
        if let Some(err) = &e.error {
            println!("    error: {err}");
        }
        for m in e.measurements.iter().filter(|m| !m.pass) {
            println!("    {} [{}] = {:e} {} {:e}", m.quantity, m.params, m.value, m.relation.symbol(), m.threshold);
        }
    }
    println!("{} experiments, report in {}", r.experiments.len(), dir.display());
}

fn run_family(family: Family, flags: &Flags) -> Result<RunReport> {
    let (cfg, text, path) = build_suite(family, flags)?;
    let dir = flags.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("kolmokit-out"));
    let r = run_suite(&cfg, &text, path.as_deref(), None);
    write_report(&r, &dir).map_err(|e| Error::Config(format!("cannot write {}: {e}", dir.display())))?;
    print_report(&r, &dir);
    Ok(r)
}

/// Direct solve: writes `solution.kfld` and `solve.json`.
fn solve(flags: &Flags) -> Result<RunReport> {
    let beta = flags.beta.as_ref().and_then(|b| b.first().copied()).unwrap_or(0.5);
    let gamma = flags.gamma.as_ref().and_then(|g| g.first().copied()).unwrap_or(beta);
    let p = flags.p.as_ref().and_then(|p| p.first().copied()).unwrap_or(2.0);
    let d = flags.d.unwrap_or(1);
    kolmokit::exponents::KineticParams::new(beta, gamma, p, d).map_err(|e| Error::Config(e.to_string()))?;
    let (n, nt) = match flags.grid.as_deref() {
        None => (64, 257),
        Some(&[nx, nv, nt]) if nx == nv => (nx, nt),
        Some(_) => return Err(Error::Config("--grid wants NX,NV,NT with NX = NV".into())),
    };
    let t_end = flags.t_end.unwrap_or(1.0);
    let grid = GridSpec::new(d, 2.0 * PI, 2.0 * PI, n, n, GridSpec::uniform_times(0.0, t_end, nt)).map_err(|e| Error::Config(e.to_string()))?;
    let seed = flags.seed.unwrap_or(1);
    let psi = make_test_field(&TestFieldSpec::new(seed, [0.5, 2.0], [0.5, 2.5], Envelope::Constant), &grid.with_times(vec![0.0]))?;
    let env = Envelope::Bump { center: 0.5 * t_end, half_width: 0.4 * t_end };
    let s = make_test_field(&TestFieldSpec::new(seed + 1, [0.5, 2.0], [0.5, 2.5], env).shifted(), &grid)?;
    let f = cauchy_solve(&CauchyProblem { beta, psi, source: Some(s.clone()), grid: grid.clone() })?;
    let res = residual(&f, Some(&s), beta)?;
    let dir = flags.out.clone().unwrap_or_else(|| PathBuf::from("kolmokit-out"));
    std::fs::create_dir_all(&dir).map_err(|e| Error::Config(format!("cannot write {}: {e}", dir.display())))?;
    f.write_container(std::io::BufWriter::new(std::fs::File::create(dir.join("solution.kfld"))?))?;
    let report = serde_json::json!({
        "beta": beta, "gamma": gamma, "p": p, "d": d, "seed": seed,
        "grid": grid.id(),
        "residual": res,
        "norms": {
            "lp": lp_norm(&f, p).total,
            "dv": dv_norm(&f, gamma, p).total,
            "source_lp": lp_norm(&s, p).total,
        },
        "exponents": exponent_table(beta, d, p, gamma).ok(),
    });
    std::fs::write(dir.join("solve.json"), serde_json::to_string_pretty(&report)?)?;
    println!("residual {res:e}, field written to {}", dir.join("solution.kfld").display());
    let mut e = ExperimentConfig::new("solve", Kind::Residual);
    flags.apply(&mut e)?;
    let pass = res < e.tol("residual");
    Ok(RunReport { config_path: None, config_hash: String::new(), parallel: kolmokit::par::is_parallel(), threads: None, elapsed_s: 0.0, pass, experiments: vec![], dat: vec![] })
}

fn exponents(flags: &Flags) -> Result<RunReport> {
    if flags.config.is_none() {
        let beta = flags.beta.clone().unwrap_or_else(|| vec![1.0]);
        let d = flags.d.unwrap_or(1);
        for b in &beta {
            for g in flags.gamma.clone().unwrap_or_else(|| vec![*b]) {
                for p in flags.p.clone().unwrap_or_else(|| vec![2.0]) {
                    let t = exponent_table(*b, d, p, g).map_err(|e| Error::Config(e.to_string()))?;
                    println!("{}", serde_json::to_string(&t)?);
                }
            }
        }
    }
    run_family(Family::Exponents, flags)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.cmd {
        Cmd::Solve(f) if f.config.is_none() => solve(f),
        Cmd::Solve(f) => run_family(Family::Solve, f),
        Cmd::Norms(f) => run_family(Family::Norms, f),
        Cmd::Kernel(f) => run_family(Family::Kernel, f),
        Cmd::Local(f) => run_family(Family::Local, f),
        Cmd::Hormander(f) => run_family(Family::Hormander, f),
        Cmd::Verify(f) => run_family(Family::Verify, f),
        Cmd::Exponents(f) => exponents(f),
    };
    if let Err(e) = &r {
        eprintln!("kolmokit: {e}");
    }
    ExitCode::from(exit_code(&r) as u8)
}
