//! Suite execution and output: `report.csv` (one row per measurement), `summary.json`
//! (provenance and per-experiment verdicts) and optional gnuplot `.dat` files.

use crate::config::{git_blob_hash, ExperimentConfig, Family, SuiteConfig};
use crate::error::{Error, Result};
use crate::par;
use crate::suite::{run_all, ExperimentResult};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const CSV_HEADER: [&str; 8] = ["experiment", "kind", "quantity", "params", "value", "relation", "threshold", "pass"];

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub config_path: Option<PathBuf>,
    /// git blob hash of the config text
    pub config_hash: String,
    pub parallel: bool,
    pub threads: Option<usize>,
    pub elapsed_s: f64,
    pub pass: bool,
    pub experiments: Vec<ExperimentResult>,
    #[serde(skip)]
    pub dat: Vec<bool>,
}

#[derive(Serialize)]
struct ExperimentSummary<'a> {
    name: &'a str,
    kind: String,
    pass: bool,
    error: &'a Option<String>,
    elapsed_s: f64,
    seeds: &'a [u64],
    grids: &'a [String],
    tolerances: BTreeMap<&'a str, f64>,
    measurements: usize,
    failed: Vec<String>,
}

#[derive(Serialize)]
struct Summary<'a> {
    tool: &'static str,
    version: &'static str,
    config_path: Option<String>,
    config_hash: &'a str,
    parallel: bool,
    threads: Option<usize>,
    elapsed_s: f64,
    pass: bool,
    experiments: Vec<ExperimentSummary<'a>>,
}

/// Runs the experiments of `family` (all of them for `None`).
pub fn run_suite(cfg: &SuiteConfig, text: &str, path: Option<&Path>, family: Option<Family>) -> RunReport {
    let threads = par::init_threads_from_env();
    let start = Instant::now();
    let chosen: Vec<ExperimentConfig> = cfg
        .experiments
        .iter()
        .filter(|e| family.is_none_or(|f| f == Family::Verify || e.kind.family() == f))
        .cloned()
        .collect();
    let experiments = run_all(&chosen);
    RunReport {
        config_path: path.map(Path::to_path_buf),
        config_hash: git_blob_hash(text.as_bytes()),
        parallel: par::is_parallel(),
        threads,
        elapsed_s: start.elapsed().as_secs_f64(),
        pass: experiments.iter().all(|r| r.pass),
        dat: chosen.iter().map(|e| e.dat).collect(),
        experiments,
    }
}

pub fn write_csv<W: Write>(r: &RunReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for m in r.experiments.iter().flat_map(|e| &e.measurements) {
        out.write_record([
            m.experiment.clone(),
            m.kind.clone(),
            m.quantity.clone(),
            m.params.clone(),
            format!("{:e}", m.value),
            m.relation.symbol().to_string(),
            format!("{:e}", m.threshold),
            m.pass.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn summary_json(r: &RunReport) -> Result<String> {
    let experiments = r
        .experiments
        .iter()
        .map(|e| ExperimentSummary {
            name: &e.name,
            kind: e.kind.name(),
            pass: e.pass,
            error: &e.error,
            elapsed_s: e.elapsed_s,
            seeds: &e.seeds,
            grids: &e.grids,
            tolerances: e.tolerances.iter().map(|(k, v)| (k.as_str(), *v)).collect(),
            measurements: e.measurements.len(),
            failed: e.measurements.iter().filter(|m| !m.pass).map(|m| format!("{} [{}]", m.quantity, m.params)).collect(),
        })
        .collect();
    let s = Summary {
        tool: "kolmokit",
        version: env!("CARGO_PKG_VERSION"),
        config_path: r.config_path.as_ref().map(|p| p.display().to_string()),
        config_hash: &r.config_hash,
        parallel: r.parallel,
        threads: r.threads,
        elapsed_s: r.elapsed_s,
        pass: r.pass,
        experiments,
    };
    Ok(serde_json::to_string_pretty(&s)?)
}

/// One gnuplot data block per quantity: `index value threshold pass`.
pub fn write_dat<W: Write>(e: &ExperimentResult, mut w: W) -> Result<()> {
    writeln!(w, "# {} ({})", e.name, e.kind.name())?;
    let mut blocks: Vec<(&str, Vec<_>)> = Vec::new();
    for m in &e.measurements {
        match blocks.iter_mut().find(|(q, _)| *q == m.quantity) {
            Some((_, v)) => v.push(m),
            None => blocks.push((&m.quantity, vec![m])),
        }
    }
    for (i, (q, ms)) in blocks.iter().enumerate() {
        if i > 0 {
            writeln!(w, "\n")?;
        }
        writeln!(w, "# {q}")?;
        for (j, m) in ms.iter().enumerate() {
            writeln!(w, "{j} {:e} {:e} {}  # {}", m.value, m.threshold, u8::from(m.pass), m.params)?;
        }
    }
    Ok(())
}

/// Writes every output file into `dir`; returns the paths written.
pub fn write_report(r: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join("report.csv");
    write_csv(r, fs::File::create(&csv_path)?)?;
    let json_path = dir.join("summary.json");
    fs::write(&json_path, summary_json(r)?)?;
    let mut paths = vec![csv_path, json_path];
    for (e, dat) in r.experiments.iter().zip(&r.dat) {
        if *dat {
            let p = dir.join(format!("{}.dat", sanitize(&e.name)));
            write_dat(e, fs::File::create(&p)?)?;
            paths.push(p);
        }
    }
    Ok(paths)
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// 0 when everything passed, 1 on a failed threshold or numerical error, 2 for a bad
/// config or unwritable output.
pub fn exit_code(r: &Result<RunReport>) -> i32 {
    match r {
        Ok(rep) if rep.pass => 0,
        Ok(_) => 1,
        Err(_) => 2,
    }
}

/// Loads, runs and writes a suite. `out` overrides the config's output directory.
pub fn run_config_file(path: &Path, out: Option<&Path>, family: Option<Family>) -> Result<RunReport> {
    let (cfg, text) = SuiteConfig::load(path)?;
    let dir = out.map(Path::to_path_buf).or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("kolmokit-out"));
    let r = run_suite(&cfg, &text, Some(path), family);
    write_report(&r, &dir).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("cannot write {}: {io}", dir.display())),
        other => other,
    })?;
    Ok(r)
}
