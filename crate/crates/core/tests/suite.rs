use kolmokit::config::*;
use kolmokit::report::{run_suite, summary_json, write_csv, write_dat, CSV_HEADER};
use kolmokit::suite::{run_experiment, Relation};

fn one(body: &str) -> kolmokit::Result<SuiteConfig> {
    SuiteConfig::parse(&format!("[[experiment]]\nname = \"x\"\n{body}"))
}

#[test]
fn git_blob_hash_matches_git() {
    // `printf 'hello\n' | git hash-object --stdin`
    assert_eq!(git_blob_hash(b"hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
    assert_eq!(git_blob_hash(b""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

#[test]
fn reference_suite_parses_and_covers_every_kind() {
    let s = SuiteConfig::parse(DEFAULT_SUITE).unwrap();
    let kinds: std::collections::BTreeSet<Kind> = s.experiments.iter().map(|e| e.kind).collect();
    assert_eq!(kinds.len(), 16);
    assert!(s.experiments.iter().all(|e| e.tolerances.is_empty()));
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        "kind = \"trace\"\ntolerances = { slope = 0.1 }",
        "kind = \"trace\"\ntolerances = { spread = -1.0 }",
        "kind = \"trace\"\nparams = { beta = [1.2] }",
        "kind = \"trace\"\nparams = { beta = [1.0], gamma_factor = [3.0] }",
        "kind = \"trace\"\nparams = { p = [1.0] }",
        "kind = \"trace\"\nparams = { d = 4 }",
        "kind = \"trace\"\ngrid = { n = 7 }",
        "kind = \"trace\"\nsweep = { lambda = [3.0] }",
        "kind = \"trace\"\nsweep = { lambda = [1.0] }",
        "kind = \"local\"\nsweep = { eps = [0.0] }",
        "kind = \"trace\"\nfields = { count = 0 }",
        "kind = \"trace\"\nexpect = { k_dim = 6.0 }",
        "kind = \"trace\"\ncolour = 1",
        "kind = \"unheard_of\"",
    ];
    for b in bad {
        assert!(matches!(one(b), Err(kolmokit::Error::Config(_))), "{b}");
    }
    let dup = "[[experiment]]\nname = \"a\"\nkind = \"levy\"\n[[experiment]]\nname = \"a\"\nkind = \"local\"\n";
    assert!(SuiteConfig::parse(dup).unwrap_err().to_string().contains("duplicate"));
    assert!(one("kind = \"trace\"\nsweep = { lambda = [0.5, 4.0] }").is_ok());
}

#[test]
fn tolerance_overrides_and_defaults() {
    let s = one("kind = \"uniqueness\"\ntolerances = { slope = 0.1 }").unwrap();
    let e = &s.experiments[0];
    assert_eq!(e.tol("slope"), 0.1);
    assert_eq!(e.tol("heat_rate"), 0.01);
    assert!(e.tol("nothing").is_nan());
    assert_eq!(e.gammas(0.5, &[0.0, 2.0]), vec![0.0, 1.0]);
}

#[test]
fn families_partition_the_kinds() {
    assert_eq!(Kind::Residual.family(), Family::Solve);
    assert_eq!(Kind::Opnorm.family(), Family::Kernel);
    assert_eq!(Kind::Trace.family(), Family::Verify);
    assert_eq!(Kind::SobolevGain.name(), "sobolev_gain");
}

#[test]
fn exponent_experiment_compares_expectations() {
    let ok = one("kind = \"exponents\"\nexpect = { k_dim = 6.0, \"hls.a_star_star\" = 6.0 }").unwrap();
    let r = run_experiment(&ok.experiments[0]);
    assert!(r.pass && r.error.is_none());
    let miss = one("kind = \"exponents\"\nexpect = { k_dim = 6.5 }").unwrap();
    let r = run_experiment(&miss.experiments[0]);
    assert!(!r.pass);
    let m = r.measurements.iter().find(|m| m.quantity == "k_dim_error").unwrap();
    assert_eq!((m.value, m.relation, m.threshold), (0.5, Relation::Le, 0.0));
    let unknown = one("kind = \"exponents\"\nexpect = { zeta = 1.0 }").unwrap();
    assert!(run_experiment(&unknown.experiments[0]).error.unwrap().contains("zeta"));
    // a numerical range error is a failed experiment, not a crash
    let range = one("kind = \"exponents\"\nparams = { beta = [1.0], gamma_factor = [0.0] }").unwrap();
    let r = run_experiment(&range.experiments[0]);
    assert!(!r.pass && r.error.unwrap().contains("0 < gamma"));
}

#[test]
fn reports_carry_header_and_provenance() {
    let text = "[[experiment]]\nname = \"t\"\nkind = \"exponents\"\n";
    let cfg = SuiteConfig::parse(text).unwrap();
    let r = run_suite(&cfg, text, None, None);
    assert!(r.pass);
    let mut buf = Vec::new();
    write_csv(&r, &mut buf).unwrap();
    let csv = String::from_utf8(buf).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(csv.lines().count(), 1 + r.experiments[0].measurements.len());
    let j: serde_json::Value = serde_json::from_str(&summary_json(&r).unwrap()).unwrap();
    assert_eq!(j["config_hash"], git_blob_hash(text.as_bytes()));
    assert_eq!(j["experiments"][0]["tolerances"]["exact"], 0.0);
    let mut dat = Vec::new();
    write_dat(&r.experiments[0], &mut dat).unwrap();
    assert!(String::from_utf8(dat).unwrap().contains("# k_dim_error"));
    // family filter
    assert!(run_suite(&cfg, text, None, Some(Family::Local)).experiments.is_empty());
}
