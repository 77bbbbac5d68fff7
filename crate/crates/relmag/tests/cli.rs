//! Drives the compiled binary end to end: exit codes, diagnostics, the
//! catalog, and the deterministic-report contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn relmag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relmag"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_config(config: &str, extra: &[&str], out_dir: &Path) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("experiment.toml");
    fs::write(&path, config).unwrap();
    let mut args = vec![
        "--config",
        path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    relmag(&args)
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const CHAIN: &str = r#"
command = "chain"

[grid]
d = 1
n = 16
l = 6.0

[potential]
kind = "gaussian-well"
amplitude = 3.0
width = 1.0

[scan]
alphas = [0.1, 0.5]
"#;

const FK_MC: &str = r#"
command = "fk-mc"

[grid]
d = 1
n = 8
l = 4.0

[potential]
kind = "gaussian-well"
amplitude = 2.0
width = 1.0

[mc]
paths = 2000
steps = 8
seed = 11
"#;

#[test]
fn catalog_names_the_vocabulary_in_both_renderings() {
    let text = relmag(&["--catalog"]);
    assert_eq!(text.status.code(), Some(0));
    let listing = stdout_of(&text);
    for needle in ["gaussian-well", "constant-b", "chain", "fki-mc", "bound-scan"] {
        assert!(listing.contains(needle), "catalog text lacks {needle}");
    }

    let machine = relmag(&["--catalog", "--json"]);
    assert_eq!(machine.status.code(), Some(0));
    let cat: Value = serde_json::from_str(&stdout_of(&machine)).expect("catalog is JSON");
    assert!(cat["potentials"]["gaussian-well"].is_object());
    assert!(cat["magnetic-fields"]["constant-b"].is_object());
    let commands = cat["commands"].as_object().unwrap();
    assert_eq!(commands.len(), 10);
    for name in commands.keys() {
        assert!(listing.contains(name.as_str()), "text omits command {name}");
    }
}

#[test]
fn config_problems_exit_one_with_a_diagnostic() {
    let out_dir = tempfile::tempdir().unwrap();

    // Misspelled field: the message names it and points into the file.
    let bad = CHAIN.replace("amplitude = 3.0", "amplitud = 3.0");
    let out = run_config(&bad, &[], out_dir.path());
    assert_eq!(out.status.code(), Some(1));
    let msg = stderr_of(&out);
    assert!(msg.contains("amplitud"), "{msg}");
    assert!(msg.contains("line"), "{msg}");

    // Unknown top-level key.
    let out = run_config(&format!("{CHAIN}\nunknown_block = 1\n"), &[], out_dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("unknown_block"));

    // Missing required block for the command.
    let fki = FK_MC.replace("\"fk-mc\"", "\"fki-mc\"");
    let out = run_config(&fki, &[], out_dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("[magnetic]"));

    // Wrong moment-column count for bound-scan.
    let scan = CHAIN.replace("\"chain\"", "\"bound-scan\"")
        + "couplings = [1.0, 2.0]\nk_exponents = [1.0]\n";
    let out = run_config(&scan, &[], out_dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("k_exponents"));

    // No config at all, and a config that is not there.
    let out = relmag(&[]);
    assert_eq!(out.status.code(), Some(1));
    let out = relmag(&["--config", "/does/not/exist.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("exist.toml"));

    // Unknown flags are usage errors; help and version are not.
    assert_eq!(relmag(&["--bogus"]).status.code(), Some(1));
    assert_eq!(relmag(&["--help"]).status.code(), Some(0));
    assert_eq!(relmag(&["--version"]).status.code(), Some(0));
}

#[test]
fn chain_reports_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run_config(CHAIN, &[], a.path()).status.code(), Some(0));
    assert_eq!(run_config(CHAIN, &[], b.path()).status.code(), Some(0));

    let csv_a = fs::read(a.path().join("chain.csv")).unwrap();
    let csv_b = fs::read(b.path().join("chain.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    let json_a = fs::read(a.path().join("chain.json")).unwrap();
    let json_b = fs::read(b.path().join("chain.json")).unwrap();
    assert_eq!(json_a, json_b);

    let table = String::from_utf8(csv_a).unwrap();
    let mut lines = table.lines();
    let stamp = lines.next().unwrap();
    assert!(stamp.starts_with("# command=chain config_hash="), "{stamp}");
    assert_eq!(
        lines.next().unwrap(),
        "alpha,n_count,bs_count,trace_free,trace_mag,bound_value"
    );
    assert_eq!(lines.count(), 2);

    let summary = read_json(&a.path().join("chain.json"));
    let hash = summary["config_hash"].as_str().unwrap();
    assert!(stamp.contains(hash), "CSV stamp and summary disagree on the hash");
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
    assert_eq!(summary["version"].as_str().unwrap(), env!("CARGO_PKG_VERSION"));
    assert_eq!(summary["command"].as_str().unwrap(), "chain");

    // Only the metadata file may differ between runs, and it carries the
    // same provenance.
    let meta = read_json(&a.path().join("run_meta.json"));
    assert_eq!(meta["config_hash"].as_str().unwrap(), hash);
    assert!(meta["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn the_seed_flag_owns_the_monte_carlo_stream() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    assert_eq!(run_config(FK_MC, &["--seed", "5"], a.path()).status.code(), Some(0));
    assert_eq!(run_config(FK_MC, &["--seed", "5"], b.path()).status.code(), Some(0));
    assert_eq!(run_config(FK_MC, &["--seed", "6"], c.path()).status.code(), Some(0));

    let ja = fs::read(a.path().join("fk-mc.json")).unwrap();
    let jb = fs::read(b.path().join("fk-mc.json")).unwrap();
    let jc = fs::read(c.path().join("fk-mc.json")).unwrap();
    assert_eq!(ja, jb);
    assert_ne!(ja, jc);

    let summary = read_json(&a.path().join("fk-mc.json"));
    assert_eq!(summary["seed"].as_u64().unwrap(), 5);
    assert!(summary["estimate"]["re"].as_f64().unwrap() > 1.0);
    assert!(summary["stderr"].as_f64().unwrap() > 0.0);
}

#[test]
fn worker_count_does_not_change_the_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run_config(FK_MC, &["--workers", "1"], a.path()).status.code(), Some(0));
    assert_eq!(run_config(FK_MC, &["--workers", "2"], b.path()).status.code(), Some(0));
    assert_eq!(
        fs::read(a.path().join("fk-mc.json")).unwrap(),
        fs::read(b.path().join("fk-mc.json")).unwrap()
    );
}

#[test]
fn gauge_check_certifies_covariance() {
    let config = r#"
command = "gauge-check"

[grid]
d = 1
n = 16
l = 5.0

[potential]
kind = "gaussian-well"
amplitude = 2.0
width = 1.0

[gauge]
constant = 0.1
linear = [0.3]
quad = [[0.5]]
"#;
    let out_dir = tempfile::tempdir().unwrap();
    let out = run_config(config, &[], out_dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let summary = read_json(&out_dir.path().join("gauge-check.json"));
    assert!(summary["entrywise_defect"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn bs_count_rows_agree_with_the_direct_spectrum() {
    let config = r#"
command = "bs-count"

[grid]
d = 1
n = 64
l = 12.0

[potential]
kind = "gaussian-well"
amplitude = 2.0
width = 1.0

[scan]
alphas = [0.1, 0.5]
"#;
    let out_dir = tempfile::tempdir().unwrap();
    let out = run_config(config, &[], out_dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let table = fs::read_to_string(out_dir.path().join("bs-count.csv")).unwrap();
    let mut lines = table.lines().skip_while(|l| l.starts_with('#'));
    assert_eq!(lines.next().unwrap(), "alpha,n_count,bs_count,bs_count_floored");
    let mut rows = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        let n: usize = cols[1].parse().unwrap();
        let raw: usize = cols[2].parse().unwrap();
        let floored: usize = cols[3].parse().unwrap();
        assert_eq!(floored, n, "floored count drifted in {line}");
        assert!(raw >= n, "raw count lost bound states in {line}");
        rows += 1;
    }
    assert_eq!(rows, 2);
}

#[test]
fn formats_filter_the_deterministic_files() {
    let config = format!("{CHAIN}\n[output]\nformats = [\"csv\"]\n");
    let out_dir = tempfile::tempdir().unwrap();
    let out = run_config(&config, &[], out_dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    assert!(out_dir.path().join("chain.csv").exists());
    assert!(!out_dir.path().join("chain.json").exists());
    assert!(out_dir.path().join("run_meta.json").exists());
}
