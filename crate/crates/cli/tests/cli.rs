use std::path::Path;
use std::process::{Command, Output};

use gafz::{read_csv, write_csv};

fn gafz(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_gafz"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap()
}

const TWO_TERM: &str = r#"
[model]
family = "two_term"
params = { n = 0, m = 1, cn = 1, cm = 1 }
[grid]
r = [0.5, 1.0, 2.0]
"#;

#[test]
fn validation_errors_exit_2_without_files() {
    let cases = [
        ("var-exact", TWO_TERM.replace("[0.5, 1.0, 2.0]", "[]")),
        ("var-exact", TWO_TERM.replace("[0.5, 1.0, 2.0]", "[1.0, 0.5]")),
        ("var-exact", TWO_TERM.replace("[0.5, 1.0, 2.0]", "[1.0, 1.0]")),
        ("var-exact", TWO_TERM.replace("[0.5, 1.0, 2.0]", "[-1.0, 1.0]")),
        ("var-exact", TWO_TERM.replace("two_term", "no_such_family")),
        ("var-exact", TWO_TERM.replace("[grid]", "[grid]\nwidth = 3")),
        ("var-exact", TWO_TERM.replace("[grid]\nr", "[grid]\nt = [1.0]\nr")),
        ("var-mc", TWO_TERM.to_string()),
        ("var-mc", format!("{TWO_TERM}[mc]\nseed = 1\nsamples = 10\n")),
        ("restrict", TWO_TERM.to_string()),
        (
            "mean",
            "[model]\nfamily = \"unit_disk_exp\"\nparams = { alpha = 1 }\n[grid]\nr = [0.5, 1.0]\n"
                .to_string(),
        ),
        ("mean", format!("{TWO_TERM}[params]\nc_g = 1.5\n")),
    ];
    for (cmd, cfg) in cases {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let o = gafz(dir.path(), &[cmd, "--out", out.to_str().unwrap()], &cfg);
        assert_eq!(o.status.code(), Some(2), "{cmd}: {cfg}\n{}", String::from_utf8_lossy(&o.stderr));
        assert!(!out.exists(), "{cmd}: files written for {cfg}");
    }
}

#[test]
fn unknown_command_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = gafz(dir.path(), &["integrate"], TWO_TERM);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3_with_flagged_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = "[model]\nfamily = \"exp\"\n[grid]\nt = [1.0, 40.0]\n";
    let o = gafz(dir.path(), &["var-exact", "--out", out.to_str().unwrap()], cfg);
    assert_eq!(o.status.code(), Some(3));
    let rows = read_csv(std::io::BufReader::new(
        std::fs::File::open(out.join("results.csv")).unwrap(),
    ))
    .unwrap();
    assert!(rows[0].var_exact.is_some() && rows[0].flags.is_empty());
    assert_eq!(rows[1].var_exact, None);
    assert_eq!(rows[1].flags, vec!["error=window_too_large"]);
}

#[test]
fn emitted_csv_round_trips_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = format!("{TWO_TERM}[mc]\nseed = 4\nsamples = 500\n");
    let o = gafz(dir.path(), &["sweep", "--out", out.to_str().unwrap()], &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let bytes = std::fs::read(out.join("results.csv")).unwrap();
    let rows = read_csv(&bytes[..]).unwrap();
    assert_eq!(rows.len(), 3);
    let mut again = Vec::new();
    write_csv(&mut again, &rows).unwrap();
    assert_eq!(again, bytes);
    for row in &rows {
        let b = row.r * row.r / (1.0 + row.r * row.r).powi(2);
        assert!((row.var_exact.unwrap() - b).abs() < 1e-12);
        assert!((row.upper.unwrap() - b).abs() < 1e-15);
        assert!(row.mc_var.is_some() && row.j1.is_some() && row.lower_general.is_some());
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["mc"]["seed"], 4);
    assert_eq!(manifest["config"]["tolerances"]["tail_eps"], 1e-12);
    assert_eq!(manifest["command"], "sweep");
    assert!(out.join("admissibility.json").exists());
}

#[test]
fn single_row_gives_single_data_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = "[model]\nfamily = \"exp\"\n[grid]\nt = [3.0]\n";
    let o = gafz(dir.path(), &["var-exact", "--out", out.to_str().unwrap()], cfg);
    assert!(o.status.success());
    let dat = std::fs::read_to_string(out.join("ratio_typeI.dat")).unwrap();
    let data: Vec<&str> = dat.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 1);
    assert_eq!(data[0].split_whitespace().count(), 2);
}

#[test]
fn mean_reports_central_index() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = "[model]\nfamily = \"exp\"\n[grid]\nr = [20.0]\n";
    let o = gafz(dir.path(), &["mean", "--out", out.to_str().unwrap()], cfg);
    assert!(o.status.success());
    let rows = read_csv(&std::fs::read(out.join("results.csv")).unwrap()[..]).unwrap();
    assert!((rows[0].mean_exact.unwrap() - 400.0).abs() < 1e-9);
    assert_eq!(rows[0].flags, vec!["central_index=400"]);
    assert_eq!(rows[0].var_exact, None);
}

#[test]
fn restrict_flags_interior_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = "[model]\nfamily = \"exp\"\n[model.restrict]\nell_max = 3\n[grid]\nt = [4.2, 5.5, 7.5]\n";
    let o = gafz(dir.path(), &["restrict", "--out", out.to_str().unwrap()], cfg);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&std::fs::read(out.join("results.csv")).unwrap()[..]).unwrap();
    let flags: Vec<&str> = rows.iter().map(|r| r.flags[0].as_str()).collect();
    assert_eq!(flags, ["outside_interior", "ell=2", "ell=3"]);
    let coeffs = gaf_zeros::CoefficientModel::from_file(out.join("restricted_coefficients.txt")).unwrap();
    assert_eq!(coeffs.log_coeff(65), f64::NEG_INFINITY);
    assert_eq!(coeffs.log_coeff(72), gaf_zeros::CoefficientModel::exp().log_coeff(72));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let base = "[model]\nfamily = \"exp\"\n[grid]\nr = [1.5]\n[mc]\nsamples = 300\nseed = 1\n";
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec!["var-mc", "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        assert!(gafz(dir.path(), &args, base).status.success());
        std::fs::read(out.join("results.csv")).unwrap()
    };
    let a = run("a", &[]);
    let b = run("b", &["--seed", "1"]);
    let c = run("c", &["--seed", "2"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
}
