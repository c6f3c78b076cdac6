use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn powmod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_powmod"))
        .args(args)
        .env_remove(powmod::cli::PRECISION_ENV)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| l.strip_prefix(key)?.strip_prefix(" = "))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SQUARES: [&str; 12] = [
    "--lambda", "3", "--delta", "1", "--eta", "0.5", "--family", "nsq", "--target", "const:0", "--depth", "20",
];

#[test]
fn construct_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("cert.toml");
    let mut args = vec!["construct"];
    args.extend(SQUARES);
    args.extend(["--seed", "7", "--out", p(&cert)]);
    let o = powmod(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(value(&stdout(&o), "start_level"), Some("2"));
    assert_eq!(value(&stdout(&o), "alpha_digits"), Some("50"));
    let o = powmod(&["verify", "--certificate", p(&cert)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("[original]"));
    assert_eq!(value(&out, "failed"), Some("0"));
}

#[test]
fn certificate_on_stdout_without_out_flag() {
    let mut args = vec!["construct"];
    args.extend(SQUARES);
    let o = powmod(&args);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("format = \"powmod-certificate-1\""));
    assert!(stderr(&o).contains("start_level = 2"));
}

#[test]
fn verify_powers_of_two() {
    let o = powmod(&["verify", "--alpha", "2.0", "--family", "lin", "--target", "const:0", "--to", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(value(&out, "passed"), Some("10"));
    assert_eq!(out.lines().filter(|l| l.ends_with(",pass")).count(), 10);
}

#[test]
fn verify_failure_names_index() {
    // ‖2.5‖ = 1/2 is not below the threshold 1/2
    let o = powmod(&["verify", "--alpha", "2.5", "--family", "lin", "--to", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("index 1"), "{}", stderr(&o));
}

#[test]
fn dimension_of_synthetic_middle_third() {
    let o = powmod(&["dimension", "--synthetic", "middle-third:40"]);
    assert_eq!(o.status.code(), Some(0));
    let est: f64 = value(&stdout(&o), "extrapolated").unwrap().parse().unwrap();
    assert!((est - 2f64.ln() / 3f64.ln()).abs() < 1e-3);
    let o = powmod(&["dimension", "--synthetic", "middle-third:12"]);
    let slope: f64 = value(&stdout(&o), "box_count_slope").unwrap().parse().unwrap();
    assert!((slope - 0.6309).abs() < 0.02, "{slope}");
}

#[test]
fn dimension_reads_tree_export() {
    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("tree.txt");
    let cert = dir.path().join("c.toml");
    let o = powmod(&[
        "construct",
        "--family",
        "nsq",
        "--densify",
        "0.1",
        "--lambda",
        "2",
        "--delta",
        "0.5",
        "--eta",
        "0.9",
        "--depth",
        "40",
        "--out",
        p(&cert),
        "--tree",
        p(&tree),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = powmod(&["dimension", "--tree", p(&tree)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let partial: f64 = value(&out, "deepest_partial").unwrap().parse().unwrap();
    let closed: f64 = value(&out, "closed_form").unwrap().parse().unwrap();
    assert!(partial >= closed - 0.05);
    assert!(value(&out, "limit").is_some());
}

#[test]
fn densify_reports_invariants() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("seq.txt");
    let o = powmod(&["densify", "--family", "geom:2", "--count", "12", "--eps", "0.5", "--out", p(&file)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("# ratio_bound = pass"));
    assert!(out.contains("# inserted_steps = pass"));
    assert!(out.contains("# origin_map = pass"));
    let text = fs::read_to_string(&file).unwrap();
    let first: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).take(3).collect();
    assert_eq!(first, ["2\t0", "2.5\t0", "3\t0"]);
}

#[test]
fn discrepancy_of_powers() {
    let o = powmod(&["discrepancy", "--alpha", "1.5", "--family", "lin", "--to", "200"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let d: f64 = value(&stdout(&o), "star_discrepancy").unwrap().parse().unwrap();
    assert!(d > 0.0 && d < 0.2, "{d}");
    assert_eq!(value(&stdout(&o), "points"), Some("200"));
}

#[test]
fn discrepancy_of_point_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("pts.txt");
    fs::write(&file, "# grid\n0.125\n0.375\n0.625\n0.875\n").unwrap();
    let o = powmod(&["discrepancy", "--points", p(&file)]);
    assert_eq!(value(&stdout(&o), "star_discrepancy"), Some("0.125000000000"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "# experiment\nlambda = 3\ndelta = 1\neta = 0.5\nfamily = nsq\ndepth = 12\nseed = 3\n").unwrap();
    let a = powmod(&["construct", "--config", p(&conf)]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    let b = powmod(&["construct", "--config", p(&conf), "--seed", "4"]);
    let c = powmod(&[
        "construct",
        "--lambda",
        "3",
        "--delta",
        "1",
        "--eta",
        "0.5",
        "--family",
        "nsq",
        "--depth",
        "12",
        "--seed",
        "4",
    ]);
    assert_ne!(a.stdout, b.stdout);
    assert_eq!(b.stdout, c.stdout);
}

#[test]
fn config_file_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "lambda = 3\nlamda = 2\n").unwrap();
    let o = powmod(&["construct", "--config", p(&conf)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn deterministic_outputs() {
    let mut args = vec!["construct"];
    args.extend(SQUARES);
    args.extend(["--seed", "11"]);
    let a = powmod(&args);
    let b = powmod(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn usage_errors_exit_three() {
    assert_eq!(powmod(&[]).status.code(), Some(3));
    assert_eq!(
        powmod(&["construct", "--lambda", "x", "--delta", "1", "--eta", "0.5", "--family", "nsq", "--depth", "5"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(powmod(&["verify", "--family", "lin", "--to", "3"]).status.code(), Some(3));
    assert_eq!(powmod(&["densify", "--family", "bogus", "--count", "3", "--eps", "0.5"]).status.code(), Some(3));
    let o = Command::new(env!("CARGO_BIN_EXE_powmod"))
        .args(["verify", "--alpha", "2", "--family", "lin", "--to", "3"])
        .env(powmod::cli::PRECISION_ENV, "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn infeasible_runs_exit_two() {
    // with λ = 1.5 the first usable square sits past n = 6
    let o = powmod(&[
        "construct",
        "--lambda",
        "1.5",
        "--delta",
        "0.1",
        "--eta",
        "0.5",
        "--family",
        "nsq",
        "--depth",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    // constant gaps fail the divergence check
    let o = powmod(&["construct", "--lambda", "3", "--delta", "1", "--eta", "0.5", "--family", "lin", "--depth", "30"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn verbose_lists_levels() {
    let o = powmod(&[
        "-v",
        "construct",
        "--lambda",
        "3",
        "--delta",
        "1",
        "--eta",
        "0.5",
        "--family",
        "nsq",
        "--depth",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("level 5 q=25"), "{}", stderr(&o));
}

#[test]
fn sequence_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("seq.txt");
    fs::write(&file, "# squares\n1\t0\n4\t0.25\n9\t0\n16\t0\n25\t0\n").unwrap();
    let family = format!("file:{}", p(&file));
    let o = powmod(&["verify", "--alpha", "2", "--family", &family, "--target", "file", "--to", "4", "--no-threshold"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("2,4,0.25,") && l.contains(",0.25,0.25,")), "{out}");
}
