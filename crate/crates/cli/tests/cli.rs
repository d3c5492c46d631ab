//! End-to-end runs of the `lmg` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn lmg(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lmg"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn lmg")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_csv(path: &Path) -> (String, Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let sha = lines.next().unwrap().strip_prefix("# report sha256 ").unwrap().to_string();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap_or(f64::NAN)).collect())
        .collect();
    (sha, header, rows)
}

fn report(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn spectrum_table_matches_report_and_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("spectrum_N4.json");
    let o = lmg(&["spectrum", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (sha, header, rows) = read_csv(&dir.path().join("spectrum_N4.levels.csv"));
    let rep = report(&dir.path().join("spectrum_N4.report.json"));
    assert_eq!(rep["sha256"].as_str().unwrap(), sha);
    assert_eq!(header.len(), 7);
    assert_eq!(header[0], "chi_ratio");
    assert_eq!(rows.len(), 101);
    // chi1 = chi2 = 1, lambda = 1, J = 2: levels lambda m - m^2 + 6.
    let mut want: Vec<f64> = [-2.0_f64, -1.0, 0.0, 1.0, 2.0].iter().map(|m| m - m * m + 6.0).collect();
    want.sort_by(f64::total_cmp);
    let last = rows.last().unwrap();
    assert_eq!(last[0], 1.0);
    for (a, b) in last[1..6].iter().zip(&want) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
    assert_eq!(rep["report"]["command"], "spectrum");
    assert!(rep["report"]["defaults"]["degeneracy_rtol"].is_number());
}

#[test]
fn json_emit_carries_the_same_digest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("susy_N6.json");
    let o = lmg(&["susy-check", "--config", cfg.to_str().unwrap(), "--override", "emit=\"json\""], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = report(&dir.path().join("susy_N6.levels.json"));
    let rep = report(&dir.path().join("susy_N6.report.json"));
    assert_eq!(table["report_sha256"], rep["sha256"]);
    assert_eq!(table["rows"].as_array().unwrap().len(), 7);
    assert_eq!(rep["report"]["results"]["is_zero_mode"], true);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let spectrum = config("spectrum_N4.json");
    let s = spectrum.to_str().unwrap();
    for args in [
        vec!["spectrum", "--config", s, "--override", "bogus=1"],
        vec!["spectrum", "--config", s, "--override", "no_equals_sign"],
        vec!["susy-check", "--config", s],
        vec!["spectrum", "--config", s, "--threads", "0"],
        vec!["spectrum", "--config", s, "--override", "j=2.25"],
    ] {
        let o = lmg(&args, dir.path());
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn missing_config_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = lmg(&["spectrum", "--config", "/nonexistent/lmg.json"], dir.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn non_kernel_weight_exits_three_but_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("susy_N6.json");
    let o = lmg(&["susy-check", "--config", cfg.to_str().unwrap(), "--override", "mu=1"], dir.path());
    assert_eq!(code(&o), 3);
    let rep = report(&dir.path().join("susy_N6.report.json"));
    assert_eq!(rep["report"]["results"]["is_zero_mode"], false);
}

#[test]
fn cutoff_overflow_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("fig3a_compare.json");
    let o = lmg(
        &[
            "iontrap-compare",
            "--config",
            cfg.to_str().unwrap(),
            "--override",
            "ion.n_max=1",
            "--override",
            "ion.cutoff_threshold=1e-12",
            "--override",
            "compare.t_start=-200",
            "--override",
            "compare.t_end=200",
            "--override",
            "cutoff_check=null",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    let rep = report(&dir.path().join("fig3a_compare.report.json"));
    assert_eq!(rep["report"]["results"]["cutoff_overflow"], true);
}

#[test]
fn overrides_apply_in_order_and_out_flag_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("spectrum_N4.json");
    let other = dir.path().join("ignored");
    let o = lmg(
        &[
            "spectrum",
            "--config",
            cfg.to_str().unwrap(),
            "--override",
            "ratio_points=3",
            "--override",
            "ratio_points=5",
            "--override",
            &format!("out_dir=\"{}\"", other.display()),
            "--override",
            "name=\"small\"",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!other.exists());
    let (_, _, rows) = read_csv(&dir.path().join("small.levels.csv"));
    assert_eq!(rows.len(), 5);
}

#[test]
fn scan_rows_do_not_depend_on_thread_count() {
    let cfg = config("adiabaticity_scan.json");
    let mut tables = Vec::new();
    for threads in ["1", "3"] {
        let dir = tempfile::tempdir().unwrap();
        let o = lmg(
            &[
                "scan",
                "--config",
                cfg.to_str().unwrap(),
                "--threads",
                threads,
                "--override",
                "products.values=[2,3]",
            ],
            dir.path(),
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let text = std::fs::read_to_string(dir.path().join("adiabaticity_scan.scan.csv")).unwrap();
        // The first line carries the digest, which records the thread count.
        tables.push(text.lines().skip(1).map(String::from).collect::<Vec<_>>());
    }
    assert_eq!(tables[0], tables[1]);
    assert_eq!(tables[0].len(), 1 + 6);
}

#[test]
fn gap_bound_require_flag_turns_inconclusive_into_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("gap_scan.json");
    let c = cfg.to_str().unwrap();
    let base = ["gap-bound", "--config", c, "--override", "ratios=[0.1]", "--override", "ns=[10]", "--override", "beta=null"];
    let o = lmg(&base, dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut strict = base.to_vec();
    strict.extend(["--override", "require_bound=true"]);
    let o = lmg(&strict, dir.path());
    assert_eq!(code(&o), 3);
}
