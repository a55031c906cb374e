use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use platoon_cli::{parse_config, run};

fn platoon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_platoon"))
        .args(args)
        .env_remove("PLATOON_SEED")
        .output()
        .expect("spawn platoon")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn two_packet_feedback_pmf() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = platoon(&["--mode", "analytic", "--M", "2", "--m", "1", "--output", out]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(
        read(dir.path(), "pmf_M2_m1_feedback.csv"),
        "t,analytic_p,empirical_p,bound_p\n1,0.5,,\n2,0.5,,\n"
    );
    let summary = read(dir.path(), "summary.csv");
    let mut lines = summary.lines();
    assert_eq!(
        lines.next(),
        Some("M,m,scheme,analytic_mean,empirical_mean,stderr,bound,t_min,t_max")
    );
    assert_eq!(lines.next(), Some("2,1,feedback,1.5,,,,1,2"));
    assert!(lines.next().unwrap().starts_with("2,1,nc,"));
    let manifest = read(dir.path(), "manifest.txt");
    assert!(manifest.contains("seed = 42"));
    assert!(manifest.contains(&format!("version = {}", platoon_cli::VERSION)));
}

#[test]
fn every_csv_row_has_fixed_column_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = platoon(&[
        "--mode", "compare", "--M", "4:8:4", "--m", "1,2", "--trials", "300", "--output", out,
    ]);
    assert!(res.status.success());
    for entry in fs::read_dir(dir.path()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "csv") {
            let text = fs::read_to_string(&path).unwrap();
            let width = text.lines().next().unwrap().split(',').count();
            for line in text.lines() {
                assert_eq!(line.split(',').count(), width, "{}: {line}", path.display());
            }
        }
    }
    // 2 M values × 2 m values × 2 schemes, plus summary and manifest
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 10);
}

#[test]
fn identical_invocations_produce_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |out: &str, workers: &str| {
        vec![
            "--mode".to_string(), "compare".into(), "--M".into(), "10".into(), "--m".into(),
            "1,2".into(), "--trials".into(), "2000".into(), "--seed".into(), "9".into(),
            "--workers".into(), workers.into(), "--output".into(), out.into(),
        ]
    };
    let run_with = |dir: &Path, workers: &str| {
        let argv = args(dir.to_str().unwrap(), workers);
        let res = platoon(&argv.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(res.status.success());
    };
    run_with(a.path(), "1");
    run_with(b.path(), "4");
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for name in names {
        let name = name.to_str().unwrap();
        if name == "manifest.txt" {
            continue;
        }
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
}

#[test]
fn nc_beats_feedback_at_ten_packets() {
    let dir = tempfile::tempdir().unwrap();
    let argv = [
        "platoon", "--mode", "compare", "--M", "10", "--m", "1", "--q", "8", "--seed", "42",
        "--trials", "5000", "--output", dir.path().to_str().unwrap(),
    ];
    let report = run(&parse_config(argv, None).unwrap()).unwrap();
    let mean = |scheme: &str| {
        report
            .rows
            .iter()
            .find(|r| r.scheme == scheme)
            .and_then(|r| r.empirical_mean)
            .unwrap()
    };
    assert!(mean("nc") <= mean("feedback"), "{} vs {}", mean("nc"), mean("feedback"));
}

#[test]
fn compare_means_within_four_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let argv = [
        "platoon", "--mode", "compare", "--M", "5:20:5", "--m", "1,2,5", "--trials", "4000",
        "--output", dir.path().to_str().unwrap(),
    ];
    let report = run(&parse_config(argv, None).unwrap()).unwrap();
    assert_eq!(report.rows.len(), 24);
    for r in &report.rows {
        let (a, e, s) = (r.analytic_mean.unwrap(), r.empirical_mean.unwrap(), r.stderr.unwrap());
        // NC at large Q can be deterministic over a few thousand trials
        let tol = (4.0 * s).max(1e-3);
        assert!((a - e).abs() <= tol, "M={} m={} {}: {a} vs {e} ± {s}", r.total_packets, r.per_round, r.scheme);
    }
}

#[test]
fn feedback_mean_grows_with_total_packets() {
    let dir = tempfile::tempdir().unwrap();
    let argv = [
        "platoon", "--mode", "analytic", "--M", "10:100:10", "--m", "1,2,5", "--scheme",
        "feedback", "--output", dir.path().to_str().unwrap(),
    ];
    let report = run(&parse_config(argv, None).unwrap()).unwrap();
    for m in [1, 2, 5] {
        let means: Vec<f64> = report
            .rows
            .iter()
            .filter(|r| r.per_round == m)
            .map(|r| r.analytic_mean.unwrap())
            .collect();
        assert_eq!(means.len(), 10);
        assert!(means.windows(2).all(|w| w[0] <= w[1]), "m={m}: {means:?}");
    }
}

#[test]
fn rankprob_writes_exact_and_empirical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = platoon(&[
        "--mode", "rankprob", "--t", "4", "--n", "4", "--q", "1", "--trials", "20000", "--output", out,
    ]);
    assert!(res.status.success());
    let csv = read(dir.path(), "rankprob.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,n,q,exact_p,empirical_p,stderr"));
    let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&fields[..4], ["4", "4", "1", "0.3076171875"]);
    let empirical: f64 = fields[4].parse().unwrap();
    assert!((empirical - 0.3076171875).abs() < 0.02);
}

#[test]
fn oracle_report_in_analytic_mode() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = platoon(&["--mode", "analytic", "--M", "6", "--m", "1,2", "--oracle", "--output", out]);
    assert!(res.status.success());
    let csv = read(dir.path(), "oracle.csv");
    assert_eq!(csv.lines().count(), 3);
    for line in csv.lines().skip(1) {
        let dev: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(dev < 1e-9, "{line}");
    }
}

#[test]
fn exit_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let res = platoon(&["--mode", "analytic", "--M", "3", "--m", "0"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("m must be ≥ 1"));

    let res = platoon(&["--mode", "analytic", "--M", "3"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains('m'));

    let res = platoon(&["--bogus"]);
    assert_eq!(res.status.code(), Some(2));

    let res = platoon(&["--help"]);
    assert_eq!(res.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&res.stdout).contains("start:stop:step"));

    // a regular file where the output directory should be
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let res = platoon(&[
        "--mode", "analytic", "--M", "2", "--m", "1", "--output", blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(1));

    let res = platoon(&["--mode", "analytic", "--M", "200", "--m", "5", "--oracle", "--output", out]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("oracle"));
}

#[test]
fn seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = Command::new(env!("CARGO_BIN_EXE_platoon"))
        .args(["--mode", "simulate", "--M", "4", "--m", "1", "--trials", "10", "--output", out])
        .env("PLATOON_SEED", "1234")
        .output()
        .unwrap();
    assert!(res.status.success());
    assert!(read(dir.path(), "manifest.txt").contains("seed = 1234"));
}
