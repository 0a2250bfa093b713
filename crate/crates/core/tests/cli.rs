use std::fs;
use std::process::{Command, Output};

fn fockline(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fockline")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn ideal_lists_every_readout() {
    let out = fockline(&["ideal", "--S", "4"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,e_n,qfi");
    assert_eq!(lines.len(), 6);
    assert!(lines[3].starts_with("2,1.5727659"));
    assert!(!text.contains('\r'));
}

#[test]
fn rates_report_the_headline_numbers() {
    let out = fockline(&["rates"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let value = |key: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(&format!("{key},"))).unwrap();
        line.split(',').nth(1).unwrap().parse().unwrap()
    };
    assert!((value("success_rate_hz") / 1.6e-2 - 1.0).abs() < 0.05);
    assert!((value("event_rate_S4_hz") / 0.76 - 1.0).abs() < 0.02);
    assert!(String::from_utf8_lossy(&out.stderr).contains("1.6 Hz"));
}

#[test]
fn malformed_values_are_rejected() {
    let out = fockline(&["sweep", "--idler-db", "10,abc"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("abc"));

    let out = fockline(&["sweep", "--idler-db", "-3"]);
    assert_eq!(out.status.code(), Some(1));

    let out = fockline(&["ideal", "--S", "4", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));

    assert_eq!(fockline(&["--help"]).status.code(), Some(0));
    assert_eq!(fockline(&["sweep", "--help"]).status.code(), Some(0));
}

#[test]
fn empty_readout_set_gives_header_only() {
    let out = fockline(&["sweep", "--idler-db", "10", "--k", ""]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "g,sigma,k,r_a2,r_b2,r_s,r_d,probability,e_n,source\n");
}

#[test]
fn sweep_row_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("row.csv");
    let out = fockline(&["sweep", "--idler-db", "10", "--k", "1", "-o", path.to_str().unwrap()]);
    assert!(out.status.success());
    let golden = include_str!("golden/sweep_k1_10db.csv");
    assert_eq!(fs::read_to_string(&path).unwrap(), golden);
}

#[test]
fn closed_and_full_modes_agree() {
    let full = stdout(&fockline(&["sweep", "--idler-db", "0,20", "--k", "all"]));
    let closed = stdout(&fockline(&["sweep", "--idler-db", "0,20", "--k", "all", "--mode", "closed"]));
    for (a, b) in full.lines().zip(closed.lines()).skip(1) {
        let a: Vec<&str> = a.split(',').collect();
        let b: Vec<&str> = b.split(',').collect();
        assert_eq!(a[..7], b[..7]);
        let (ea, eb): (f64, f64) = (a[8].parse().unwrap(), b[8].parse().unwrap());
        assert!((ea - eb).abs() < 1e-8);
    }
}

#[test]
fn fluctuation_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: Option<&str>| {
        let summary = dir.path().join(format!("{name}.csv"));
        let samples = dir.path().join(format!("{name}-samples.csv"));
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_fockline"));
        cmd.args(["fluctuate", "--samples", "40", "--seed", "7", "-o"])
            .arg(&summary)
            .arg("--samples-output")
            .arg(&samples);
        if let Some(t) = threads {
            cmd.env("FOCKLINE_THREADS", t);
        }
        assert!(cmd.status().unwrap().success());
        (fs::read(summary).unwrap(), fs::read(samples).unwrap())
    };
    let first = run("a", None);
    assert_eq!(first, run("b", None));
    assert_eq!(first, run("c", Some("1")));
    assert_eq!(String::from_utf8_lossy(&first.1).lines().count(), 1 + 40 * 3);
}
