use std::process::{Command, Output};

fn sp2q(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sp2q")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = sp2q(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn state_prints_amplitudes_and_label() {
    let text = stdout(&["state", "--hwp", "22.5", "--phi", "0"]);
    assert!(text.starts_with("aH +0.707106781187"), "{text}");
    assert!(text.ends_with("label PsiPlus\n"));
    assert!(stdout(&["state", "--hwp", "0"]).ends_with("label a,H\n"));
    assert!(stdout(&["state", "--hwp", "22.5", "--phi", "1.0"]).ends_with("label -\n"));
    let json: serde_json::Value = serde_json::from_str(&stdout(&["state", "--flip-a", "--json"])).unwrap();
    assert_eq!(json["result"]["label"], "S,V");
}

#[test]
fn ideal_confusion_is_diagonal() {
    let text = stdout(&["confusion", "--trials", "1000", "--seed", "1"]);
    assert_eq!(text.lines().next().unwrap(), "prepared,portΨ+,portΨ\u{2212},portΦ+,portΦ\u{2212},none");
    for (i, row) in csv_rows(&text).iter().enumerate() {
        for port in 0..4 {
            let want = if port == i { "1000" } else { "0" };
            assert_eq!(row[port + 1], want, "{row:?}");
        }
        assert_eq!(row[5], "0");
    }
}

#[test]
fn pi_offset_swaps_psi_rows() {
    let rows = csv_rows(&stdout(&["confusion", "--trials", "500", "--phase-offset", "3.14159265"]));
    assert_eq!(rows[0][..5], ["PsiPlus", "0", "500", "0", "0"]);
    assert_eq!(rows[1][..5], ["PsiMinus", "500", "0", "0", "0"]);
}

#[test]
fn qkd_reports() {
    let ideal: serde_json::Value = serde_json::from_str(&stdout(&["qkd", "--photons", "5000", "--seed", "2"])).unwrap();
    assert_eq!(ideal["result"]["qber"], 0.0);
    assert_eq!(ideal["result"]["bits_per_sifted_photon"], 2);
    let eve: serde_json::Value =
        serde_json::from_str(&stdout(&["qkd", "--photons", "100000", "--seed", "2", "--eve"])).unwrap();
    let qber = eve["result"]["qber"].as_f64().unwrap();
    // per-symbol error variance 1/2 under intercept-resend
    let sifted = eve["result"]["sifted"].as_f64().unwrap();
    assert!((qber - 0.25).abs() < 4.0 * (0.5 / sifted).sqrt() / 2.0, "{qber}");
    assert_eq!(eve["result"]["bits_per_sifted_photon"], 2);
}

#[test]
fn qkd_trace_file() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let report = dir.path().join("report.json");
    stdout(&[
        "qkd",
        "--photons",
        "100",
        "--eve",
        "--trace",
        trace.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().count(), 101);
    assert!(std::fs::read_to_string(&report).unwrap().contains("\"sifted\""));
}

#[test]
fn sweep_grids() {
    let rows = csv_rows(&stdout(&["sweep", "--phi-grid", "0,pi/2,pi", "--trials", "2000"]));
    assert_eq!(rows.len(), 3);
    let analytic: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!((analytic[0] - 1.0).abs() < 1e-12 && (analytic[1] - 0.5).abs() < 1e-12 && analytic[2].abs() < 1e-12);

    let rows = csv_rows(&stdout(&["sweep", "--sigma-grid", "0,0.2,0.5,1,2", "--trials", "2000"]));
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0][2], "0");
}

#[test]
fn bad_flags_fail_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never.csv");
    let out_s = out.to_str().unwrap();
    for args in [
        vec!["confusion", "--trials", "abc", "--out", out_s],
        vec!["confusion", "--trials", "0", "--out", out_s],
        vec!["confusion", "--eta", "1.5", "--out", out_s],
        vec!["confusion", "--phase-sigma", "-0.5", "--out", out_s],
        vec!["sweep", "--phi-grid", ",", "--out", out_s],
        vec!["sweep", "--out", out_s],
        vec!["qkd", "--photons", "10", "--threads", "0", "--out", out_s],
        vec!["state", "--hwp", "nope"],
    ] {
        let o = sp2q(&args);
        assert!(!o.status.success(), "{args:?} should fail");
        assert!(o.stdout.is_empty(), "{args:?} printed output");
        assert!(!out.exists(), "{args:?} created a file");
    }
}
