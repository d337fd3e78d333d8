use std::path::Path;
use std::process::{Command, Output};

fn dcaim(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcaim")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn compare_writes_files_and_is_repeatable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["compare", "--frames", "15", "--seed", "5", "--set", "mac.cw_max=32"];
    let oa = dcaim(&args, a.path());
    let ob = dcaim(&args, b.path());
    assert!(oa.status.success(), "{}", String::from_utf8_lossy(&oa.stderr));
    assert!(ob.status.success());
    assert!(stdout(&oa).contains("mean SINR delta"));
    for f in ["energy.csv", "sinr.csv", "schedule.txt", "summary.txt", "effective_config.toml"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let cfg = std::fs::read_to_string(a.path().join("effective_config.toml")).unwrap();
    assert!(cfg.contains("cw_max = 32"));
    assert!(cfg.contains("seed = 5"));
}

#[test]
fn compare_single_scheme_with_traces() {
    let d = tempfile::tempdir().unwrap();
    let o = dcaim(&["compare", "--frames", "5", "--scheme", "single-hop", "--traces"], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = std::fs::read_to_string(d.path().join("trace_single-hop.csv")).unwrap();
    let header = trace.lines().next().unwrap();
    for col in ["frame", "slot", "tx_region", "tx_node", "rx_node", "sinr_db", "outcome"] {
        assert!(header.split(',').any(|c| c == col), "{col} missing from {header}");
    }
    assert!(!d.path().join("trace_dcaim.csv").exists());
}

#[test]
fn golden_passes() {
    let d = tempfile::tempdir().unwrap();
    let o = dcaim(&["golden"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("PASS IL1"));
    assert!(s.contains("NOTE stated IS1"));
    assert!(!s.contains("FAIL"));
    assert!(d.path().join("golden.txt").is_file());
}

#[test]
fn lemma1_reports_both_schemes() {
    let d = tempfile::tempdir().unwrap();
    let o = dcaim(&["lemma1", "--trials", "3000", "--set", "analysis.pilot_trials=3000"], d.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.path().join("lemma1.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("scheme,p_out,halfwidth,avg_reuse,reuse_halfwidth,n_trials,seed"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn schedule_prints_grid() {
    let d = tempfile::tempdir().unwrap();
    let o = dcaim(&["schedule"], d.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("slot 1"));
    assert!(d.path().join("schedule.csv").is_file());
}

#[test]
fn errors_exit_nonzero() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        &["compare", "--set", "mac.no_such_key=1"][..],
        &["compare", "--scenario", "/nonexistent/scenario.toml"],
        &["compare", "--set", "mac.cw_min=zero"],
        &["lemma1", "--trials", "0"],
    ] {
        let o = dcaim(args, d.path());
        assert!(!o.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"), "{args:?}");
    }
}

#[test]
fn unknown_scheme_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let o = dcaim(&["compare", "--scheme", "aloha"], d.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn scenario_file_round_trip() {
    let d = tempfile::tempdir().unwrap();
    let o = dcaim(&["schedule", "--set", "topology.radio.shadowing_sigma_db=0"], d.path());
    assert!(o.status.success());
    let cfg = d.path().join("effective_config.toml");
    let again = tempfile::tempdir().unwrap();
    let o2 = dcaim(&["schedule", "--scenario", cfg.to_str().unwrap()], again.path());
    assert!(o2.status.success(), "{}", String::from_utf8_lossy(&o2.stderr));
    assert_eq!(stdout(&o), stdout(&o2));
}
