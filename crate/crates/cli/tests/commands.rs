use std::process::{Command, Output};

use tte_stab::cct::parse_absolute_csv;
use tte_stab::network::CaseData;

fn tte(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tte-stab"))
        .args(args)
        .env_remove("TTE_STAB_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().to_string()).collect()
}

#[test]
fn uep_values() {
    let o = tte(&["smib", "uep", "--delta-s", "0.5236", "--orders", "2,3"]);
    assert!(o.status.success());
    let ueps: Vec<f64> = column(&stdout(&o), "uep").iter().map(|v| v.parse().unwrap()).collect();
    assert!((ueps[0] - 3.98769).abs() < 2e-5, "{ueps:?}");
    assert!((ueps[1] - 2.25562).abs() < 5e-5, "{ueps:?}");
}

#[test]
fn thresholds() {
    let o = tte(&["smib", "thresholds"]);
    assert!(o.status.success());
    let t: Vec<f64> = column(&stdout(&o), "delta_s_threshold")
        .iter()
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((t[0] - 0.401).abs() < 1e-3 && (t[1] - 0.233).abs() < 1e-3, "{t:?}");
}

#[test]
fn claims_clean() {
    let o = tte(&["smib", "claims", "--step", "0.001"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["ordering_violations"].as_array().unwrap().len(), 0);
    assert_eq!(v["order2_not_above_violations"], 0);
}

#[test]
fn late_clearing_unstable() {
    let o = tte(&["mm", "simulate", "--cont", "1", "--order", "original", "--t-clear", "0.5", "--stride", "500"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unstable"));
    assert!(stdout(&o).starts_with("t,delta_1,delta_2,delta_3,omega_1"));
}

#[test]
fn validation_exit_codes() {
    assert_eq!(tte(&["smib", "uep", "--orders", "2"]).status.code(), Some(1));
    assert_eq!(tte(&["--bogus"]).status.code(), Some(1));
    assert_eq!(tte(&["mm", "simulate", "--cont", "77", "--t-clear", "0.1"]).status.code(), Some(1));
    assert_eq!(tte(&["smib", "uep", "--delta-s", "0.5", "--orders", "0"]).status.code(), Some(1));
    assert_eq!(tte(&["--help"]).status.code(), Some(0));
}

#[test]
fn expand_dump() {
    let o = tte(&["mm", "expand", "--order", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("pair_i,pair_j,k,e_k\n"));
    // 3 machines, 6 ordered pairs, 4 coefficients each
    assert_eq!(text.lines().count(), 1 + 6 * 4);
}

#[test]
fn cct_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = tte(&["--out", out, "mm", "cct", "--orders", "3", "--compare-tables"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let compare = std::fs::read_to_string(dir.path().join("cct_compare.csv")).unwrap();
    assert!(compare.starts_with("id,base_fault_bus"));
    assert_eq!(compare.lines().count(), 13);

    let abs = std::fs::read_to_string(dir.path().join("cct_base_absolute.csv")).unwrap();
    let rows = parse_absolute_csv(&abs).unwrap();
    assert_eq!(rows.len(), 12);
    assert!((rows[0].1[0] - 0.3293).abs() < 1e-3, "{:?}", rows[0]);

    let json = std::fs::read_to_string(dir.path().join("case_redispatch.json")).unwrap();
    let case = CaseData::from_json(&json).unwrap();
    assert_eq!(case, CaseData::from_json(&case.to_json()).unwrap());
    assert!((case.machines[1].p_m - 2.0).abs() < 1e-12);
}
