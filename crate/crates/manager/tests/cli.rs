mod common;

use std::process::Command;

use common::topology;
use marf_manager::stats::read_csv;
use marf_pipeline::TopologyConfig;

fn marfman(target: std::net::SocketAddr, args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_marfman"))
        .arg("--target")
        .arg(target.to_string())
        .args(args)
        .env_remove("MARFMAN_MIB_DIR")
        .output()
        .unwrap();
    (out.status.success(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn get_set_walk_and_table() {
    let t = topology(TopologyConfig::default());
    let m = t.master_addr();
    let (ok, out, _) = marfman(m, &["get", "serviceName.1", "1.3.6.1.4.1.28218.3.1.1.4.2"]);
    assert!(ok);
    assert_eq!(out, "serviceName.1 = STRING: \"sample-loading\"\nserviceStatus.2 = INTEGER: up(1)\n");

    let (ok, out, _) = marfman(m, &["set", "iPoles.3=12", "iWindowLen.3=i:512"]);
    assert!(ok);
    assert_eq!(out, "iPoles.3 = INTEGER: 12\niWindowLen.3 = INTEGER: 512\n");
    let (ok, _, err) = marfman(m, &["--write-community", "public", "set", "iPoles.3=4"]);
    assert!(!ok);
    assert!(err.contains("noAccess"), "{err}");

    let (ok, out, _) = marfman(m, &["walk", "serviceTable"]);
    assert!(ok);
    assert_eq!(out.lines().count(), 35);

    let (ok, out, _) = marfman(m, &["table", "lpcServiceTable"]);
    assert!(ok);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    let cells: Vec<&str> = lines[1].split_whitespace().collect();
    // index, inherited serviceTable columns, then own columns last
    assert_eq!(&cells[..5], ["3", "3", "feature-extraction", "5", "1"]);
    assert_eq!(&cells[cells.len() - 2..], ["12", "512"]);
}

#[test]
fn poll_writes_csv() {
    let t = topology(TopologyConfig::default());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let (ok, _, err) = marfman(
        t.agent_addr(1),
        &["poll", "serviceInRequests.1", "--interval-ms", "100", "--duration-s", "0", "--csv", path.to_str().unwrap()],
    );
    assert!(ok, "{err}");
    let series = read_csv(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(series.len(), 1);
    assert_eq!(series[0].oid_name, "serviceInRequests.1");
    assert_eq!(series[0].samples[0].value, Some(0));
}

#[test]
fn bad_input_fails_cleanly() {
    let t = topology(TopologyConfig::default());
    let (ok, _, err) = marfman(t.master_addr(), &["get", "noSuchThing.1"]);
    assert!(!ok && err.starts_with("marfman: "), "{err}");
    let (ok, _, err) = marfman(t.master_addr(), &["poll", "serviceInRequests.1", "--interval-ms", "10"]);
    assert!(!ok && err.contains("at least 100 ms"), "{err}");
}
