use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use memcrs::cli::{run, EXIT_IO, EXIT_LEAK, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION};

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

fn memcrs(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("memcrs").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn tmp(dir: &tempfile::TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

#[test]
fn gate_sim_nor_rows() {
    let (code, out, _) = memcrs(&["gate-sim", "--gate", "NOR"]);
    assert_eq!(code, EXIT_OK);
    let rows: Vec<Vec<&str>> = out
        .lines()
        .skip(2)
        .map(|l| l.split_whitespace().collect())
        .collect();
    assert_eq!(rows.len(), 4);
    let marks: Vec<(&str, &str, &str)> = rows.iter().map(|r| (r[3], r[6], r[7])).collect();
    assert_eq!(
        marks,
        [("C", "Y", "1"), ("A", "W", "0"), ("A", "W", "0"), ("B", "W", "0")]
    );
}

#[test]
fn gate_sim_unknown_gate() {
    let (code, _, err) = memcrs(&["gate-sim", "--gate", "FOO"]);
    assert_eq!(code, EXIT_VALIDATION);
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn groups_json_lists_balanced_catalog() {
    let (code, out, _) = memcrs(&["groups", "--json"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let entries = v.as_array().unwrap();
    assert_eq!(entries.len(), 14);
    assert!(entries.iter().all(|e| e["balanced"] == true));
    let (code, text, _) = memcrs(&["groups"]);
    assert_eq!(code, EXIT_OK);
    assert!(text.contains("HG4X"));
}

#[test]
fn netlist_check_mux() {
    let (code, out, _) = memcrs(&["netlist-check", &fixture("mux.mnl")]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("levels 2 max width 2"));
    assert!(out.contains("cells without hiding 3 with hiding 9"));
    assert!(out.contains("level 1: AND1 AND2"));
}

#[test]
fn netlist_check_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = tmp(&dir, "bad.mnl");
    fs::write(&bad, "inputs a b\noutputs y\ngate U1 NOR a c -> y\n").unwrap();
    let (code, _, err) = memcrs(&["netlist-check", &bad]);
    assert_eq!(code, EXIT_VALIDATION);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn synth_writes_equivalent_netlist() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "fa.mnl");
    let (code, _, err) = memcrs(&["synth", "--table", &fixture("full_adder.tt"), "-o", &out]);
    assert_eq!(code, EXIT_OK, "{err}");
    let n = memcrs::parse_mnl(&fs::read_to_string(&out).unwrap()).unwrap();
    for row in 0..8usize {
        let bits: Vec<bool> = (0..3).map(|j| row >> (2 - j) & 1 == 1).collect();
        let ones = row.count_ones();
        assert_eq!(
            memcrs::eval_netlist(&n, &bits).unwrap(),
            vec![ones % 2 == 1, ones >= 2]
        );
    }
}

#[test]
fn sbox_build_matches_checked_in_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let a = tmp(&dir, "a.mnl");
    let b = tmp(&dir, "b.mnl");
    assert_eq!(memcrs(&["sbox-build", "-o", &a]).0, EXIT_OK);
    assert_eq!(
        memcrs(&["sbox-build", "--sbox", &fixture("small_aes_sbox.txt"), "-o", &b]).0,
        EXIT_OK
    );
    let fixture_text = fs::read_to_string(fixture("xor4sbox.mnl")).unwrap();
    assert_eq!(fs::read_to_string(&a).unwrap(), fixture_text);
    assert_eq!(fs::read_to_string(&b).unwrap(), fixture_text);
}

#[test]
fn sbox_build_rejects_malformed_table() {
    let dir = tempfile::tempdir().unwrap();
    let bad = tmp(&dir, "bad.txt");
    fs::write(&bad, "0 1 2 3 4 5 6 7 8 9 A B C D G\n").unwrap();
    let (code, _, _) = memcrs(&["sbox-build", "--sbox", &bad, "-o", &tmp(&dir, "x.mnl")]);
    assert_eq!(code, EXIT_VALIDATION);
}

#[test]
fn run_writes_trace_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "t.csv");
    let (code, stdout, _) = memcrs(&[
        "run",
        "--netlist",
        &fixture("mux.mnl"),
        "--inputs",
        "101",
        "-o",
        &out,
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(stdout.contains("Y=0"));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("t_ms,power_w\n"));
    assert_eq!(csv.lines().count(), 601);

    let (code, _, _) = memcrs(&[
        "run",
        "--netlist",
        &fixture("mux.mnl"),
        "--inputs",
        "101",
        "--no-init",
        "-o",
        &out,
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 401);
}

#[test]
fn run_is_reproducible_with_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (tmp(&dir, "a.csv"), tmp(&dir, "b.csv"));
    for out in [&a, &b] {
        let args = [
            "run",
            "--netlist",
            &fixture("mux.mnl"),
            "--inputs",
            "011",
            "--hiding",
            "--c2c",
            "0.3",
            "--seed",
            "9",
            "-o",
            out,
        ];
        assert_eq!(memcrs(&args).0, EXIT_OK);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn run_error_classes() {
    let dir = tempfile::tempdir().unwrap();
    let out = tmp(&dir, "t.csv");
    let (code, _, err) = memcrs(&[
        "run",
        "--netlist",
        "/nonexistent/x.mnl",
        "--inputs",
        "0",
        "-o",
        &out,
    ]);
    assert_eq!(code, EXIT_IO);
    assert_eq!(err.lines().count(), 1);
    let (code, _, _) = memcrs(&[
        "run",
        "--netlist",
        &fixture("mux.mnl"),
        "--inputs",
        "01",
        "-o",
        &out,
    ]);
    assert_eq!(code, EXIT_VALIDATION);
    let (code, _, _) = memcrs(&[
        "run",
        "--netlist",
        &fixture("mux.mnl"),
        "--inputs",
        "011",
        "--c2c=-1",
        "-o",
        &out,
    ]);
    assert_eq!(code, EXIT_VALIDATION);
    let (code, _, _) = memcrs(&["run", "--netlist", &fixture("mux.mnl")]);
    assert_eq!(code, EXIT_USAGE);
    assert_eq!(memcrs(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(memcrs(&["--help"]).0, EXIT_OK);
}

#[test]
fn device_config_is_applied() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tmp(&dir, "dev.json");
    fs::write(&cfg, r#"{"t_cycle": 50.0}"#).unwrap();
    let out = tmp(&dir, "t.csv");
    let args = [
        "--device-config",
        &cfg,
        "run",
        "--netlist",
        &fixture("mux.mnl"),
        "--inputs",
        "011",
        "-o",
        &out,
    ];
    assert_eq!(memcrs(&args).0, EXIT_OK);
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 301);

    fs::write(&cfg, r#"{"bogus": 1}"#).unwrap();
    assert_eq!(memcrs(&args).0, EXIT_VALIDATION);
    let missing = tmp(&dir, "none.json");
    let args = ["--device-config", &missing, "groups"];
    assert_eq!(memcrs(&args).0, EXIT_IO);
}

fn campaign(dir: &Path, hiding: bool) -> PathBuf {
    let out = dir.join(if hiding { "hidden" } else { "plain" });
    let out_s = out.display().to_string();
    let net = fixture("xor4sbox.mnl");
    let mut args = vec![
        "campaign",
        "--netlist",
        &net,
        "--key",
        "0",
        "--n",
        "64",
        "--c2c",
        "0.1",
        "--seed",
        "1",
        "-o",
        &out_s,
    ];
    if hiding {
        args.push("--hiding");
    }
    let (code, stdout, err) = memcrs(&args);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(stdout.contains("64 traces"));
    out
}

#[test]
fn campaign_then_ttest() {
    let dir = tempfile::tempdir().unwrap();
    let hidden = campaign(dir.path(), true);
    let ts = tmp(&dir, "ts.csv");
    let verdict = tmp(&dir, "verdict.json");
    let (code, out, _) = memcrs(&[
        "ttest",
        "--dir",
        &hidden.display().to_string(),
        "-o",
        &ts,
        "--verdict",
        &verdict,
        "--fail-on-leak",
    ]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["leaky"], false);
    assert!(v["undefined_samples"].as_u64().unwrap() > 0);
    assert_eq!(fs::read_to_string(&verdict).unwrap().trim(), out.trim());
    let csv = fs::read_to_string(&ts).unwrap();
    assert!(csv.starts_with("sample,t,defined\n"));
    assert!(csv.lines().skip(1).any(|l| l.ends_with(",0")));

    let plain = campaign(dir.path(), false);
    let plain_s = plain.display().to_string();
    let (code, out, _) = memcrs(&["ttest", "--dir", &plain_s, "-o", &ts]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("\"leaky\": true"));
    let (code, _, _) = memcrs(&["ttest", "--dir", &plain_s, "-o", &ts, "--fail-on-leak"]);
    assert_eq!(code, EXIT_LEAK);
    let (code, _, _) = memcrs(&["ttest", "--dir", &plain_s, "-o", &ts, "--threshold", "0"]);
    assert_eq!(code, EXIT_VALIDATION);
}

#[test]
fn ttest_error_classes() {
    let dir = tempfile::tempdir().unwrap();
    let ts = tmp(&dir, "ts.csv");
    let (code, _, err) = memcrs(&["ttest", "--dir", &tmp(&dir, "nothing"), "-o", &ts]);
    assert_eq!(code, EXIT_IO);
    assert!(err.contains("manifest.json"));
    let c = campaign(dir.path(), true);
    fs::write(c.join("trace_00003.csv"), "t_ms,power_w\n0,x\n").unwrap();
    let (code, _, _) = memcrs(&["ttest", "--dir", &c.display().to_string(), "-o", &ts]);
    assert_eq!(code, EXIT_VALIDATION);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_memcrs");
    let ok = Command::new(bin)
        .args(["gate-sim", "--gate", "XOR"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("XOR"));
    let missing = Command::new(bin)
        .args(["netlist-check", "/nonexistent/file.mnl"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(EXIT_IO));
    let usage = Command::new(bin).arg("nope").output().unwrap();
    assert_eq!(usage.status.code(), Some(EXIT_USAGE));
}

#[test]
fn partial_resistance_config_keeps_other_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tmp(&dir, "dev.json");
    fs::write(&cfg, r#"{"nominal": {"r_pl": 2e6}}"#).unwrap();
    assert_eq!(memcrs(&["--device-config", &cfg, "groups"]).0, EXIT_OK);
    fs::write(&cfg, r#"{"nominal": {"r_pl": 2e8}}"#).unwrap();
    assert_eq!(memcrs(&["--device-config", &cfg, "groups"]).0, EXIT_VALIDATION);
}
