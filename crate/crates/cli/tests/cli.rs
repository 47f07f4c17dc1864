use std::process::Command;

use serde_json::Value;

use kisin_cli::config::{ExperimentConfig, Generator, Mode};
use kisin_cli::records::{EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK, EXIT_VIOLATION};

fn kisin(args: &[&str]) -> (i32, Vec<Value>) {
    let out = Command::new(env!("CARGO_BIN_EXE_kisin")).args(args).output().expect("binary runs");
    let text = String::from_utf8(out.stdout).unwrap();
    let lines = text.lines().map(|l| serde_json::from_str(l).expect("every line is json")).collect();
    (out.status.code().unwrap(), lines)
}

fn with_config(mode: &str, toml: &str, extra: &[&str]) -> (i32, Vec<Value>) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, toml).unwrap();
    let mut args = vec![mode, "--config", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    kisin(&args)
}

fn keys(v: &Value) -> Vec<&str> {
    v.as_object().unwrap().keys().map(String::as_str).collect()
}

fn summary(lines: &[Value]) -> &Value {
    let last = lines.last().expect("summary line");
    assert_eq!(last["kind"], "summary");
    last
}

#[test]
fn config_round_trip() {
    let cfgs = [
        ExperimentConfig::default(),
        ExperimentConfig {
            mode: Mode::Tower,
            generator: Generator::Random,
            p: 5,
            f: 2,
            g: 4,
            e: 3,
            d: 2,
            depth: 4,
            seed: 17,
            transfer_slack: Some(2),
            fault_ops: Some(1),
            ..Default::default()
        },
        ExperimentConfig { exponents: Some(vec![0, 2]), d: 2, ..Default::default() },
    ];
    for c in cfgs {
        let text = c.to_toml();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml(), text);
    }
    assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
    assert!(ExperimentConfig::from_toml("p = 4").unwrap().validate().is_err());
}

#[test]
fn validation_rejects_bad_parameters() {
    let bad = [
        "p = 9",
        "f = 2\ng = 3",
        "d = 0",
        "d = 2\nexponents = [1]",
        "generator = \"random\"\nexponents = [1]",
        "precision = 2",
        "ceiling = 0",
        "fault_ops = 7",
        "n = 40",
    ];
    for t in bad {
        let c = ExperimentConfig::from_toml(t).unwrap();
        assert!(c.validate().is_err(), "{t}");
    }
    assert!(ExperimentConfig::default().validate().is_ok());
}

#[test]
fn closed_form_example() {
    let (code, lines) = with_config("enumerate", "p = 3\nf = 1\ne = 4\nd = 1\nn = 0\ncount = 1\nexponents = [0]\n", &[]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["kind"], "enumerate");
    assert_eq!(lines[0]["model_count"], 3);
    assert_eq!(lines[0]["planted_found"], true);
    assert_eq!(lines[0]["certificates_ok"], true);
}

#[test]
fn empty_run() {
    let (code, lines) = kisin(&["enumerate", "--count", "0"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(lines.len(), 1);
    assert_eq!(summary(&lines)["instances"], 0);
}

#[test]
fn infeasible_is_skipped() {
    let (code, lines) = with_config("enumerate", "e = 4\nd = 2\nn = 1\ncount = 3\nceiling = 1\n", &[]);
    assert_eq!(code, EXIT_INFEASIBLE);
    assert_eq!(lines.len(), 4);
    for l in &lines[..3] {
        assert_eq!(l["status"], "skipped");
        assert!(l["reason"].as_str().unwrap().contains("ceiling"));
    }
    assert_eq!(summary(&lines)["skipped"], 3);
}

#[test]
fn config_errors_exit_3() {
    let (code, lines) = kisin(&["enumerate", "--p", "6"]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(lines.is_empty());
    let (code, _) = with_config("enumerate", "nonsense = true\n", &[]);
    assert_eq!(code, EXIT_CONFIG);
    let (code, _) = kisin(&["enumerate", "--config", "/nonexistent/run.toml"]);
    assert_eq!(code, EXIT_CONFIG);
}

#[test]
fn flags_override_config() {
    let (_, lines) = with_config("enumerate", "e = 4\ncount = 5\n", &["--e", "2", "--count", "2"]);
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0]["params"]["e"], 2);
}

#[test]
fn deterministic_streams() {
    for mode in ["enumerate", "tower", "oracle-check"] {
        let args = [mode, "--e", "3", "--d", "2", "--n", "1", "--depth", "2", "--seed", "11", "--count", "4"];
        let a = Command::new(env!("CARGO_BIN_EXE_kisin")).args(args).output().unwrap();
        let b = Command::new(env!("CARGO_BIN_EXE_kisin")).args(args).output().unwrap();
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{mode}");
    }
    let (_, x) = kisin(&["enumerate", "--seed", "1", "--count", "6", "--e", "3"]);
    let (_, y) = kisin(&["enumerate", "--seed", "2", "--count", "6", "--e", "3"]);
    assert_ne!(x, y);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.jsonl");
    let (code, lines) = kisin(&["enumerate", "--count", "2", "--out", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(lines.is_empty());
    assert_eq!(std::fs::read_to_string(path).unwrap().lines().count(), 3);
}

#[test]
fn planted_towers_pass() {
    let (code, lines) = kisin(&["tower", "--e", "2", "--d", "2", "--depth", "4", "--count", "6"]);
    assert_eq!(code, EXIT_OK);
    for l in &lines[..6] {
        assert_eq!(l["status"], "ok");
        assert_eq!(l["chosen"].as_array().unwrap().len(), 5);
        assert!(l["stabilization"].as_array().unwrap().len() >= 2);
        assert_eq!(l["assembled_ok"], true);
        assert_eq!(l["transfer_uniform"], true);
    }
}

#[test]
fn depth_zero_tower_matches_enumerate() {
    let (_, t) = kisin(&["tower", "--depth", "0", "--e", "4", "--count", "4", "--seed", "3"]);
    let (_, e) = kisin(&["enumerate", "--n", "0", "--e", "4", "--count", "4", "--seed", "3"]);
    for i in 0..4 {
        assert_eq!(t[i]["levels"][0]["model_count"], e[i]["model_count"]);
        assert_eq!(t[i]["levels"][0]["free_count"], e[i]["free_count"]);
        assert_eq!(t[i]["status"], "ok");
    }
}

#[test]
fn oracle_rank_one_grid() {
    for p in [3u32, 5] {
        for e in 0..=2 * (p - 1) {
            for a in 0..=e {
                let toml = format!("p = {p}\ne = {e}\nexponents = [{a}]\n");
                let (code, lines) = with_config("oracle-check", &toml, &[]);
                assert_eq!(code, EXIT_OK, "p={p} e={e} a={a}");
                assert_eq!(lines[0]["equal"], true);
            }
        }
    }
}

#[test]
fn oracle_rank_two_tiny_window() {
    let (code, lines) = kisin(&["oracle-check", "--d", "2", "--n", "0", "--e", "2", "--count", "10"]);
    assert_eq!(code, EXIT_OK);
    let checked = lines.iter().filter(|l| l["status"] == "ok").count();
    assert!(checked >= 5);
    assert!(lines.iter().filter(|l| l["status"] == "ok").all(|l| l["equal"] == true));
}

#[test]
fn fault_injection_is_caught() {
    let (code, lines) = with_config("oracle-check", "e = 3\nn = 1\ncount = 3\nfault_ops = 1\n", &[]);
    assert_eq!(code, EXIT_VIOLATION);
    let bad: Vec<_> = lines.iter().filter(|l| l["status"] == "violation").collect();
    assert!(!bad.is_empty());
    for l in bad {
        assert_eq!(l["equal"], false);
        assert!(l["counterexample"].is_object());
    }
}

#[test]
fn records_follow_schema() {
    let schema: [(&str, &[&str]); 4] = [
        ("enumerate", &["kind", "instance", "status", "reason", "params", "window", "quotient_dim", "model_count", "free_count", "torsion_histogram", "max_torsion", "torsion_bound", "max_j", "certificates_ok", "planted_found", "widened_equal", "counterexample"]),
        ("tower", &["kind", "instance", "status", "reason", "params", "depth", "levels", "image_sizes", "planted_found", "chosen", "chosen_free", "stabilization", "splitting", "assembled", "assembled_ok", "failing_factor", "transfer_s", "transfer_slack", "transfer_uniform", "counterexample"]),
        ("oracle", &["kind", "instance", "status", "reason", "params", "fault_ops", "quotient_dim", "fast_count", "oracle_count", "equal", "counterexample"]),
        ("summary", &["kind", "mode", "instances", "ok", "skipped", "no_model", "violations", "exit_code"]),
    ];
    let statuses = ["ok", "skipped", "no_model", "violation"];
    for mode in ["enumerate", "tower", "oracle-check"] {
        let (_, lines) = kisin(&[mode, "--random", "--d", "2", "--e", "2", "--n", "1", "--depth", "1", "--count", "5"]);
        assert_eq!(lines.len(), 6);
        for l in &lines {
            let kind = l["kind"].as_str().unwrap();
            let (_, fields) = schema.iter().find(|(k, _)| *k == kind).expect("known kind");
            assert_eq!(keys(l).len(), fields.len(), "{kind}");
            for f in *fields {
                assert!(l.get(*f).is_some(), "{kind} lacks {f}");
            }
            if kind != "summary" {
                assert!(statuses.contains(&l["status"].as_str().unwrap()));
                for p in ["p", "f", "g", "d", "n", "e", "exponents"] {
                    assert!(l["params"].get(p).is_some());
                }
            }
        }
        let s = summary(&lines);
        let total = ["ok", "skipped", "no_model", "violations"].iter().map(|k| s[*k].as_u64().unwrap()).sum::<u64>();
        assert_eq!(total, s["instances"].as_u64().unwrap());
    }
}
