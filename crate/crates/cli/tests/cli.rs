use std::path::Path;
use std::process::{Command, Output};

use permlab::sweep::Summary;

fn permlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_permlab"))
        .args(args)
        .env("PERMLAB_OUT", out)
        .output()
        .expect("binary runs")
}

const CONFIG: &str = r#"{
  "instance": {"kind": "mean_computation", "n": 40, "d": 5, "seed": 1},
  "algos": ["igd", "ss", "rr", "ff-igd", "ff-ss", "ff-rr"],
  "K_grid": [4, 8, 16, 32],
  "repeats": 3,
  "seed": 9,
  "step_rule": {"rule": "log_regime", "scale": 1.5}
}"#;

#[test]
fn run_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, CONFIG).unwrap();
    let mut csvs = Vec::new();
    for tag in ["a", "b"] {
        let out = dir.path().join(tag);
        let o = permlab(&["run", "--config", cfg.to_str().unwrap()], &out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        csvs.push(std::fs::read(out.join("sweep.csv")).unwrap());
        for f in ["summary.json", "summary.dat", "plot.gp"] {
            assert!(out.join(f).exists());
        }
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn summary_medians_match_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, CONFIG).unwrap();
    let out = dir.path().join("o");
    assert!(permlab(&["run", "--config", cfg.to_str().unwrap()], &out)
        .status
        .success());
    let summary: Summary =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let mut reader = csv::Reader::from_path(out.join("sweep.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    for cell in &summary.cells {
        let mut finals: Vec<f64> = rows
            .iter()
            .filter(|r| {
                r[1] == cell.algo
                    && r[5].parse::<usize>().unwrap() == cell.k
                    && r[8].parse::<usize>().unwrap() == cell.k
            })
            .map(|r| r[9].parse::<f64>().unwrap())
            .collect();
        finals.sort_by(f64::total_cmp);
        assert_eq!(finals.len(), 3);
        assert_eq!(finals[1], cell.median);
    }
    assert_eq!(summary.fits.len(), 6);
}

#[test]
fn two_epoch_quadratic_has_two_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"instance": {"kind": "quadratic", "n": 2, "d": 1, "A": [[[1.0]], [[1.0]]], "b": [[-1.0], [1.0]]},
            "algos": ["igd"], "K_grid": [2], "step_rule": {"rule": "explicit", "alpha": 0.1}}"#,
    )
    .unwrap();
    let out = dir.path().join("o");
    assert!(permlab(&["run", "--config", cfg.to_str().unwrap()], &out)
        .status
        .success());
    let text = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("run_id,algo,flipflop,n,d,K,seed,alpha,epoch,sq_error,diverged"));
    // one epoch from 0 reaches 0.01; the second epoch maps it to 0.81·0.01 + 0.01
    let second: f64 = lines[2].split(',').nth(9).unwrap().parse().unwrap();
    assert!((second - 0.0181f64.powi(2)).abs() < 1e-15);
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = permlab(&["verify", "--lemma", "amgm", "--trials", "50"], dir.path());
    assert_eq!(ok.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(report["status"], "pass");

    let unmet = permlab(
        &[
            "verify", "--lemma", "amgm", "--trials", "50", "--alpha", "0.5",
        ],
        dir.path(),
    );
    assert_eq!(unmet.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&unmet.stdout).contains("hypothesis_unmet"));
}

#[test]
fn oversized_search_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let o = permlab(
        &[
            "search",
            "--mode",
            "exhaustive",
            "--instance",
            "lb-f1",
            "--n",
            "6",
            "--epochs",
            "4",
            "--alpha",
            "0.1",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("\"refused\":true"));
}

#[test]
fn exhaustive_search_prints_one_based_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let o = permlab(
        &[
            "search",
            "--mode",
            "exhaustive",
            "--instance",
            "nonconvex-pair",
            "--epochs",
            "4",
            "--alpha",
            "0.25",
            "--x0",
            "1",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let seq = v["result"]["sequence"].as_array().unwrap();
    assert_eq!(seq.len(), 4);
    for p in seq {
        let mut entries: Vec<u64> = p
            .as_array()
            .unwrap()
            .iter()
            .map(|e| e.as_u64().unwrap())
            .collect();
        entries.sort();
        assert_eq!(entries, vec![1, 2]);
    }
}
