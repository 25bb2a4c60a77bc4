//! End-to-end behavior of the `kinedict` binary: exit classes, provenance
//! stamping, config-file precedence, determinism, and path resolution.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::tempdir;

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kinedict"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn provenance_of(value: &Value) -> &Value {
    value.get("provenance").expect("artifact has a provenance block")
}

#[test]
fn the_pipeline_runs_and_every_artifact_carries_provenance() {
    let dir = tempdir().unwrap();
    let d = dir.path();

    assert_exit(
        &run_in(d, &["synth", "--generator", "clusters", "--out", "syn", "--k", "4", "--count", "96", "--seed", "5"]),
        0,
    );
    assert_exit(
        &run_in(d, &["learn", "--input", "syn/data.csv", "--out", "dict.json", "--atoms", "6", "--steps", "40", "--batch", "24", "--seed", "1"]),
        0,
    );
    assert_exit(
        &run_in(d, &["kmeans", "--input", "syn/data.csv", "--out", "km.json", "--k", "4", "--seed", "2"]),
        0,
    );
    assert_exit(
        &run_in(d, &["coverage", "--dict", "dict.json", "--input", "syn/data.csv", "--out", "cov.json", "--threshold-deg", "6"]),
        0,
    );
    assert_exit(
        &run_in(d, &["plot-hull", "--dict", "dict.json", "--input", "syn/data.csv", "--index", "2", "--out-dir", "hull"]),
        0,
    );

    for (file, starts) in [
        ("syn/truth.json", "kinedict synth"),
        ("dict.json", "kinedict learn"),
        ("km.json", "kinedict kmeans"),
        ("cov.json", "kinedict coverage"),
        ("hull/hull.json", "kinedict plot-hull"),
    ] {
        let doc = read_json(&d.join(file));
        let prov = provenance_of(&doc);
        let command = prov["command"].as_str().unwrap();
        assert!(command.starts_with(starts), "{file}: {command}");
        assert_eq!(prov["version"].as_str().unwrap(), env!("CARGO_PKG_VERSION"));
        assert!(prov["seed"].is_u64(), "{file} records its seed");
    }

    // The seed in the provenance is the resolved one, not just an echo.
    let dict = read_json(&d.join("dict.json"));
    assert_eq!(provenance_of(&dict)["seed"].as_u64(), Some(1));
    let cov = read_json(&d.join("cov.json"));
    assert_eq!(provenance_of(&cov)["seed"].as_u64(), Some(0));

    // inspect writes its document (provenance included) to stdout.
    let out = run_in(d, &["inspect", "--input", "syn/data.csv"]);
    assert_exit(&out, 0);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["frames"].as_u64(), Some(96));
    assert_eq!(doc["joints"].as_u64(), Some(1));
    assert!(doc["per_joint"][0]["mean_angle_deg"].is_f64());
    assert!(provenance_of(&doc)["command"].as_str().unwrap().starts_with("kinedict inspect"));
}

#[test]
fn identical_commands_reproduce_artifacts_byte_for_byte() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    assert_exit(
        &run_in(d, &["synth", "--generator", "clusters", "--out", "syn", "--k", "3", "--count", "60", "--seed", "7"]),
        0,
    );
    let learn = ["learn", "--input", "syn/data.csv", "--out", "dict.json", "--atoms", "5", "--steps", "30", "--batch", "16", "--seed", "3"];
    assert_exit(&run_in(d, &learn), 0);
    let first = std::fs::read(d.join("dict.json")).unwrap();
    assert_exit(&run_in(d, &learn), 0);
    assert_eq!(first, std::fs::read(d.join("dict.json")).unwrap());

    // SVG output is reproduced too (the guarantee is structural; byte equality
    // of this deterministic renderer is the simplest witness).
    let hull = ["plot-hull", "--dict", "dict.json", "--input", "syn/data.csv", "--out-dir", "hull"];
    assert_exit(&run_in(d, &hull), 0);
    let svg1 = std::fs::read(d.join("hull/hull.svg")).unwrap();
    assert_exit(&run_in(d, &hull), 0);
    assert_eq!(svg1, std::fs::read(d.join("hull/hull.svg")).unwrap());
}

#[test]
fn a_thread_cap_changes_nothing_but_the_schedule() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    assert_exit(
        &run_in(d, &["synth", "--generator", "clusters", "--out", "syn", "--k", "3", "--count", "60", "--seed", "8"]),
        0,
    );
    let learn = ["learn", "--input", "syn/data.csv", "--out", "dict.json", "--atoms", "5", "--steps", "30", "--batch", "16", "--seed", "3"];
    let mut one = Command::new(env!("CARGO_BIN_EXE_kinedict"));
    one.current_dir(d).env("KINEDICT_THREADS", "1").args(learn);
    assert!(one.output().unwrap().status.success());
    let serial = std::fs::read(d.join("dict.json")).unwrap();
    let mut four = Command::new(env!("CARGO_BIN_EXE_kinedict"));
    four.current_dir(d).env("KINEDICT_THREADS", "4").args(learn);
    assert!(four.output().unwrap().status.success());
    assert_eq!(serial, std::fs::read(d.join("dict.json")).unwrap());
}

#[test]
fn usage_problems_exit_1() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("data.csv"), "1,0,0,0\n0.5,0.5,0.5,0.5\n").unwrap();

    // Unknown subcommand / unknown flag.
    assert_exit(&run_in(d, &["no-such-command"]), 1);
    assert_exit(&run_in(d, &["learn", "--input", "data.csv", "--out", "x.json", "--bogus"]), 1);
    // A knob out of range.
    assert_exit(&run_in(d, &["learn", "--input", "data.csv", "--out", "x.json", "--atoms", "0"]), 1);
    assert_exit(&run_in(d, &["learn", "--input", "data.csv", "--out", "x.json", "--momentum", "1.5"]), 1);
    // A rotation-only subcommand pointed at vector data.
    assert_exit(&run_in(d, &["kmeans", "--input", "data.csv", "--format", "csv-vec", "--out", "x.json"]), 1);
    // A config file with a key nobody owns.
    std::fs::write(d.join("cfg.json"), r#"{"atmos": 4}"#).unwrap();
    let out = run_in(d, &["learn", "--config", "cfg.json", "--input", "data.csv", "--out", "x.json"]);
    assert_exit(&out, 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("atmos"));
    // A bad thread cap.
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kinedict"));
    cmd.current_dir(d).env("KINEDICT_THREADS", "0").args(["inspect", "--input", "data.csv"]);
    assert_eq!(cmd.output().unwrap().status.code(), Some(1));
}

#[test]
fn data_problems_exit_2() {
    let dir = tempdir().unwrap();
    let d = dir.path();

    // Missing input file.
    assert_exit(&run_in(d, &["learn", "--input", "nope.csv", "--out", "x.json"]), 2);
    // Malformed row, reported with its line number.
    std::fs::write(d.join("bad.csv"), "1,0,0,0\n1,0,0,0\n1,zero,0,0\n").unwrap();
    let out = run_in(d, &["learn", "--input", "bad.csv", "--out", "x.json"]);
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    // Empty file.
    std::fs::write(d.join("empty.csv"), "").unwrap();
    assert_exit(&run_in(d, &["inspect", "--input", "empty.csv"]), 2);
    // A dictionary file whose declared shape is inconsistent.
    std::fs::write(
        d.join("broken_dict.json"),
        r#"{"mode":"quaternion","joint_label":"x","d":4,"n_atoms":2,
            "atoms":[[1.0,0.0,0.0,0.0]],
            "learn":{"method":"manual","seed":0,"batch_size":0,"steps":0,"momentum":0.0,
                     "inner":{"max_steps":0,"tol":0.0,"step0":1.0},"notes":[]}}"#,
    )
    .unwrap();
    std::fs::write(d.join("data.csv"), "1,0,0,0\n0.5,0.5,0.5,0.5\n").unwrap();
    assert_exit(&run_in(d, &["coverage", "--dict", "broken_dict.json", "--input", "data.csv", "--out", "c.json"]), 2);
}

#[test]
fn config_defaults_yield_to_explicit_flags() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    assert_exit(
        &run_in(d, &["synth", "--generator", "clusters", "--out", "syn", "--k", "3", "--count", "60", "--seed", "2"]),
        0,
    );
    std::fs::write(d.join("cfg.json"), r#"{"atoms": 4, "seed": 9, "steps": 25, "batch": 16}"#).unwrap();

    // Config alone: 4 atoms, seed 9.
    assert_exit(
        &run_in(d, &["learn", "--config", "cfg.json", "--input", "syn/data.csv", "--out", "a.json"]),
        0,
    );
    let a = read_json(&d.join("a.json"));
    assert_eq!(a["n_atoms"].as_u64(), Some(4));
    assert_eq!(a["provenance"]["seed"].as_u64(), Some(9));

    // A flag overrides one knob, the config still fills the rest.
    assert_exit(
        &run_in(d, &["learn", "--config", "cfg.json", "--atoms", "6", "--input", "syn/data.csv", "--out", "b.json"]),
        0,
    );
    let b = read_json(&d.join("b.json"));
    assert_eq!(b["n_atoms"].as_u64(), Some(6));
    assert_eq!(b["provenance"]["seed"].as_u64(), Some(9));
}

#[test]
fn fit_resolves_problem_paths_and_accepts_both_dictionary_shapes() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    // Everything fit needs lives under a subdirectory...
    let assets = d.join("assets");
    std::fs::create_dir_all(&assets).unwrap();
    assert_exit(
        &run_in(d, &["synth", "--generator", "clusters", "--out", "assets/syn", "--k", "4", "--count", "80", "--seed", "4"]),
        0,
    );
    assert_exit(
        &run_in(d, &["learn", "--input", "assets/syn/data.csv", "--out", "assets/dict.json", "--atoms", "5", "--steps", "30", "--batch", "16", "--seed", "1"]),
        0,
    );
    let keypoints: Vec<[f64; 2]> = (0..24)
        .map(|j| [(0.7 * j as f64).cos() * 0.4, -0.9 + 0.08 * j as f64])
        .collect();
    let shared = serde_json::json!({
        "dictionaries": {"all": "dict.json"},
        "keypoints_2d": keypoints,
    });
    std::fs::write(assets.join("problem.json"), shared.to_string()).unwrap();
    let per_joint = serde_json::json!({
        "dictionaries": vec!["dict.json"; 23],
        "keypoints_2d": keypoints,
    });
    std::fs::write(assets.join("problem_per_joint.json"), per_joint.to_string()).unwrap();
    let wrong_count = serde_json::json!({
        "dictionaries": vec!["dict.json"; 7],
        "keypoints_2d": keypoints,
    });
    std::fs::write(assets.join("problem_wrong.json"), wrong_count.to_string()).unwrap();

    // ...and the binary runs from the parent: paths resolve against the
    // problem file's own directory, not the working directory.
    let fit = |problem: &str, out: &str| {
        run_in(d, &["fit", "--problem", problem, "--out", out, "--restarts", "2", "--max-iters", "20", "--seed", "3"])
    };
    assert_exit(&fit("assets/problem.json", "fit_all.json"), 0);
    assert_exit(&fit("assets/problem_per_joint.json", "fit_per_joint.json"), 0);
    assert_exit(&fit("assets/problem_wrong.json", "fit_wrong.json"), 2);

    let report = read_json(&d.join("fit_all.json"));
    assert_eq!(report["skeleton_joints"].as_u64(), Some(24));
    assert_eq!(report["result"]["rotations"].as_array().unwrap().len(), 23);
    assert_eq!(report["result"]["codes"].as_array().unwrap().len(), 23);
    // Codes are simplex points: non-negative, summing to one.
    for code in report["result"]["codes"].as_array().unwrap() {
        let w: Vec<f64> = code.as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        assert!(w.iter().all(|&x| x >= 0.0));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn help_documents_the_rotation_vector_encoding() {
    let dir = tempdir().unwrap();
    let out = run_in(dir.path(), &["inspect", "--help"]);
    assert_exit(&out, 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("rotation vector"), "{text}");
    assert!(text.contains("axis times angle"), "{text}");
}
