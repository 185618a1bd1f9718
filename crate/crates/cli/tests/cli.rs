use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rydwire::measure::Distribution;
use rydwire_cli::config::{EvolutionConfig, ExperimentConfig, LayoutSource};
use rydwire_cli::pipeline::{evolve, Experiment};
use serde_json::Value;

fn rydwire(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rydwire")).args(args).env_remove("RYDWIRE_OUT").output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn error_kind(out: &Output) -> String {
    assert_eq!(out.status.code(), Some(1), "stdout: {}", String::from_utf8_lossy(&out.stdout));
    let line = String::from_utf8(out.stderr.clone()).unwrap();
    let v: Value = serde_json::from_str(line.trim()).unwrap_or_else(|e| panic!("{e}: {line}"));
    assert!(v["message"].is_string());
    v["error"].as_str().unwrap().to_string()
}

const K4_NOISY: &str = r#"{"schema_version": 1, "graph": "tetrahedron", "shots": 927, "seed": 42,
    "noise": {"dephasing_mhz": 0.05, "detect_p01": 0.12, "detect_p10": 0.09},
    "evolution": {"dt_us": 0.01}}"#;

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "k4.json", K4_NOISY);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = rydwire(&["run", "--quiet", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in [
        "layout.csv",
        "schedule.json",
        "raw_distribution.json",
        "postselected_distribution.json",
        "shots.csv",
        "report.json",
    ] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let report: Value = serde_json::from_slice(&fs::read(a.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["parameters"]["method"], "density");
    assert_eq!(report["parameters"]["dephasing_mhz"], 0.05);
    assert!(report["notes"][0].as_str().unwrap().contains("placeholder"));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "k4.json", K4_NOISY);
    let out = dir.path().join("s");
    let o = rydwire(&["run", "--quiet", "--config", &cfg, "--seed", "43", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let report: Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 43);
    let reference = dir.path().join("r");
    rydwire(&["run", "--quiet", "--config", &cfg, "--out", reference.to_str().unwrap()]);
    assert_ne!(fs::read(out.join("shots.csv")).unwrap(), fs::read(reference.join("shots.csv")).unwrap());
}

#[test]
fn output_root_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_rydwire"))
        .args(["scaling", "--quiet"])
        .env("RYDWIRE_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("scaling/scaling.csv").is_file());
}

#[test]
fn errors_become_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(error_kind(&rydwire(&["phases", "dodecahedron", "--out", out])), "unsupported_graph");
    assert_eq!(error_kind(&rydwire(&["run", "--out", out])), "config");

    let no_seed = write_config(dir.path(), "a.json", r#"{"schema_version": 1, "graph": "cube", "shots": 5}"#);
    assert_eq!(error_kind(&rydwire(&["run", "--config", &no_seed, "--out", out])), "config");

    let bad_noise = write_config(
        dir.path(),
        "b.json",
        r#"{"schema_version": 1, "graph": "tetrahedron", "shots": 5, "seed": 1, "noise": {"detect_p01": 1.5}}"#,
    );
    assert_eq!(error_kind(&rydwire(&["run", "--config", &bad_noise, "--out", out])), "not_a_probability");

    let bad_schedule = write_config(
        dir.path(),
        "c.json",
        r#"{"schema_version": 1, "graph": "tetrahedron", "shots": 5, "seed": 1,
            "schedule": {"t1_us": 2, "t2_us": 1, "tf_us": 4, "omega0_mhz": 1, "delta_i_mhz": -1, "delta_f_mhz": 1}}"#,
    );
    assert_eq!(error_kind(&rydwire(&["evolve", "--config", &bad_schedule, "--out", out])), "invalid_schedule");
    assert_eq!(error_kind(&rydwire(&["run", "--config", "/nonexistent/cfg.json", "--out", out])), "io");
}

#[test]
fn phase_reports() {
    let dir = tempfile::tempdir().unwrap();
    for (name, regions) in [("tetrahedron", 5), ("cube", 3)] {
        let out = dir.path().join(name);
        let o = rydwire(&["phases", name, "--quiet", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        let v: Value = serde_json::from_slice(&fs::read(out.join("phases.json")).unwrap()).unwrap();
        assert_eq!(v.as_array().unwrap().len(), regions, "{name}");
        let csv = fs::read_to_string(out.join("phases.csv")).unwrap();
        assert_eq!(csv.lines().count(), regions + 1);
    }
}

#[test]
fn scaling_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("builtin");
    let o = rydwire(&["scaling", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(
        fs::read_to_string(out.join("scaling.csv")).unwrap(),
        "label,n,n_prime\ntetrahedron,4,6\ncube,8,16\noctahedron,6,18\n"
    );
    let fit: Value = serde_json::from_slice(&fs::read(out.join("scaling_fit.json")).unwrap()).unwrap();
    assert!((fit["slope"].as_f64().unwrap() - 2.5).abs() < 1e-12);

    let rows = "label,n,n_prime\ntetrahedron,4,6\ncube,8,16\noctahedron,6,18\n\
                dodecahedron,20,50\nicosahedron,12,42\nC60,60,150\nC70,70,175\n";
    let points = dir.path().join("points.csv");
    fs::write(&points, rows).unwrap();
    let out = dir.path().join("user");
    let o = rydwire(&["scaling", "--quiet", "--points", points.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(out.join("scaling.csv")).unwrap(), rows);

    fs::write(&points, "label,n,n_prime\na,4,6\na,4,6\n").unwrap();
    let o = rydwire(&["scaling", "--points", points.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(error_kind(&o), "too_few_points");
}

#[test]
fn graph_and_layout_to_stdout() {
    let o = rydwire(&["graph", "cube"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["edges"].as_array().unwrap().len(), 20);
    let o = rydwire(&["graph", "octahedron", "--plain"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["edges"].as_array().unwrap().len(), 12);
    let csv = String::from_utf8(rydwire(&["layout", "tetrahedron"]).stdout).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.starts_with("atom_id,role,x_um,y_um\n"));
}

#[test]
fn evolve_writes_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "k4.json",
        r#"{"schema_version": 1, "graph": "tetrahedron", "shots": 1, "seed": 0, "evolution": {"dt_us": 0.01}}"#,
    );
    let out = dir.path().join("e");
    assert!(rydwire(&["evolve", "--quiet", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let psi = rydwire::StateVector::read_binary(fs::File::open(out.join("state.bin")).unwrap()).unwrap();
    let pops = Distribution::from_json(&fs::read_to_string(out.join("populations.json")).unwrap()).unwrap();
    assert!((psi.norm() - 1.0).abs() < 1e-12);
    for (c, p) in pops.iter() {
        assert!((psi.probabilities()[c as usize] - p).abs() < 1e-12);
    }
}

#[test]
fn cube_raw_distribution_peaks_on_mis() {
    let mut cfg = ExperimentConfig::platonic("cube", 5000, 3);
    cfg.evolution = EvolutionConfig { dt_us: 0.01, step_halving: false, ..EvolutionConfig::default() };
    let b = rydwire_cli::run_experiment(&cfg).unwrap();
    let top: Vec<u64> = b.raw.top(2).iter().map(|&(c, _)| c + 1).collect();
    assert!(top.contains(&26283) && top.contains(&39254), "{top:?}");
}

/// Wire-state weights `(|00>, AF, |11>)` of the noiseless family sweep.
fn wire_weights(d_ratio: f64) -> (f64, f64, f64, Distribution) {
    let mut cfg = ExperimentConfig::platonic("tetrahedron", 1, 0);
    cfg.layout = LayoutSource::K4Family { d_ratio, d_um: 8.0 };
    cfg.evolution = EvolutionConfig { dt_us: 0.002, step_halving: false, ..EvolutionConfig::default() };
    let exp = Experiment::from_config(&cfg).unwrap();
    let dist = evolve(&exp, &cfg).unwrap().state.distribution().unwrap();
    let mut w = [0.0; 4];
    for (c, p) in dist.iter() {
        w[(c >> 4) as usize] += p;
    }
    (w[0], w[1] + w[2], w[3], dist)
}

#[test]
fn family_trend_with_wire_length() {
    let ratios = [0.8, 0.9, 1.0, 1.1, 1.2, 1.3];
    let weights: Vec<_> = ratios.iter().map(|&r| wire_weights(r)).collect();
    let (w00, af, _, _) = &weights[0];
    assert!(*w00 > 0.9 && *af < 0.1);
    let (_, af_1, _, _) = &weights[2];
    assert!(*af_1 > 2.0 * af && *af_1 > 0.2, "{af_1}");
    for pair in weights.windows(2) {
        assert!(pair[1].0 < pair[0].0, "|00>_W weight falls as the wire stretches");
    }
    let (_, _, w11, dist) = &weights[5];
    assert!(*w11 > 0.5, "{w11}");
    let top = dist.top(1)[0].1;
    let target = rydwire::SpinConfig::from_bitstring("111001").unwrap().bits();
    assert!((dist.probability(target) - top).abs() < 1e-3);
}
