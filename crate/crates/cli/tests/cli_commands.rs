use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ovbsense_cli::commands::{sidecar_oracle, simulated_csv};
use ovbsense_cli::config::LoadedConfig;
use ovbsense_core::dgp::{oracle_confounding, simulate, DgpConfig};
use ovbsense_core::dml::make_folds;
use ovbsense_core::model::Estimand;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn bundled_csv() -> String {
    data_dir().join("reference.csv").to_str().unwrap().replace('\\', "/")
}

fn ovbsense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ovbsense"))
        .args(args)
        .env_remove("OVBSENSE_OUT_DIR")
        .output()
        .expect("binary runs")
}

/// Runs `cmd` on a config written into a fresh directory; outputs go to `out/`.
fn run_with(cmd: &str, toml: &str) -> (tempfile::TempDir, Output) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.toml");
    std::fs::write(&cfg, toml).unwrap();
    let out = dir.path().join("out");
    let output = ovbsense(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"]);
    (dir, output)
}

fn read_json(dir: &Path, name: &str) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join("out").join(name)).unwrap()).unwrap()
}

fn analysis_toml(data: &str, treatment: &str, extra: &str) -> String {
    format!(
        "seed = 42\n\n[data]\npath = \"{data}\"\noutcome = \"y\"\ntreatment = \"{treatment}\"\n\n[estimand]\nkind = \"ATT\"\n\n{extra}"
    )
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn estimate_on_bundled_data_is_near_the_true_effect() {
    let (dir, out) = run_with("estimate", &analysis_toml(&bundled_csv(), "d", ""));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let est = &read_json(dir.path(), "estimate.json")["estimate"];
    let theta = est["theta"].as_f64().unwrap();
    let se = est["se"].as_f64().unwrap();
    assert!((theta - 0.5).abs() < 3.0 * se, "theta {theta} se {se}");
    assert!(est["CI lower"].as_f64().unwrap() < theta && theta < est["CI upper"].as_f64().unwrap());
    assert_eq!(est["n"], 2000);
    let text = std::fs::read_to_string(dir.path().join("out/estimate.txt")).unwrap();
    assert!(text.starts_with("ATT for d:"));
}

#[test]
fn missing_treatment_column_is_a_config_error() {
    let (_dir, out) = run_with("estimate", &analysis_toml(&bundled_csv(), "treat", ""));
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("'treat'"), "{}", stderr(&out));
}

#[test]
fn single_row_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("one.csv");
    std::fs::write(&csv, "y,d,x1\n1.0,1,0.5\n").unwrap();
    let (_d, out) = run_with("estimate", &analysis_toml(csv.to_str().unwrap(), "d", ""));
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn non_numeric_cell_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "y,d,x1\n1.0,1,0.5\n2.0,0,abc\n").unwrap();
    let (_d, out) = run_with("estimate", &analysis_toml(csv.to_str().unwrap(), "d", ""));
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("x1"), "{}", stderr(&out));
}

#[test]
fn zero_scenario_collapses_bounds() {
    let toml = analysis_toml(&bundled_csv(), "d", "[[scenarios]]\ncf_y = 0.0\ncf_d = 0.0\nrho = 1.0\n");
    let (dir, out) = run_with("sensitivity", &toml);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let s = &read_json(dir.path(), "sensitivity.json")["sensitivity"][0];
    assert_eq!(s["theta lower"], s["theta"]);
    assert_eq!(s["theta upper"], s["theta"]);
    assert_eq!(s["bias"].as_f64(), Some(0.0));
}

#[test]
fn scenarios_keep_their_order_and_level_is_printed() {
    let toml = analysis_toml(
        &bundled_csv(),
        "d",
        "[[scenarios]]\ncf_y = 0.11\ncf_d = 0.003\nlabel = \"second\"\n\n[[scenarios]]\ncf_y = 0.03\ncf_d = 0.03\nlabel = \"first\"\n",
    );
    let (dir, out) = run_with("sensitivity", &toml);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let json = read_json(dir.path(), "sensitivity.json");
    let labels: Vec<&str> =
        json["sensitivity"].as_array().unwrap().iter().map(|s| s["label"].as_str().unwrap()).collect();
    assert_eq!(labels, ["second", "first"]);
    let text = std::fs::read_to_string(dir.path().join("out/sensitivity.txt")).unwrap();
    assert!(text.contains("Significance Level: level=0.950"));
    assert!(text.find("(second)").unwrap() < text.find("(first)").unwrap());
}

#[test]
fn zero_rho_has_no_robustness_value() {
    let toml = analysis_toml(&bundled_csv(), "d", "[[scenarios]]\ncf_y = 0.1\ncf_d = 0.1\nrho = 0.0\n");
    let (dir, out) = run_with("sensitivity", &toml);
    assert_eq!(code(&out), 5, "{}", stderr(&out));
    let s = &read_json(dir.path(), "sensitivity.json")["sensitivity"][0];
    assert!(s["RV"].is_null() && s["RVa"].is_null());
    let text = std::fs::read_to_string(dir.path().join("out/sensitivity.txt")).unwrap();
    assert!(text.contains("n/a"));
}

#[test]
fn invalid_scenario_is_a_config_error() {
    let toml = analysis_toml(&bundled_csv(), "d", "[[scenarios]]\ncf_y = 0.1\ncf_d = 1.0\n");
    let (_dir, out) = run_with("sensitivity", &toml);
    assert_eq!(code(&out), 2);
}

#[test]
fn benchmark_rejects_empty_and_unknown_sets() {
    let (_d, out) = run_with("benchmark", &analysis_toml(&bundled_csv(), "d", "[benchmark]\nsets = []\n"));
    assert_eq!(code(&out), 2);
    let (_d, out) = run_with("benchmark", &analysis_toml(&bundled_csv(), "d", "[benchmark]\nsets = [[]]\n"));
    assert_eq!(code(&out), 2);
    let (_d, out) = run_with("benchmark", &analysis_toml(&bundled_csv(), "d", "[benchmark]\nsets = [[\"x9\"]]\n"));
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("x9"), "{}", stderr(&out));
}

#[test]
fn benchmarking_pure_noise_finds_no_confounding() {
    let sim = simulate(&DgpConfig::reference(10_000, 11)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let noise: Vec<f64> = (0..sim.ds.n()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let mut sim = sim;
    sim.ds = sim.ds.with_covariate("noise", &noise).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("noise.csv");
    std::fs::write(&csv, simulated_csv(&sim)).unwrap();
    let toml = analysis_toml(csv.to_str().unwrap(), "d", "[benchmark]\nsets = [[\"noise\"]]\nchain = true\n");
    let (d, out) = run_with("benchmark", &toml);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let b = &read_json(d.path(), "benchmark.json")["benchmark"][0];
    assert!(b["cf_y"].as_f64().unwrap() < 0.02, "{b}");
    assert!(b["cf_d"].as_f64().unwrap() < 0.02, "{b}");
    assert_eq!(b["sensitivity"]["label"], "benchmark: noise");
}

const TWIN: &str = "seed = 3\n\n[simulate]\nfile = \"twin.csv\"\nn = 20000\np = 4\ntheta = 0.5\n\
gamma_x = [0.0, 0.0, 0.0, 0.3]\nbeta_x = [1.0, 0.5, -0.5, 0.3]\ngamma_u = 0.3\nbeta_u = 0.3\nnoise_sd = 1.0\nseed = 3\n";

#[test]
fn twin_benchmark_via_cli_tracks_the_sidecar_oracle() {
    let (dir, out) = run_with("simulate", TWIN);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let oracle = read_json(dir.path(), "twin.oracle.json");
    let data = dir.path().join("out/twin.csv");
    let toml = analysis_toml(data.to_str().unwrap(), "d", "[benchmark]\nsets = [[\"x4\"]]\n").replacen(
        "seed = 42",
        "seed = 3",
        1,
    );
    let (d, out) = run_with("benchmark", &toml);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let b = &read_json(d.path(), "benchmark.json")["benchmark"][0];
    for key in ["cf_y", "cf_d"] {
        let o = oracle["oracle_confounding"][key].as_f64().unwrap();
        let v = b[key].as_f64().unwrap();
        assert!((v - o).abs() / o <= 0.25, "{key}: benchmark {v} oracle {o}");
    }
}

#[test]
fn contour_grid_csv_svg_and_marks() {
    let extra = "[[scenarios]]\ncf_y = 0.05\ncf_d = 0.05\n\n[[scenarios]]\ncf_y = 0.1\ncf_d = 0.02\nlabel = \"b\"\n\n\
[contour]\nwhich = \"theta_lower\"\ncf_y = { start = 0.0, stop = 0.2, steps = 2 }\ncf_d = { start = 0.0, stop = 0.2, steps = 2 }\n";
    let (dir, out) = run_with("contour", &analysis_toml(&bundled_csv(), "d", extra));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("out/contour.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.len() == 3));
    let report = read_json(dir.path(), "contour.json");
    let theta = report["estimate"]["theta"].as_f64().unwrap();
    assert_eq!(rows[1][1].parse::<f64>().unwrap(), theta);
    assert!(rows[2][2].parse::<f64>().unwrap() < theta);
    let svg = std::fs::read_to_string(dir.path().join("out/contour.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert_eq!(svg.matches("<circle class=\"scenario-mark\"").count(), 2);
    assert_eq!(svg.matches("class=\"rv-mark\"").count(), 1);
    assert!(svg.contains("scenario 1") && svg.contains(">b<"));
}

#[test]
fn contour_with_one_step_axis_is_a_config_error() {
    let extra =
        "[contour]\ncf_y = { start = 0.0, stop = 0.2, steps = 1 }\ncf_d = { start = 0.0, stop = 0.2, steps = 3 }\n";
    let (_dir, out) = run_with("contour", &analysis_toml(&bundled_csv(), "d", extra));
    assert_eq!(code(&out), 2);
}

const SIM: &str = "seed = 5\n\n[simulate]\nfile = \"sim.csv\"\nn = 500\np = 3\ntheta = 0.5\n\
gamma_x = [0.5, -0.5, 0.25]\nbeta_x = [1.0, 0.5, -0.5]\ngamma_u = 0.5\nbeta_u = 0.5\nnoise_sd = 1.0\nseed = 5\n";

#[test]
fn simulate_is_byte_identical_across_runs() {
    let (a, out_a) = run_with("simulate", SIM);
    let (b, out_b) = run_with("simulate", SIM);
    assert_eq!(code(&out_a), 0, "{}", stderr(&out_a));
    assert_eq!(code(&out_b), 0);
    for f in ["sim.csv", "sim.oracle.json"] {
        assert_eq!(
            std::fs::read(a.path().join("out").join(f)).unwrap(),
            std::fs::read(b.path().join("out").join(f)).unwrap()
        );
    }
    let csv = std::fs::read_to_string(a.path().join("out/sim.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("y,d,x1,x2,x3"));
    assert_eq!(csv.lines().count(), 501);
}

#[test]
fn simulate_null_effect_oracle_is_zero() {
    let (dir, out) = run_with("simulate", &SIM.replace("theta = 0.5", "theta = 0.0"));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let oracle = read_json(dir.path(), "sim.oracle.json");
    assert_eq!(oracle["oracle_att"].as_f64(), Some(0.0));
    assert_eq!(oracle["oracle_ate"].as_f64(), Some(0.0));
}

#[test]
fn simulate_sidecar_matches_a_fresh_oracle() {
    let (dir, out) = run_with("simulate", SIM);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let sidecar = read_json(dir.path(), "sim.oracle.json");
    let loaded = LoadedConfig::load(&dir.path().join("config.toml")).unwrap();
    let settings = loaded.config.dml_settings().unwrap();
    let sim = simulate(&loaded.config.simulate.as_ref().unwrap().dgp).unwrap();
    let folds = make_folds(sim.ds.n(), settings.n_folds, settings.seed).unwrap();
    let fresh = oracle_confounding(&sim, &folds, &settings, &Estimand::att()).unwrap();
    assert_eq!(fresh, sidecar_oracle(&sim, &settings).unwrap());
    for (key, v) in [("cf_y", fresh.cf_y), ("cf_d", fresh.cf_d), ("rho", fresh.rho)] {
        let s = sidecar["oracle_confounding"][key].as_f64().unwrap();
        assert!((s - v).abs() < 1e-12, "{key}: {s} vs {v}");
    }
    assert_eq!(std::fs::read_to_string(dir.path().join("out/sim.csv")).unwrap(), simulated_csv(&sim));
}

#[test]
fn validate_single_replication() {
    let toml = SIM.replace("[simulate]\nfile = \"sim.csv\"", "[validate]\nreps = 1\ncalibration_n = 20000");
    let (dir, out) = run_with("validate", &toml);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = read_json(dir.path(), "validate.json");
    assert_eq!(report["coverage"]["reps"], 1);
    assert!(report["checks"].as_array().unwrap().is_empty());
}

#[test]
fn bundled_validation_configs_pass_their_checks() {
    for name in ["validate_unconfounded.toml", "validate_confounded.toml"] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = data_dir().join(name);
        let out = ovbsense(&[
            "validate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "--quiet",
        ]);
        assert_eq!(code(&out), 0, "{name}: {}", stderr(&out));
        let report: Value = serde_json::from_slice(&std::fs::read(dir.path().join("validate.json")).unwrap()).unwrap();
        let checks = report["checks"].as_array().unwrap();
        assert!(!checks.is_empty());
        for c in checks {
            assert_eq!(c["pass"], true, "{name}: {c}");
        }
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.toml");
    std::fs::write(&cfg, analysis_toml(&bundled_csv(), "d", "")).unwrap();
    let run = |seed: &str, out: &str| {
        let out_dir = dir.path().join(out);
        let o = ovbsense(&[
            "estimate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--seed",
            seed,
            "--quiet",
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let v: Value = serde_json::from_slice(&std::fs::read(out_dir.join("estimate.json")).unwrap()).unwrap();
        v
    };
    let a = run("7", "a");
    let b = run("8", "b");
    assert_eq!(a["provenance"]["seed"], 7);
    assert_eq!(b["provenance"]["seed"], 8);
    assert_ne!(a["estimate"]["theta"], b["estimate"]["theta"]);
}

#[test]
fn out_dir_environment_variable_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.toml");
    std::fs::write(&cfg, analysis_toml(&bundled_csv(), "d", "")).unwrap();
    let target = dir.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_ovbsense"))
        .args(["estimate", "--config", cfg.to_str().unwrap(), "--quiet"])
        .env("OVBSENSE_OUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(target.join("estimate.json").exists());
}

#[test]
fn malformed_or_unknown_config_is_rejected() {
    let (_d, out) = run_with("estimate", "seed = [");
    assert_eq!(code(&out), 2);
    let (_d, out) = run_with("estimate", &format!("bogus = 1\n{}", analysis_toml(&bundled_csv(), "d", "")));
    assert_eq!(code(&out), 2);
    let (_d, out) = run_with("estimate", "seed = 1\n");
    assert_eq!(code(&out), 2);
}

#[test]
fn missing_data_file_is_an_io_error() {
    let (_d, out) = run_with("estimate", &analysis_toml("/nonexistent/data.csv", "d", ""));
    assert_ne!(code(&out), 0);
    assert!(stderr(&out).contains("data.csv"));
}
