use std::path::Path;
use std::process::Command;

use aquaped::dynamics::{Mode, ModelTag};
use aquaped_cli::commands;
use aquaped_cli::config::{GaitSpec, RunConfig};
use aquaped_cli::manifest::{Manifest, MANIFEST_NAME};

fn manifest(dir: &Path) -> Manifest {
    serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST_NAME)).unwrap()).unwrap()
}

fn csv_count(dir: &Path) -> usize {
    std::fs::read_dir(dir).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv")).count()
}

fn small_grid(cfg: &mut RunConfig) {
    cfg.synth.grid.theta_h_min_deg = vec![10.0, -50.0];
    cfg.synth.grid.theta_k_max_deg = vec![-20.0, -50.0, -80.0];
    cfg.synth.grid.freq = vec![0.4, 0.6];
    cfg.synth.grid.phi_deg = vec![60.0];
    cfg.synth.grid.v_flow = vec![0.0, 0.2];
}

#[test]
fn one_cell_grid_writes_one_log() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.synth.grid.theta_h_min_deg = vec![-30.0];
    cfg.synth.grid.theta_k_max_deg = vec![-60.0];
    cfg.synth.grid.freq = vec![0.5];
    cfg.synth.grid.phi_deg = vec![60.0];
    cfg.synth.grid.v_flow = vec![0.1];
    let m = commands::synth(&cfg, dir.path()).unwrap();
    assert_eq!(m.outputs.len(), 1);
    assert_eq!(csv_count(dir.path()), 1);
    assert_eq!(manifest(dir.path()), m);
}

#[test]
fn synth_counts_and_reruns_identically() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg = RunConfig { seed: 3, ..RunConfig::default() };
    small_grid(&mut cfg);
    let ma = commands::synth(&cfg, a.path()).unwrap();
    let mb = commands::synth(&cfg, b.path()).unwrap();
    assert_eq!(ma.outputs.len(), 2 * 3 * 2 * 2);
    assert_eq!(csv_count(a.path()), ma.outputs.len());
    assert_eq!(ma, mb);
    assert_eq!(
        std::fs::read(a.path().join(MANIFEST_NAME)).unwrap(),
        std::fs::read(b.path().join(MANIFEST_NAME)).unwrap()
    );
}

#[test]
fn train_then_compare_on_a_small_grid() {
    let root = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig { seed: 2, ..RunConfig::default() };
    small_grid(&mut cfg);
    cfg.train.max_epochs = 2;
    cfg.train.samples_per_epoch = Some(1000);
    cfg.train.hidden = 8;
    cfg.train.eval_stride = 8;
    cfg.compare.stride = 4;
    cfg.compare.curve_sets = 2;
    let data = root.path().join("data");
    commands::synth(&cfg, &data).unwrap();

    let (history, report) = commands::train(&cfg, &data, &root.path().join("model")).unwrap();
    assert_eq!(history.epochs.len(), 2);
    assert_eq!(report.epochs, 2);
    // two measured speeds are too few for the quadratic speed fit: nothing is interpolated
    assert_eq!(report.sets.iter().sum::<usize>(), 24);
    let m = manifest(&root.path().join("model"));
    assert_eq!(m.inputs.len(), 24);
    assert!(m.outputs.iter().any(|f| f.name == "model.json"));

    let out = root.path().join("compare");
    let r = commands::compare(&cfg, &root.path().join("model/model.json"), &data, &out).unwrap();
    assert_eq!(r.by_speed, report.by_speed);
    let table = std::fs::read_to_string(out.join("mse_by_speed.csv")).unwrap();
    assert_eq!(table.lines().count(), r.by_speed.len() + 1);
    assert_eq!(csv_count(&out.join("curves")), 2);
    assert_eq!(manifest(&out).inputs[0].name, "model.json");
}

#[test]
fn generation_zero_search_reports_eight() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.optimize.population = 8;
    cfg.optimize.generations = 0;
    cfg.body.t_max = 3.0;
    let r = commands::optimize(&cfg, Mode::Straight, None, None, dir.path()).unwrap();
    assert_eq!(r.evaluations, 8);
    assert_eq!(r.top.len(), 8);
    assert_eq!(r.history.len(), 1);
    assert!(r.top.windows(2).all(|p| p[0].score <= p[1].score));
    for t in &r.top {
        let g = GaitSpec::load(&dir.path().join(format!("gaits/rank_{}.toml", t.rank))).unwrap();
        assert_eq!(g, t.gait);
    }
}

#[test]
fn seeded_search_keeps_the_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.optimize.population = 8;
    cfg.optimize.generations = 0;
    cfg.body.t_max = 3.0;
    let first = commands::optimize(&cfg, Mode::Straight, None, None, &dir.path().join("a")).unwrap();
    cfg.seed = 11;
    let second =
        commands::optimize(&cfg, Mode::Straight, None, Some(&dir.path().join("a/report.json")), &dir.path().join("b"))
            .unwrap();
    assert_eq!(second.seeded, 8);
    // the seeded population is the previous top eight, so the best score carries over
    assert!((second.top[0].score - first.top[0].score).abs() < 1e-9);
}

#[test]
fn mirrored_gait_mirrors_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.body.t_max = 10.0;
    let gait = GaitSpec { alpha_deg: [0.0, 120.0, 200.0, 310.0], ..GaitSpec::default() };
    let mirror = GaitSpec { alpha_deg: [120.0, 0.0, 310.0, 200.0], ..gait };
    let a = commands::simulate(&cfg, &gait, Mode::Straight, None, &dir.path().join("a")).unwrap();
    let b = commands::simulate(&cfg, &mirror, Mode::Straight, None, &dir.path().join("b")).unwrap();
    assert_eq!(a.x_final, -b.x_final);
    assert_eq!(a.y_final, b.y_final);
    assert_eq!(a.yaw_final, -b.yaw_final);
    assert_eq!(a.stations.len(), b.stations.len());
    let rows = std::fs::read_to_string(dir.path().join("a/trajectory.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + (10.0f64 * 65.0).round() as usize + 1);
}

#[test]
fn surrogate_without_model_path_is_an_error() {
    assert!(commands::load_model(ModelTag::Lstm, None).is_err());
    assert!(commands::load_model(ModelTag::Ef, None).unwrap().is_none());
}

fn aquaped(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_aquaped")).args(args).output().unwrap()
}

#[test]
fn binary_reports_bad_config_with_its_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[optimize]\npopulation = 7\n").unwrap();
    let out = aquaped(&["optimize", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: config"), "{err}");
    assert!(err.contains("even"), "{err}");
}

#[test]
fn binary_reports_missing_data_with_its_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = aquaped(&[
        "train",
        "--data",
        dir.path().join("absent").to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("train: load"), "{err}");
}

#[test]
fn binary_synth_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[synth.grid]\ntheta_h_min_deg = [-10.0]\ntheta_k_max_deg = [-40.0]\nfreq = [0.6]\nphi_deg = [60.0]\nv_flow = [0.0, 0.3]\n",
    )
    .unwrap();
    let out_dir = dir.path().join("data");
    let out = aquaped(&["synth", "--config", cfg.to_str().unwrap(), "--seed", "4", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&out_dir);
    assert_eq!((m.command.as_str(), m.seed, m.outputs.len()), ("synth", 4, 2));
}
