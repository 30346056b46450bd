//! The five pipeline commands. Each is a pure function of its configuration,
//! input files and seed, and writes only under its output directory.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context};
use aquaped::data::{format_force_log, load_force_log, preprocess, split_dataset, RecordSet, WINDOW_LEN};
use aquaped::dynamics::{ForceModel, Mode, ModelTag, Simulator};
use aquaped::lstm::{
    ef_window_predictions, evaluate, fit, lstm_predictions, speed_boxes, BoxSummary, ErrorStats, LstmModel,
    TrainHistory, WindowDataset,
};
use aquaped::optim::{
    gait_from_genes, genes_from_gait, nsga2_run_from, score_and_rank, GaitProblem, GenerationSummary, Objectives,
    OptConfig,
};
use serde::{Deserialize, Serialize};

use crate::config::{GaitSpec, RunConfig};
use crate::manifest::{FileEntry, Manifest, OutputDir};
use crate::summary::RunSummary;

/// Loads every `*.csv` force log in `dir`, in file-name order.
pub fn load_dataset(dir: &Path) -> anyhow::Result<(Vec<RecordSet>, Vec<FileEntry>)> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no force logs (*.csv) in {}", dir.display());
    }
    let mut sets = Vec::new();
    let mut inputs = Vec::with_capacity(paths.len());
    for p in &paths {
        let (s, _) = load_force_log(p).with_context(|| format!("{}", p.display()))?;
        sets.extend(s);
        inputs.push(FileEntry::of(p)?);
    }
    Ok((sets, inputs))
}

pub fn synth(cfg: &RunConfig, out: &Path) -> anyhow::Result<Manifest> {
    let sets = aquaped::data::synth_generate(&cfg.geometry, &cfg.ef, &cfg.synth.grid, &cfg.synth.augment, cfg.seed)
        .context("generate")?;
    let mut meta = cfg.synth.grid.metadata();
    meta.extend(cfg.synth.augment.metadata());
    meta.push(("seed".into(), cfg.seed.to_string()));
    let mut dir = OutputDir::create(out)?;
    for rs in &sets {
        dir.write(&format!("set_{:05}.csv", rs.id), format_force_log(std::slice::from_ref(rs), &meta).as_bytes())
            .context("write")?;
    }
    dir.finish("synth", cfg, Vec::new())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedComparison {
    pub v_flow: f64,
    pub windows: usize,
    /// Aggregate (f_y, f_z, tau_x) test MSE of each model.
    pub lstm: f64,
    pub ef: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub sets: [usize; 3],
    pub epochs: usize,
    pub best_epoch: usize,
    pub test_lstm: ErrorStats,
    pub test_ef: ErrorStats,
    pub by_speed: Vec<SpeedComparison>,
}

fn compare_by_speed(
    model: &LstmModel,
    cfg: &RunConfig,
    test: &WindowDataset,
) -> anyhow::Result<(ErrorStats, ErrorStats, Vec<SpeedComparison>, [aquaped::lstm::Evaluation; 2])> {
    let lstm = evaluate(test, &lstm_predictions(model, test, cfg.compare.batch), Some(&model.target_norm));
    let ef_pred = ef_window_predictions(test, &cfg.geometry, &cfg.ef).context("empirical baseline")?;
    let ef = evaluate(test, &ef_pred, Some(&model.target_norm));
    let by_speed = lstm
        .by_speed
        .iter()
        .zip(&ef.by_speed)
        .map(|(a, b)| SpeedComparison {
            v_flow: a.v_flow,
            windows: a.stats.samples,
            lstm: a.stats.aggregate,
            ef: b.stats.aggregate,
        })
        .collect();
    Ok((lstm.overall.clone(), ef.overall.clone(), by_speed, [lstm, ef]))
}

/// Shared front half of `train` and `compare`: load, filter and resample,
/// then split by parameter group.
fn prepared_split(cfg: &RunConfig, data: &Path) -> anyhow::Result<(aquaped::data::DatasetSplit, Vec<FileEntry>)> {
    let (sets, inputs) = load_dataset(data).context("load")?;
    let pre = preprocess(&sets, &cfg.preprocess).context("filter/interpolate")?;
    let split = split_dataset(&pre, cfg.seed);
    if split.train.is_empty() || split.val.is_empty() || split.test.is_empty() {
        bail!("split: {} parameter groups are too few for train/val/test", aquaped::data::group_indices(&pre).len());
    }
    Ok((split, inputs))
}

pub fn train(cfg: &RunConfig, data: &Path, out: &Path) -> anyhow::Result<(TrainHistory, TrainReport)> {
    let (split, inputs) = prepared_split(cfg, data)?;
    let (model, history) = fit(&split.train, &split.val, &cfg.train_config()).context("fit")?;
    let test = WindowDataset::new(&split.test, cfg.compare.stride);
    let (test_lstm, test_ef, by_speed, _) = compare_by_speed(&model, cfg, &test).context("evaluate")?;
    let report = TrainReport {
        sets: [split.train.len(), split.val.len(), split.test.len()],
        epochs: history.epochs.len(),
        best_epoch: history.best_epoch,
        test_lstm,
        test_ef,
        by_speed,
    };
    let mut dir = OutputDir::create(out)?;
    dir.write("model.json", model.to_json().as_bytes())?;
    dir.write_json("history.json", &history)?;
    dir.write_json("split.json", &split.ids())?;
    dir.write_json("train_report.json", &report)?;
    dir.finish("train", cfg, inputs)?;
    Ok((history, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub by_speed: Vec<SpeedComparison>,
    pub lstm_boxes: Vec<(f64, BoxSummary)>,
    pub ef_boxes: Vec<(f64, BoxSummary)>,
    pub curve_sets: Vec<usize>,
}

pub fn compare(cfg: &RunConfig, model_path: &Path, data: &Path, out: &Path) -> anyhow::Result<CompareReport> {
    let model = LstmModel::load(model_path).context("load model")?;
    let (split, mut inputs) = prepared_split(cfg, data)?;
    inputs.insert(0, FileEntry::of(model_path)?);
    let test = WindowDataset::new(&split.test, cfg.compare.stride);
    let (_, _, by_speed, [lstm, ef]) = compare_by_speed(&model, cfg, &test).context("evaluate")?;
    let lstm_boxes = speed_boxes(&lstm);
    let ef_boxes = speed_boxes(&ef);

    let mut dir = OutputDir::create(out)?;
    let mut table = String::from("v_flow,windows,lstm_mse,ef_mse\n");
    for s in &by_speed {
        let _ = writeln!(table, "{},{},{},{}", s.v_flow, s.windows, s.lstm, s.ef);
    }
    dir.write("mse_by_speed.csv", table.as_bytes())?;
    let mut boxes = String::from("v_flow,model,sets,median,q1,q3,whisker_low,whisker_high,outliers\n");
    for (tag, list) in [("lstm", &lstm_boxes), ("ef", &ef_boxes)] {
        for (v, b) in list {
            let outliers: Vec<String> = b.outliers.iter().map(f64::to_string).collect();
            let _ = writeln!(
                boxes,
                "{v},{tag},{},{},{},{},{},{},{}",
                b.count,
                b.median,
                b.q1,
                b.q3,
                b.whisker_low,
                b.whisker_high,
                outliers.join(";")
            );
        }
    }
    dir.write("mse_box_by_speed.csv", boxes.as_bytes())?;

    let chosen: Vec<&RecordSet> = split.test.iter().take(cfg.compare.curve_sets).collect();
    for rs in &chosen {
        let one = std::slice::from_ref(*rs);
        let ds = WindowDataset::new(one, 1);
        let lp = lstm_predictions(&model, &ds, cfg.compare.batch);
        let ep = ef_window_predictions(&ds, &cfg.geometry, &cfg.ef).context("empirical baseline")?;
        let mut csv = String::from("t");
        for src in ["truth", "lstm", "ef"] {
            for ch in ["tau_x", "tau_y", "tau_z", "f_x", "f_y", "f_z"] {
                let _ = write!(csv, ",{src}_{ch}");
            }
        }
        csv.push('\n');
        for (k, r) in ds.refs.iter().enumerate() {
            let rec = &rs.records[r.end];
            let _ = write!(csv, "{}", rec.t);
            for row in [rec.wrench.to_channels(), lp[k], ep[k]] {
                for v in row {
                    let _ = write!(csv, ",{v}");
                }
            }
            csv.push('\n');
        }
        debug_assert_eq!(ds.refs.first().map(|r| r.end), Some(WINDOW_LEN - 1));
        dir.write(&format!("curves/set_{:05}.csv", rs.id), csv.as_bytes())?;
    }
    let report = CompareReport { by_speed, lstm_boxes, ef_boxes, curve_sets: chosen.iter().map(|s| s.id).collect() };
    dir.write_json("compare.json", &report)?;
    dir.finish("compare", cfg, inputs)?;
    Ok(report)
}

/// Loaded surrogate, if the chosen force model needs one.
pub fn load_model(tag: ModelTag, path: Option<&Path>) -> anyhow::Result<Option<(LstmModel, FileEntry)>> {
    match (tag, path) {
        (ModelTag::Ef, _) => Ok(None),
        (ModelTag::Lstm, None) => bail!("--model-tag lstm needs --model <path>"),
        (ModelTag::Lstm, Some(p)) => {
            let m = LstmModel::load(p).context("load model")?;
            Ok(Some((m, FileEntry::of(p)?)))
        }
    }
}

fn simulator<'m>(cfg: &RunConfig, model: Option<&'m LstmModel>) -> Simulator<'m> {
    let fm = match model {
        Some(m) => ForceModel::Lstm(m),
        None => ForceModel::Empirical(cfg.ef),
    };
    Simulator::new(cfg.geometry, cfg.body.clone(), fm)
}

pub fn simulate(
    cfg: &RunConfig,
    gait: &GaitSpec,
    mode: Mode,
    model: Option<&(LstmModel, FileEntry)>,
    out: &Path,
) -> anyhow::Result<RunSummary> {
    let g = gait.to_gait();
    g.validate_optimization().context("gait")?;
    let sim = simulator(cfg, model.map(|m| &m.0));
    let traj = sim.simulate(&g, mode).context("simulate")?;
    let summary = RunSummary::of(&traj, cfg.body.finish_distance);
    let mut dir = OutputDir::create(out)?;
    dir.write("trajectory.csv", traj.to_csv().as_bytes())?;
    dir.write_json("summary.json", &summary)?;
    dir.finish("simulate", cfg, model.map(|m| m.1.clone()).into_iter().collect())?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedGait {
    pub rank: usize,
    pub score: f64,
    pub objectives: Objectives,
    pub gait: GaitSpec,
    /// Re-simulated summary; absent if the gait failed to simulate.
    pub summary: Option<RunSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub mode: Mode,
    pub model_tag: ModelTag,
    pub optimizer: OptConfig,
    /// Individuals copied into the initial population from an earlier report.
    pub seeded: usize,
    pub evaluations: usize,
    pub history: Vec<GenerationSummary>,
    pub final_front: Vec<Objectives>,
    pub top: Vec<RankedGait>,
}

impl OptimizeReport {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing report {}", path.display()))
    }
}

pub fn optimize(
    cfg: &RunConfig,
    mode: Mode,
    model: Option<&(LstmModel, FileEntry)>,
    init: Option<&Path>,
    out: &Path,
) -> anyhow::Result<OptimizeReport> {
    let mut inputs: Vec<FileEntry> = model.map(|m| m.1.clone()).into_iter().collect();
    let seeds: Vec<Vec<f64>> = match init {
        Some(p) => {
            inputs.push(FileEntry::of(p)?);
            OptimizeReport::load(p)
                .context("initial population")?
                .top
                .iter()
                .map(|r| genes_from_gait(&r.gait.to_gait()))
                .collect()
        }
        None => Vec::new(),
    };
    let sim = simulator(cfg, model.map(|m| &m.0));
    let problem = GaitProblem::new(&sim, mode);
    let opt = cfg.opt_config(mode);
    let run = nsga2_run_from(&problem, &opt, &seeds).context("search")?;
    let best = score_and_rank(&run.archive, &opt.weights, opt.retain_k);
    let gaits: Vec<_> = best.iter().map(|b| gait_from_genes(&b.genes)).collect();
    let trajs = problem.simulate_all(&gaits);
    let top: Vec<RankedGait> = best
        .iter()
        .zip(&gaits)
        .zip(trajs)
        .enumerate()
        .map(|(i, ((b, g), t))| RankedGait {
            rank: i + 1,
            score: b.score,
            objectives: b.objectives,
            gait: GaitSpec::from_gait(g),
            summary: t.map(|t| RunSummary::of(&t, cfg.body.finish_distance)),
        })
        .collect();
    let report = OptimizeReport {
        mode,
        model_tag: sim.model.tag(),
        optimizer: opt,
        seeded: seeds.len().min(cfg.optimize.population),
        evaluations: run.archive.len(),
        history: run.history,
        final_front: run.front.iter().map(|p| p.objectives).collect(),
        top,
    };
    let mut dir = OutputDir::create(out)?;
    dir.write_json("report.json", &report)?;
    for r in &report.top {
        dir.write(&format!("gaits/rank_{}.toml", r.rank), toml::to_string(&r.gait).context("gait toml")?.as_bytes())?;
    }
    dir.finish("optimize", cfg, inputs)?;
    Ok(report)
}
