use serde::{Deserialize, Serialize};

use super::model::{LstmModel, Norm};
use super::train::WindowDataset;
use super::OUTPUT_WIDTH;
use crate::data::ef_predictions;
use crate::error::Result;
use crate::hydro::EfParams;
use crate::kinematics::LinkageGeometry;
use crate::wrench::channel;

/// Channels averaged into the headline error: `f_y`, `f_z`, `tau_x`.
pub const AGGREGATE_CHANNELS: [usize; 3] = [channel::F_Y, channel::F_Z, channel::TAU_X];

pub fn aggregate(mse: &[f64; OUTPUT_WIDTH]) -> f64 {
    AGGREGATE_CHANNELS.iter().map(|&k| mse[k]).sum::<f64>() / AGGREGATE_CHANNELS.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub samples: usize,
    /// Physical units (N^2, N^2 m^2).
    pub mse: [f64; OUTPUT_WIDTH],
    pub aggregate: f64,
    /// Each channel divided by the squared normalization std, when known.
    pub mse_normalized: Option<[f64; OUTPUT_WIDTH]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedStats {
    pub v_flow: f64,
    pub stats: ErrorStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetStats {
    pub set_id: usize,
    pub v_flow: f64,
    pub stats: ErrorStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub overall: ErrorStats,
    /// Ascending flow speed.
    pub by_speed: Vec<SpeedStats>,
    pub by_set: Vec<SetStats>,
}

impl Evaluation {
    pub fn at_speed(&self, v: f64) -> Option<&ErrorStats> {
        self.by_speed.iter().find(|s| (s.v_flow - v).abs() < 1e-9).map(|s| &s.stats)
    }
}

#[derive(Default)]
struct Acc {
    n: usize,
    sq: [f64; OUTPUT_WIDTH],
}

impl Acc {
    fn add(&mut self, p: &[f64; OUTPUT_WIDTH], t: &[f64; OUTPUT_WIDTH]) {
        self.n += 1;
        for k in 0..OUTPUT_WIDTH {
            self.sq[k] += (p[k] - t[k]).powi(2);
        }
    }

    fn stats(&self, norm: Option<&Norm>) -> ErrorStats {
        let n = self.n.max(1) as f64;
        let mse = self.sq.map(|s| s / n);
        ErrorStats {
            samples: self.n,
            mse,
            aggregate: aggregate(&mse),
            mse_normalized: norm.map(|nm| std::array::from_fn(|k| mse[k] / (nm.std[k] * nm.std[k]))),
        }
    }
}

/// Squared-error statistics of `preds` against the dataset targets, overall,
/// per flow speed and per set.
pub fn evaluate(data: &WindowDataset, preds: &[[f64; OUTPUT_WIDTH]], norm: Option<&Norm>) -> Evaluation {
    assert_eq!(preds.len(), data.len(), "one prediction per window");
    let mut all = Acc::default();
    let mut speeds: Vec<(f64, Acc)> = Vec::new();
    let mut sets: Vec<(usize, Acc)> = Vec::new();
    for (r, p) in data.refs.iter().zip(preds) {
        let t = data.target(*r);
        all.add(p, &t);
        let v = data.sets[r.set].v_flow;
        match speeds.iter_mut().find(|(s, _)| (s - v).abs() < 1e-9) {
            Some((_, a)) => a.add(p, &t),
            None => {
                let mut a = Acc::default();
                a.add(p, &t);
                speeds.push((v, a));
            }
        }
        match sets.last_mut() {
            Some((s, a)) if *s == r.set => a.add(p, &t),
            _ => {
                let mut a = Acc::default();
                a.add(p, &t);
                sets.push((r.set, a));
            }
        }
    }
    speeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    Evaluation {
        overall: all.stats(norm),
        by_speed: speeds.iter().map(|(v, a)| SpeedStats { v_flow: *v, stats: a.stats(norm) }).collect(),
        by_set: sets
            .iter()
            .map(|(i, a)| SetStats { set_id: data.sets[*i].id, v_flow: data.sets[*i].v_flow, stats: a.stats(norm) })
            .collect(),
    }
}

/// Surrogate predictions for every window, in dataset order.
pub fn lstm_predictions(model: &LstmModel, data: &WindowDataset, batch: usize) -> Vec<[f64; OUTPUT_WIDTH]> {
    let mut out = Vec::with_capacity(data.len());
    for chunk in data.refs.chunks(batch.max(1)) {
        let windows: Vec<_> = chunk.iter().map(|r| data.window(*r)).collect();
        let refs: Vec<&[[f64; crate::data::INPUT_WIDTH]]> = windows.iter().map(|w| w.as_slice()).collect();
        out.extend(model.predict_batch(&refs));
    }
    out
}

/// Empirical-model predictions for every window, in dataset order.
pub fn ef_window_predictions(
    data: &WindowDataset,
    geom: &LinkageGeometry,
    ef: &EfParams,
) -> Result<Vec<[f64; OUTPUT_WIDTH]>> {
    let mut cache: Option<(usize, Vec<[f64; OUTPUT_WIDTH]>)> = None;
    let mut out = Vec::with_capacity(data.len());
    for r in &data.refs {
        if cache.as_ref().map(|(s, _)| *s) != Some(r.set) {
            let w = ef_predictions(&data.sets[r.set], geom, ef)?;
            cache = Some((r.set, w.iter().map(|x| x.to_channels()).collect()));
        }
        out.push(cache.as_ref().expect("filled above").1[r.end]);
    }
    Ok(out)
}

/// Tukey box summary with 1.5 IQR whiskers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSummary {
    pub count: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn box_summary(values: &[f64]) -> Option<BoxSummary> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q1 = quantile(&v, 0.25);
    let q3 = quantile(&v, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = v.iter().copied().filter(|x| *x >= lo_fence && *x <= hi_fence).collect();
    Some(BoxSummary {
        count: v.len(),
        median: quantile(&v, 0.5),
        q1,
        q3,
        whisker_low: inside.first().copied().unwrap_or(q1),
        whisker_high: inside.last().copied().unwrap_or(q3),
        outliers: v.iter().copied().filter(|x| *x < lo_fence || *x > hi_fence).collect(),
    })
}

/// Box summary of per-set aggregate errors at each flow speed.
pub fn speed_boxes(eval: &Evaluation) -> Vec<(f64, BoxSummary)> {
    let mut speeds: Vec<f64> = eval.by_speed.iter().map(|s| s.v_flow).collect();
    speeds.dedup();
    speeds
        .into_iter()
        .filter_map(|v| {
            let vals: Vec<f64> = eval
                .by_set
                .iter()
                .filter(|s| (s.v_flow - v).abs() < 1e-9)
                .map(|s| s.stats.aggregate)
                .collect();
            box_summary(&vals).map(|b| (v, b))
        })
        .collect()
}
