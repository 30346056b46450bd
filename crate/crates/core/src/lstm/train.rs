use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{layer_forward, LayerCache, LayerParams, LstmModel, Norm, Weights};
use super::OUTPUT_WIDTH;
use crate::data::{RecordSet, WindowRef, INPUT_WIDTH, WINDOW_LEN};
use crate::error::{Error, Result};

/// Parameter update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    /// Plain gradient descent.
    #[default]
    Sgd,
    /// Adam with the usual moment decays (0.9, 0.999).
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub dropout: f64,
    pub lr_min: f64,
    pub lr_max: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Global gradient-norm ceiling.
    pub grad_clip: f64,
    pub update: UpdateRule,
    /// Training windows drawn per epoch; `None` uses them all.
    pub samples_per_epoch: Option<usize>,
    /// Keeps every n-th window of each validation set.
    pub eval_stride: usize,
    pub hidden: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dropout: 0.21,
            lr_min: 0.001,
            lr_max: 0.1,
            batch_size: 64,
            max_epochs: 200,
            patience: 5,
            seed: 0,
            grad_clip: 5.0,
            update: UpdateRule::Sgd,
            samples_per_epoch: None,
            eval_stride: 1,
            hidden: super::HIDDEN,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if !(self.lr_min > 0.0 && self.lr_min <= self.lr_max) {
            return bad("learning rates need 0 < lr_min <= lr_max");
        }
        if self.batch_size == 0 || self.eval_stride == 0 || self.hidden == 0 {
            return bad("batch_size, eval_stride and hidden must be positive");
        }
        if !(self.grad_clip > 0.0) {
            return bad("grad_clip must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
}

/// Windows over a collection of sets, assembled into normalized batches on
/// demand.
#[derive(Debug, Clone)]
pub struct WindowDataset<'a> {
    pub sets: &'a [RecordSet],
    pub refs: Vec<WindowRef>,
}

impl<'a> WindowDataset<'a> {
    pub fn new(sets: &'a [RecordSet], stride: usize) -> Self {
        Self { sets, refs: crate::data::window_refs(sets, WINDOW_LEN, stride) }
    }

    pub fn len(&self) -> usize {
        self.refs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.refs.is_empty()
    }

    pub fn window(&self, r: WindowRef) -> Vec<[f64; INPUT_WIDTH]> {
        let recs = &self.sets[r.set].records;
        recs[r.end + 1 - WINDOW_LEN..=r.end].iter().map(|x| x.input_row()).collect()
    }

    pub fn target(&self, r: WindowRef) -> [f64; OUTPUT_WIDTH] {
        self.sets[r.set].records[r.end].wrench.to_channels()
    }

    /// Normalization statistics over every record reachable by a window.
    pub fn fit_norms(&self) -> (Norm, Norm) {
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for (i, rs) in self.sets.iter().enumerate() {
            if self.refs.iter().any(|r| r.set == i) {
                inputs.extend(rs.records.iter().map(|r| r.input_row()));
                targets.extend(rs.records.iter().map(|r| r.wrench.to_channels()));
            }
        }
        (Norm::fit(&inputs), Norm::fit(&targets))
    }

    /// Normalized `(x, y)` for the windows at `idx`: `x` is time-major
    /// `T*B x 5`, `y` is `B x 6`.
    pub fn batch(&self, model: &LstmModel, idx: &[usize]) -> (Array2<f64>, Array2<f64>) {
        let b = idx.len();
        let mut x = Array2::zeros((WINDOW_LEN * b, INPUT_WIDTH));
        let mut y = Array2::zeros((b, OUTPUT_WIDTH));
        for (col, &i) in idx.iter().enumerate() {
            let r = self.refs[i];
            let recs = &self.sets[r.set].records;
            for t in 0..WINDOW_LEN {
                let row = recs[r.end + 1 - WINDOW_LEN + t].input_row();
                for k in 0..INPUT_WIDTH {
                    x[[t * b + col, k]] = model.input_norm.normalize(k, row[k]);
                }
            }
            let tgt = recs[r.end].wrench.to_channels();
            for k in 0..OUTPUT_WIDTH {
                y[[col, k]] = model.target_norm.normalize(k, tgt[k]);
            }
        }
        (x, y)
    }
}

/// Forward pass that keeps what backpropagation needs.
struct Tape {
    x: Array2<f64>,
    l1: LayerCache,
    mask: Option<Array2<f64>>,
    x2: Array2<f64>,
    l2: LayerCache,
    y: Array2<f64>,
    steps: usize,
    batch: usize,
}

fn forward_tape(w: &Weights, x: Array2<f64>, steps: usize, mask: Option<Array2<f64>>) -> Tape {
    let batch = x.nrows() / steps;
    let l1 = layer_forward(&w.layer1, x.view(), steps, batch);
    let x2 = match &mask {
        Some(m) => &l1.h * m,
        None => l1.h.clone(),
    };
    let l2 = layer_forward(&w.layer2, x2.view(), steps, batch);
    let mut y = l2.h.slice(s![(steps - 1) * batch.., ..]).dot(&w.head_w.t());
    y += &w.head_b;
    Tape { x, l1, mask, x2, l2, y, steps, batch }
}

/// Gradients of one layer given the loss gradient on its hidden outputs;
/// returns the gradient on its inputs.
fn layer_backward(
    p: &LayerParams,
    cache: &LayerCache,
    x: ArrayView2<f64>,
    dh_ext: ArrayView2<f64>,
    steps: usize,
    batch: usize,
    grad: &mut LayerParams,
) -> Array2<f64> {
    let hd = p.hidden();
    let mut dz = Array2::<f64>::zeros((steps * batch, 4 * hd));
    let mut dh_next = Array2::<f64>::zeros((batch, hd));
    let mut dc_next = Array2::<f64>::zeros((batch, hd));
    let gs = cache.gates.as_slice().expect("row-major");
    let cs = cache.c.as_slice().expect("row-major");
    let tcs = cache.tanh_c.as_slice().expect("row-major");

    for t in (0..steps).rev() {
        {
            let dzs = dz.as_slice_mut().expect("row-major");
            let dhn = dh_next.as_slice().expect("row-major");
            let dcn = dc_next.as_slice_mut().expect("row-major");
            for bi in 0..batch {
                let r = t * batch + bi;
                let g = &gs[r * 4 * hd..(r + 1) * 4 * hd];
                let d = &mut dzs[r * 4 * hd..(r + 1) * 4 * hd];
                for j in 0..hd {
                    let (i, f, gg, o) = (g[j], g[hd + j], g[2 * hd + j], g[3 * hd + j]);
                    let tc = tcs[r * hd + j];
                    let cp = if t > 0 { cs[(r - batch) * hd + j] } else { 0.0 };
                    let dh = dhn[bi * hd + j] + dh_ext[[r, j]];
                    let dc = dcn[bi * hd + j] + dh * o * (1.0 - tc * tc);
                    d[j] = dc * gg * i * (1.0 - i);
                    d[hd + j] = dc * cp * f * (1.0 - f);
                    d[2 * hd + j] = dc * i * (1.0 - gg * gg);
                    d[3 * hd + j] = dh * tc * o * (1.0 - o);
                    dcn[bi * hd + j] = dc * f;
                }
            }
        }
        let dz_t = dz.slice(s![t * batch..(t + 1) * batch, ..]);
        general_mat_mul(1.0, &dz_t, &p.u, 0.0, &mut dh_next);
    }

    let n = steps * batch;
    grad.w += &dz.t().dot(&x);
    grad.b += &dz.sum_axis(Axis(0));
    if steps > 1 {
        let dz_late = dz.slice(s![batch..n, ..]);
        let h_early = cache.h.slice(s![0..n - batch, ..]);
        grad.u += &dz_late.t().dot(&h_early);
    }
    dz.dot(&p.w)
}

/// Mean squared error over all outputs in normalized space, with its gradient
/// on `w` accumulated into `grad`.
fn backward(w: &Weights, tape: &Tape, target: ArrayView2<f64>, grad: &mut Weights) -> f64 {
    let (steps, batch) = (tape.steps, tape.batch);
    let count = (batch * OUTPUT_WIDTH) as f64;
    let diff = &tape.y - &target;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / count;
    let dy = diff * (2.0 / count);

    let h_last = tape.l2.h.slice(s![(steps - 1) * batch.., ..]);
    grad.head_w += &dy.t().dot(&h_last);
    grad.head_b += &dy.sum_axis(Axis(0));

    let mut dh2 = Array2::<f64>::zeros((steps * batch, w.hidden()));
    dh2.slice_mut(s![(steps - 1) * batch.., ..]).assign(&dy.dot(&w.head_w));
    let dx2 = layer_backward(&w.layer2, &tape.l2, tape.x2.view(), dh2.view(), steps, batch, &mut grad.layer2);
    let dh1 = match &tape.mask {
        Some(m) => dx2 * m,
        None => dx2,
    };
    layer_backward(&w.layer1, &tape.l1, tape.x.view(), dh1.view(), steps, batch, &mut grad.layer1);
    loss
}

/// Loss and gradient for one normalized batch. `mask` multiplies the
/// layer-1 outputs (inverted dropout) when given.
pub fn loss_and_grad(
    w: &Weights,
    x: Array2<f64>,
    y: ArrayView2<f64>,
    steps: usize,
    mask: Option<Array2<f64>>,
) -> (f64, Weights) {
    let tape = forward_tape(w, x, steps, mask);
    let mut grad = Weights::zeros(w.hidden());
    let loss = backward(w, &tape, y, &mut grad);
    (loss, grad)
}

/// Loss without gradient, inference mode.
pub fn batch_loss(w: &Weights, x: Array2<f64>, y: ArrayView2<f64>, steps: usize) -> f64 {
    let tape = forward_tape(w, x, steps, None);
    let diff = &tape.y - &y;
    diff.iter().map(|d| d * d).sum::<f64>() / diff.len() as f64
}

fn dropout_mask(rows: usize, cols: usize, p: f64, rng: &mut impl Rng) -> Option<Array2<f64>> {
    (p > 0.0).then(|| {
        let keep = 1.0 / (1.0 - p);
        Array2::from_shape_simple_fn((rows, cols), || if rng.random::<f64>() < p { 0.0 } else { keep })
    })
}

/// Update-rule state carried across epochs.
#[derive(Debug, Clone)]
pub struct Optimizer {
    rule: UpdateRule,
    m: Option<Weights>,
    v: Option<Weights>,
    steps: i32,
}

impl Optimizer {
    pub fn new(rule: UpdateRule) -> Self {
        Self { rule, m: None, v: None, steps: 0 }
    }

    fn apply(&mut self, w: &mut Weights, g: &Weights, lr: f64) {
        match self.rule {
            UpdateRule::Sgd => {
                for (p, d) in w.tensors_mut().into_iter().zip(g.tensors()) {
                    p.iter_mut().zip(d).for_each(|(p, d)| *p -= lr * d);
                }
            }
            UpdateRule::Adam => {
                const B1: f64 = 0.9;
                const B2: f64 = 0.999;
                const EPS: f64 = 1e-8;
                let h = w.hidden();
                let m = self.m.get_or_insert_with(|| Weights::zeros(h));
                let v = self.v.get_or_insert_with(|| Weights::zeros(h));
                self.steps += 1;
                let c1 = 1.0 - B1.powi(self.steps);
                let c2 = 1.0 - B2.powi(self.steps);
                for (((p, d), m), v) in w.tensors_mut().into_iter().zip(g.tensors()).zip(m.tensors_mut()).zip(v.tensors_mut()) {
                    for k in 0..p.len() {
                        m[k] = B1 * m[k] + (1.0 - B1) * d[k];
                        v[k] = B2 * v[k] + (1.0 - B2) * d[k] * d[k];
                        p[k] -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + EPS);
                    }
                }
            }
        }
    }
}

/// One pass over (a shuffled subset of) the training windows. Returns the
/// mean normalized training MSE.
pub fn train_epoch(
    model: &mut LstmModel,
    data: &WindowDataset,
    cfg: &TrainConfig,
    lr: f64,
    opt: &mut Optimizer,
    rng: &mut ChaCha8Rng,
    epoch: usize,
) -> Result<f64> {
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(rng);
    if let Some(n) = cfg.samples_per_epoch {
        order.truncate(n);
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (bi, idx) in order.chunks(cfg.batch_size).enumerate() {
        let (x, y) = data.batch(model, idx);
        let mask = dropout_mask(x.nrows(), model.hidden(), cfg.dropout, rng);
        let (loss, mut grad) = loss_and_grad(&model.weights, x, y.view(), WINDOW_LEN, mask);
        if !loss.is_finite() || !grad.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, batch: bi });
        }
        let gn = grad.norm();
        if gn > cfg.grad_clip {
            grad.scale(cfg.grad_clip / gn);
        }
        if lr > 0.0 {
            opt.apply(&mut model.weights, &grad, lr);
        }
        total += loss * idx.len() as f64;
        count += idx.len();
    }
    Ok(if count > 0 { total / count as f64 } else { 0.0 })
}

/// Mean normalized MSE over a dataset, inference mode.
pub fn dataset_mse(model: &LstmModel, data: &WindowDataset, batch: usize) -> f64 {
    let idx: Vec<usize> = (0..data.len()).collect();
    let mut total = 0.0;
    for chunk in idx.chunks(batch.max(1)) {
        let (x, y) = data.batch(model, chunk);
        total += batch_loss(&model.weights, x, y.view(), WINDOW_LEN) * chunk.len() as f64;
    }
    if idx.is_empty() { f64::NAN } else { total / idx.len() as f64 }
}

/// Reduce-on-plateau learning-rate control.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauSchedule {
    pub lr: f64,
    lr_min: f64,
    lr_max: f64,
    patience: usize,
    best: f64,
    stale: usize,
    reductions_at_min: usize,
}

impl PlateauSchedule {
    pub const STOP_AFTER: usize = 3;

    pub fn new(cfg: &TrainConfig) -> Self {
        Self {
            lr: (cfg.lr_max / 10.0).clamp(cfg.lr_min, cfg.lr_max),
            lr_min: cfg.lr_min,
            lr_max: cfg.lr_max,
            patience: cfg.patience.max(1),
            best: f64::INFINITY,
            stale: 0,
            reductions_at_min: 0,
        }
    }

    /// Records one epoch's validation loss. Returns whether it improved on the
    /// best so far.
    pub fn observe(&mut self, val: f64) -> bool {
        if val < self.best {
            self.best = val;
            self.stale = 0;
            self.reductions_at_min = 0;
            return true;
        }
        self.stale += 1;
        if self.stale >= self.patience {
            self.stale = 0;
            if self.lr <= self.lr_min {
                self.reductions_at_min += 1;
            }
            self.lr = (self.lr * 0.5).clamp(self.lr_min, self.lr_max);
        }
        false
    }

    pub fn should_stop(&self) -> bool {
        self.reductions_at_min >= Self::STOP_AFTER
    }
}

/// Trains from a fresh initialization with normalization fitted on `train`.
/// Returns the model from the epoch with the lowest validation MSE.
pub fn fit(train: &[RecordSet], val: &[RecordSet], cfg: &TrainConfig) -> Result<(LstmModel, TrainHistory)> {
    let mut model = LstmModel::new(cfg.hidden, cfg.seed);
    let train_data = WindowDataset::new(train, 1);
    let (inorm, tnorm) = train_data.fit_norms();
    model.input_norm = inorm;
    model.target_norm = tnorm;
    fit_model(model, &train_data, &WindowDataset::new(val, cfg.eval_stride), cfg)
}

/// Training loop on prepared datasets; normalization of `model` is kept.
pub fn fit_model(
    mut model: LstmModel,
    train: &WindowDataset,
    val: &WindowDataset,
    cfg: &TrainConfig,
) -> Result<(LstmModel, TrainHistory)> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::InvalidParameter("training and validation splits need windows".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_1e57);
    let mut sched = PlateauSchedule::new(cfg);
    let mut opt = Optimizer::new(cfg.update);
    let mut history = TrainHistory::default();
    let mut best = model.clone();

    for epoch in 0..cfg.max_epochs {
        let lr = sched.lr;
        let train_mse = train_epoch(&mut model, train, cfg, lr, &mut opt, &mut rng, epoch)?;
        let val_mse = dataset_mse(&model, val, 256);
        if !val_mse.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, batch: 0 });
        }
        history.epochs.push(EpochRecord { epoch, train_mse, val_mse, lr });
        if sched.observe(val_mse) {
            best = model.clone();
            history.best_epoch = epoch;
        }
        if sched.should_stop() {
            break;
        }
    }
    Ok((best, history))
}
