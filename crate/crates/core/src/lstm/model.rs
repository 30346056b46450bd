use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{OUTPUT_WIDTH, HIDDEN};
use crate::data::{INPUT_WIDTH, WINDOW_LEN};
use crate::error::{Error, Result};

/// Per-channel affine normalization `(x - mean) / std`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Norm {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Norm {
    pub fn identity(width: usize) -> Self {
        Self { mean: vec![0.0; width], std: vec![1.0; width] }
    }

    /// Statistics of the rows of `rows`; near-constant channels get unit std.
    pub fn fit<'a, const W: usize>(rows: impl IntoIterator<Item = &'a [f64; W]>) -> Self {
        let mut n = 0.0;
        let mut sum = [0.0; W];
        let mut sq = [0.0; W];
        for r in rows {
            n += 1.0;
            for k in 0..W {
                sum[k] += r[k];
                sq[k] += r[k] * r[k];
            }
        }
        let n = f64::max(n, 1.0);
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let std = (0..W)
            .map(|k| {
                let var = (sq[k] / n - mean[k] * mean[k]).max(0.0);
                let sd = var.sqrt();
                if sd > 1e-9 * (1.0 + mean[k].abs()) { sd } else { 1.0 }
            })
            .collect();
        Self { mean, std }
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn normalize(&self, k: usize, x: f64) -> f64 {
        (x - self.mean[k]) / self.std[k]
    }

    pub fn denormalize(&self, k: usize, z: f64) -> f64 {
        z * self.std[k] + self.mean[k]
    }
}

/// One recurrent layer. Gate blocks are stacked in the order input, forget,
/// cell candidate, output; each block has `hidden` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// `4h x input`
    pub w: Array2<f64>,
    /// `4h x h`
    pub u: Array2<f64>,
    /// `4h`
    pub b: Array1<f64>,
}

impl LayerParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w: Array2::zeros((4 * hidden, input)),
            u: Array2::zeros((4 * hidden, hidden)),
            b: Array1::zeros(4 * hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.u.ncols()
    }

    pub fn input(&self) -> usize {
        self.w.ncols()
    }

    fn init(input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(input, hidden);
        let bw = 1.0 / (input as f64).sqrt();
        let bu = 1.0 / (hidden as f64).sqrt();
        p.w.mapv_inplace(|_| rng.random_range(-bw..bw));
        p.u.mapv_inplace(|_| rng.random_range(-bu..bu));
        p.b.slice_mut(s![hidden..2 * hidden]).fill(1.0);
        p
    }
}

/// Trainable tensors of the network. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub layer1: LayerParams,
    pub layer2: LayerParams,
    /// `6 x h`
    pub head_w: Array2<f64>,
    pub head_b: Array1<f64>,
}

pub const TENSOR_NAMES: [&str; 8] = [
    "layer1.w", "layer1.u", "layer1.b", "layer2.w", "layer2.u", "layer2.b", "head.w", "head.b",
];

impl Weights {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            layer1: LayerParams::zeros(INPUT_WIDTH, hidden),
            layer2: LayerParams::zeros(hidden, hidden),
            head_w: Array2::zeros((OUTPUT_WIDTH, hidden)),
            head_b: Array1::zeros(OUTPUT_WIDTH),
        }
    }

    pub fn hidden(&self) -> usize {
        self.layer1.hidden()
    }

    pub fn tensors(&self) -> [&[f64]; 8] {
        [
            slice(&self.layer1.w),
            slice(&self.layer1.u),
            self.layer1.b.as_slice().expect("contiguous"),
            slice(&self.layer2.w),
            slice(&self.layer2.u),
            self.layer2.b.as_slice().expect("contiguous"),
            slice(&self.head_w),
            self.head_b.as_slice().expect("contiguous"),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 8] {
        [
            self.layer1.w.as_slice_mut().expect("contiguous"),
            self.layer1.u.as_slice_mut().expect("contiguous"),
            self.layer1.b.as_slice_mut().expect("contiguous"),
            self.layer2.w.as_slice_mut().expect("contiguous"),
            self.layer2.u.as_slice_mut().expect("contiguous"),
            self.layer2.b.as_slice_mut().expect("contiguous"),
            self.head_w.as_slice_mut().expect("contiguous"),
            self.head_b.as_slice_mut().expect("contiguous"),
        ]
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn norm(&self) -> f64 {
        self.tensors().iter().flat_map(|t| t.iter()).map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, k: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= k);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

fn slice(a: &Array2<f64>) -> &[f64] {
    a.as_slice().expect("weights are standard-layout")
}

/// Two stacked LSTM layers and a linear head on the last hidden state, with
/// frozen input and target normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub weights: Weights,
    pub input_norm: Norm,
    pub target_norm: Norm,
}

/// Layer activations kept for backpropagation. Rows are `t * batch + b`.
#[derive(Debug, Clone)]
pub(crate) struct LayerCache {
    /// Post-activation gates `[i | f | g | o]`, `T*B x 4h`.
    pub gates: Array2<f64>,
    pub c: Array2<f64>,
    pub tanh_c: Array2<f64>,
    pub h: Array2<f64>,
}

#[inline(always)]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Hyperbolic tangent through one exponential, about twice as fast as libm's;
/// absolute error within a few ulps of 1, which is all the cell needs.
#[inline(always)]
pub(crate) fn tanh(x: f64) -> f64 {
    2.0 * sigmoid(2.0 * x) - 1.0
}

/// Runs one layer over `x` (`T*B x input`, time-major rows).
pub(crate) fn layer_forward(p: &LayerParams, x: ArrayView2<f64>, steps: usize, batch: usize) -> LayerCache {
    let hd = p.hidden();
    let mut gates = Array2::<f64>::zeros((steps * batch, 4 * hd));
    general_mat_mul(1.0, &x, &p.w.t(), 0.0, &mut gates);
    gates += &p.b;
    let mut c = Array2::<f64>::zeros((steps * batch, hd));
    let mut tanh_c = Array2::<f64>::zeros((steps * batch, hd));
    let mut h = Array2::<f64>::zeros((steps * batch, hd));
    let ut = p.u.t();

    for t in 0..steps {
        let rows = t * batch..(t + 1) * batch;
        if t > 0 {
            let h_prev = h.slice(s![rows.start - batch..rows.start, ..]);
            let mut z = gates.slice_mut(s![rows.clone(), ..]);
            general_mat_mul(1.0, &h_prev, &ut, 1.0, &mut z);
        }
        let gs = gates.as_slice_mut().expect("row-major");
        let cs = c.as_slice_mut().expect("row-major");
        let tcs = tanh_c.as_slice_mut().expect("row-major");
        let hs = h.as_slice_mut().expect("row-major");
        for r in rows {
            let z = &mut gs[r * 4 * hd..(r + 1) * 4 * hd];
            let (zi, rest) = z.split_at_mut(hd);
            let (zf, rest) = rest.split_at_mut(hd);
            let (zg, zo) = rest.split_at_mut(hd);
            for v in zi.iter_mut().chain(zf.iter_mut()) {
                *v = sigmoid(*v);
            }
            for v in zg.iter_mut() {
                *v = tanh(*v);
            }
            for v in zo.iter_mut() {
                *v = sigmoid(*v);
            }
            let (before, cur) = cs.split_at_mut(r * hd);
            let c_row = &mut cur[..hd];
            if r >= batch {
                let c_prev = &before[(r - batch) * hd..(r - batch + 1) * hd];
                for j in 0..hd {
                    c_row[j] = zf[j] * c_prev[j] + zi[j] * zg[j];
                }
            } else {
                for j in 0..hd {
                    c_row[j] = zi[j] * zg[j];
                }
            }
            let tc_row = &mut tcs[r * hd..(r + 1) * hd];
            let h_row = &mut hs[r * hd..(r + 1) * hd];
            for j in 0..hd {
                tc_row[j] = tanh(c_row[j]);
                h_row[j] = zo[j] * tc_row[j];
            }
        }
    }
    LayerCache { gates, c, tanh_c, h }
}

impl LstmModel {
    /// Freshly initialized network: weights uniform in `+-1/sqrt(fan_in)`,
    /// forget-gate bias 1, identity normalization.
    pub fn new(hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layer1 = LayerParams::init(INPUT_WIDTH, hidden, &mut rng);
        let layer2 = LayerParams::init(hidden, hidden, &mut rng);
        let bh = 1.0 / (hidden as f64).sqrt();
        let head_w = Array2::from_shape_fn((OUTPUT_WIDTH, hidden), |_| rng.random_range(-bh..bh));
        Self {
            weights: Weights { layer1, layer2, head_w, head_b: Array1::zeros(OUTPUT_WIDTH) },
            input_norm: Norm::identity(INPUT_WIDTH),
            target_norm: Norm::identity(OUTPUT_WIDTH),
        }
    }

    /// Production architecture.
    pub fn standard(seed: u64) -> Self {
        Self::new(HIDDEN, seed)
    }

    pub fn zeros(hidden: usize) -> Self {
        Self {
            weights: Weights::zeros(hidden),
            input_norm: Norm::identity(INPUT_WIDTH),
            target_norm: Norm::identity(OUTPUT_WIDTH),
        }
    }

    pub fn hidden(&self) -> usize {
        self.weights.hidden()
    }

    /// Normalized time-major input matrix (`T*B x 5`) for raw windows.
    pub fn normalize_windows(&self, windows: &[&[[f64; INPUT_WIDTH]]]) -> Array2<f64> {
        let batch = windows.len();
        let steps = windows.first().map_or(0, |w| w.len());
        let mut x = Array2::zeros((steps * batch, INPUT_WIDTH));
        for (b, w) in windows.iter().enumerate() {
            assert_eq!(w.len(), steps, "windows in one batch must share a length");
            for (t, row) in w.iter().enumerate() {
                for k in 0..INPUT_WIDTH {
                    x[[t * batch + b, k]] = self.input_norm.normalize(k, row[k]);
                }
            }
        }
        x
    }

    /// Normalized outputs for normalized time-major input, inference mode.
    pub fn forward_normalized(&self, x: ArrayView2<f64>, steps: usize) -> Array2<f64> {
        let batch = x.nrows() / steps.max(1);
        let l1 = layer_forward(&self.weights.layer1, x, steps, batch);
        let l2 = layer_forward(&self.weights.layer2, l1.h.view(), steps, batch);
        let last = l2.h.slice(s![(steps - 1) * batch.., ..]);
        let mut y = last.dot(&self.weights.head_w.t());
        y += &self.weights.head_b;
        y
    }

    /// De-normalized wrench channels for a batch of raw windows.
    pub fn predict_batch(&self, windows: &[&[[f64; INPUT_WIDTH]]]) -> Vec<[f64; OUTPUT_WIDTH]> {
        if windows.is_empty() {
            return Vec::new();
        }
        let steps = windows[0].len();
        let x = self.normalize_windows(windows);
        let y = self.forward_normalized(x.view(), steps);
        y.axis_iter(Axis(0))
            .map(|row| {
                let mut out = [0.0; OUTPUT_WIDTH];
                for k in 0..OUTPUT_WIDTH {
                    out[k] = self.target_norm.denormalize(k, row[k]);
                }
                out
            })
            .collect()
    }

    pub fn predict(&self, window: &[[f64; INPUT_WIDTH]]) -> [f64; OUTPUT_WIDTH] {
        self.predict_batch(&[window])[0]
    }

    /// Checks that every tensor has the shape implied by the hidden width.
    pub fn validate(&self) -> Result<()> {
        let h = self.hidden();
        let w = &self.weights;
        let shapes = [
            (w.layer1.w.dim(), (4 * h, INPUT_WIDTH)),
            (w.layer1.u.dim(), (4 * h, h)),
            (w.layer2.w.dim(), (4 * h, h)),
            (w.layer2.u.dim(), (4 * h, h)),
            (w.head_w.dim(), (OUTPUT_WIDTH, h)),
            ((w.layer1.b.len(), 1), (4 * h, 1)),
            ((w.layer2.b.len(), 1), (4 * h, 1)),
            ((w.head_b.len(), 1), (OUTPUT_WIDTH, 1)),
        ];
        if let Some((got, want)) = shapes.iter().find(|(g, w)| g != w) {
            return Err(Error::Model(format!("tensor shape {got:?}, expected {want:?}")));
        }
        if self.input_norm.width() != INPUT_WIDTH || self.target_norm.width() != OUTPUT_WIDTH {
            return Err(Error::Model("normalization width mismatch".into()));
        }
        if self.input_norm.std.iter().chain(&self.target_norm.std).any(|s| !(*s > 0.0)) {
            return Err(Error::Model("normalization std must be positive".into()));
        }
        Ok(())
    }

    pub fn window_len(&self) -> usize {
        WINDOW_LEN
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn window(seed: u64) -> Vec<[f64; INPUT_WIDTH]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..WINDOW_LEN).map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))).collect()
    }

    #[test]
    fn zero_network_returns_target_mean() {
        let mut m = LstmModel::zeros(HIDDEN);
        m.target_norm = Norm { mean: vec![1.0, -2.0, 3.0, 0.5, 0.25, -0.125], std: vec![2.0; 6] };
        let y = m.predict(&window(1));
        assert_eq!(y.to_vec(), m.target_norm.mean);
    }

    #[test]
    fn inference_is_deterministic() {
        let m = LstmModel::standard(3);
        let w = window(4);
        let a = m.predict(&w);
        let b = m.predict(&w);
        assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
    }

    #[test]
    fn batch_rows_are_independent() {
        let m = LstmModel::new(8, 5);
        let ws: Vec<_> = (0..5).map(window).collect();
        let refs: Vec<&[[f64; INPUT_WIDTH]]> = ws.iter().map(|w| w.as_slice()).collect();
        let batch = m.predict_batch(&refs);
        for (w, y) in ws.iter().zip(batch) {
            let single = m.predict(w);
            for k in 0..OUTPUT_WIDTH {
                assert_abs_diff_eq!(single[k], y[k], epsilon = 1e-13);
            }
        }
    }

    /// Scalar LSTM cell evaluated by hand on a two-step sequence.
    #[test]
    fn one_unit_cell_matches_hand_recurrence() {
        let mut m = LstmModel::zeros(1);
        // layer 1 reads only the first input column
        let w1 = [0.5, -0.3, 0.8, 0.2];
        let u1 = [0.1, 0.4, -0.6, 0.3];
        let b1 = [0.05, 1.0, -0.1, 0.2];
        for g in 0..4 {
            m.weights.layer1.w[[g, 0]] = w1[g];
            m.weights.layer1.u[[g, 0]] = u1[g];
            m.weights.layer1.b[g] = b1[g];
            m.weights.layer2.w[[g, 0]] = 1.0;
        }
        m.weights.head_w[[0, 0]] = 2.0;
        m.weights.head_b[0] = -0.5;

        let xs = [0.7, -1.2];
        let window: Vec<[f64; INPUT_WIDTH]> = xs.iter().map(|&x| [x, 0.0, 0.0, 0.0, 0.0]).collect();

        // hand recurrence, layer 1
        let sg = |v: f64| 1.0 / (1.0 + (-v).exp());
        let (mut h, mut c) = (0.0f64, 0.0f64);
        let mut h1 = Vec::new();
        for &x in &xs {
            let i = sg(w1[0] * x + u1[0] * h + b1[0]);
            let f = sg(w1[1] * x + u1[1] * h + b1[1]);
            let g = (w1[2] * x + u1[2] * h + b1[2]).tanh();
            let o = sg(w1[3] * x + u1[3] * h + b1[3]);
            c = f * c + i * g;
            h = o * c.tanh();
            h1.push(h);
        }
        // layer 2: unit input weights, no recurrence, zero bias
        let (mut h2, mut c2) = (0.0f64, 0.0f64);
        for &x in &h1 {
            let (i, f, g, o) = (sg(x), sg(x), x.tanh(), sg(x));
            c2 = f * c2 + i * g;
            h2 = o * c2.tanh();
        }
        let expected = 2.0 * h2 - 0.5;
        let got = m.predict(&window);
        assert_abs_diff_eq!(got[0], expected, epsilon = 1e-15);
        assert_eq!(got[1], 0.0);
    }

    #[test]
    fn shapes_validated() {
        let mut m = LstmModel::new(4, 0);
        assert!(m.validate().is_ok());
        m.weights.head_w = Array2::zeros((6, 5));
        assert!(matches!(m.validate(), Err(Error::Model(_))));
    }

    proptest! {
        #[test]
        fn normalization_round_trips(x in -1e3f64..1e3, mean in -10f64..10.0, sd in 1e-3f64..1e3) {
            let n = Norm { mean: vec![mean], std: vec![sd] };
            let back = n.denormalize(0, n.normalize(0, x));
            prop_assert!((back - x).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }
}
