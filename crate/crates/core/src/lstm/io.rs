//! JSON weight files. Matrices are stored row-major with explicit shapes;
//! loading checks every shape against the architecture.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::model::{LayerParams, LstmModel, Norm, Weights, TENSOR_NAMES};
use super::OUTPUT_WIDTH;
use crate::data::INPUT_WIDTH;
use crate::error::{Error, Result};

pub const FORMAT: &str = "aquaped-lstm";
pub const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Tensor {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    input_width: usize,
    hidden: usize,
    output_width: usize,
    layers: usize,
    input_norm: Norm,
    target_norm: Norm,
    tensors: Vec<Tensor>,
}

impl LstmModel {
    pub fn to_json(&self) -> String {
        let w = &self.weights;
        let shapes: [Vec<usize>; 8] = [
            w.layer1.w.shape().to_vec(),
            w.layer1.u.shape().to_vec(),
            w.layer1.b.shape().to_vec(),
            w.layer2.w.shape().to_vec(),
            w.layer2.u.shape().to_vec(),
            w.layer2.b.shape().to_vec(),
            w.head_w.shape().to_vec(),
            w.head_b.shape().to_vec(),
        ];
        let tensors = TENSOR_NAMES
            .iter()
            .zip(shapes)
            .zip(w.tensors())
            .map(|((name, shape), data)| Tensor { name: name.to_string(), shape, data: data.to_vec() })
            .collect();
        let file = ModelFile {
            format: FORMAT.into(),
            version: VERSION,
            input_width: INPUT_WIDTH,
            hidden: self.hidden(),
            output_width: OUTPUT_WIDTH,
            layers: 2,
            input_norm: self.input_norm.clone(),
            target_norm: self.target_norm.clone(),
            tensors,
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(text).map_err(|e| Error::Model(format!("malformed model file: {e}")))?;
        if f.format != FORMAT || f.version != VERSION {
            return Err(Error::Model(format!(
                "unsupported model format '{}' v{}, expected '{FORMAT}' v{VERSION}",
                f.format, f.version
            )));
        }
        if f.input_width != INPUT_WIDTH || f.output_width != OUTPUT_WIDTH || f.layers != 2 || f.hidden == 0 {
            return Err(Error::Model(format!(
                "architecture {}x{} layers={} -> {} does not match {INPUT_WIDTH} -> 2 layers -> {OUTPUT_WIDTH}",
                f.input_width, f.hidden, f.layers, f.output_width
            )));
        }
        let h = f.hidden;
        let expected: [Vec<usize>; 8] = [
            vec![4 * h, INPUT_WIDTH],
            vec![4 * h, h],
            vec![4 * h],
            vec![4 * h, h],
            vec![4 * h, h],
            vec![4 * h],
            vec![OUTPUT_WIDTH, h],
            vec![OUTPUT_WIDTH],
        ];
        if f.tensors.len() != TENSOR_NAMES.len() {
            return Err(Error::Model(format!("expected {} tensors, found {}", TENSOR_NAMES.len(), f.tensors.len())));
        }
        let mut data = Vec::with_capacity(8);
        for ((t, name), shape) in f.tensors.into_iter().zip(TENSOR_NAMES).zip(&expected) {
            if t.name != name || &t.shape != shape || t.data.len() != shape.iter().product::<usize>() {
                return Err(Error::Model(format!(
                    "tensor '{}' shape {:?} ({} values), expected '{name}' {:?}",
                    t.name,
                    t.shape,
                    t.data.len(),
                    shape
                )));
            }
            data.push(t.data);
        }
        let mut it = data.into_iter();
        let mut mat = |r: usize, c: usize| Array2::from_shape_vec((r, c), it.next().expect("8 tensors")).expect("checked shape");
        let l1w = mat(4 * h, INPUT_WIDTH);
        let l1u = mat(4 * h, h);
        let l1b = Array1::from(mat(4 * h, 1).into_raw_vec_and_offset().0);
        let l2w = mat(4 * h, h);
        let l2u = mat(4 * h, h);
        let l2b = Array1::from(mat(4 * h, 1).into_raw_vec_and_offset().0);
        let head_w = mat(OUTPUT_WIDTH, h);
        let head_b = Array1::from(mat(OUTPUT_WIDTH, 1).into_raw_vec_and_offset().0);
        let model = LstmModel {
            weights: Weights {
                layer1: LayerParams { w: l1w, u: l1u, b: l1b },
                layer2: LayerParams { w: l2w, u: l2u, b: l2b },
                head_w,
                head_b,
            },
            input_norm: f.input_norm,
            target_norm: f.target_norm,
        };
        model.validate()?;
        if !model.weights.is_finite() {
            return Err(Error::Model("non-finite weight in model file".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
