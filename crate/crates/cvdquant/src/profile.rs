//! Fitted equivalence functions as versioned JSON.
//!
//! ```json
//! {
//!   "format": "cvdquant-profile",
//!   "version": 1,
//!   "user_id": "alice",
//!   "kind": "linear",
//!   "epsilon": 1e-6,
//!   "seed": 0,
//!   "matrix": { "shape": [3, 3], "data": [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0] }
//! }
//! ```
//!
//! A non-linear profile carries `hidden_weights` (`[3, H]`), `hidden_bias`
//! (`[H]`), `output_weights` (`[H, 3]`) and `output_bias` (`[3]`) instead of
//! `matrix`. All arrays are row-major. Floats are written in shortest
//! round-trip form, so loading restores every weight bit for bit.

use std::fs;
use std::path::Path;

use cvdquant_core::{
    EquivalenceFunction, LinearTransform, NonLinearTransform, Transform, TransformKind,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT: &str = "cvdquant-profile";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub user_id: String,
    pub function: EquivalenceFunction,
}

#[derive(Debug, Serialize, Deserialize)]
struct Array {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Array {
    fn new(shape: Vec<usize>, data: Vec<f64>) -> Self {
        Self { shape, data }
    }

    fn take(self, name: &str, shape: &[usize]) -> Result<Vec<f64>> {
        if self.shape != shape {
            return Err(Error::Profile(format!(
                "{name}: shape {:?}, expected {shape:?}",
                self.shape
            )));
        }
        if self.data.len() != shape.iter().product::<usize>() {
            return Err(Error::Profile(format!(
                "{name}: {} values do not fill shape {shape:?}",
                self.data.len()
            )));
        }
        Ok(self.data)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Document {
    format: String,
    version: u32,
    #[serde(default)]
    user_id: String,
    kind: String,
    epsilon: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Array>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hidden_weights: Option<Array>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hidden_bias: Option<Array>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output_weights: Option<Array>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output_bias: Option<Array>,
}

fn require(a: Option<Array>, name: &str) -> Result<Array> {
    a.ok_or_else(|| Error::Profile(format!("missing `{name}`")))
}

impl Profile {
    pub fn new(user_id: impl Into<String>, function: EquivalenceFunction) -> Self {
        Self {
            user_id: user_id.into(),
            function,
        }
    }

    pub fn to_json(&self) -> String {
        let mut doc = Document {
            format: FORMAT.into(),
            version: VERSION,
            user_id: self.user_id.clone(),
            kind: self.function.kind().name().into(),
            epsilon: self.function.epsilon(),
            seed: 0,
            matrix: None,
            hidden_weights: None,
            hidden_bias: None,
            output_weights: None,
            output_bias: None,
        };
        match self.function.inner() {
            Transform::Linear(t) => {
                doc.matrix = Some(Array::new(vec![3, 3], t.m.iter().flatten().copied().collect()));
            }
            Transform::NonLinear(t) => {
                let h = t.hidden_units();
                doc.seed = t.seed();
                doc.hidden_weights = Some(Array::new(vec![3, h], t.hidden_weights().to_vec()));
                doc.hidden_bias = Some(Array::new(vec![h], t.hidden_bias().to_vec()));
                doc.output_weights = Some(Array::new(vec![h, 3], t.output_weights().to_vec()));
                doc.output_bias = Some(Array::new(vec![3], t.output_bias().to_vec()));
            }
        }
        serde_json::to_string_pretty(&doc).expect("profile documents always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: Document = serde_json::from_str(s)?;
        if doc.format != FORMAT {
            return Err(Error::Profile(format!("unknown format `{}`", doc.format)));
        }
        if doc.version != VERSION {
            return Err(Error::Profile(format!(
                "unsupported version {} (expected {VERSION})",
                doc.version
            )));
        }
        let kind: TransformKind = doc
            .kind
            .parse()
            .map_err(|_| Error::Profile(format!("unknown kind `{}`", doc.kind)))?;
        let transform = match kind {
            TransformKind::Linear => {
                let data = require(doc.matrix, "matrix")?.take("matrix", &[3, 3])?;
                let mut m = [[0.0; 3]; 3];
                for (i, v) in data.into_iter().enumerate() {
                    m[i / 3][i % 3] = v;
                }
                Transform::Linear(LinearTransform::new(m)?)
            }
            TransformKind::NonLinear => {
                let bias = require(doc.hidden_bias, "hidden_bias")?;
                let h = bias.data.len();
                let hb = bias.take("hidden_bias", &[h])?;
                let hw = require(doc.hidden_weights, "hidden_weights")?
                    .take("hidden_weights", &[3, h])?;
                let ow = require(doc.output_weights, "output_weights")?
                    .take("output_weights", &[h, 3])?;
                let ob = require(doc.output_bias, "output_bias")?.take("output_bias", &[3])?;
                Transform::NonLinear(NonLinearTransform::new(
                    hw,
                    hb,
                    ow,
                    [ob[0], ob[1], ob[2]],
                    doc.seed,
                )?)
            }
        };
        Ok(Self {
            user_id: doc.user_id,
            function: EquivalenceFunction::new(transform, doc.epsilon)?,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}
