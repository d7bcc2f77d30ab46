//! Per-observer color equivalence.
//!
//! A transform is fitted that maps the LAB coordinates of shown colors onto
//! the LAB coordinates of the colors the observer picked. Colors the observer
//! confuses end up close together in the transformed space, and the
//! equivalence score of a pair is the inverse of their transformed distance
//! (plus a small epsilon).

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::color::{euclidean, rgb_to_lab, Rgb24};
use crate::confusion::ConfusionDataset;
use crate::error::{Error, Result};

mod linear;
mod nonlinear;
mod validate;

pub use linear::fit_linear;
pub use nonlinear::{fit_nonlinear, NonLinearConfig};
pub use validate::{validate_distance_change, validate_distance_change_with, ValidationReport};

/// Distance offset in LAB units keeping the equivalence score finite.
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransformKind {
    Linear,
    NonLinear,
}

impl TransformKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::NonLinear => "nonlinear",
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "nonlinear" | "non-linear" => Ok(Self::NonLinear),
            other => Err(Error::InvalidParameter(alloc::format!(
                "unknown transform kind `{other}`"
            ))),
        }
    }
}

/// Which events feed a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FitOptions {
    /// Fit on incorrect selections only instead of the full history.
    pub confusions_only: bool,
}

/// `v -> v M` on LAB row vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearTransform {
    pub m: [[f64; 3]; 3],
}

impl LinearTransform {
    pub const IDENTITY: LinearTransform = LinearTransform {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn new(m: [[f64; 3]; 3]) -> Result<Self> {
        if m.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite matrix entry".into()));
        }
        Ok(Self { m })
    }

    pub fn scaled_identity(s: f64) -> Self {
        let mut m = Self::IDENTITY.m;
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = s;
        }
        Self { m }
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.m;
        core::array::from_fn(|j| v[0] * m[0][j] + v[1] * m[1][j] + v[2] * m[2][j])
    }
}

/// One hidden ReLU layer with a linear output:
/// `v -> relu(v W1 + b1) W2 + b2`.
///
/// Weights are stored row-major: `hidden_weights` is `3 x hidden`,
/// `output_weights` is `hidden x 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonLinearTransform {
    hidden: usize,
    hidden_weights: Vec<f64>,
    hidden_bias: Vec<f64>,
    output_weights: Vec<f64>,
    output_bias: [f64; 3],
    seed: u64,
}

impl NonLinearTransform {
    pub fn new(
        hidden_weights: Vec<f64>,
        hidden_bias: Vec<f64>,
        output_weights: Vec<f64>,
        output_bias: [f64; 3],
        seed: u64,
    ) -> Result<Self> {
        let hidden = hidden_bias.len();
        if hidden == 0 {
            return Err(Error::InvalidParameter(
                "network needs at least one hidden unit".into(),
            ));
        }
        if hidden_weights.len() != 3 * hidden || output_weights.len() != 3 * hidden {
            return Err(Error::InvalidParameter(alloc::format!(
                "weight shapes do not match {hidden} hidden units"
            )));
        }
        let all_finite = hidden_weights
            .iter()
            .chain(&hidden_bias)
            .chain(&output_weights)
            .chain(&output_bias)
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(Error::InvalidParameter("non-finite network weight".into()));
        }
        Ok(Self {
            hidden,
            hidden_weights,
            hidden_bias,
            output_weights,
            output_bias,
            seed,
        })
    }

    pub fn hidden_units(&self) -> usize {
        self.hidden
    }

    pub fn hidden_weights(&self) -> &[f64] {
        &self.hidden_weights
    }

    pub fn hidden_bias(&self) -> &[f64] {
        &self.hidden_bias
    }

    pub fn output_weights(&self) -> &[f64] {
        &self.output_weights
    }

    pub fn output_bias(&self) -> [f64; 3] {
        self.output_bias
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let h = self.hidden;
        let mut out = self.output_bias;
        for k in 0..h {
            let pre = self.hidden_bias[k]
                + v[0] * self.hidden_weights[k]
                + v[1] * self.hidden_weights[h + k]
                + v[2] * self.hidden_weights[2 * h + k];
            if pre > 0.0 {
                let w = &self.output_weights[3 * k..3 * k + 3];
                out[0] += pre * w[0];
                out[1] += pre * w[1];
                out[2] += pre * w[2];
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Transform {
    Linear(LinearTransform),
    NonLinear(NonLinearTransform),
}

impl Transform {
    pub fn kind(&self) -> TransformKind {
        match self {
            Self::Linear(_) => TransformKind::Linear,
            Self::NonLinear(_) => TransformKind::NonLinear,
        }
    }

    pub fn apply(&self, lab: [f64; 3]) -> [f64; 3] {
        match self {
            Self::Linear(t) => t.apply(lab),
            Self::NonLinear(t) => t.apply(lab),
        }
    }
}

/// A fitted transform plus epsilon; scores pairs of colors by how likely the
/// observer is to confuse them.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceFunction {
    transform: Transform,
    epsilon: f64,
}

impl EquivalenceFunction {
    pub fn new(transform: Transform, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(Self { transform, epsilon })
    }

    pub fn linear(t: LinearTransform) -> Self {
        Self {
            transform: Transform::Linear(t),
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn nonlinear(t: NonLinearTransform) -> Self {
        Self {
            transform: Transform::NonLinear(t),
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn kind(&self) -> TransformKind {
        self.transform.kind()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn inner(&self) -> &Transform {
        &self.transform
    }

    /// Position of `c` in the observer's transformed space.
    pub fn transform(&self, c: Rgb24) -> [f64; 3] {
        self.transform.apply(rgb_to_lab(c).to_array())
    }

    /// Score for a transformed distance `d`.
    pub fn score_distance(&self, d: f64) -> f64 {
        1.0 / (self.epsilon + d)
    }

    /// Equivalence of two colors: `1 / (epsilon + |t(c1) - t(c2)|)`.
    pub fn delta_u(&self, c1: Rgb24, c2: Rgb24) -> f64 {
        self.score_distance(euclidean(self.transform(c1), self.transform(c2)))
    }
}

pub(crate) fn lab_rows(d: &ConfusionDataset, opts: FitOptions) -> (Vec<[f64; 3]>, Vec<[f64; 3]>) {
    d.events()
        .iter()
        .filter(|e| !opts.confusions_only || !e.correct())
        .map(|e| {
            (
                rgb_to_lab(e.target).to_array(),
                rgb_to_lab(e.selected).to_array(),
            )
        })
        .unzip()
}
