//! Experiment configuration, read from a flat TOML document:
//!
//! ```toml
//! images = "photos"
//! users = ["histories/alice.csv", "histories/bob.csv"]
//! kinds = ["linear", "nonlinear"]
//! palette_sizes = [230, 204, 179, 153, 128]
//! alpha = 0.5
//! alphas = [0.0, 0.25, 0.5, 0.75, 1.0]
//! alpha_sweep_colors = 204
//! pre_quantizer = "median_cut"
//! pre_colors = 256
//! seed = 0
//! hidden = 100
//! history_fractions = [0.125, 0.25, 0.5, 0.75, 1.0]
//! top_k = 200
//! work_dir = "out"
//! ```
//!
//! Every key is optional. Relative paths are resolved against the directory
//! holding the config file.

use std::fs;
use std::path::{Path, PathBuf};

use cvdquant_core::TransformKind;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PreQuantizer {
    /// Built-in median cut to `pre_colors` colors; references are median cut
    /// at each palette size.
    #[default]
    MedianCut,
    /// Images are already quantized by an outside tool and serve as their
    /// own reference.
    External,
}

impl PreQuantizer {
    pub fn name(self) -> &'static str {
        match self {
            PreQuantizer::MedianCut => "median_cut",
            PreQuantizer::External => "external",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Directory of input PNGs.
    pub images: PathBuf,
    /// Color-selection history CSVs, one per user.
    pub users: Vec<PathBuf>,
    pub kinds: Vec<String>,
    pub palette_sizes: Vec<usize>,
    /// Weight used by the compression sweep.
    pub alpha: f64,
    pub alphas: Vec<f64>,
    /// Palette size used by the alpha sweep.
    pub alpha_sweep_colors: usize,
    pub pre_quantizer: PreQuantizer,
    pub pre_colors: usize,
    pub seed: u64,
    pub hidden: usize,
    pub history_fractions: Vec<f64>,
    pub top_k: usize,
    /// Where quantized images and sidecars are written.
    pub work_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            images: PathBuf::from("images"),
            users: Vec::new(),
            kinds: vec!["linear".into(), "nonlinear".into()],
            palette_sizes: vec![230, 204, 179, 153, 128],
            alpha: 0.5,
            alphas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            alpha_sweep_colors: 204,
            pre_quantizer: PreQuantizer::MedianCut,
            pre_colors: 256,
            seed: 0,
            hidden: 100,
            history_fractions: vec![0.125, 0.25, 0.5, 0.75, 1.0],
            top_k: 200,
            work_dir: PathBuf::from("out"),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&s)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.images);
        fix(&mut self.work_dir);
        self.users.iter_mut().for_each(fix);
    }

    pub fn transform_kinds(&self) -> Result<Vec<TransformKind>> {
        self.kinds
            .iter()
            .map(|k| k.parse().map_err(|_| invalid(format!("unknown kind `{k}`"))))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.palette_sizes.is_empty() {
            return Err(invalid("palette_sizes is empty"));
        }
        for w in self.palette_sizes.windows(2) {
            if w[1] >= w[0] {
                return Err(invalid("palette_sizes must be strictly decreasing"));
            }
        }
        if self.palette_sizes.iter().any(|&n| n == 0 || n > 256) {
            return Err(invalid("palette sizes must lie in 1..=256"));
        }
        if self.pre_colors == 0 || self.pre_colors > 256 {
            return Err(invalid("pre_colors must lie in 1..=256"));
        }
        if self.alpha_sweep_colors == 0 || self.alpha_sweep_colors > 256 {
            return Err(invalid("alpha_sweep_colors must lie in 1..=256"));
        }
        let unit = |a: &f64| (0.0..=1.0).contains(a);
        if !unit(&self.alpha) || !self.alphas.iter().all(unit) {
            return Err(invalid("alpha values must lie in [0, 1]"));
        }
        if self
            .history_fractions
            .iter()
            .any(|&f| !(f > 0.0 && f <= 1.0))
        {
            return Err(invalid("history fractions must lie in (0, 1]"));
        }
        if self.history_fractions.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("history fractions must be sorted ascending"));
        }
        if self.top_k == 0 {
            return Err(invalid("top_k must be positive"));
        }
        if self.hidden == 0 {
            return Err(invalid("hidden must be positive"));
        }
        self.transform_kinds()?;
        Ok(())
    }
}
