//! Personalized incremental palette quantization.
//!
//! This crate holds the pure algorithmic pieces: sRGB/CIE-LAB math, scoring of
//! color-selection histories, per-observer color-equivalence transforms, the
//! greedy palette merger and its reversibility sidecar. It is `no_std` and only
//! needs `alloc`; PNG, CSV and CLI plumbing live in the `cvdquant` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod color;
pub mod confusion;
pub mod equivalence;
mod error;
pub mod image;
pub mod linalg;
pub mod quantizer;
pub mod sidecar;
pub mod stats;

pub use color::{hue_bucket, lab_distance, rgb_to_lab, HueBucket, LabColor, Rgb24};
pub use confusion::{
    heuristic_score, rank_users, synthesize_observer, ConfusionDataset, ConfusionEvent,
    DichromatModel, HeuristicConfig, UserScore,
};
pub use equivalence::{
    fit_linear, fit_nonlinear, validate_distance_change, EquivalenceFunction, FitOptions,
    LinearTransform, NonLinearConfig, NonLinearTransform, Transform, TransformKind,
    ValidationReport,
};
pub use error::{Error, Result};
pub use image::ImageBuffer;
pub use quantizer::{
    dequantize, extract_palette, f_color, median_cut, plan_mergers, rank_candidates, recolor,
    Candidate, ColorEquivalence, MergerPlan, Palette, PaletteHistogram, QuantizeConfig,
};
pub use sidecar::DequantSidecar;
