//! Held-out check that a fitted transform pulls confused colors together.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{fit_linear, fit_nonlinear, EquivalenceFunction, NonLinearConfig, TransformKind};
use crate::color::{euclidean, rgb_to_lab, Rgb24};
use crate::confusion::ConfusionDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// Splits requested.
    pub splits: usize,
    pub train_fraction: f64,
    /// Mean relative change per surviving split, in split order.
    pub split_means: Vec<f64>,
    /// Indices of splits dropped because no test pair survived filtering.
    pub skipped_splits: Vec<usize>,
    /// Mean of `split_means`.
    pub mean_relative_change: f64,
    /// Sample standard deviation of `split_means` (zero for one split).
    pub std_relative_change: f64,
    /// Test pairs evaluated, summed over splits.
    pub test_pairs: usize,
}

/// Splits the history `splits` times into train/test, fits a transform of
/// `kind` on the training part and measures, over unique incorrect test pairs
/// whose colors never occur in training, the relative change
/// `(|t(a) - t(b)| - |a - b|) / |a - b|` between transformed and LAB distance.
pub fn validate_distance_change(
    d: &ConfusionDataset,
    kind: TransformKind,
    splits: usize,
    train_fraction: f64,
    seed: u64,
    nonlinear: &NonLinearConfig,
) -> Result<ValidationReport> {
    validate_distance_change_with(d, splits, train_fraction, seed, |train| match kind {
        TransformKind::Linear => {
            fit_linear(train, nonlinear.options).map(EquivalenceFunction::linear)
        }
        TransformKind::NonLinear => {
            fit_nonlinear(train, nonlinear).map(EquivalenceFunction::nonlinear)
        }
    })
}

/// As [`validate_distance_change`] with a caller-supplied fitting routine.
pub fn validate_distance_change_with<F>(
    d: &ConfusionDataset,
    splits: usize,
    train_fraction: f64,
    seed: u64,
    mut fit: F,
) -> Result<ValidationReport>
where
    F: FnMut(&ConfusionDataset) -> Result<EquivalenceFunction>,
{
    if splits == 0 {
        return Err(Error::InvalidParameter("splits must be positive".into()));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    if d.is_empty() {
        return Err(Error::NoEvents);
    }
    let n = d.len();
    let n_train = ((n as f64) * train_fraction) as usize;
    let mut split_means = Vec::with_capacity(splits);
    let mut skipped = Vec::new();
    let mut test_pairs = 0;
    let mut order: Vec<usize> = (0..n).collect();

    for split in 0..splits {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(split as u64));
        order.sort_unstable();
        order.shuffle(&mut rng);
        let (train_idx, test_idx) = order.split_at(n_train);

        let seen: BTreeSet<Rgb24> = train_idx
            .iter()
            .flat_map(|&i| {
                let e = d.events()[i];
                [e.target, e.selected]
            })
            .collect();
        let pairs: BTreeSet<(Rgb24, Rgb24)> = test_idx
            .iter()
            .map(|&i| d.events()[i])
            .filter(|e| !e.correct() && !seen.contains(&e.target) && !seen.contains(&e.selected))
            .map(|e| (e.target, e.selected))
            .collect();
        if pairs.is_empty() {
            skipped.push(split);
            continue;
        }

        let f = fit(&d.subset(train_idx))?;
        let mut sum = 0.0;
        for &(a, b) in &pairs {
            let base = euclidean(rgb_to_lab(a).to_array(), rgb_to_lab(b).to_array());
            let moved = euclidean(f.transform(a), f.transform(b));
            sum += (moved - base) / base;
        }
        split_means.push(sum / pairs.len() as f64);
        test_pairs += pairs.len();
    }

    if split_means.is_empty() {
        return Err(Error::InsufficientDiversity);
    }
    let k = split_means.len() as f64;
    let mean = split_means.iter().sum::<f64>() / k;
    let std = if split_means.len() > 1 {
        let ss: f64 = split_means.iter().map(|m| (m - mean) * (m - mean)).sum();
        libm::sqrt(ss / (k - 1.0))
    } else {
        0.0
    };
    Ok(ValidationReport {
        splits,
        train_fraction,
        split_means,
        skipped_splits: skipped,
        mean_relative_change: mean,
        std_relative_change: std,
        test_pairs,
    })
}
