use super::{lab_rows, FitOptions, LinearTransform};
use crate::confusion::ConfusionDataset;
use crate::error::Result;
use crate::linalg::least_squares_3;

/// Least-squares `M` minimizing `|S - T M|` where the rows of `T` and `S` are
/// the LAB coordinates of targets and selections.
///
/// Fails with [`Error::RankDeficient`](crate::Error::RankDeficient) unless the
/// target rows span LAB space; no pseudo-inverse fallback is attempted.
pub fn fit_linear(d: &ConfusionDataset, opts: FitOptions) -> Result<LinearTransform> {
    let (targets, selections) = lab_rows(d, opts);
    let m = least_squares_3(&targets, &selections)?;
    LinearTransform::new(m)
}
