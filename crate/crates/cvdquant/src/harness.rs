//! Experiment drivers: compression sweeps, hue-accuracy correlation, alpha
//! sweeps and limited-history rank agreement. Every driver is sequential and
//! seeded, so a fixed [`ExperimentConfig`] always yields the same records and
//! the same files.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use cvdquant_core::color::hue_bucket;
use cvdquant_core::linalg::simple_regression;
use cvdquant_core::quantizer::plan_for_palette;
use cvdquant_core::stats::spearman_rho;
use cvdquant_core::{
    extract_palette, fit_linear, fit_nonlinear, median_cut, rank_candidates, recolor, Candidate,
    ConfusionDataset, EquivalenceFunction, FitOptions, HueBucket, ImageBuffer, MergerPlan,
    NonLinearConfig, PaletteHistogram, QuantizeConfig, TransformKind,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, PreQuantizer};
use crate::error::{Error, Result};
use crate::events::{dataset_hash, load_events};
use crate::image_io::{self, write_indexed_png, SizeReport};

#[derive(Debug, Clone, PartialEq)]
pub struct NamedImage {
    pub id: String,
    pub image: ImageBuffer,
    /// Size of the source file, or of its pinned PNG encoding when the image
    /// was built in memory.
    pub bytes: u64,
}

impl NamedImage {
    pub fn from_image(id: impl Into<String>, image: ImageBuffer) -> Result<Self> {
        let bytes = match image_io::encode_indexed_png(&image) {
            Ok((b, _)) => b.len(),
            Err(Error::PaletteOverflow(_)) => image_io::encode_rgb_png(&image)?.len(),
            Err(e) => return Err(e),
        } as u64;
        Ok(Self {
            id: id.into(),
            image,
            bytes,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let image = image_io::read_png(path)?;
        let bytes = fs::metadata(path).map_err(|e| Error::io(path, e))?.len();
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(Self { id, image, bytes })
    }
}

/// Every `*.png` in `dir`, ordered by file name.
pub fn load_images(dir: &Path) -> Result<Vec<NamedImage>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .is_some_and(|x| x.eq_ignore_ascii_case("png"))
        })
        .collect();
    paths.sort();
    paths.iter().map(|p| NamedImage::load(p)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserData {
    pub dataset: ConfusionDataset,
    /// SHA-256 of the canonical history CSV.
    pub hash: String,
}

impl UserData {
    pub fn new(dataset: ConfusionDataset) -> Self {
        let hash = dataset_hash(&dataset);
        Self { dataset, hash }
    }

    pub fn id(&self) -> &str {
        self.dataset.user_id()
    }
}

pub fn load_users(cfg: &ExperimentConfig) -> Result<Vec<UserData>> {
    cfg.users
        .iter()
        .map(|p| load_events(p).map(UserData::new))
        .collect()
}

pub fn fit_equivalence(
    d: &ConfusionDataset,
    kind: TransformKind,
    seed: u64,
    hidden: usize,
) -> Result<EquivalenceFunction> {
    Ok(match kind {
        TransformKind::Linear => EquivalenceFunction::linear(fit_linear(d, FitOptions::default())?),
        TransformKind::NonLinear => {
            let cfg = NonLinearConfig {
                hidden,
                ..NonLinearConfig::with_seed(seed)
            };
            EquivalenceFunction::nonlinear(fit_nonlinear(d, &cfg)?)
        }
    })
}

/// The image the incremental quantizer starts from.
pub fn prequantize(cfg: &ExperimentConfig, img: &ImageBuffer) -> ImageBuffer {
    match cfg.pre_quantizer {
        PreQuantizer::MedianCut => median_cut(img, cfg.pre_colors),
        PreQuantizer::External => img.clone(),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_sidecar(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn alpha_tag(a: f64) -> String {
    format!("{a:.3}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressionRecord {
    pub image: String,
    pub user: String,
    pub dataset_hash: String,
    pub delta_kind: String,
    pub seed: u64,
    pub alpha: f64,
    pub pre_quantizer: String,
    pub palette_size: usize,
    pub prequant_palette: usize,
    pub reference_palette: usize,
    pub output_palette: usize,
    pub mergers: usize,
    pub original_bytes: u64,
    pub prequant_bytes: u64,
    pub reference_bytes: u64,
    pub output_bytes: u64,
    /// `1 - output_bytes / reference_bytes`.
    pub size_reduction: f64,
    /// `original_bytes / output_bytes`.
    pub compression_ratio_vs_original: f64,
}

struct Fitted<'a> {
    user: &'a UserData,
    kind: TransformKind,
    function: EquivalenceFunction,
}

fn fit_all<'a>(cfg: &ExperimentConfig, users: &'a [UserData]) -> Result<Vec<Fitted<'a>>> {
    let kinds = cfg.transform_kinds()?;
    let mut out = Vec::new();
    for user in users {
        for &kind in &kinds {
            log::info!("fitting {} transform for {}", kind, user.id());
            let function = fit_equivalence(&user.dataset, kind, cfg.seed, cfg.hidden)
                .map_err(|e| Error::cell("-", user.id(), 0, e))?;
            out.push(Fitted {
                user,
                kind,
                function,
            });
        }
    }
    Ok(out)
}

/// Pre-quantizes each image, writes a reference at every palette size and the
/// personalized output for every (user, kind, size) cell.
///
/// Files land under `work_dir/compress/<image>/`.
pub fn run_compress(
    cfg: &ExperimentConfig,
    images: &[NamedImage],
    users: &[UserData],
) -> Result<Vec<CompressionRecord>> {
    cfg.validate()?;
    let fitted = fit_all(cfg, users)?;
    let mut records = Vec::new();
    for img in images {
        let dir = cfg.work_dir.join("compress").join(&img.id);
        ensure_dir(&dir)?;
        let pre = prequantize(cfg, &img.image);
        let pre_report = write_indexed_png(&pre, &dir.join("prequant.png"))
            .map_err(|e| Error::cell(&img.id, "-", cfg.pre_colors, e))?;
        let (palette, hist) = extract_palette(&pre)?;
        for &n in &cfg.palette_sizes {
            let reference: SizeReport = match cfg.pre_quantizer {
                PreQuantizer::MedianCut => {
                    let r = median_cut(&img.image, n);
                    write_indexed_png(&r, &dir.join(format!("reference_{n}.png")))
                        .map_err(|e| Error::cell(&img.id, "-", n, e))?
                }
                PreQuantizer::External => pre_report.clone(),
            };
            for f in &fitted {
                let user = f.user.id();
                let qcfg = QuantizeConfig::new(n, cfg.alpha)?;
                let plan = plan_for_palette(&palette, &hist, &qcfg, &f.function)
                    .map_err(|e| Error::cell(&img.id, user, n, e))?;
                let (out, sidecar) = recolor(&pre, &plan);
                let stem = format!("{user}_{}_{n}", f.kind);
                let report = write_indexed_png(&out, &dir.join(format!("{stem}.png")))
                    .map_err(|e| Error::cell(&img.id, user, n, e))?;
                write_sidecar(&dir.join(format!("{stem}.dqdm")), &sidecar.to_bytes())?;
                log::info!(
                    "{} / {user} / {} / {n}: {} -> {} bytes",
                    img.id,
                    f.kind,
                    reference.bytes,
                    report.bytes
                );
                records.push(CompressionRecord {
                    image: img.id.clone(),
                    user: user.to_owned(),
                    dataset_hash: f.user.hash.clone(),
                    delta_kind: f.kind.name().to_owned(),
                    seed: cfg.seed,
                    alpha: cfg.alpha,
                    pre_quantizer: cfg.pre_quantizer.name().to_owned(),
                    palette_size: n,
                    prequant_palette: pre_report.palette_size,
                    reference_palette: reference.palette_size,
                    output_palette: report.palette_size,
                    mergers: plan.len(),
                    original_bytes: img.bytes,
                    prequant_bytes: pre_report.bytes,
                    reference_bytes: reference.bytes,
                    output_bytes: report.bytes,
                    size_reduction: 1.0 - report.bytes as f64 / reference.bytes as f64,
                    compression_ratio_vs_original: img.bytes as f64 / report.bytes as f64,
                });
            }
        }
    }
    records.sort_by(|a, b| {
        (&a.image, &a.user, &a.delta_kind, std::cmp::Reverse(a.palette_size)).cmp(&(
            &b.image,
            &b.user,
            &b.delta_kind,
            std::cmp::Reverse(b.palette_size),
        ))
    });
    Ok(records)
}

/// Correct and total events per hue bucket of the target color.
pub fn specimen_accuracy(d: &ConfusionDataset) -> BTreeMap<HueBucket, (u64, u64)> {
    let mut out: BTreeMap<HueBucket, (u64, u64)> = BTreeMap::new();
    for e in d.events() {
        let slot = out.entry(hue_bucket(e.target)).or_default();
        slot.0 += e.correct() as u64;
        slot.1 += 1;
    }
    out
}

/// Adds, per hue bucket of the original color, the pixels left in place and
/// the pixels seen.
pub fn accumulate_kept_pixels(
    hist: &PaletteHistogram,
    plan: &MergerPlan,
    acc: &mut BTreeMap<HueBucket, (u64, u64)>,
) {
    for (&c, &count) in hist.counts() {
        let slot = acc.entry(hue_bucket(c)).or_default();
        if !plan.is_removed(c) {
            slot.0 += count;
        }
        slot.1 += count;
    }
}

/// `(v - min) / (max - min)`.
pub fn min_max_normalize(values: &[f64]) -> Result<Vec<f64>> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.len() < 2 || hi == lo {
        return Err(cvdquant_core::Error::DegenerateNormalization(lo).into());
    }
    Ok(values.iter().map(|v| (v - lo) / (hi - lo)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HueAccuracyRecord {
    pub user: String,
    pub delta_kind: String,
    pub palette_size: usize,
    pub hue_bucket: String,
    pub specimen_events: u64,
    pub specimen_accuracy: f64,
    pub specimen_accuracy_norm: f64,
    pub pixels: u64,
    pub kodak_accuracy: f64,
    pub kodak_accuracy_norm: f64,
    /// R² of the regression this row belongs to.
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HueValidation {
    pub palette_size: usize,
    pub records: Vec<HueAccuracyRecord>,
    pub r_squared: f64,
    /// Buckets present on only one side, or achromatic, left out of the fit.
    pub omitted: Vec<HueBucket>,
}

/// Normalizes both accuracy maps over the chromatic buckets they share and
/// fits a least-squares line through them.
pub fn hue_regression(
    user: &str,
    kind: TransformKind,
    palette_size: usize,
    specimen: &BTreeMap<HueBucket, (u64, u64)>,
    kodak: &BTreeMap<HueBucket, (u64, u64)>,
) -> Result<HueValidation> {
    let mut shared = Vec::new();
    let mut omitted = Vec::new();
    for b in specimen.keys().chain(kodak.keys()) {
        if shared.contains(b) || omitted.contains(b) {
            continue;
        }
        let both = specimen.get(b).is_some_and(|s| s.1 > 0) && kodak.get(b).is_some_and(|k| k.1 > 0);
        if both && !b.is_neutral() {
            shared.push(*b);
        } else {
            omitted.push(*b);
        }
    }
    shared.sort();
    omitted.sort();
    let ratio = |(k, n): (u64, u64)| k as f64 / n as f64;
    let game: Vec<f64> = shared.iter().map(|b| ratio(specimen[b])).collect();
    let kod: Vec<f64> = shared.iter().map(|b| ratio(kodak[b])).collect();
    let game_n = min_max_normalize(&game)?;
    let kod_n = min_max_normalize(&kod)?;
    let (_, _, r2) = simple_regression(&game_n, &kod_n)
        .ok_or(cvdquant_core::Error::DegenerateNormalization(0.0))?;
    let records = shared
        .iter()
        .enumerate()
        .map(|(i, b)| HueAccuracyRecord {
            user: user.to_owned(),
            delta_kind: kind.name().to_owned(),
            palette_size,
            hue_bucket: b.label().to_owned(),
            specimen_events: specimen[b].1,
            specimen_accuracy: game[i],
            specimen_accuracy_norm: game_n[i],
            pixels: kodak[b].1,
            kodak_accuracy: kod[i],
            kodak_accuracy_norm: kod_n[i],
            r_squared: r2,
        })
        .collect();
    Ok(HueValidation {
        palette_size,
        records,
        r_squared: r2,
        omitted,
    })
}

/// Hue-bucket accuracy in the game against the share of pixels kept at
/// `alpha = 1`, aggregated across images, once per configured palette size.
pub fn run_hue_validation(
    cfg: &ExperimentConfig,
    images: &[NamedImage],
    user: &UserData,
    kind: TransformKind,
) -> Result<Vec<HueValidation>> {
    cfg.validate()?;
    let function = fit_equivalence(&user.dataset, kind, cfg.seed, cfg.hidden)?;
    let specimen = specimen_accuracy(&user.dataset);
    let prepared = images
        .iter()
        .map(|img| extract_palette(&prequantize(cfg, &img.image)).map(|p| (img, p)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut out = Vec::new();
    for &n in &cfg.palette_sizes {
        let mut kodak = BTreeMap::new();
        for (img, (palette, hist)) in &prepared {
            let qcfg = QuantizeConfig::new(n, 1.0)?;
            let plan = plan_for_palette(palette, hist, &qcfg, &function)
                .map_err(|e| Error::cell(&img.id, user.id(), n, e))?;
            accumulate_kept_pixels(hist, &plan, &mut kodak);
        }
        let v = hue_regression(user.id(), kind, n, &specimen, &kodak)
            .map_err(|e| Error::cell("*", user.id(), n, e))?;
        if !v.omitted.is_empty() {
            let labels: Vec<&str> = v.omitted.iter().map(|b| b.label()).collect();
            log::info!("{} colors: buckets omitted from regression: {}", n, labels.join(" "));
        }
        out.push(v);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaSweepRecord {
    pub user: String,
    pub dataset_hash: String,
    pub delta_kind: String,
    pub seed: u64,
    pub palette_size: usize,
    pub alpha: f64,
    pub images: usize,
    pub mean_output_bytes: f64,
    /// Mean over images of `1 - bytes(alpha) / bytes(alpha = 1)`.
    pub mean_size_reduction: f64,
}

/// Output size at each alpha relative to alpha = 1, at palette size `n`.
///
/// Files land under `work_dir/alpha/<image>/`.
pub fn run_alpha_sweep(
    cfg: &ExperimentConfig,
    images: &[NamedImage],
    user: &UserData,
    kind: TransformKind,
    n: usize,
) -> Result<Vec<AlphaSweepRecord>> {
    cfg.validate()?;
    if !cfg.alphas.contains(&1.0) {
        return Err(Error::Config("the alpha sweep needs alpha = 1 in `alphas`".into()));
    }
    let mut alphas = cfg.alphas.clone();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    let function = fit_equivalence(&user.dataset, kind, cfg.seed, cfg.hidden)?;
    // bytes[image][alpha index]
    let mut bytes: Vec<Vec<u64>> = Vec::with_capacity(images.len());
    for img in images {
        let dir = cfg.work_dir.join("alpha").join(&img.id);
        ensure_dir(&dir)?;
        let pre = prequantize(cfg, &img.image);
        let (palette, hist) = extract_palette(&pre)?;
        let mut row = Vec::with_capacity(alphas.len());
        for &a in &alphas {
            let qcfg = QuantizeConfig::new(n, a)?;
            let plan = plan_for_palette(&palette, &hist, &qcfg, &function)
                .map_err(|e| Error::cell(&img.id, user.id(), n, e))?;
            let (out, _) = recolor(&pre, &plan);
            let path = dir.join(format!("{}_{}_{n}_a{}.png", user.id(), kind, alpha_tag(a)));
            row.push(write_indexed_png(&out, &path)?.bytes);
        }
        bytes.push(row);
    }
    let base = alphas.iter().position(|&a| a == 1.0).expect("checked above");
    let count = images.len().max(1) as f64;
    Ok(alphas
        .iter()
        .enumerate()
        .map(|(j, &a)| AlphaSweepRecord {
            user: user.id().to_owned(),
            dataset_hash: user.hash.clone(),
            delta_kind: kind.name().to_owned(),
            seed: cfg.seed,
            palette_size: n,
            alpha: a,
            images: images.len(),
            mean_output_bytes: bytes.iter().map(|r| r[j] as f64).sum::<f64>() / count,
            mean_size_reduction: bytes
                .iter()
                .map(|r| 1.0 - r[j] as f64 / r[base] as f64)
                .sum::<f64>()
                / count,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistorySweepRecord {
    pub image: String,
    pub user: String,
    pub dataset_hash: String,
    pub delta_kind: String,
    pub seed: u64,
    pub history_fraction: f64,
    pub prefix_events: usize,
    pub top_k: usize,
    /// Empty when the prefix could not be fitted.
    pub spearman_rho: Option<f64>,
    pub skipped: String,
}

/// 1-based position in `ranking` of each of the first `top_k` candidates of
/// `reference`.
pub fn positions_of(reference: &[Candidate], ranking: &[Candidate], top_k: usize) -> Vec<f64> {
    let pos: HashMap<_, usize> = ranking
        .iter()
        .enumerate()
        .map(|(i, c)| ((c.source, c.target), i + 1))
        .collect();
    reference
        .iter()
        .take(top_k)
        .map(|c| pos[&(c.source, c.target)] as f64)
        .collect()
}

/// Rank agreement between the full-history and prefix-history top candidates
/// at `alpha = 1`, for each fraction of the chronological history.
pub fn run_history_sweep(
    cfg: &ExperimentConfig,
    image: &NamedImage,
    user: &UserData,
    kind: TransformKind,
    fractions: &[f64],
) -> Result<Vec<HistorySweepRecord>> {
    run_history_sweep_images(cfg, std::slice::from_ref(image), user, kind, fractions)
}

/// [`run_history_sweep`] over several images, fitting each prefix once.
/// Records are ordered by image, then fraction.
pub fn run_history_sweep_images(
    cfg: &ExperimentConfig,
    images: &[NamedImage],
    user: &UserData,
    kind: TransformKind,
    fractions: &[f64],
) -> Result<Vec<HistorySweepRecord>> {
    cfg.validate()?;
    if fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0)) || fractions.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("fractions must be ascending within (0, 1]".into()));
    }
    let full = fit_equivalence(&user.dataset, kind, cfg.seed, cfg.hidden)?;
    let n = user.dataset.len();
    let prefixes: Vec<(usize, std::result::Result<EquivalenceFunction, String>)> = fractions
        .iter()
        .map(|&f| {
            let len = ((f * n as f64).ceil() as usize).min(n);
            let fitted = fit_equivalence(&user.dataset.prefix(len), kind, cfg.seed, cfg.hidden)
                .map_err(|e| {
                    log::warn!("{}: prefix of {len} events not fitted: {e}", user.id());
                    e.to_string()
                });
            (len, fitted)
        })
        .collect();
    let mut out = Vec::with_capacity(images.len() * fractions.len());
    for image in images {
        let pre = prequantize(cfg, &image.image);
        let (palette, hist) = extract_palette(&pre)?;
        let reference = rank_candidates(&palette, &hist, 1.0, &full);
        let k = cfg.top_k.min(reference.len());
        let full_ranks: Vec<f64> = (1..=k).map(|r| r as f64).collect();
        for (&f, (len, fitted)) in fractions.iter().zip(&prefixes) {
            let mut rec = HistorySweepRecord {
                image: image.id.clone(),
                user: user.id().to_owned(),
                dataset_hash: user.hash.clone(),
                delta_kind: kind.name().to_owned(),
                seed: cfg.seed,
                history_fraction: f,
                prefix_events: *len,
                top_k: k,
                spearman_rho: None,
                skipped: String::new(),
            };
            match fitted {
                Ok(partial) => {
                    let ranking = rank_candidates(&palette, &hist, 1.0, partial);
                    let prefix_ranks = positions_of(&reference, &ranking, k);
                    match spearman_rho(&full_ranks, &prefix_ranks) {
                        Some(rho) => rec.spearman_rho = Some(rho),
                        None => rec.skipped = "fewer than two candidates".into(),
                    }
                }
                Err(reason) => rec.skipped = reason.clone(),
            }
            out.push(rec);
        }
    }
    Ok(out)
}

/// Writes records as CSV with a header row.
pub fn write_csv<T: Serialize, W: Write>(records: &[T], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
