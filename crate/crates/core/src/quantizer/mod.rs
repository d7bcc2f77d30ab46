//! Palette extraction, baseline median-cut, and the greedy incremental
//! merger that shrinks an already-quantized palette for a given observer.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::color::{euclidean, Rgb24};
use crate::equivalence::EquivalenceFunction;
use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::sidecar::{DequantSidecar, SidecarEntry};

mod median_cut;

pub use median_cut::median_cut;

/// Distinct colors of an image in first-occurrence (row-major scan) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Palette {
    colors: Vec<Rgb24>,
}

impl Palette {
    pub fn colors(&self) -> &[Rgb24] {
        &self.colors
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }
}

/// Pixel count per palette color.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PaletteHistogram {
    counts: BTreeMap<Rgb24, u64>,
}

impl PaletteHistogram {
    pub fn count(&self, c: Rgb24) -> u64 {
        self.counts.get(&c).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<Rgb24, u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn max_count(&self) -> u64 {
        self.counts.values().copied().max().unwrap_or(0)
    }
}

pub fn extract_palette(image: &ImageBuffer) -> Result<(Palette, PaletteHistogram)> {
    if image.is_empty() {
        return Err(Error::EmptyImage);
    }
    let mut colors = Vec::new();
    let mut counts: BTreeMap<Rgb24, u64> = BTreeMap::new();
    for &p in image.pixels() {
        let n = counts.entry(p).or_insert(0);
        if *n == 0 {
            colors.push(p);
        }
        *n += 1;
    }
    Ok((Palette { colors }, PaletteHistogram { counts }))
}

/// Anything that scores how interchangeable two colors are for an observer.
/// Larger means more likely to be confused.
pub trait ColorEquivalence {
    fn delta(&self, a: Rgb24, b: Rgb24) -> f64;

    /// Row-major `len x len` table of [`delta`](Self::delta) over `colors`.
    /// Diagonal entries are not read by the quantizer.
    fn delta_table(&self, colors: &[Rgb24]) -> Vec<f64> {
        let n = colors.len();
        let mut t = alloc::vec![0.0; n * n];
        for (i, &a) in colors.iter().enumerate() {
            for (j, &b) in colors.iter().enumerate() {
                if i != j {
                    t[i * n + j] = self.delta(a, b);
                }
            }
        }
        t
    }
}

impl ColorEquivalence for EquivalenceFunction {
    fn delta(&self, a: Rgb24, b: Rgb24) -> f64 {
        self.delta_u(a, b)
    }

    fn delta_table(&self, colors: &[Rgb24]) -> Vec<f64> {
        let pts: Vec<[f64; 3]> = colors.iter().map(|&c| self.transform(c)).collect();
        let n = pts.len();
        let mut t = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = self.score_distance(euclidean(pts[i], pts[j]));
                t[i * n + j] = d;
                t[j * n + i] = d;
            }
        }
        t
    }
}

impl<F: Fn(Rgb24, Rgb24) -> f64> ColorEquivalence for F {
    fn delta(&self, a: Rgb24, b: Rgb24) -> f64 {
        self(a, b)
    }
}

/// Explicit symmetric table of pair scores; missing pairs score 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeltaTable {
    scores: BTreeMap<(Rgb24, Rgb24), f64>,
}

impl DeltaTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, a: Rgb24, b: Rgb24, score: f64) {
        self.scores
            .insert(if a <= b { (a, b) } else { (b, a) }, score);
    }
}

impl ColorEquivalence for DeltaTable {
    fn delta(&self, a: Rgb24, b: Rgb24) -> f64 {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.scores.get(&key).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizeConfig {
    /// Palette size to reach.
    pub target_colors: usize,
    /// Weight of the equivalence term against the pixel-count term.
    pub alpha: f64,
}

impl QuantizeConfig {
    pub fn new(target_colors: usize, alpha: f64) -> Result<Self> {
        let cfg = Self {
            target_colors,
            alpha,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_colors == 0 {
            return Err(Error::InvalidParameter(
                "target color count must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(alloc::format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// A candidate merger: repaint `source` as `target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub source: Rgb24,
    pub target: Rgb24,
    pub score: f64,
}

/// Merger score of removing `ci` into `cj`:
/// `alpha * delta(ci, cj) / max_delta + (1 - alpha) * pixels(ci) / max_pixels`.
pub fn f_color<E: ColorEquivalence + ?Sized>(
    alpha: f64,
    ci: Rgb24,
    cj: Rgb24,
    hist: &PaletteHistogram,
    equiv: &E,
    max_delta: f64,
    max_pixels: u64,
) -> f64 {
    combine(
        alpha,
        equiv.delta(ci, cj),
        max_delta,
        hist.count(ci),
        max_pixels,
    )
}

fn combine(alpha: f64, delta: f64, max_delta: f64, pixels: u64, max_pixels: u64) -> f64 {
    let d = if max_delta > 0.0 {
        delta / max_delta
    } else {
        0.0
    };
    let p = if max_pixels > 0 {
        pixels as f64 / max_pixels as f64
    } else {
        0.0
    };
    alpha * d + (1.0 - alpha) * p
}

fn candidate_order(a: &Candidate, b: &Candidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.source.cmp(&b.source))
        .then_with(|| a.target.cmp(&b.target))
}

/// Every ordered pair of distinct palette colors, sorted by descending merger
/// score, ties broken by `(source, target)` ascending. Normalizers are taken
/// over the whole palette.
pub fn rank_candidates<E: ColorEquivalence + ?Sized>(
    palette: &Palette,
    hist: &PaletteHistogram,
    alpha: f64,
    equiv: &E,
) -> Vec<Candidate> {
    let colors = palette.colors();
    let n = colors.len();
    let table = equiv.delta_table(colors);
    let max_delta = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| table[i * n + j])
        .fold(f64::NEG_INFINITY, f64::max);
    let max_pixels = hist.max_count();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1));
    for (i, &ci) in colors.iter().enumerate() {
        let pixels = hist.count(ci);
        for (j, &cj) in colors.iter().enumerate() {
            if i != j {
                out.push(Candidate {
                    source: ci,
                    target: cj,
                    score: combine(alpha, table[i * n + j], max_delta, pixels, max_pixels),
                });
            }
        }
    }
    out.sort_by(candidate_order);
    out
}

/// Chosen mergers, closed so every removed color maps straight to a survivor.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MergerPlan {
    mergers: BTreeMap<Rgb24, Rgb24>,
    accepted: Vec<Candidate>,
}

impl MergerPlan {
    /// Builds a plan from raw merger links, resolving chains. Fails if the
    /// links contain a cycle or a color with two targets.
    pub fn from_links(links: impl IntoIterator<Item = (Rgb24, Rgb24)>) -> Result<Self> {
        let mut raw = BTreeMap::new();
        let mut accepted = Vec::new();
        for (s, t) in links {
            if s == t || raw.insert(s, t).is_some() {
                return Err(Error::InvalidParameter(alloc::format!(
                    "invalid merger link {s} -> {t}"
                )));
            }
            accepted.push(Candidate {
                source: s,
                target: t,
                score: f64::NAN,
            });
        }
        let mergers = close(&raw)
            .ok_or_else(|| Error::InvalidParameter("merger links contain a cycle".into()))?;
        Ok(Self { mergers, accepted })
    }

    /// Removed color to surviving color.
    pub fn mergers(&self) -> &BTreeMap<Rgb24, Rgb24> {
        &self.mergers
    }

    pub fn removed(&self) -> impl Iterator<Item = Rgb24> + '_ {
        self.mergers.keys().copied()
    }

    pub fn is_removed(&self, c: Rgb24) -> bool {
        self.mergers.contains_key(&c)
    }

    /// Accepted candidates in acceptance order, before closure.
    pub fn accepted(&self) -> &[Candidate] {
        &self.accepted
    }

    pub fn len(&self) -> usize {
        self.mergers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mergers.is_empty()
    }

    /// Final color of `c` after recoloring.
    pub fn map(&self, c: Rgb24) -> Rgb24 {
        self.mergers.get(&c).copied().unwrap_or(c)
    }
}

fn root(links: &BTreeMap<Rgb24, Rgb24>, mut c: Rgb24) -> Option<Rgb24> {
    for _ in 0..=links.len() {
        match links.get(&c) {
            Some(&next) => c = next,
            None => return Some(c),
        }
    }
    None
}

fn close(links: &BTreeMap<Rgb24, Rgb24>) -> Option<BTreeMap<Rgb24, Rgb24>> {
    links
        .keys()
        .map(|&c| root(links, c).map(|r| (c, r)))
        .collect()
}

/// Greedy incremental quantization plan.
///
/// Candidates from [`rank_candidates`] are walked once in order. A candidate
/// `(ci, cj)` is accepted when `ci` has not been removed yet and following the
/// existing links from `cj` does not lead back to `ci`. Acceptance stops once
/// `target_colors` colors survive; chains are then resolved.
pub fn plan_mergers<E: ColorEquivalence + ?Sized>(
    image: &ImageBuffer,
    cfg: &QuantizeConfig,
    equiv: &E,
) -> Result<MergerPlan> {
    cfg.validate()?;
    let (palette, hist) = extract_palette(image)?;
    plan_for_palette(&palette, &hist, cfg, equiv)
}

pub fn plan_for_palette<E: ColorEquivalence + ?Sized>(
    palette: &Palette,
    hist: &PaletteHistogram,
    cfg: &QuantizeConfig,
    equiv: &E,
) -> Result<MergerPlan> {
    cfg.validate()?;
    let size = palette.len();
    if cfg.target_colors > size {
        return Err(Error::TargetExceedsPalette {
            target: cfg.target_colors,
            palette: size,
        });
    }
    let to_remove = size - cfg.target_colors;
    if to_remove == 0 {
        return Ok(MergerPlan::default());
    }
    let mut links: BTreeMap<Rgb24, Rgb24> = BTreeMap::new();
    let mut accepted = Vec::with_capacity(to_remove);
    for cand in rank_candidates(palette, hist, cfg.alpha, equiv) {
        if links.contains_key(&cand.source) {
            continue;
        }
        // Links form a forest, so the walk always ends at a survivor.
        if root(&links, cand.target) == Some(cand.source) {
            continue;
        }
        links.insert(cand.source, cand.target);
        accepted.push(cand);
        if accepted.len() == to_remove {
            break;
        }
    }
    let mergers = close(&links).expect("greedy acceptance keeps links acyclic");
    Ok(MergerPlan { mergers, accepted })
}

/// Repaints every removed color with its survivor and records where.
pub fn recolor(image: &ImageBuffer, plan: &MergerPlan) -> (ImageBuffer, DequantSidecar) {
    let mut out = image.clone();
    let mut moved: BTreeMap<Rgb24, Vec<u32>> = BTreeMap::new();
    if !plan.is_empty() {
        for (i, p) in out.pixels_mut().iter_mut().enumerate() {
            if let Some(&to) = plan.mergers.get(p) {
                moved.entry(*p).or_default().push(i as u32);
                *p = to;
            }
        }
    }
    let entries = moved
        .into_iter()
        .map(|(original, indices)| SidecarEntry { original, indices })
        .collect();
    let sidecar = DequantSidecar {
        width: image.width(),
        height: image.height(),
        entries,
    };
    (out, sidecar)
}

/// Restores the pre-quantized image from a recolored image and its sidecar.
pub fn dequantize(image: &ImageBuffer, sidecar: &DequantSidecar) -> Result<ImageBuffer> {
    if sidecar.width != image.width() || sidecar.height != image.height() {
        return Err(Error::CorruptSidecar("dimensions do not match image"));
    }
    sidecar.validate()?;
    let mut out = image.clone();
    let px = out.pixels_mut();
    for e in &sidecar.entries {
        for &i in &e.indices {
            px[i as usize] = e.original;
        }
    }
    Ok(out)
}
