use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::color::Rgb24;
use crate::image::ImageBuffer;

struct ColorBox {
    // (color, pixel count), at least one entry
    entries: Vec<(Rgb24, u64)>,
}

impl ColorBox {
    fn range(&self, channel: usize) -> u8 {
        let (lo, hi) = self
            .entries
            .iter()
            .map(|(c, _)| c.to_array()[channel])
            .fold((u8::MAX, u8::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
        hi - lo
    }

    /// Widest channel and its range; ties go to the lower channel (r, g, b).
    fn widest(&self) -> (usize, u8) {
        (0..3).map(|ch| (ch, self.range(ch))).fold(
            (0, 0),
            |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            },
        )
    }

    /// Pixel-weighted mean, rounded half up per channel.
    fn representative(&self) -> Rgb24 {
        let total: u64 = self.entries.iter().map(|(_, n)| n).sum();
        let mut sums = [0u64; 3];
        for (c, n) in &self.entries {
            for (s, v) in sums.iter_mut().zip(c.to_array()) {
                *s += u64::from(v) * n;
            }
        }
        Rgb24::from_array(sums.map(|s| ((s + total / 2) / total) as u8))
    }

    fn split(mut self, channel: usize) -> (ColorBox, ColorBox) {
        self.entries
            .sort_by_key(|(c, _)| (c.to_array()[channel], *c));
        let total: u64 = self.entries.iter().map(|(_, n)| n).sum();
        let half = total.div_ceil(2);
        let mut acc = 0;
        let mut cut = self.entries.len() - 1;
        for (i, (_, n)) in self.entries.iter().enumerate() {
            acc += n;
            if acc >= half {
                cut = i;
                break;
            }
        }
        let cut = cut.min(self.entries.len() - 2);
        let right = self.entries.split_off(cut + 1);
        (self, ColorBox { entries: right })
    }
}

/// Median-cut quantization in RGB to at most `k` colors.
///
/// Repeatedly splits the box whose colors span the largest single-channel
/// range (earliest box on ties) at the pixel-weighted median of that channel.
/// Each final box is replaced by its pixel-weighted mean color. Images with at
/// most `k` colors are returned unchanged.
pub fn median_cut(image: &ImageBuffer, k: usize) -> ImageBuffer {
    let k = k.max(1);
    let mut counts: BTreeMap<Rgb24, u64> = BTreeMap::new();
    for &p in image.pixels() {
        *counts.entry(p).or_insert(0) += 1;
    }
    if counts.len() <= k {
        return image.clone();
    }
    let mut boxes = alloc::vec![ColorBox {
        entries: counts.into_iter().collect(),
    }];
    while boxes.len() < k {
        let pick = boxes
            .iter()
            .enumerate()
            .filter(|(_, b)| b.entries.len() > 1)
            .map(|(i, b)| (i, b.widest()))
            .fold(None, |best: Option<(usize, (usize, u8))>, cur| match best {
                Some(b) if b.1 .1 >= cur.1 .1 => Some(b),
                _ => Some(cur),
            });
        let Some((idx, (channel, _))) = pick else {
            break;
        };
        let (lo, hi) = boxes.remove(idx).split(channel);
        boxes.insert(idx, hi);
        boxes.insert(idx, lo);
    }
    let mut lut: BTreeMap<Rgb24, Rgb24> = BTreeMap::new();
    for b in &boxes {
        let rep = b.representative();
        for (c, _) in &b.entries {
            lut.insert(*c, rep);
        }
    }
    image.map(|p| lut[&p])
}
