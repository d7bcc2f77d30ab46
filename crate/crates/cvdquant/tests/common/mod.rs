#![allow(dead_code)]

use std::path::{Path, PathBuf};

use cvdquant::core::{synthesize_observer, ImageBuffer, Rgb24};
use cvdquant::harness::{NamedImage, UserData};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn photos_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/photos")
}

pub fn photo(name: &str) -> NamedImage {
    NamedImage::load(&photos_dir().join(format!("{name}.png"))).unwrap()
}

pub fn protan(turns: usize, seed: u64) -> UserData {
    UserData::new(synthesize_observer("protan", turns, seed, 0.5).unwrap())
}

/// `w x h` image drawing from `colors` random palette entries.
pub fn random_image(w: u32, h: u32, colors: usize, seed: u64) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut palette: Vec<Rgb24> = Vec::new();
    while palette.len() < colors {
        let c = Rgb24::new(rng.random(), rng.random(), rng.random());
        if !palette.contains(&c) {
            palette.push(c);
        }
    }
    let mut px: Vec<Rgb24> = palette.clone();
    while px.len() < (w * h) as usize {
        px.push(palette[rng.random_range(0..colors)]);
    }
    px.truncate((w * h) as usize);
    // Shuffle so the palette is not just the first row.
    for i in (1..px.len()).rev() {
        px.swap(i, rng.random_range(0..=i));
    }
    ImageBuffer::new(w, h, px).unwrap()
}
