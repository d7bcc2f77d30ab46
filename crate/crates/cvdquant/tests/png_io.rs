mod common;

use cvdquant::core::{ImageBuffer, Rgb24};
use cvdquant::image_io::{decode_png, encode_indexed_png, measure, read_png, write_indexed_png};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn indexed_round_trip_is_pixel_exact(colors in 1usize..=256, seed in any::<u64>()) {
        let img = common::random_image(128, 128, colors, seed);
        let (bytes, n) = encode_indexed_png(&img).unwrap();
        prop_assert_eq!(n, img.distinct_colors());
        prop_assert_eq!(decode_png(&bytes).unwrap(), img);
    }

    #[test]
    fn small_shapes_round_trip(w in 1u32..20, h in 1u32..20, colors in 1usize..8, seed in any::<u64>()) {
        let colors = colors.min((w * h) as usize);
        let img = common::random_image(w, h, colors, seed);
        let (bytes, _) = encode_indexed_png(&img).unwrap();
        prop_assert_eq!(decode_png(&bytes).unwrap(), img);
    }
}

#[test]
fn single_color_tile() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.png");
    let img = ImageBuffer::filled(8, 8, Rgb24::new(12, 34, 56)).unwrap();
    let report = write_indexed_png(&img, &path).unwrap();
    assert_eq!(report.palette_size, 1);
    assert_eq!(read_png(&path).unwrap(), img);
}

#[test]
fn writes_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let img = common::random_image(64, 48, 200, 9);
    let a = write_indexed_png(&img, &dir.path().join("a.png")).unwrap();
    let b = write_indexed_png(&img, &dir.path().join("b.png")).unwrap();
    assert_eq!(a.bytes, b.bytes);
    assert_eq!(
        std::fs::read(dir.path().join("a.png")).unwrap(),
        std::fs::read(dir.path().join("b.png")).unwrap()
    );
}

#[test]
fn measure_agrees_with_stat() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.png");
    let img = common::random_image(40, 30, 17, 4);
    let written = write_indexed_png(&img, &path).unwrap();
    let measured = measure(&path).unwrap();
    assert_eq!(measured.bytes, written.bytes);
    assert_eq!(measured.bytes, std::fs::metadata(&path).unwrap().len());
    assert_eq!(measured.palette_size, 17);
}

#[test]
fn measure_rejects_missing_and_empty_paths() {
    assert!(measure(std::path::Path::new("")).is_err());
    assert!(measure(std::path::Path::new("/nonexistent/x.png")).is_err());
}

#[test]
fn garbage_is_a_decode_error() {
    let err = decode_png(b"not a png at all").unwrap_err();
    assert!(matches!(err, cvdquant::Error::PngDecode(_)));
}

#[test]
fn photos_decode() {
    for entry in std::fs::read_dir(common::photos_dir()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "png") {
            let img = read_png(&p).unwrap();
            assert!(img.distinct_colors() > 256, "{}", p.display());
        }
    }
}
