//! PNG decoding, indexed PNG encoding and on-disk size measurement.
//!
//! Sizes are only comparable between files written by this module: the
//! encoder settings are pinned (see [`EncoderSettings::PINNED`]) so that the
//! same pixels always produce the same bytes.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{Cursor, Write};
use std::path::{Path, PathBuf};

use cvdquant_core::{ImageBuffer, Rgb24};
use png::{BitDepth, ColorType, Compression, Filter, Transformations};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderSettings {
    pub compression: &'static str,
    pub filter: &'static str,
}

impl EncoderSettings {
    pub const PINNED: EncoderSettings = EncoderSettings {
        compression: "high",
        filter: "adaptive",
    };

    pub fn describe(&self) -> String {
        format!("compression={} filter={}", self.compression, self.filter)
    }
}

fn pinned_encoder<W: Write>(w: W, img: &ImageBuffer, ct: ColorType) -> png::Encoder<'static, W> {
    let mut enc = png::Encoder::new(w, img.width(), img.height());
    enc.set_color(ct);
    enc.set_depth(BitDepth::Eight);
    enc.set_compression(Compression::High);
    enc.set_filter(Filter::Adaptive);
    enc
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeReport {
    pub path: PathBuf,
    pub bytes: u64,
    pub palette_size: usize,
    /// `None` for files this module did not write.
    pub encoder: Option<EncoderSettings>,
}

fn color_type_name(ct: ColorType) -> &'static str {
    match ct {
        ColorType::Grayscale => "grayscale",
        ColorType::Rgb => "truecolor",
        ColorType::Indexed => "indexed",
        ColorType::GrayscaleAlpha => "grayscale-alpha",
        ColorType::Rgba => "truecolor-alpha",
    }
}

/// Decodes PNG bytes into an RGB grid. Palettes are expanded, grayscale is
/// replicated into all channels and alpha is dropped with a warning.
pub fn decode_png(bytes: &[u8]) -> Result<ImageBuffer> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(Transformations::EXPAND);
    let mut reader = decoder.read_info()?;
    let (ct, depth) = {
        let info = reader.info();
        (info.color_type, info.bit_depth)
    };
    if depth == BitDepth::Sixteen {
        return Err(Error::UnsupportedPng(format!(
            "16-bit {} images are not supported",
            color_type_name(ct)
        )));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::UnsupportedPng("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf)?;
    let buf = &buf[..frame.buffer_size()];
    let (out_ct, _) = reader.output_color_type();
    let channels = match out_ct {
        ColorType::Grayscale => 1,
        ColorType::GrayscaleAlpha => 2,
        ColorType::Rgb => 3,
        ColorType::Rgba => 4,
        ColorType::Indexed => unreachable!("EXPAND resolves palettes"),
    };
    if matches!(out_ct, ColorType::GrayscaleAlpha | ColorType::Rgba) {
        log::warn!("dropping alpha channel of {} PNG", color_type_name(ct));
    }
    let (w, h) = (frame.width as usize, frame.height as usize);
    let stride = frame.line_size;
    let mut pixels = Vec::with_capacity(w * h);
    for row in buf.chunks(stride).take(h) {
        for px in row[..w * channels].chunks_exact(channels) {
            pixels.push(if channels < 3 {
                Rgb24::new(px[0], px[0], px[0])
            } else {
                Rgb24::new(px[0], px[1], px[2])
            });
        }
    }
    Ok(ImageBuffer::new(frame.width, frame.height, pixels)?)
}

pub fn read_png(path: &Path) -> Result<ImageBuffer> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_png(&bytes)
}

/// Distinct colors in first-occurrence order, plus each pixel's index.
fn index_image(img: &ImageBuffer) -> Result<(Vec<Rgb24>, Vec<u8>)> {
    let mut lookup: HashMap<Rgb24, u8> = HashMap::new();
    let mut palette = Vec::new();
    let mut indices = Vec::with_capacity(img.len());
    for &c in img.pixels() {
        let i = match lookup.get(&c) {
            Some(&i) => i,
            None => {
                if palette.len() == 256 {
                    return Err(Error::PaletteOverflow(img.distinct_colors()));
                }
                let i = palette.len() as u8;
                palette.push(c);
                lookup.insert(c, i);
                i
            }
        };
        indices.push(i);
    }
    Ok((palette, indices))
}

/// Encodes an 8-bit indexed PNG whose PLTE lists the distinct colors in
/// first-occurrence order. Returns the bytes and the palette size.
pub fn encode_indexed_png(img: &ImageBuffer) -> Result<(Vec<u8>, usize)> {
    let (palette, indices) = index_image(img)?;
    let plte: Vec<u8> = palette.iter().flat_map(|c| c.to_array()).collect();
    let mut out = Vec::new();
    {
        let mut enc = pinned_encoder(&mut out, img, ColorType::Indexed);
        enc.set_palette(plte);
        let mut writer = enc.write_header()?;
        writer.write_image_data(&indices)?;
        writer.finish()?;
    }
    Ok((out, palette.len()))
}

/// Encodes an 8-bit truecolor PNG, for images with more than 256 colors.
pub fn encode_rgb_png(img: &ImageBuffer) -> Result<Vec<u8>> {
    let data: Vec<u8> = img.pixels().iter().flat_map(|c| c.to_array()).collect();
    let mut out = Vec::new();
    {
        let enc = pinned_encoder(&mut out, img, ColorType::Rgb);
        let mut writer = enc.write_header()?;
        writer.write_image_data(&data)?;
        writer.finish()?;
    }
    Ok(out)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<u64> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))?;
    f.sync_all().map_err(|e| Error::io(path, e))?;
    Ok(bytes.len() as u64)
}

pub fn write_indexed_png(img: &ImageBuffer, path: &Path) -> Result<SizeReport> {
    let (bytes, palette_size) = encode_indexed_png(img)?;
    let n = write_file(path, &bytes)?;
    Ok(SizeReport {
        path: path.to_owned(),
        bytes: n,
        palette_size,
        encoder: Some(EncoderSettings::PINNED),
    })
}

/// Writes indexed when the colors fit, truecolor otherwise.
pub fn write_png(img: &ImageBuffer, path: &Path) -> Result<SizeReport> {
    match write_indexed_png(img, path) {
        Err(Error::PaletteOverflow(n)) => {
            let bytes = encode_rgb_png(img)?;
            Ok(SizeReport {
                path: path.to_owned(),
                bytes: write_file(path, &bytes)?,
                palette_size: n,
                encoder: Some(EncoderSettings::PINNED),
            })
        }
        other => other,
    }
}

/// On-disk byte count and decoded distinct-color count of a PNG file.
pub fn measure(path: &Path) -> Result<SizeReport> {
    let bytes = fs::metadata(path).map_err(|e| Error::io(path, e))?.len();
    let img = read_png(path)?;
    Ok(SizeReport {
        path: path.to_owned(),
        bytes,
        palette_size: img.distinct_colors(),
        encoder: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn encode_raw(w: u32, h: u32, ct: ColorType, depth: BitDepth, palette: Option<&[u8]>, data: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        let mut enc = png::Encoder::new(&mut out, w, h);
        enc.set_color(ct);
        enc.set_depth(depth);
        if let Some(p) = palette {
            enc.set_palette(p.to_vec());
        }
        let mut wr = enc.write_header().unwrap();
        wr.write_image_data(data).unwrap();
        wr.finish().unwrap();
        out
    }

    #[test]
    fn one_pixel_indexed() {
        let bytes = encode_raw(1, 1, ColorType::Indexed, BitDepth::Eight, Some(&[255, 0, 0]), &[0]);
        let img = decode_png(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (1, 1));
        assert_eq!(img.pixels(), &[Rgb24::new(255, 0, 0)]);
    }

    #[test]
    fn sixteen_bit_rejected() {
        let bytes = encode_raw(1, 1, ColorType::Rgb, BitDepth::Sixteen, None, &[0; 6]);
        let err = decode_png(&bytes).unwrap_err();
        assert!(matches!(err, Error::UnsupportedPng(_)));
        assert!(err.to_string().contains("truecolor"), "{err}");
    }

    #[test]
    fn grayscale_and_alpha() {
        let g = decode_png(&encode_raw(2, 1, ColorType::Grayscale, BitDepth::Eight, None, &[7, 200])).unwrap();
        assert_eq!(g.pixels(), &[Rgb24::new(7, 7, 7), Rgb24::new(200, 200, 200)]);
        let rgba = encode_raw(1, 2, ColorType::Rgba, BitDepth::Eight, None, &[1, 2, 3, 0, 4, 5, 6, 255]);
        let c = decode_png(&rgba).unwrap();
        assert_eq!(c.pixels(), &[Rgb24::new(1, 2, 3), Rgb24::new(4, 5, 6)]);
    }

    #[test]
    fn low_bit_indexed() {
        // 4 pixels at 2 bits each in one byte: indices 0,1,2,1.
        let pal = [0, 0, 0, 255, 255, 255, 9, 8, 7];
        let img = decode_png(&encode_raw(4, 1, ColorType::Indexed, BitDepth::Two, Some(&pal), &[0b00_01_10_01])).unwrap();
        assert_eq!(
            img.pixels(),
            &[Rgb24::new(0, 0, 0), Rgb24::WHITE, Rgb24::new(9, 8, 7), Rgb24::WHITE]
        );
    }

    #[test]
    fn palette_is_first_occurrence_order() {
        let px = vec![Rgb24::new(5, 5, 5), Rgb24::new(1, 1, 1), Rgb24::new(5, 5, 5), Rgb24::new(3, 3, 3)];
        let img = ImageBuffer::new(2, 2, px).unwrap();
        let (bytes, n) = encode_indexed_png(&img).unwrap();
        assert_eq!(n, 3);
        let mut dec = png::Decoder::new(Cursor::new(&bytes[..]));
        dec.set_transformations(Transformations::IDENTITY);
        let reader = dec.read_info().unwrap();
        let plte = reader.info().palette.as_ref().unwrap().to_vec();
        assert_eq!(plte, vec![5, 5, 5, 1, 1, 1, 3, 3, 3]);
        assert_eq!(decode_png(&bytes).unwrap(), img);
    }

    #[test]
    fn overflow_at_257_colors() {
        let px: Vec<Rgb24> = (0..257u32).map(|i| Rgb24::new((i % 256) as u8, (i / 256) as u8, 0)).collect();
        let img = ImageBuffer::new(257, 1, px).unwrap();
        let err = encode_indexed_png(&img).unwrap_err();
        assert!(err.to_string().contains("palette overflow"));
        let px: Vec<Rgb24> = (0..256u32).map(|i| Rgb24::new(i as u8, 0, 0)).collect();
        assert_eq!(encode_indexed_png(&ImageBuffer::new(16, 16, px).unwrap()).unwrap().1, 256);
    }
}
