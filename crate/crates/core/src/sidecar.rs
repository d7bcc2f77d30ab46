//! Reversibility record for incremental quantization and its binary encoding.
//!
//! Layout (little-endian):
//!
//! ```text
//! "DQDM"  u16 version (1)  u32 width  u32 height  u32 entry_count
//! entry_count x { u8 r  u8 g  u8 b  u32 index_count  index_count x u32 offset }
//! u32 CRC-32 (IEEE) of every preceding byte
//! ```
//!
//! Offsets are row-major pixel indices, strictly ascending within an entry.

use alloc::vec;
use alloc::vec::Vec;

use crate::color::Rgb24;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"DQDM";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SidecarEntry {
    pub original: Rgb24,
    pub indices: Vec<u32>,
}

/// Original colors of every repainted pixel.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DequantSidecar {
    pub width: u32,
    pub height: u32,
    pub entries: Vec<SidecarEntry>,
}

impl DequantSidecar {
    pub fn repainted_pixels(&self) -> usize {
        self.entries.iter().map(|e| e.indices.len()).sum()
    }

    /// Checks that offsets are in range, ascending within each entry and
    /// never repeated across entries.
    pub fn validate(&self) -> Result<()> {
        let total = u64::from(self.width) * u64::from(self.height);
        let mut seen = vec![false; total as usize];
        for e in &self.entries {
            if e.indices.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::CorruptSidecar(
                    "pixel offsets not strictly ascending",
                ));
            }
            for &i in &e.indices {
                let slot = seen
                    .get_mut(i as usize)
                    .ok_or(Error::CorruptSidecar("pixel offset out of range"))?;
                if *slot {
                    return Err(Error::CorruptSidecar("duplicate pixel offset"));
                }
                *slot = true;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(22 + self.entries.len() * 7 + self.repainted_pixels() * 4);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for e in &self.entries {
            out.extend_from_slice(&e.original.to_array());
            out.extend_from_slice(&(e.indices.len() as u32).to_le_bytes());
            for i in &e.indices {
                out.extend_from_slice(&i.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 22 {
            return Err(Error::CorruptSidecar("truncated header"));
        }
        let (body, crc) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(crc.try_into().expect("4 bytes"));
        if crc32fast::hash(body) != stored {
            return Err(Error::CorruptSidecar("CRC mismatch"));
        }
        let mut r = Reader { buf: body, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::CorruptSidecar("bad magic"));
        }
        if r.u16()? != VERSION {
            return Err(Error::CorruptSidecar("unsupported version"));
        }
        let width = r.u32()?;
        let height = r.u32()?;
        let count = r.u32()? as usize;
        let mut entries = Vec::new();
        for _ in 0..count {
            let rgb = r.take(3)?;
            let original = Rgb24::new(rgb[0], rgb[1], rgb[2]);
            let n = r.u32()? as usize;
            if n > (body.len() - r.pos) / 4 {
                return Err(Error::CorruptSidecar("truncated entry"));
            }
            let indices = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
            entries.push(SidecarEntry { original, indices });
        }
        if r.pos != body.len() {
            return Err(Error::CorruptSidecar("trailing bytes"));
        }
        let sidecar = Self {
            width,
            height,
            entries,
        };
        sidecar.validate()?;
        Ok(sidecar)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or(Error::CorruptSidecar("truncated"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(
            self.take(2)?.try_into().expect("2 bytes"),
        ))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fixture() -> DequantSidecar {
        DequantSidecar {
            width: 2,
            height: 2,
            entries: vec![SidecarEntry {
                original: Rgb24::new(255, 0, 0),
                indices: vec![0, 1, 2, 3],
            }],
        }
    }

    #[test]
    fn empty_sidecar_layout() {
        let s = DequantSidecar {
            width: 3,
            height: 1,
            entries: vec![],
        };
        let bytes = s.to_bytes();
        assert_eq!(
            &bytes[..18],
            b"DQDM\x01\x00\x03\x00\x00\x00\x01\x00\x00\x00\x00\x00\x00\x00"
        );
        assert_eq!(bytes.len(), 22);
        assert_eq!(DequantSidecar::from_bytes(&bytes).unwrap(), s);
    }

    #[test]
    fn flipped_bit_fails_crc() {
        let mut bytes = fixture().to_bytes();
        bytes[20] ^= 1;
        assert_eq!(
            DequantSidecar::from_bytes(&bytes),
            Err(Error::CorruptSidecar("CRC mismatch"))
        );
    }

    #[test]
    fn validation_rules() {
        let mut s = fixture();
        s.entries[0].indices = vec![0, 4];
        assert_eq!(
            s.validate(),
            Err(Error::CorruptSidecar("pixel offset out of range"))
        );
        s.entries[0].indices = vec![1, 0];
        assert!(s.validate().is_err());
        s.entries[0].indices = vec![0, 1];
        s.entries.push(SidecarEntry {
            original: Rgb24::new(0, 255, 0),
            indices: vec![1],
        });
        assert_eq!(
            s.validate(),
            Err(Error::CorruptSidecar("duplicate pixel offset"))
        );
    }

    #[test]
    fn truncation_and_trailing_bytes() {
        let bytes = fixture().to_bytes();
        for cut in [0, 5, 21, bytes.len() - 1] {
            assert!(DequantSidecar::from_bytes(&bytes[..cut]).is_err());
        }
        // Trailing garbage with a recomputed CRC.
        let mut body = bytes[..bytes.len() - 4].to_vec();
        body.push(0);
        let crc = crc32fast::hash(&body);
        body.extend_from_slice(&crc.to_le_bytes());
        assert_eq!(
            DequantSidecar::from_bytes(&body),
            Err(Error::CorruptSidecar("trailing bytes"))
        );
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(w in 1u32..40, h in 1u32..40, assign in proptest::collection::vec(0u8..4, 1..1600)) {
            // Pixel i is recorded under color assign[i] when assign[i] > 0.
            let total = (w * h) as usize;
            let mut entries: Vec<SidecarEntry> = (1u8..4)
                .map(|k| SidecarEntry { original: Rgb24::new(k, k, k), indices: vec![] })
                .collect();
            for (i, &a) in assign.iter().take(total).enumerate() {
                if a > 0 {
                    entries[usize::from(a) - 1].indices.push(i as u32);
                }
            }
            let s = DequantSidecar { width: w, height: h, entries };
            let bytes = s.to_bytes();
            prop_assert_eq!(DequantSidecar::from_bytes(&bytes).unwrap(), s.clone());
            prop_assert_eq!(s.to_bytes(), bytes);
        }
    }
}
