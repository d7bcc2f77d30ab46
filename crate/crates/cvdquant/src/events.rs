//! Color-selection histories as CSV.
//!
//! One row per game turn:
//!
//! ```text
//! turn,target_r,target_g,target_b,selected_r,selected_g,selected_b
//! 0,255,0,0,255,0,0
//! 1,0,128,0,64,128,0
//! ```
//!
//! Whether a turn was answered correctly is derived from the two colors and
//! never stored.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use cvdquant_core::{ConfusionDataset, ConfusionEvent, Rgb24};

use crate::error::{Error, Result};

pub const HEADER: [&str; 7] = [
    "turn", "target_r", "target_g", "target_b", "selected_r", "selected_g", "selected_b",
];

/// Parses a history. Rows may come in any order; they are sorted by turn.
pub fn read_events<R: Read>(reader: R, user_id: &str) -> Result<ConfusionDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`", HEADER.join(",")),
        });
    }
    let mut events = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != HEADER.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", HEADER.len(), record.len()),
            });
        }
        let turn: u64 = record[0].parse().map_err(|_| Error::Parse {
            line,
            message: format!("turn: `{}` is not a non-negative integer", &record[0]),
        })?;
        let mut ch = [0u8; 6];
        for (i, slot) in ch.iter_mut().enumerate() {
            let field = &record[i + 1];
            *slot = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("{}: `{field}` is not a channel value in 0..=255", HEADER[i + 1]),
            })?;
        }
        events.push(ConfusionEvent::new(
            turn,
            Rgb24::new(ch[0], ch[1], ch[2]),
            Rgb24::new(ch[3], ch[4], ch[5]),
        ));
    }
    if events.is_empty() {
        return Err(cvdquant_core::Error::NoEvents.into());
    }
    Ok(ConfusionDataset::new(user_id, events)?)
}

/// Reads a history file; the user id is the file stem.
pub fn load_events(path: &Path) -> Result<ConfusionDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let user = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_events(BufReader::new(file), &user)
}

/// Writes the canonical form: header, then one row per event in turn order.
pub fn write_events<W: Write>(d: &ConfusionDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    for e in d.events() {
        w.write_record(&[
            e.turn.to_string(),
            e.target.r.to_string(),
            e.target.g.to_string(),
            e.target.b.to_string(),
            e.selected.r.to_string(),
            e.selected.g.to_string(),
            e.selected.b.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_events(d: &ConfusionDataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_events(d, std::io::BufWriter::new(file))
}

/// SHA-256 of a history's canonical CSV form, hex encoded.
pub fn dataset_hash(d: &ConfusionDataset) -> String {
    use sha2::{Digest, Sha256};
    let mut buf = Vec::new();
    write_events(d, &mut buf).expect("writing to memory cannot fail");
    hex::encode(Sha256::digest(&buf))
}
