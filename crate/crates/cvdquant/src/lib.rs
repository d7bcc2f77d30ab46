//! File formats, PNG I/O, the experiment harness and the `cvdquant` CLI on top
//! of [`cvdquant_core`].

pub mod config;
mod error;
pub mod events;
pub mod harness;
pub mod image_io;
pub mod profile;

pub use cvdquant_core as core;
pub use error::{Error, Result};
