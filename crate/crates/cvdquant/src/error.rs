use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] cvdquant_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Stream(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("PNG decode error: {0}")]
    PngDecode(#[from] png::DecodingError),
    #[error("PNG encode error: {0}")]
    PngEncode(#[from] png::EncodingError),
    #[error("unsupported PNG: {0}")]
    UnsupportedPng(String),
    #[error("palette overflow: {0} distinct colors, at most 256 fit an indexed PNG")]
    PaletteOverflow(usize),
    #[error("profile: {0}")]
    Profile(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("image {image}, user {user}, {size} colors: {source}")]
    Cell {
        image: String,
        user: String,
        size: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn cell(image: &str, user: &str, size: usize, source: impl Into<Error>) -> Self {
        Error::Cell {
            image: image.to_owned(),
            user: user.to_owned(),
            size,
            source: Box::new(source.into()),
        }
    }
}
