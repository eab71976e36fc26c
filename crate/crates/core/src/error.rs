use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's preconditions.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The CW contrast normalization denominator vanished (for example
    /// Γ_p = 0, where no fluorescence dip exists to normalize against).
    #[error("degenerate contrast normalization: {0}")]
    DegenerateContrast(String),

    /// An input file could not be read.
    #[error("cannot read {path}: {source}")]
    FileRead {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A measured-distribution file contained no data rows.
    #[error("{path}: no data rows")]
    EmptyDistribution { path: PathBuf },

    /// A measured-distribution row did not parse as `delta_mhz,weight`.
    #[error("{path}: line {line}: malformed row: {detail}")]
    MalformedRow {
        path: PathBuf,
        line: usize,
        detail: String,
    },

    /// A measured-distribution row carried a negative weight.
    #[error("{path}: line {line}: negative weight {weight}")]
    NegativeWeight {
        path: PathBuf,
        line: usize,
        weight: f64,
    },

    /// The five-level rates file failed JSON parsing.
    #[error("rates file {path}: {source}")]
    RatesParse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    /// The five-level rates violate their positivity invariants.
    #[error("invalid rates: {0}")]
    InvalidRates(String),

    /// A comparison cell failed; carries the cell coordinates.
    #[error("cell (l_ihb = {l_ihb_mhz} MHz, l_dav = {l_dav}): {source}")]
    Cell {
        l_ihb_mhz: f64,
        l_dav: f64,
        #[source]
        source: Box<Error>,
    },

    /// Reading or writing a comparison cache entry failed.
    #[error("cache I/O at {path}: {source}")]
    CacheIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn in_cell(self, l_ihb_mhz: f64, l_dav: f64) -> Error {
        Error::Cell {
            l_ihb_mhz,
            l_dav,
            source: Box::new(self),
        }
    }
}
