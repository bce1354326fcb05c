//! File formats at the I/O boundary: parameter files, spectrum and sweep
//! tables, and run manifests.
//!
//! Frequencies in files are ordinary frequencies in Hz; conversion to rad/s
//! happens here and nowhere else. Every writer has a matching parser, and the
//! parsers never panic on malformed input.

mod manifest;
mod params;
mod tables;

use thiserror::Error;

use crate::device::DeviceError;
use crate::spectrum::SpectrumError;

pub use manifest::{GridRecord, RunManifest, MANIFEST_FORMAT};
pub use params::{parse_param_file, read_params, write_param_file, ParamRecord, PARAM_KEYS};
pub use tables::{
    parse_map_csv, parse_noise_csv, parse_rows, parse_spectrum_csv, write_map_csv, write_noise_csv, write_rows,
    write_spectrum_csv, MapTable, NoiseTable, SpectrumTable, MAP_HEADER, NOISE_HEADER, SPECTRUM_HEADER,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: key `{key}` given more than once")]
    DuplicateKey { key: String, line: usize },
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("line {line}: key `{key}` has invalid value `{value}`")]
    BadValue { key: String, line: usize, value: String },
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("invalid device parameters: {0}")]
    Device(#[from] DeviceError),
    #[error("invalid spectrum: {0}")]
    Spectrum(#[from] SpectrumError),
    #[error("{0}")]
    Invalid(String),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        FormatError::Json(e.to_string())
    }
}

impl From<csv::Error> for FormatError {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map_or(0, |p| p.line() as usize);
        FormatError::Csv {
            line,
            message: e.to_string(),
        }
    }
}
