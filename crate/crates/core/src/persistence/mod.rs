//! On-disk formats. Both files are a human-readable TOML header, a
//! delimiter line, then a little-endian `f32` payload, so `head -c` on a
//! file is enough to see what it holds.

mod dataset;
mod weights;

pub use dataset::{
    append_dataset, load_dataset, read_dataset_header, save_dataset, DatasetHeader,
    DATASET_FORMAT_VERSION,
};
pub use weights::{
    decode_network, encode_network, load_network, read_weight_header, save_network,
    LayerDescriptor, WeightHeader, WEIGHT_FORMAT_VERSION,
};

use std::path::PathBuf;

/// Separates the text header from the binary payload.
pub const PAYLOAD_DELIMITER: &[u8] = b"\n--- payload ---\n";

#[derive(Debug, thiserror::Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header: {0}")]
    Header(String),
    #[error("unsupported format version {found} (this build reads {supported})")]
    Version { found: u32, supported: u32 },
    #[error("payload checksum {actual:08x} does not match header {expected:08x}")]
    Checksum { expected: u32, actual: u32 },
    #[error("header declares {declared} values but payload holds {found}")]
    Length { declared: usize, found: usize },
    #[error("dataset truncated: header declares {declared} records, file holds {found} bytes of records ({record_bytes} per record)")]
    Truncated {
        declared: usize,
        found: usize,
        record_bytes: usize,
    },
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error(transparent)]
    Net(#[from] crate::diffnet::NetError),
}

impl PersistError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        PersistError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Splits a file into header text and payload bytes.
pub(crate) fn split_payload(bytes: &[u8]) -> Result<(&str, &[u8]), PersistError> {
    let at = bytes
        .windows(PAYLOAD_DELIMITER.len())
        .position(|w| w == PAYLOAD_DELIMITER)
        .ok_or_else(|| PersistError::Header("payload delimiter not found".into()))?;
    let header =
        std::str::from_utf8(&bytes[..at]).map_err(|e| PersistError::Header(e.to_string()))?;
    Ok((header, &bytes[at + PAYLOAD_DELIMITER.len()..]))
}

pub(crate) fn f32_le(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect()
}
