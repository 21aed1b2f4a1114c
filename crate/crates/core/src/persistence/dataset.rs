use std::fs::OpenOptions;
use std::io::{Seek, SeekFrom, Write};
use std::path::Path;

use serde::Deserialize;

use super::{f32_le, split_payload, PersistError, PAYLOAD_DELIMITER};
use crate::predictor::{ExperienceDataset, Provenance, Transition};

pub const DATASET_FORMAT_VERSION: u32 = 1;

/// Width of the space-padded `count` value, so appends can rewrite it in place.
const COUNT_WIDTH: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub format_version: u32,
    pub sensor_dim: usize,
    pub action_dim: usize,
    pub record_bytes: usize,
    /// Provenance byte values, by index.
    pub provenance: Vec<String>,
    pub count: usize,
}

impl DatasetHeader {
    fn new(sensor_dim: usize, action_dim: usize, count: usize) -> Self {
        Self {
            format_version: DATASET_FORMAT_VERSION,
            sensor_dim,
            action_dim,
            record_bytes: record_bytes(sensor_dim, action_dim),
            provenance: vec!["random".into(), "proposer-derived".into()],
            count,
        }
    }

    fn render(&self) -> String {
        let legend: Vec<String> = self.provenance.iter().map(|p| format!("\"{p}\"")).collect();
        format!(
            "format_version = {}\nsensor_dim = {}\naction_dim = {}\nrecord_bytes = {}\nprovenance = [{}]\ncount = {:<COUNT_WIDTH$}",
            self.format_version,
            self.sensor_dim,
            self.action_dim,
            self.record_bytes,
            legend.join(", "),
            self.count
        )
    }
}

/// `s ⧺ a ⧺ s_next` as `f32`, then the provenance byte padded to 4 bytes.
fn record_bytes(sensor_dim: usize, action_dim: usize) -> usize {
    4 * (2 * sensor_dim + action_dim) + 4
}

fn encode_records(out: &mut Vec<u8>, records: &[Transition]) {
    for t in records {
        for v in t.s.iter().chain(&t.a).chain(&t.s_next) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&[t.provenance as u8, 0, 0, 0]);
    }
}

fn check_schema(header: &DatasetHeader, records: &[Transition]) -> Result<(), PersistError> {
    for (i, t) in records.iter().enumerate() {
        if t.s.len() != header.sensor_dim
            || t.a.len() != header.action_dim
            || t.s_next.len() != header.sensor_dim
        {
            return Err(PersistError::Schema(format!(
                "record {i} has dims ({}, {}, {}), file holds ({}, {})",
                t.s.len(),
                t.a.len(),
                t.s_next.len(),
                header.sensor_dim,
                header.action_dim
            )));
        }
    }
    Ok(())
}

fn parse(bytes: &[u8]) -> Result<(DatasetHeader, usize, &[u8]), PersistError> {
    let (text, payload) = split_payload(bytes)?;
    #[derive(Deserialize)]
    struct Probe {
        format_version: u32,
    }
    let probe: Probe = toml::from_str(text).map_err(|e| PersistError::Header(e.to_string()))?;
    if probe.format_version != DATASET_FORMAT_VERSION {
        return Err(PersistError::Version {
            found: probe.format_version,
            supported: DATASET_FORMAT_VERSION,
        });
    }
    let header: DatasetHeader =
        toml::from_str(text).map_err(|e| PersistError::Header(e.to_string()))?;
    if header.record_bytes != record_bytes(header.sensor_dim, header.action_dim) {
        return Err(PersistError::Schema(format!(
            "record_bytes {} inconsistent with dims ({}, {})",
            header.record_bytes, header.sensor_dim, header.action_dim
        )));
    }
    if payload.len() != header.count * header.record_bytes {
        return Err(PersistError::Truncated {
            declared: header.count,
            found: payload.len(),
            record_bytes: header.record_bytes,
        });
    }
    Ok((header, text.len(), payload))
}

pub fn save_dataset(path: &Path, dataset: &ExperienceDataset) -> Result<(), PersistError> {
    let header = DatasetHeader::new(dataset.sensor_dim(), dataset.action_dim(), dataset.len());
    let mut out = header.render().into_bytes();
    out.extend_from_slice(PAYLOAD_DELIMITER);
    encode_records(&mut out, dataset.records());
    std::fs::write(path, out).map_err(|e| PersistError::io(path, e))
}

/// Reads a dataset file, checking it against the expected `(sensor_dim, action_dim)`.
/// The split follows `validation_fraction` and `split_seed` exactly as in
/// [`ExperienceDataset::new`].
pub fn load_dataset(
    path: &Path,
    dims: (usize, usize),
    validation_fraction: f64,
    split_seed: u64,
) -> Result<ExperienceDataset, PersistError> {
    let bytes = std::fs::read(path).map_err(|e| PersistError::io(path, e))?;
    let (header, _, payload) = parse(&bytes)?;
    if (header.sensor_dim, header.action_dim) != dims {
        return Err(PersistError::Schema(format!(
            "file declares dims ({}, {}), expected ({}, {})",
            header.sensor_dim, header.action_dim, dims.0, dims.1
        )));
    }
    let (sd, ad) = dims;
    let mut ds = ExperienceDataset::new(sd, ad, validation_fraction, split_seed);
    for (i, rec) in payload.chunks_exact(header.record_bytes).enumerate() {
        let values = f32_le(&rec[..header.record_bytes - 4]);
        let provenance = Provenance::from_byte(rec[header.record_bytes - 4]).ok_or_else(|| {
            PersistError::Schema(format!(
                "record {i}: unknown provenance byte {}",
                rec[header.record_bytes - 4]
            ))
        })?;
        let t = Transition {
            s: values[..sd].to_vec(),
            a: values[sd..sd + ad].to_vec(),
            s_next: values[sd + ad..].to_vec(),
            provenance,
        };
        ds.push(t)
            .map_err(|e| PersistError::Schema(format!("record {i}: {e}")))?;
    }
    Ok(ds)
}

/// Appends records to an existing file without touching the stored ones,
/// then rewrites the count in place.
pub fn append_dataset(path: &Path, records: &[Transition]) -> Result<DatasetHeader, PersistError> {
    let bytes = std::fs::read(path).map_err(|e| PersistError::io(path, e))?;
    let (mut header, header_len, _) = parse(&bytes)?;
    check_schema(&header, records)?;
    let count_at = header_len - COUNT_WIDTH;
    header.count += records.len();
    let mut tail = Vec::with_capacity(records.len() * header.record_bytes);
    encode_records(&mut tail, records);
    let io = |e| PersistError::io(path, e);
    let mut f = OpenOptions::new().write(true).open(path).map_err(io)?;
    f.seek(SeekFrom::End(0)).map_err(io)?;
    f.write_all(&tail).map_err(io)?;
    f.seek(SeekFrom::Start(count_at as u64)).map_err(io)?;
    f.write_all(format!("{:<COUNT_WIDTH$}", header.count).as_bytes())
        .map_err(io)?;
    Ok(header)
}

pub fn read_dataset_header(path: &Path) -> Result<DatasetHeader, PersistError> {
    let bytes = std::fs::read(path).map_err(|e| PersistError::io(path, e))?;
    Ok(parse(&bytes)?.0)
}
