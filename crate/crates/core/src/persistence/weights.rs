use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{f32_le, split_payload, PersistError, PAYLOAD_DELIMITER};
use crate::diffnet::{FusionNet, Layer, LayerKind, Network, Params};

pub const WEIGHT_FORMAT_VERSION: u32 = 1;

/// Shape of one layer. Dense layers carry their widths (their values live in
/// the payload); scale-shift layers carry their fixed vectors inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerDescriptor {
    pub kind: LayerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<Vec<f32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vec<f32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightHeader {
    pub format_version: u32,
    pub param_count: usize,
    /// Master seed of the run that produced the weights. A string so the full
    /// `u64` range survives TOML's signed integers.
    pub seed: String,
    pub crc32: u32,
    pub sensor_dim: usize,
    pub side_dim: usize,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
    pub trunk: Vec<LayerDescriptor>,
    pub head: Vec<LayerDescriptor>,
}

fn describe(layers: &[Layer<f32>]) -> Vec<LayerDescriptor> {
    layers
        .iter()
        .map(|l| {
            let mut d = LayerDescriptor {
                kind: l.kind(),
                in_dim: None,
                out_dim: None,
                scale: None,
                shift: None,
            };
            match l {
                Layer::Dense {
                    in_dim, out_dim, ..
                } => (d.in_dim, d.out_dim) = (Some(*in_dim), Some(*out_dim)),
                Layer::ScaleShift { scale, shift } => {
                    (d.scale, d.shift) = (Some(scale.clone()), Some(shift.clone()))
                }
                _ => {}
            }
            d
        })
        .collect()
}

fn rebuild(input_dim: usize, descs: &[LayerDescriptor]) -> Result<Network<f32>, PersistError> {
    let bad = |i: usize, what: &str| PersistError::Header(format!("layer {i}: {what}"));
    let layers = descs
        .iter()
        .enumerate()
        .map(|(i, d)| {
            Ok(match d.kind {
                LayerKind::Dense => match (d.in_dim, d.out_dim) {
                    (Some(a), Some(b)) => Layer::dense_zeros(a, b),
                    _ => return Err(bad(i, "dense layer needs in_dim and out_dim")),
                },
                LayerKind::ScaleShift => match (&d.scale, &d.shift) {
                    (Some(s), Some(t)) if s.len() == t.len() => {
                        Layer::scale_shift(s.clone(), t.clone())
                    }
                    _ => {
                        return Err(bad(
                            i,
                            "scale-shift layer needs equal-length scale and shift",
                        ))
                    }
                },
                LayerKind::Tanh => Layer::Tanh,
                LayerKind::Relu => Layer::Relu,
                LayerKind::Sigmoid => Layer::Sigmoid,
                LayerKind::Sin => Layer::Sin,
            })
        })
        .collect::<Result<Vec<_>, PersistError>>()?;
    Ok(Network::new(input_dim, layers)?)
}

/// Serializes `net` to the weight file format.
pub fn encode_network(net: &FusionNet<f32>, seed: u64, meta: &BTreeMap<String, String>) -> Vec<u8> {
    let params = net.params();
    let payload: Vec<u8> = params.iter().flat_map(|v| v.to_le_bytes()).collect();
    let header = WeightHeader {
        format_version: WEIGHT_FORMAT_VERSION,
        param_count: params.len(),
        seed: seed.to_string(),
        crc32: crc32fast::hash(&payload),
        sensor_dim: net.sensor_dim(),
        side_dim: net.side_dim(),
        meta: meta.clone(),
        trunk: describe(net.trunk.layers()),
        head: describe(net.head.layers()),
    };
    let mut out = toml::to_string(&header)
        .expect("weight header serializes")
        .into_bytes();
    out.extend_from_slice(PAYLOAD_DELIMITER);
    out.extend_from_slice(&payload);
    out
}

fn parse_header(text: &str) -> Result<WeightHeader, PersistError> {
    #[derive(Deserialize)]
    struct Probe {
        format_version: u32,
    }
    let probe: Probe = toml::from_str(text).map_err(|e| PersistError::Header(e.to_string()))?;
    if probe.format_version != WEIGHT_FORMAT_VERSION {
        return Err(PersistError::Version {
            found: probe.format_version,
            supported: WEIGHT_FORMAT_VERSION,
        });
    }
    toml::from_str(text).map_err(|e| PersistError::Header(e.to_string()))
}

/// Parses and verifies a weight file. Length is checked before the checksum.
pub fn decode_network(bytes: &[u8]) -> Result<(FusionNet<f32>, WeightHeader), PersistError> {
    let (text, payload) = split_payload(bytes)?;
    let header = parse_header(text)?;
    if payload.len() % 4 != 0 || payload.len() / 4 != header.param_count {
        return Err(PersistError::Length {
            declared: header.param_count,
            found: payload.len() / 4,
        });
    }
    let actual = crc32fast::hash(payload);
    if actual != header.crc32 {
        return Err(PersistError::Checksum {
            expected: header.crc32,
            actual,
        });
    }
    let trunk = rebuild(header.sensor_dim, &header.trunk)?;
    let head = rebuild(trunk.output_dim() + header.side_dim, &header.head)?;
    let mut net = FusionNet::new(trunk, head, header.side_dim)?;
    if net.param_count() != header.param_count {
        return Err(PersistError::Length {
            declared: header.param_count,
            found: net.param_count(),
        });
    }
    net.set_params(&f32_le(payload))?;
    Ok((net, header))
}

pub fn save_network(
    path: &Path,
    net: &FusionNet<f32>,
    seed: u64,
    meta: &BTreeMap<String, String>,
) -> Result<(), PersistError> {
    std::fs::write(path, encode_network(net, seed, meta)).map_err(|e| PersistError::io(path, e))
}

pub fn load_network(path: &Path) -> Result<(FusionNet<f32>, WeightHeader), PersistError> {
    decode_network(&std::fs::read(path).map_err(|e| PersistError::io(path, e))?)
}

/// Header only, without checking the payload.
pub fn read_weight_header(path: &Path) -> Result<WeightHeader, PersistError> {
    let bytes = std::fs::read(path).map_err(|e| PersistError::io(path, e))?;
    parse_header(split_payload(&bytes)?.0)
}
