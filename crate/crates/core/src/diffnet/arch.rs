use serde::{Deserialize, Serialize};

use super::layer::Layer;
use super::matrix::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Sigmoid,
    Sin,
}

impl Activation {
    pub fn layer<T: Real>(self) -> Layer<T> {
        match self {
            Activation::Tanh => Layer::Tanh,
            Activation::Relu => Layer::Relu,
            Activation::Sigmoid => Layer::Sigmoid,
            Activation::Sin => Layer::Sin,
        }
    }
}

/// Widths of the sensor trunk and of the fused head's hidden layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArchConfig {
    pub trunk: Vec<usize>,
    pub head: Vec<usize>,
    pub activation: Activation,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            trunk: vec![128, 128],
            head: vec![128],
            activation: Activation::Tanh,
        }
    }
}
