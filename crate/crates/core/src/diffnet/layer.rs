use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{affine_forward, affine_input_grad, affine_weight_grad, Matrix, Real};

/// Layer kind tag, as written into weight file manifests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerKind {
    Dense,
    Tanh,
    Relu,
    Sigmoid,
    Sin,
    ScaleShift,
}

/// One stage of a [`Network`](super::Network).
///
/// Only `Dense` carries trainable parameters. `ScaleShift` applies a fixed
/// per-feature affine map and is used to move a bounded activation into an
/// action box, or to normalize raw sensor ranges.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer<T> {
    Dense {
        in_dim: usize,
        out_dim: usize,
        /// Row-major `out_dim × in_dim`.
        weights: Vec<T>,
        bias: Vec<T>,
    },
    Tanh,
    Relu,
    Sigmoid,
    /// Periodic activation; suits outcomes built from rotations.
    Sin,
    ScaleShift {
        scale: Vec<T>,
        shift: Vec<T>,
    },
}

impl<T: Real> Layer<T> {
    pub fn dense_zeros(in_dim: usize, out_dim: usize) -> Self {
        Layer::Dense {
            in_dim,
            out_dim,
            weights: vec![T::zero(); in_dim * out_dim],
            bias: vec![T::zero(); out_dim],
        }
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn dense_glorot<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weights = (0..in_dim * out_dim)
            .map(|_| T::from_f64_lossy(rng.random_range(-limit..=limit)))
            .collect();
        Layer::Dense {
            in_dim,
            out_dim,
            weights,
            bias: vec![T::zero(); out_dim],
        }
    }

    pub fn scale_shift(scale: Vec<T>, shift: Vec<T>) -> Self {
        assert_eq!(scale.len(), shift.len(), "scale/shift length mismatch");
        Layer::ScaleShift { scale, shift }
    }

    pub fn kind(&self) -> LayerKind {
        match self {
            Layer::Dense { .. } => LayerKind::Dense,
            Layer::Tanh => LayerKind::Tanh,
            Layer::Relu => LayerKind::Relu,
            Layer::Sigmoid => LayerKind::Sigmoid,
            Layer::Sin => LayerKind::Sin,
            Layer::ScaleShift { .. } => LayerKind::ScaleShift,
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Layer::Dense { weights, bias, .. } => weights.len() + bias.len(),
            _ => 0,
        }
    }

    /// Input width this layer requires, `None` for shape-polymorphic activations.
    pub fn input_dim(&self) -> Option<usize> {
        match self {
            Layer::Dense { in_dim, .. } => Some(*in_dim),
            Layer::ScaleShift { scale, .. } => Some(scale.len()),
            _ => None,
        }
    }

    pub fn output_dim(&self, input_dim: usize) -> usize {
        match self {
            Layer::Dense { out_dim, .. } => *out_dim,
            _ => input_dim,
        }
    }

    pub(crate) fn forward(&self, x: &Matrix<T>) -> Matrix<T> {
        match self {
            Layer::Dense {
                out_dim,
                weights,
                bias,
                ..
            } => affine_forward(x, weights, bias, *out_dim),
            Layer::Tanh => x.map(T::tanh),
            Layer::Relu => x.map(|v| if v > T::zero() { v } else { T::zero() }),
            Layer::Sigmoid => x.map(|v| T::one() / (T::one() + (-v).exp())),
            Layer::Sin => x.map(T::sin),
            Layer::ScaleShift { scale, shift } => {
                let mut y = x.clone();
                for r in 0..y.rows() {
                    for ((v, &s), &b) in y.row_mut(r).iter_mut().zip(scale).zip(shift) {
                        *v = *v * s + b;
                    }
                }
                y
            }
        }
    }

    /// Backpropagates `dy` given this layer's input `x` and output `y`.
    /// Dense weight/bias gradients are accumulated into `dparams`.
    pub(crate) fn backward(
        &self,
        x: &Matrix<T>,
        y: &Matrix<T>,
        dy: &Matrix<T>,
        dparams: Option<&mut [T]>,
    ) -> Matrix<T> {
        match self {
            Layer::Dense {
                in_dim, weights, ..
            } => {
                if let Some(dp) = dparams {
                    let (dw, db) = dp.split_at_mut(weights.len());
                    affine_weight_grad(dy, x, dw);
                    for r in 0..dy.rows() {
                        for (b, &g) in db.iter_mut().zip(dy.row(r)) {
                            *b += g;
                        }
                    }
                }
                affine_input_grad(dy, weights, *in_dim)
            }
            Layer::Tanh => zip_map(dy, y, |g, yv| g * (T::one() - yv * yv)),
            Layer::Sigmoid => zip_map(dy, y, |g, yv| g * yv * (T::one() - yv)),
            Layer::Relu => zip_map(dy, x, |g, xv| if xv > T::zero() { g } else { T::zero() }),
            Layer::Sin => zip_map(dy, x, |g, xv| g * xv.cos()),
            Layer::ScaleShift { scale, .. } => {
                let mut dx = dy.clone();
                for r in 0..dx.rows() {
                    for (v, &s) in dx.row_mut(r).iter_mut().zip(scale) {
                        *v *= s;
                    }
                }
                dx
            }
        }
    }

    pub(crate) fn params_mut(&mut self) -> Option<(&mut [T], &mut [T])> {
        match self {
            Layer::Dense { weights, bias, .. } => {
                Some((weights.as_mut_slice(), bias.as_mut_slice()))
            }
            _ => None,
        }
    }

    pub(crate) fn params(&self) -> Option<(&[T], &[T])> {
        match self {
            Layer::Dense { weights, bias, .. } => Some((weights.as_slice(), bias.as_slice())),
            _ => None,
        }
    }
}

fn zip_map<T: Real>(a: &Matrix<T>, b: &Matrix<T>, f: impl Fn(T, T) -> T) -> Matrix<T> {
    let data = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(&u, &v)| f(u, v))
        .collect();
    Matrix::from_vec(a.rows(), a.cols(), data)
}
