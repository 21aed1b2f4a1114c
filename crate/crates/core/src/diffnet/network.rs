use rand::Rng;

use super::layer::Layer;
use super::matrix::{Matrix, Real};
use super::NetError;

/// Anything exposing a flat, ordered parameter vector to an optimizer.
pub trait Params<T: Real> {
    fn param_count(&self) -> usize;

    /// Mutable parameter slices in flat-vector order.
    fn param_slices_mut(&mut self) -> Vec<&mut [T]>;

    fn param_slices(&self) -> Vec<&[T]>;

    fn params(&self) -> Vec<T> {
        self.param_slices().concat()
    }

    fn set_params(&mut self, flat: &[T]) -> Result<(), NetError> {
        if flat.len() != self.param_count() {
            return Err(NetError::ParamLength {
                expected: self.param_count(),
                got: flat.len(),
            });
        }
        let mut offset = 0;
        for s in self.param_slices_mut() {
            s.copy_from_slice(&flat[offset..offset + s.len()]);
            offset += s.len();
        }
        Ok(())
    }
}

/// A sequential stack of layers with a fixed input width.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T = f32> {
    input_dim: usize,
    output_dim: usize,
    layers: Vec<Layer<T>>,
}

impl<T: Real> Network<T> {
    /// Validates that consecutive layer widths agree.
    pub fn new(input_dim: usize, layers: Vec<Layer<T>>) -> Result<Self, NetError> {
        let mut dim = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if let Some(expected) = layer.input_dim() {
                if expected != dim {
                    return Err(NetError::Shape {
                        layer: i,
                        expected,
                        got: dim,
                    });
                }
            }
            dim = layer.output_dim(dim);
        }
        Ok(Self {
            input_dim,
            output_dim: dim,
            layers,
        })
    }

    /// Dense stack `input → hidden... → output` with `hidden_act` after each
    /// hidden layer and nothing after the last dense layer.
    pub fn mlp<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: &[usize],
        output_dim: usize,
        hidden_act: Layer<T>,
        rng: &mut R,
    ) -> Self {
        let mut layers = Vec::new();
        let mut dim = input_dim;
        for &h in hidden {
            layers.push(Layer::dense_glorot(dim, h, rng));
            layers.push(hidden_act.clone());
            dim = h;
        }
        layers.push(Layer::dense_glorot(dim, output_dim, rng));
        Self::new(input_dim, layers).expect("mlp widths are consistent by construction")
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    /// Appends a layer, checking width compatibility.
    pub fn push(&mut self, layer: Layer<T>) -> Result<(), NetError> {
        if let Some(expected) = layer.input_dim() {
            if expected != self.output_dim {
                return Err(NetError::Shape {
                    layer: self.layers.len(),
                    expected,
                    got: self.output_dim,
                });
            }
        }
        self.output_dim = layer.output_dim(self.output_dim);
        self.layers.push(layer);
        Ok(())
    }

    /// Layers of `self` followed by layers of `next`.
    pub fn then(&self, next: &Network<T>) -> Result<Network<T>, NetError> {
        if next.input_dim != self.output_dim {
            return Err(NetError::Shape {
                layer: self.layers.len(),
                expected: next.input_dim,
                got: self.output_dim,
            });
        }
        let mut layers = self.layers.clone();
        layers.extend(next.layers.iter().cloned());
        Network::new(self.input_dim, layers)
    }

    /// Single-input forward pass.
    pub fn forward(&self, input: &[T]) -> Result<(Vec<T>, Tape<'_, T>), NetError> {
        let tape = self.forward_batch(Matrix::row_vector(input.to_vec()))?;
        let out = tape.output().row(0).to_vec();
        Ok((out, tape))
    }

    /// Batched forward pass recording every intermediate activation.
    pub fn forward_batch(&self, input: Matrix<T>) -> Result<Tape<'_, T>, NetError> {
        self.check_input(&input)?;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input);
        for layer in &self.layers {
            let next = layer.forward(acts.last().expect("non-empty"));
            acts.push(next);
        }
        Ok(Tape { net: self, acts })
    }

    /// Forward pass without recording, for evaluation.
    pub fn eval_batch(&self, input: &Matrix<T>) -> Result<Matrix<T>, NetError> {
        self.check_input(input)?;
        let mut x = input.clone();
        for layer in &self.layers {
            x = layer.forward(&x);
        }
        Ok(x)
    }

    fn check_input(&self, input: &Matrix<T>) -> Result<(), NetError> {
        if input.cols() != self.input_dim {
            return Err(NetError::Shape {
                layer: 0,
                expected: self.input_dim,
                got: input.cols(),
            });
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> Network<U> {
        let conv = |v: &[T]| {
            v.iter()
                .map(|x| U::from_f64_lossy(x.as_f64()))
                .collect::<Vec<U>>()
        };
        let layers = self
            .layers
            .iter()
            .map(|l| match l {
                Layer::Dense {
                    in_dim,
                    out_dim,
                    weights,
                    bias,
                } => Layer::Dense {
                    in_dim: *in_dim,
                    out_dim: *out_dim,
                    weights: conv(weights),
                    bias: conv(bias),
                },
                Layer::Tanh => Layer::Tanh,
                Layer::Relu => Layer::Relu,
                Layer::Sigmoid => Layer::Sigmoid,
                Layer::Sin => Layer::Sin,
                Layer::ScaleShift { scale, shift } => Layer::ScaleShift {
                    scale: conv(scale),
                    shift: conv(shift),
                },
            })
            .collect();
        Network {
            input_dim: self.input_dim,
            output_dim: self.output_dim,
            layers,
        }
    }
}

impl<T: Real> Params<T> for Network<T> {
    fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            if let Some((w, b)) = layer.params_mut() {
                out.push(w);
                out.push(b);
            }
        }
        out
    }

    fn param_slices(&self) -> Vec<&[T]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            if let Some((w, b)) = layer.params() {
                out.push(w);
                out.push(b);
            }
        }
        out
    }
}

/// Activations recorded by one batched forward pass.
///
/// The tape borrows its network, so parameters cannot change while a tape
/// is alive.
#[derive(Debug)]
pub struct Tape<'n, T: Real> {
    net: &'n Network<T>,
    acts: Vec<Matrix<T>>,
}

/// Gradients from one backward sweep.
#[derive(Debug, Clone)]
pub struct Grads<T> {
    /// Flat, summed over the batch. Empty when parameter gradients were not requested.
    pub params: Vec<T>,
    pub input: Matrix<T>,
}

impl<'n, T: Real> Tape<'n, T> {
    pub fn output(&self) -> &Matrix<T> {
        self.acts.last().expect("tape holds at least the input")
    }

    pub fn input(&self) -> &Matrix<T> {
        &self.acts[0]
    }

    pub fn network(&self) -> &'n Network<T> {
        self.net
    }

    /// Reverse sweep for the scalar `Σ ⟨output, output_grad⟩`.
    pub fn backward(&self, output_grad: &Matrix<T>) -> Result<Grads<T>, NetError> {
        self.backward_impl(output_grad, true)
    }

    /// Like [`backward`](Self::backward) but skips parameter gradients.
    pub fn backward_input(&self, output_grad: &Matrix<T>) -> Result<Matrix<T>, NetError> {
        Ok(self.backward_impl(output_grad, false)?.input)
    }

    fn backward_impl(
        &self,
        output_grad: &Matrix<T>,
        want_params: bool,
    ) -> Result<Grads<T>, NetError> {
        let out = self.output();
        if output_grad.rows() != out.rows() || output_grad.cols() != out.cols() {
            return Err(NetError::TapeMismatch {
                expected: (out.rows(), out.cols()),
                got: (output_grad.rows(), output_grad.cols()),
            });
        }
        let mut params = if want_params {
            vec![T::zero(); self.net.param_count()]
        } else {
            Vec::new()
        };
        let mut offset = params.len();
        let mut grad = output_grad.clone();
        for (i, layer) in self.net.layers.iter().enumerate().rev() {
            let n = layer.param_count();
            let slot = if want_params && n > 0 {
                offset -= n;
                Some(&mut params[offset..offset + n])
            } else {
                None
            };
            grad = layer.backward(&self.acts[i], &self.acts[i + 1], &grad, slot);
        }
        Ok(Grads {
            params,
            input: grad,
        })
    }
}
