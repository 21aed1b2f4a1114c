use rand::Rng;

use super::layer::Layer;
use super::matrix::{Matrix, Real};
use super::network::{Network, Params, Tape};
use super::NetError;

/// Sensor trunk fused with a second input stream.
///
/// `out = head([trunk(sensor) | side])`. The predictor feeds the action as
/// `side`, the proposer feeds the affordance coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionNet<T = f32> {
    pub trunk: Network<T>,
    pub head: Network<T>,
}

/// Parameter gradients split by sub-network, plus gradients w.r.t. both inputs.
#[derive(Debug, Clone)]
pub struct FusionGrads<T> {
    pub trunk: Vec<T>,
    pub head: Vec<T>,
    pub sensor: Matrix<T>,
    pub side: Matrix<T>,
}

impl<T> FusionGrads<T> {
    /// Flat parameter gradient in `trunk ⧺ head` order.
    pub fn flat_params(&self) -> Vec<T>
    where
        T: Copy,
    {
        let mut v = self.trunk.clone();
        v.extend_from_slice(&self.head);
        v
    }
}

pub struct FusionTape<'n, T: Real> {
    trunk: Tape<'n, T>,
    head: Tape<'n, T>,
}

impl<T: Real> FusionNet<T> {
    pub fn new(trunk: Network<T>, head: Network<T>, side_dim: usize) -> Result<Self, NetError> {
        let expected = trunk.output_dim() + side_dim;
        if head.input_dim() != expected {
            return Err(NetError::Shape {
                layer: trunk.layers().len(),
                expected: head.input_dim(),
                got: expected,
            });
        }
        Ok(Self { trunk, head })
    }

    /// Trunk: optional fixed input normalization, then `trunk_widths` dense+act
    /// layers. Head: dense+act per `head_widths`, then a linear output layer,
    /// then `output_map` layers (e.g. tanh + scale-shift).
    #[allow(clippy::too_many_arguments)]
    pub fn build<R: Rng + ?Sized>(
        sensor_dim: usize,
        side_dim: usize,
        trunk_widths: &[usize],
        head_widths: &[usize],
        output_dim: usize,
        activation: Layer<T>,
        sensor_norm: Option<Layer<T>>,
        output_map: Vec<Layer<T>>,
        rng: &mut R,
    ) -> Result<Self, NetError> {
        let mut trunk = Network::new(sensor_dim, Vec::new())?;
        if let Some(norm) = sensor_norm {
            trunk.push(norm)?;
        }
        for &w in trunk_widths {
            trunk.push(Layer::dense_glorot(trunk.output_dim(), w, rng))?;
            trunk.push(activation.clone())?;
        }
        let mut head = Network::new(trunk.output_dim() + side_dim, Vec::new())?;
        for &w in head_widths {
            head.push(Layer::dense_glorot(head.output_dim(), w, rng))?;
            head.push(activation.clone())?;
        }
        head.push(Layer::dense_glorot(head.output_dim(), output_dim, rng))?;
        for l in output_map {
            head.push(l)?;
        }
        Self::new(trunk, head, side_dim)
    }

    pub fn sensor_dim(&self) -> usize {
        self.trunk.input_dim()
    }

    pub fn side_dim(&self) -> usize {
        self.head.input_dim() - self.trunk.output_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.head.output_dim()
    }

    pub fn forward(
        &self,
        sensor: Matrix<T>,
        side: &Matrix<T>,
    ) -> Result<FusionTape<'_, T>, NetError> {
        if side.cols() != self.side_dim() {
            return Err(NetError::Shape {
                layer: self.trunk.layers().len(),
                expected: self.side_dim(),
                got: side.cols(),
            });
        }
        let trunk = self.trunk.forward_batch(sensor)?;
        let fused = trunk.output().hcat(side);
        let head = self.head.forward_batch(fused)?;
        Ok(FusionTape { trunk, head })
    }

    pub fn eval(&self, sensor: &Matrix<T>, side: &Matrix<T>) -> Result<Matrix<T>, NetError> {
        let feat = self.trunk.eval_batch(sensor)?;
        self.head.eval_batch(&feat.hcat(side))
    }

    pub fn cast<U: Real>(&self) -> FusionNet<U> {
        FusionNet {
            trunk: self.trunk.cast(),
            head: self.head.cast(),
        }
    }
}

impl<'n, T: Real> FusionTape<'n, T> {
    pub fn output(&self) -> &Matrix<T> {
        self.head.output()
    }

    pub fn backward(&self, output_grad: &Matrix<T>) -> Result<FusionGrads<T>, NetError> {
        let head = self.head.backward(output_grad)?;
        let feat_dim = self.trunk.output().cols();
        let (dfeat, side) = head.input.hsplit(feat_dim);
        let trunk = self.trunk.backward(&dfeat)?;
        Ok(FusionGrads {
            trunk: trunk.params,
            head: head.params,
            sensor: trunk.input,
            side,
        })
    }

    /// Input gradients only; used when backpropagating through a frozen net.
    pub fn backward_inputs(
        &self,
        output_grad: &Matrix<T>,
    ) -> Result<(Matrix<T>, Matrix<T>), NetError> {
        let dfused = self.head.backward_input(output_grad)?;
        let feat_dim = self.trunk.output().cols();
        let (dfeat, side) = dfused.hsplit(feat_dim);
        let sensor = self.trunk.backward_input(&dfeat)?;
        Ok((sensor, side))
    }
}

impl<T: Real> Params<T> for FusionNet<T> {
    fn param_count(&self) -> usize {
        self.trunk.param_count() + self.head.param_count()
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        let mut v = self.trunk.param_slices_mut();
        v.extend(self.head.param_slices_mut());
        v
    }

    fn param_slices(&self) -> Vec<&[T]> {
        let mut v = self.trunk.param_slices();
        v.extend(self.head.param_slices());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fusion_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = FusionNet::<f64>::build(
            3,
            2,
            &[4],
            &[4],
            2,
            Layer::Tanh,
            None,
            vec![Layer::Tanh],
            &mut rng,
        )
        .unwrap();
        let s = Matrix::from_rows(&[[0.2, -0.4, 0.9]]);
        let a = Matrix::from_rows(&[[0.5, -0.1]]);
        let g = Matrix::from_rows(&[[1.0, -2.0]]);
        let tape = net.forward(s.clone(), &a).unwrap();
        let grads = tape.backward(&g).unwrap();
        let loss = |n: &FusionNet<f64>, s: &Matrix<f64>, a: &Matrix<f64>| {
            let y = n.eval(s, a).unwrap();
            y.get(0, 0) - 2.0 * y.get(0, 1)
        };
        let h = 1e-6;
        let flat = net.params();
        let analytic = grads.flat_params();
        for i in 0..flat.len() {
            let mut p = net.clone();
            let mut v = flat.clone();
            v[i] += h;
            p.set_params(&v).unwrap();
            let up = loss(&p, &s, &a);
            v[i] -= 2.0 * h;
            p.set_params(&v).unwrap();
            let dn = loss(&p, &s, &a);
            assert!(((up - dn) / (2.0 * h) - analytic[i]).abs() < 1e-7);
        }
        for j in 0..2 {
            let mut ap = a.clone();
            ap.set(0, j, a.get(0, j) + h);
            let up = loss(&net, &s, &ap);
            ap.set(0, j, a.get(0, j) - h);
            let dn = loss(&net, &s, &ap);
            assert!(((up - dn) / (2.0 * h) - grads.side.get(0, j)).abs() < 1e-7);
        }
        let (ds, da) = tape.backward_inputs(&g).unwrap();
        assert_eq!(ds, grads.sensor);
        assert_eq!(da, grads.side);
    }
}
