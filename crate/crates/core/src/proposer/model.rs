use rand::Rng;

use super::ProposerError;
use crate::diffnet::{ArchConfig, FusionNet, FusionTape, Layer, Matrix, NetError};
use crate::env::{ActionBounds, Environment};
use crate::predictor::Predictor;

/// Affordance-conditioned policy `(s, ω) → a`.
///
/// The head ends in `tanh` followed by a fixed scale-shift onto the action
/// box, so every output is a legal action.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposer {
    pub net: FusionNet<f32>,
    grid_dim: usize,
    bounds: ActionBounds,
}

impl Proposer {
    pub fn build<E: Environment, R: Rng + ?Sized>(
        env: &E,
        arch: &ArchConfig,
        grid_dim: usize,
        rng: &mut R,
    ) -> Self {
        let f = |v: Vec<f64>| v.into_iter().map(|x| x as f32).collect::<Vec<f32>>();
        let (scale, shift) = env.sensor_normalization();
        let norm = Layer::scale_shift(f(scale), f(shift));
        let (ascale, ashift) = env.action_bounds().unit_map();
        let net = FusionNet::build(
            env.sensor_dim(),
            grid_dim,
            &arch.trunk,
            &arch.head,
            env.action_bounds().dim(),
            arch.activation.layer(),
            Some(norm),
            vec![Layer::Tanh, Layer::scale_shift(f(ascale), f(ashift))],
            rng,
        )
        .expect("architecture widths are consistent");
        Self {
            net,
            grid_dim,
            bounds: env.action_bounds(),
        }
    }

    pub fn from_net<E: Environment>(env: &E, net: FusionNet<f32>) -> Result<Self, NetError> {
        let bounds = env.action_bounds();
        if net.sensor_dim() != env.sensor_dim() {
            return Err(NetError::Shape {
                layer: 0,
                expected: env.sensor_dim(),
                got: net.sensor_dim(),
            });
        }
        if net.output_dim() != bounds.dim() {
            return Err(NetError::Shape {
                layer: net.head.layers().len(),
                expected: bounds.dim(),
                got: net.output_dim(),
            });
        }
        Ok(Self {
            grid_dim: net.side_dim(),
            net,
            bounds,
        })
    }

    pub fn grid_dim(&self) -> usize {
        self.grid_dim
    }

    pub fn action_bounds(&self) -> &ActionBounds {
        &self.bounds
    }

    pub fn forward(
        &self,
        s: Matrix<f32>,
        omega: &Matrix<f32>,
    ) -> Result<FusionTape<'_, f32>, NetError> {
        self.net.forward(s, omega)
    }

    pub fn propose_batch(
        &self,
        s: &Matrix<f32>,
        omega: &Matrix<f32>,
    ) -> Result<Matrix<f32>, NetError> {
        self.net.eval(s, omega)
    }

    /// Action for one sensor vector and affordance. `ω` must lie in `[-1, 1]^n`.
    pub fn propose(&self, s: &[f64], omega: &[f64]) -> Result<Vec<f64>, ProposerError> {
        if omega.len() != self.grid_dim {
            return Err(ProposerError::OmegaLength {
                expected: self.grid_dim,
                got: omega.len(),
            });
        }
        if let Some((index, &value)) = omega
            .iter()
            .enumerate()
            .find(|(_, v)| !(-1.0..=1.0).contains(*v))
        {
            return Err(ProposerError::OmegaOutOfRange { index, value });
        }
        let f = |v: &[f64]| Matrix::row_vector(v.iter().map(|&x| x as f32).collect());
        let out = self.propose_batch(&f(s), &f(omega))?;
        let mut a: Vec<f64> = out.row(0).iter().map(|&x| x as f64).collect();
        // f32 rounding of the scale-shift can overshoot the box by an ulp
        self.bounds.clamp(&mut a);
        Ok(a)
    }

    /// Replaces the sensor trunk with a copy of the predictor's.
    pub fn tie_trunk(&mut self, predictor: &Predictor) -> Result<(), NetError> {
        let src = &predictor.net.trunk;
        let dst = &self.net.trunk;
        if src.layers().len() != dst.layers().len()
            || src.layers().iter().zip(dst.layers()).any(|(a, b)| {
                a.kind() != b.kind()
                    || a.input_dim() != b.input_dim()
                    || a.param_count() != b.param_count()
            })
        {
            return Err(NetError::Shape {
                layer: 0,
                expected: dst.output_dim(),
                got: src.output_dim(),
            });
        }
        self.net.trunk = src.clone();
        Ok(())
    }

    /// Upper bound on the Lipschitz constant of `ω ↦ π(s, ω)` for any `s`:
    /// product of spectral norms along the head, restricted to the `ω`
    /// columns of its first layer. All activations are 1-Lipschitz.
    pub fn lipschitz_bound(&self) -> f64 {
        let feat = self.net.trunk.output_dim();
        let mut bound = 1.0;
        let mut first = true;
        for layer in self.net.head.layers() {
            match layer {
                Layer::Dense {
                    in_dim,
                    out_dim,
                    weights,
                    ..
                } => {
                    let cols = if first { feat..*in_dim } else { 0..*in_dim };
                    first = false;
                    let w: Vec<Vec<f64>> = (0..*out_dim)
                        .map(|r| {
                            cols.clone()
                                .map(|c| weights[r * in_dim + c] as f64)
                                .collect()
                        })
                        .collect();
                    bound *= spectral_norm(&w);
                }
                Layer::ScaleShift { scale, .. } => {
                    bound *= scale.iter().map(|s| s.abs() as f64).fold(0.0, f64::max);
                }
                Layer::Sigmoid => bound *= 0.25,
                Layer::Tanh | Layer::Relu | Layer::Sin => {}
            }
        }
        bound
    }
}

/// Largest singular value by power iteration on `WᵀW`.
pub(crate) fn spectral_norm(w: &[Vec<f64>]) -> f64 {
    let n = w.first().map_or(0, |r| r.len());
    if n == 0 {
        return 0.0;
    }
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut sigma = 0.0;
    for _ in 0..500 {
        let wv: Vec<f64> = w
            .iter()
            .map(|r| r.iter().zip(&v).map(|(a, b)| a * b).sum())
            .collect();
        let mut u = vec![0.0; n];
        for (r, &x) in w.iter().zip(&wv) {
            for (ui, &a) in u.iter_mut().zip(r) {
                *ui += a * x;
            }
        }
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm.sqrt();
        v = u.into_iter().map(|x| x / norm).collect();
        if (next - sigma).abs() <= 1e-12 * next {
            return next;
        }
        sigma = next;
    }
    // Power iteration approaches from below; pad so the bound stays an upper bound.
    sigma * (1.0 + 1e-6)
}
