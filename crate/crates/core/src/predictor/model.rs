use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffnet::{ArchConfig, FusionGrads, FusionNet, FusionTape, Layer, Matrix, NetError};
use crate::env::Environment;

/// Bounds on the raw log-σ head output. Gradients vanish outside.
pub const LOG_SIGMA_MIN: f32 = -9.0;
pub const LOG_SIGMA_MAX: f32 = 4.0;

const HALF_LN_TAU: f64 = 0.918_938_533_204_672_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictionMode {
    /// Mean only; σ is identically 1 and the NLL reduces to half the MSE plus a constant.
    Point,
    /// Mean and per-dimension log σ.
    Gaussian,
}

/// Predicted next-state distribution for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrediction {
    pub mean: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// Mean over dimensions of the Gaussian negative log-likelihood.
pub fn nll_loss(pred: &GaussianPrediction, actual: &[f64]) -> f64 {
    assert_eq!(
        pred.mean.len(),
        actual.len(),
        "prediction/target length mismatch"
    );
    let n = actual.len() as f64;
    pred.mean
        .iter()
        .zip(&pred.sigma)
        .zip(actual)
        .map(|((&mu, &s), &x)| HALF_LN_TAU + s.ln() + (x - mu) * (x - mu) / (2.0 * s * s))
        .sum::<f64>()
        / n
}

/// Batch NLL averaged over rows and dimensions, with gradients w.r.t. mean and σ.
pub(crate) fn nll_batch(
    mean: &Matrix<f32>,
    sigma: &Matrix<f32>,
    target: &Matrix<f32>,
) -> (f64, Matrix<f32>, Matrix<f32>) {
    let n = (mean.rows() * mean.cols()) as f64;
    let mut dmean = Matrix::zeros(mean.rows(), mean.cols());
    let mut dsigma = Matrix::zeros(mean.rows(), mean.cols());
    let mut total = 0.0f64;
    for ((((&mu, &s), &x), dm), ds) in mean
        .as_slice()
        .iter()
        .zip(sigma.as_slice())
        .zip(target.as_slice())
        .zip(dmean.as_mut_slice())
        .zip(dsigma.as_mut_slice())
    {
        let (mu, s, x) = (mu as f64, s as f64, x as f64);
        let r = x - mu;
        total += HALF_LN_TAU + s.ln() + r * r / (2.0 * s * s);
        *dm = (-r / (s * s) / n) as f32;
        *ds = ((1.0 / s - r * r / (s * s * s)) / n) as f32;
    }
    (total / n, dmean, dsigma)
}

/// Forward model `(s_t, a_t) → ŝ_{t+1}`.
///
/// Actions are mapped from their box to `[-1, 1]` before entering the head.
/// In residual mode the mean head predicts `ŝ_{t+1} − s_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor {
    pub net: FusionNet<f32>,
    pub mode: PredictionMode,
    pub residual: bool,
    target_dim: usize,
    action_scale: Vec<f32>,
    action_shift: Vec<f32>,
}

impl Predictor {
    pub fn build<E: Environment, R: Rng + ?Sized>(
        env: &E,
        arch: &ArchConfig,
        mode: PredictionMode,
        residual: bool,
        rng: &mut R,
    ) -> Self {
        let target_dim = env.predictor_target(&env.observe()).len();
        assert!(
            !residual || env.prediction_is_sensor(),
            "residual predictor needs sensor-shaped targets"
        );
        let out = match mode {
            PredictionMode::Point => target_dim,
            PredictionMode::Gaussian => 2 * target_dim,
        };
        let (scale, shift) = env.sensor_normalization();
        let f = |v: Vec<f64>| v.into_iter().map(|x| x as f32).collect::<Vec<f32>>();
        let norm = Layer::scale_shift(f(scale), f(shift));
        let net = FusionNet::build(
            env.sensor_dim(),
            env.action_bounds().dim(),
            &arch.trunk,
            &arch.head,
            out,
            arch.activation.layer(),
            Some(norm),
            Vec::new(),
            rng,
        )
        .expect("architecture widths are consistent");
        Self::from_net(env, net, mode, residual).expect("freshly built network matches environment")
    }

    /// Wraps an existing network (e.g. loaded from disk) for `env`.
    pub fn from_net<E: Environment>(
        env: &E,
        net: FusionNet<f32>,
        mode: PredictionMode,
        residual: bool,
    ) -> Result<Self, NetError> {
        let target_dim = env.predictor_target(&env.observe()).len();
        let out = match mode {
            PredictionMode::Point => target_dim,
            PredictionMode::Gaussian => 2 * target_dim,
        };
        if net.output_dim() != out {
            return Err(NetError::Shape {
                layer: net.head.layers().len(),
                expected: out,
                got: net.output_dim(),
            });
        }
        if net.sensor_dim() != env.sensor_dim() || net.side_dim() != env.action_bounds().dim() {
            return Err(NetError::Shape {
                layer: 0,
                expected: env.sensor_dim(),
                got: net.sensor_dim(),
            });
        }
        let (scale, shift) = env.action_bounds().unit_map();
        Ok(Self {
            net,
            mode,
            residual,
            target_dim,
            action_scale: scale.iter().map(|&s| 1.0 / s as f32).collect(),
            action_shift: shift.iter().map(|&s| s as f32).collect(),
        })
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    fn normalize_actions(&self, a: &Matrix<f32>) -> Matrix<f32> {
        let mut out = a.clone();
        for r in 0..out.rows() {
            for ((v, &sc), &sh) in out
                .row_mut(r)
                .iter_mut()
                .zip(&self.action_scale)
                .zip(&self.action_shift)
            {
                *v = (*v - sh) * sc;
            }
        }
        out
    }

    pub fn forward(&self, s: Matrix<f32>, a: &Matrix<f32>) -> Result<PredTape<'_>, NetError> {
        let residual_base = if self.residual { Some(s.clone()) } else { None };
        let tape = self.net.forward(s, &self.normalize_actions(a))?;
        let out = tape.output();
        let t = self.target_dim;
        let mut mean = out.columns(0, t);
        if let Some(base) = &residual_base {
            mean.add_assign(base);
        }
        let (sigma, active) = match self.mode {
            PredictionMode::Point => (
                Matrix::from_vec(out.rows(), t, vec![1.0; out.rows() * t]),
                None,
            ),
            PredictionMode::Gaussian => {
                let raw = out.columns(t, 2 * t);
                let active = raw.map(|v| {
                    if (LOG_SIGMA_MIN..=LOG_SIGMA_MAX).contains(&v) {
                        1.0
                    } else {
                        0.0
                    }
                });
                (
                    raw.map(|v| v.clamp(LOG_SIGMA_MIN, LOG_SIGMA_MAX).exp()),
                    Some(active),
                )
            }
        };
        Ok(PredTape {
            pred: self,
            tape,
            mean,
            sigma,
            active,
        })
    }

    /// Single-input prediction.
    pub fn predict(&self, s: &[f64], a: &[f64]) -> Result<GaussianPrediction, NetError> {
        let f = |v: &[f64]| Matrix::row_vector(v.iter().map(|&x| x as f32).collect());
        let tape = self.forward(f(s), &f(a))?;
        let g = |m: &Matrix<f32>| m.row(0).iter().map(|&x| x as f64).collect();
        Ok(GaussianPrediction {
            mean: g(tape.mean()),
            sigma: g(tape.sigma()),
        })
    }
}

/// Recorded predictor forward pass.
pub struct PredTape<'n> {
    pred: &'n Predictor,
    tape: FusionTape<'n, f32>,
    mean: Matrix<f32>,
    sigma: Matrix<f32>,
    active: Option<Matrix<f32>>,
}

impl<'n> PredTape<'n> {
    pub fn mean(&self) -> &Matrix<f32> {
        &self.mean
    }

    pub fn sigma(&self) -> &Matrix<f32> {
        &self.sigma
    }

    fn head_grad(&self, dmean: &Matrix<f32>, dsigma: Option<&Matrix<f32>>) -> Matrix<f32> {
        match (&self.active, dsigma) {
            (Some(active), Some(ds)) => {
                // σ = exp(raw) so dσ/draw = σ inside the clamp window.
                let mut draw = ds.clone();
                for ((d, &s), &m) in draw
                    .as_mut_slice()
                    .iter_mut()
                    .zip(self.sigma.as_slice())
                    .zip(active.as_slice())
                {
                    *d *= s * m;
                }
                dmean.hcat(&draw)
            }
            (Some(_), None) => dmean.hcat(&Matrix::zeros(dmean.rows(), dmean.cols())),
            (None, _) => dmean.clone(),
        }
    }

    fn unnormalize_action_grad(&self, mut da: Matrix<f32>) -> Matrix<f32> {
        for r in 0..da.rows() {
            for (v, &sc) in da.row_mut(r).iter_mut().zip(&self.pred.action_scale) {
                *v *= sc;
            }
        }
        da
    }

    /// Parameter and input gradients for upstream `(dL/dmean, dL/dσ)`.
    pub fn backward(
        &self,
        dmean: &Matrix<f32>,
        dsigma: Option<&Matrix<f32>>,
    ) -> Result<FusionGrads<f32>, NetError> {
        let mut g = self.tape.backward(&self.head_grad(dmean, dsigma))?;
        if self.pred.residual {
            g.sensor.add_assign(dmean);
        }
        g.side = self.unnormalize_action_grad(g.side);
        Ok(g)
    }

    /// Input gradients only, for backpropagating through a frozen predictor.
    pub fn backward_inputs(
        &self,
        dmean: &Matrix<f32>,
        dsigma: Option<&Matrix<f32>>,
    ) -> Result<(Matrix<f32>, Matrix<f32>), NetError> {
        let (mut ds, da) = self.tape.backward_inputs(&self.head_grad(dmean, dsigma))?;
        if self.pred.residual {
            ds.add_assign(dmean);
        }
        Ok((ds, self.unnormalize_action_grad(da)))
    }
}
