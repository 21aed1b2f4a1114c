use serde::{Deserialize, Serialize};

use super::matrix::Real;
use super::network::Params;
use super::NetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// First-order optimizer with per-parameter Adam moments.
#[derive(Debug, Clone)]
pub struct Optimizer<T> {
    kind: OptimizerKind,
    lr: T,
    beta1: T,
    beta2: T,
    eps: T,
    /// Global gradient-norm clip, if any.
    clip: Option<T>,
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
}

impl<T: Real> Optimizer<T> {
    pub fn sgd(lr: T) -> Self {
        Self::new(OptimizerKind::Sgd, lr)
    }

    /// Adam with β₁ = 0.9, β₂ = 0.999, ε = 1e-8.
    pub fn adam(lr: T) -> Self {
        Self::new(OptimizerKind::Adam, lr)
    }

    pub fn new(kind: OptimizerKind, lr: T) -> Self {
        Self {
            kind,
            lr,
            beta1: T::from_f64_lossy(0.9),
            beta2: T::from_f64_lossy(0.999),
            eps: T::from_f64_lossy(1e-8),
            clip: None,
            m: Vec::new(),
            v: Vec::new(),
            t: 0,
        }
    }

    pub fn with_clip(mut self, max_norm: Option<T>) -> Self {
        self.clip = max_norm;
        self
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn learning_rate(&self) -> T {
        self.lr
    }

    pub fn set_learning_rate(&mut self, lr: T) {
        self.lr = lr;
    }

    pub fn steps_taken(&self) -> i32 {
        self.t
    }

    /// Applies one update. Refuses non-finite or wrongly sized gradients and
    /// leaves `net` untouched in that case.
    pub fn step<P: Params<T> + ?Sized>(&mut self, net: &mut P, grad: &[T]) -> Result<(), NetError> {
        let n = net.param_count();
        if grad.len() != n {
            return Err(NetError::ParamLength {
                expected: n,
                got: grad.len(),
            });
        }
        if let Some(index) = grad.iter().position(|g| !g.is_finite()) {
            return Err(NetError::NonFiniteGradient { index });
        }
        let scale = match self.clip {
            Some(max) => {
                let norm = grad.iter().map(|&g| g * g).sum::<T>().sqrt();
                if norm > max {
                    max / norm
                } else {
                    T::one()
                }
            }
            None => T::one(),
        };
        self.t += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                let mut i = 0;
                for slice in net.param_slices_mut() {
                    for p in slice.iter_mut() {
                        *p -= self.lr * grad[i] * scale;
                        i += 1;
                    }
                }
            }
            OptimizerKind::Adam => {
                if self.m.len() != n {
                    self.m = vec![T::zero(); n];
                    self.v = vec![T::zero(); n];
                }
                let one = T::one();
                let bc1 = one - self.beta1.powi(self.t);
                let bc2 = one - self.beta2.powi(self.t);
                let mut i = 0;
                for slice in net.param_slices_mut() {
                    for p in slice.iter_mut() {
                        let g = grad[i] * scale;
                        self.m[i] = self.beta1 * self.m[i] + (one - self.beta1) * g;
                        self.v[i] = self.beta2 * self.v[i] + (one - self.beta2) * g * g;
                        let mhat = self.m[i] / bc1;
                        let vhat = self.v[i] / bc2;
                        *p -= self.lr * mhat / (vhat.sqrt() + self.eps);
                        i += 1;
                    }
                }
            }
        }
        Ok(())
    }
}
