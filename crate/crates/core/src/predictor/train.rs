use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::dataset::ExperienceDataset;
use super::model::{nll_batch, PredictionMode, Predictor};
use crate::diffnet::{ArchConfig, Matrix, NetError, Optimizer, Params};
use crate::env::Environment;
use crate::seed::RunRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictorConfig {
    pub arch: ArchConfig,
    pub mode: PredictionMode,
    /// Predict `s_{t+1} − s_t`; only valid when targets are sensor-shaped.
    pub residual: bool,
    /// Upper bound on epochs; early stopping usually ends training sooner.
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    /// Learning rate multiplier applied after every epoch.
    pub lr_decay: f64,
    /// Shuffled sweeps over the training split per epoch.
    pub passes: usize,
    pub sensor_noise: f64,
    pub action_noise: f64,
    pub patience: usize,
    pub min_rel_improvement: f64,
    pub validation_fraction: f64,
    /// Continue from the previous cycle's weights instead of re-initializing.
    pub warm_start: bool,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            arch: ArchConfig::default(),
            mode: PredictionMode::Point,
            residual: false,
            epochs: 150,
            batch: 256,
            lr: 1e-3,
            lr_decay: 1.0,
            passes: 2,
            sensor_noise: 0.0,
            action_noise: 0.0,
            patience: 5,
            min_rel_improvement: 1e-3,
            validation_fraction: 0.05,
            warm_start: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("cannot train on an empty dataset")]
    EmptyDataset,
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train: f64,
    pub validation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PredictorTrace {
    pub epochs: Vec<EpochLoss>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl PredictorTrace {
    pub fn final_train(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.train)
    }

    pub fn best_validation(&self) -> Option<f64> {
        self.epochs
            .iter()
            .filter_map(|e| e.validation)
            .reduce(f64::min)
    }
}

/// Inputs and regression targets for every record, in dataset order.
pub struct PreparedData {
    pub sensors: Matrix<f32>,
    pub actions: Matrix<f32>,
    pub targets: Matrix<f32>,
}

impl PreparedData {
    pub fn from_dataset<E: Environment>(env: &E, ds: &ExperienceDataset) -> Self {
        let recs = ds.records();
        let target_dim = env.predictor_target(&env.observe()).len();
        let mut targets = Vec::with_capacity(recs.len() * target_dim);
        for t in recs {
            let next: Vec<f64> = t.s_next.iter().map(|&v| v as f64).collect();
            targets.extend(env.predictor_target(&next).into_iter().map(|v| v as f32));
        }
        Self {
            sensors: Matrix::from_vec(
                recs.len(),
                ds.sensor_dim(),
                recs.iter().flat_map(|t| t.s.iter().copied()).collect(),
            ),
            actions: Matrix::from_vec(
                recs.len(),
                ds.action_dim(),
                recs.iter().flat_map(|t| t.a.iter().copied()).collect(),
            ),
            targets: Matrix::from_vec(recs.len(), target_dim, targets),
        }
    }

    fn gather(m: &Matrix<f32>, idx: &[usize]) -> Matrix<f32> {
        let mut data = Vec::with_capacity(idx.len() * m.cols());
        for &i in idx {
            data.extend_from_slice(m.row(i));
        }
        Matrix::from_vec(idx.len(), m.cols(), data)
    }

    pub fn batch(&self, idx: &[usize]) -> (Matrix<f32>, Matrix<f32>, Matrix<f32>) {
        (
            Self::gather(&self.sensors, idx),
            Self::gather(&self.actions, idx),
            Self::gather(&self.targets, idx),
        )
    }
}

/// Adds Gaussian noise to predictor inputs. Targets are not reachable from here.
pub fn inject_noise(
    sensors: &mut Matrix<f32>,
    actions: &mut Matrix<f32>,
    sensor_sigma: f64,
    action_sigma: f64,
    rng: &mut RunRng,
) {
    for (m, sigma) in [(sensors, sensor_sigma), (actions, action_sigma)] {
        if sigma > 0.0 {
            for v in m.as_mut_slice() {
                let z: f64 = StandardNormal.sample(rng);
                *v += (sigma * z) as f32;
            }
        }
    }
}

/// Loss over a batch plus gradients w.r.t. predicted mean and σ.
/// Point mode uses mean squared error; Gaussian mode the NLL.
pub(crate) fn batch_loss(
    mode: PredictionMode,
    mean: &Matrix<f32>,
    sigma: &Matrix<f32>,
    target: &Matrix<f32>,
) -> (f64, Matrix<f32>, Option<Matrix<f32>>) {
    match mode {
        PredictionMode::Gaussian => {
            let (l, dm, ds) = nll_batch(mean, sigma, target);
            (l, dm, Some(ds))
        }
        PredictionMode::Point => {
            let n = (mean.rows() * mean.cols()) as f64;
            let mut dm = Matrix::zeros(mean.rows(), mean.cols());
            let mut total = 0.0;
            for ((&mu, &x), d) in mean
                .as_slice()
                .iter()
                .zip(target.as_slice())
                .zip(dm.as_mut_slice())
            {
                let r = mu as f64 - x as f64;
                total += r * r;
                *d = (2.0 * r / n) as f32;
            }
            (total / n, dm, None)
        }
    }
}

/// Mean loss over `idx`, evaluated in chunks without noise.
pub fn evaluate_loss(
    pred: &Predictor,
    data: &PreparedData,
    idx: &[usize],
    chunk: usize,
) -> Result<f64, NetError> {
    let mut total = 0.0;
    for part in idx.chunks(chunk.max(1)) {
        let (s, a, t) = data.batch(part);
        let tape = pred.forward(s, &a)?;
        let (l, _, _) = batch_loss(pred.mode, tape.mean(), tape.sigma(), &t);
        total += l * part.len() as f64;
    }
    Ok(total / idx.len().max(1) as f64)
}

/// Minibatch Adam on the predictor loss with early stopping on the
/// validation split (or on the training loss when the split is empty).
/// The best-scoring parameters are restored at the end.
pub fn train_predictor<E: Environment>(
    pred: &mut Predictor,
    env: &E,
    dataset: &ExperienceDataset,
    cfg: &PredictorConfig,
    rng: &mut RunRng,
) -> Result<PredictorTrace, TrainError> {
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let data = PreparedData::from_dataset(env, dataset);
    let (train_idx, val_idx) = dataset.split();
    if train_idx.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut opt = Optimizer::adam(cfg.lr as f32);
    let mut trace = PredictorTrace::default();
    let mut best = f64::INFINITY;
    let mut best_params = pred.net.params();
    let mut stale = 0;
    let mut order = train_idx.clone();

    for epoch in 0..cfg.epochs {
        let mut sum = 0.0;
        let mut seen = 0usize;
        for _ in 0..cfg.passes.max(1) {
            order.shuffle(rng);
            for part in order.chunks(cfg.batch.max(1)) {
                let (mut s, mut a, t) = data.batch(part);
                inject_noise(&mut s, &mut a, cfg.sensor_noise, cfg.action_noise, rng);
                let tape = pred.forward(s, &a)?;
                let (l, dm, ds) = batch_loss(pred.mode, tape.mean(), tape.sigma(), &t);
                let grads = tape.backward(&dm, ds.as_ref())?.flat_params();
                drop(tape);
                opt.step(&mut pred.net, &grads)?;
                sum += l * part.len() as f64;
                seen += part.len();
            }
        }
        opt.set_learning_rate((cfg.lr * cfg.lr_decay.powi(epoch as i32 + 1)) as f32);
        let train = sum / seen as f64;
        let validation = if val_idx.is_empty() {
            None
        } else {
            Some(evaluate_loss(pred, &data, &val_idx, 1024)?)
        };
        trace.epochs.push(EpochLoss {
            epoch,
            train,
            validation,
        });

        let score = validation.unwrap_or(train);
        if !best.is_finite() || score < best - cfg.min_rel_improvement * best.abs() {
            best = score;
            best_params = pred.net.params();
            trace.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                trace.stopped_early = true;
                break;
            }
        }
    }
    pred.net.set_params(&best_params)?;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvSampler, LinearEnv, LocoSampler};
    use crate::predictor::{Provenance, Transition};
    use crate::seed;
    use rand::Rng;

    fn small() -> ArchConfig {
        ArchConfig {
            trunk: vec![32, 32],
            head: vec![32],
            ..Default::default()
        }
    }

    #[test]
    fn memorizes_a_repeated_transition() {
        let mut rng = seed::rng(20, &[]);
        let env = LinearEnv::new([0.0, 0.0], 1);
        let mut ds = ExperienceDataset::new(2, 2, 0.0, 1);
        for _ in 0..32 {
            ds.push(Transition::new(
                &[0.3, -0.2],
                &[0.5, 0.1],
                &[0.8, -0.1],
                Provenance::Random,
            ))
            .unwrap();
        }
        let cfg = PredictorConfig {
            arch: small(),
            epochs: 200,
            batch: 32,
            lr: 1e-3,
            patience: 200,
            ..Default::default()
        };
        let mut p = Predictor::build(&env, &cfg.arch, PredictionMode::Point, false, &mut rng);
        let trace = train_predictor(&mut p, &env, &ds, &cfg, &mut rng).unwrap();
        let data = PreparedData::from_dataset(&env, &ds);
        let loss = evaluate_loss(&p, &data, &(0..32).collect::<Vec<_>>(), 32).unwrap();
        assert!(
            loss < 1e-6,
            "loss {loss} after {} epochs",
            trace.epochs.len()
        );
    }

    fn linear_dataset(n: usize, rng: &mut RunRng) -> ExperienceDataset {
        let mut ds = ExperienceDataset::new(2, 2, 0.2, 7);
        for _ in 0..n {
            let s = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let a = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            ds.push(Transition::new(
                &s,
                &a,
                &[s[0] + a[0], s[1] + a[1]],
                Provenance::Random,
            ))
            .unwrap();
        }
        ds
    }

    #[test]
    fn learns_linear_dynamics() {
        let mut rng = seed::rng(21, &[]);
        let env = LinearEnv::new([0.0, 0.0], 1);
        let ds = linear_dataset(1000, &mut rng);
        let cfg = PredictorConfig {
            arch: small(),
            epochs: 300,
            batch: 32,
            ..Default::default()
        };
        let mut p = Predictor::build(&env, &cfg.arch, PredictionMode::Point, false, &mut rng);
        train_predictor(&mut p, &env, &ds, &cfg, &mut rng).unwrap();
        let (_, val) = ds.split();
        let mse = evaluate_loss(&p, &PreparedData::from_dataset(&env, &ds), &val, 256).unwrap();
        assert!(!val.is_empty() && mse < 1e-3, "held-out MSE {mse}");
    }

    #[test]
    fn epoch_loss_moving_average_is_non_increasing() {
        let mut rng = seed::rng(22, &[]);
        let env = LinearEnv::new([0.0, 0.0], 1);
        let ds = linear_dataset(1000, &mut rng);
        let cfg = PredictorConfig {
            arch: small(),
            epochs: 60,
            batch: 64,
            patience: 60,
            ..Default::default()
        };
        let mut p = Predictor::build(&env, &cfg.arch, PredictionMode::Point, false, &mut rng);
        let trace = train_predictor(&mut p, &env, &ds, &cfg, &mut rng).unwrap();
        let train: Vec<f64> = trace.epochs.iter().map(|e| e.train).collect();
        let avg: Vec<f64> = train
            .windows(5)
            .map(|w| w.iter().sum::<f64>() / 5.0)
            .collect();
        for w in avg.windows(2) {
            assert!(w[1] <= w[0], "moving average rose: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn noise_touches_inputs_only() {
        let mut rng = seed::rng(23, &[]);
        let env = LinearEnv::new([0.0, 0.0], 1);
        let ds = linear_dataset(50, &mut rng);
        let data = PreparedData::from_dataset(&env, &ds);
        let idx: Vec<usize> = (0..50).collect();
        let (mut s, mut a, t) = data.batch(&idx);
        let (s0, a0) = (s.clone(), a.clone());
        inject_noise(&mut s, &mut a, 0.1, 0.1, &mut rng);
        assert_ne!(s, s0);
        assert_ne!(a, a0);
        // targets are taken before noise and never passed to it
        assert_eq!(t, data.batch(&idx).2);
    }

    #[test]
    fn learns_larger_sigma_in_overdrive() {
        let mut rng = seed::rng(24, &[]);
        let sampler = LocoSampler::default();
        let env = sampler.reference();
        let bounds = env.action_bounds();
        let mut ds = ExperienceDataset::new(5, 4, 0.1, 9);
        for _ in 0..3000 {
            let mut e = sampler.sample(&mut rng);
            for _ in 0..e.horizon() {
                let s = e.observe();
                let a = bounds.sample_uniform(&mut rng);
                let next = e.step(&a, &mut rng).unwrap();
                ds.push(Transition::new(&s, &a, &next, Provenance::Random))
                    .unwrap();
            }
        }
        let cfg = PredictorConfig {
            arch: ArchConfig {
                trunk: vec![64, 64],
                head: vec![64],
                ..Default::default()
            },
            mode: PredictionMode::Gaussian,
            residual: true,
            epochs: 60,
            ..Default::default()
        };
        let mut p = Predictor::build(&env, &cfg.arch, cfg.mode, true, &mut rng);
        train_predictor(&mut p, &env, &ds, &cfg, &mut rng).unwrap();
        let mean_sigma = |lo: f64, hi: f64, rng: &mut RunRng| {
            let mut total = 0.0;
            for _ in 0..500 {
                let amp = [rng.random_range(lo..hi), rng.random_range(lo..hi)];
                let a = [
                    amp[0],
                    amp[1],
                    rng.random_range(-3.0..3.0),
                    rng.random_range(-3.0..3.0),
                ];
                let g = p.predict(&env.observe(), &a).unwrap();
                total += 0.5 * (g.sigma[0] + g.sigma[1]);
            }
            total / 500.0
        };
        let over = mean_sigma(0.8, 1.0, &mut rng);
        let normal = mean_sigma(0.0, 0.6, &mut rng);
        assert!(over / normal > 3.0, "σ overdrive {over} vs normal {normal}");
    }
}
