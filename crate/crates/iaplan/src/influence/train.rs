//! Offline training of the recurrent influence predictor: mini-batch BPTT with
//! SGD or Adam, L2 weight decay, global-norm gradient clipping, and a
//! best-validation checkpoint.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RngStream;

use super::dataset::{EpisodeRecord, InfluenceDataset};
use super::rnn::{CellKind, RnnPredictor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub cell: CellKind,
    pub hidden: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub weight_decay: f64,
    pub optimizer: OptimizerKind,
    pub grad_clip_norm: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            cell: CellKind::Gru,
            hidden: 8,
            learning_rate: 5e-4,
            batch_size: 128,
            epochs: 8000,
            weight_decay: 1e-5,
            optimizer: OptimizerKind::Adam,
            grad_clip_norm: 5.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("dataset has too few episodes to split ({0}); need at least 5")]
    TooFewEpisodes(usize),
    #[error("non-finite loss at epoch {0}; lower the learning rate")]
    NonFiniteLoss(usize),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
}

/// Mean cross-entropy (nats per target variable) after each epoch.
#[derive(Debug, Clone, Default)]
pub struct LearningCurve {
    pub train_ce: Vec<f64>,
    pub val_ce: Vec<f64>,
}

impl LearningCurve {
    pub fn save_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "epoch,train_ce,val_ce")?;
        for (i, (t, v)) in self.train_ce.iter().zip(&self.val_ce).enumerate() {
            writeln!(w, "{},{},{}", i + 1, t, v)?;
        }
        w.flush()
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Adam {
        Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, theta: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - Self::B1.powi(self.t as i32);
        let bc2 = 1.0 - Self::B2.powi(self.t as i32);
        for i in 0..theta.len() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * grad[i];
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * grad[i] * grad[i];
            theta[i] -= lr * (self.m[i] / bc1) / ((self.v[i] / bc2).sqrt() + Self::EPS);
        }
    }
}

fn views(eps: &[EpisodeRecord]) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<Vec<u8>>>) {
    (
        eps.iter().map(|e| e.inputs.clone()).collect(),
        eps.iter().map(|e| e.targets.clone()).collect(),
    )
}

/// Trains a predictor on the dataset and returns it together with the learning
/// curve. The returned parameters are the checkpoint with the lowest
/// validation cross-entropy, not the final epoch.
pub fn train(
    dataset: &InfluenceDataset,
    cfg: &TrainConfig,
) -> Result<(RnnPredictor, LearningCurve), TrainError> {
    if dataset.episodes.len() < 5 {
        return Err(TrainError::TooFewEpisodes(dataset.episodes.len()));
    }
    if cfg.batch_size == 0 || cfg.epochs == 0 || cfg.hidden == 0 {
        return Err(TrainError::BadConfig("batch_size, epochs and hidden must be positive".into()));
    }
    if !(cfg.learning_rate.is_finite() && cfg.learning_rate > 0.0) {
        return Err(TrainError::BadConfig("learning_rate must be positive".into()));
    }

    let (train_eps, val_eps) = dataset.split();
    let (train_in, train_tg) = views(train_eps);
    let (val_in, val_tg) = views(val_eps);

    let mut rng = RngStream::new(cfg.seed);
    let mut net = RnnPredictor::init(
        cfg.cell,
        dataset.input_width(),
        cfg.hidden,
        dataset.source_bits(),
        &mut rng,
    );
    let n_params = net.theta.len();
    let mut adam = Adam::new(n_params);
    let mut grad = vec![0.0; n_params];
    let mut order: Vec<usize> = (0..train_eps.len()).collect();
    let mut curve = LearningCurve::default();
    let mut best = (f64::INFINITY, net.theta.clone());

    for epoch in 0..cfg.epochs {
        // Seeded Fisher-Yates reshuffle per epoch.
        for i in (1..order.len()).rev() {
            order.swap(i, rng.below(i + 1));
        }
        let mut epoch_loss = 0.0;
        let mut epoch_terms = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut terms = 0usize;
            for &ep in batch {
                let (loss, n) =
                    net.sequence_loss_grad(&train_in[ep], &train_tg[ep], &mut grad);
                epoch_loss += loss;
                terms += n;
            }
            epoch_terms += terms;
            let scale = 1.0 / terms.max(1) as f64;
            for (g, th) in grad.iter_mut().zip(&net.theta) {
                *g = *g * scale + cfg.weight_decay * th;
            }
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if !norm.is_finite() {
                return Err(TrainError::NonFiniteLoss(epoch + 1));
            }
            if cfg.grad_clip_norm > 0.0 && norm > cfg.grad_clip_norm {
                let s = cfg.grad_clip_norm / norm;
                grad.iter_mut().for_each(|g| *g *= s);
            }
            match cfg.optimizer {
                OptimizerKind::Sgd => {
                    for (th, g) in net.theta.iter_mut().zip(&grad) {
                        *th -= cfg.learning_rate * g;
                    }
                }
                OptimizerKind::Adam => adam.step(&mut net.theta, &grad, cfg.learning_rate),
            }
        }
        let train_ce = epoch_loss / epoch_terms.max(1) as f64;
        let val_ce = net.mean_cross_entropy(&val_in, &val_tg);
        if !(train_ce.is_finite() && val_ce.is_finite()) {
            return Err(TrainError::NonFiniteLoss(epoch + 1));
        }
        curve.train_ce.push(train_ce);
        curve.val_ce.push(val_ce);
        if val_ce < best.0 {
            best = (val_ce, net.theta.clone());
        }
    }

    net.theta = best.1;
    Ok((net, curve))
}
