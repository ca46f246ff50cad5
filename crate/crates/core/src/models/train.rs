use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::net::{forward, gradients_into, Dropout, LOG_EPS};
use super::params::ModelParams;
use super::spec::{ModelSpec, TrainConfig};
use crate::dataset::{Example, LabeledDataset};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_top1: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    /// Validation scores of the initial parameters.
    pub initial_val_top1: f64,
    pub initial_val_loss: f64,
    pub epochs: Vec<EpochLog>,
    /// Epoch whose parameters were kept; 0 means the initialization.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Top-1 accuracy (ties go to the lowest label index) and mean loss.
pub(crate) fn evaluate(params: &ModelParams, data: &[Example]) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Ok((0.0, 0.0));
    }
    let mut hits = 0usize;
    let mut ce = 0.0;
    for ex in data {
        let p = forward(params, &ex.features, Dropout::Off)?;
        let mut best = 0;
        for (i, &v) in p.iter().enumerate() {
            if v > p[best] {
                best = i;
            }
        }
        hits += usize::from(best == ex.label);
        ce -= p[ex.label].max(LOG_EPS).ln();
    }
    let n = data.len() as f64;
    Ok((hits as f64 / n, ce / n + params.spec.l2_lambda * params.l2_sum()))
}

fn check_compatible(spec: &ModelSpec, data: &LabeledDataset, what: &str) -> Result<()> {
    if data.feature_dim != spec.input_dim {
        return Err(Error::DimensionMismatch {
            expected: spec.input_dim,
            actual: data.feature_dim,
        });
    }
    if data.n_labels() != spec.n_classes {
        return Err(Error::InvalidInput(format!(
            "{what} set has {} labels, model has {} classes",
            data.n_labels(),
            spec.n_classes
        )));
    }
    Ok(())
}

/// Minibatch SGD with classical momentum. Keeps the parameters with the best
/// validation top-1 (validation loss breaks ties) and stops after
/// `early_stop_patience` epochs without improvement. With an empty
/// validation set the final parameters are returned.
pub fn train(
    spec: &ModelSpec,
    train_set: &LabeledDataset,
    val_set: &LabeledDataset,
    cfg: &TrainConfig,
) -> Result<(ModelParams, TrainLog)> {
    spec.validate()?;
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    check_compatible(spec, train_set, "training")?;
    check_compatible(spec, val_set, "validation")?;
    if train_set.label_index != val_set.label_index {
        return Err(Error::InvalidInput(
            "training and validation label indices differ".into(),
        ));
    }

    // canonical order, so the input order of the training set is irrelevant
    let mut data: Vec<Example> = train_set.examples.clone();
    data.sort_by(|a, b| (a.label, &a.features, &a.patient_id).cmp(&(b.label, &b.features, &b.patient_id)));

    let mut params = ModelParams::init(spec, seed::derive(&[cfg.seed, seed::hash_str("init")]))?
        .with_labels(train_set.label_index.clone())?;
    let mut shuffle_rng = seed::rng(seed::derive(&[cfg.seed, seed::hash_str("shuffle")]));
    let dropout_seed = seed::derive(&[cfg.seed, seed::hash_str("dropout")]);

    let has_val = !val_set.is_empty();
    let (init_top1, init_loss) = evaluate(&params, &val_set.examples)?;
    let mut best = (init_top1, init_loss);
    let mut best_params = params.clone();
    let mut log = TrainLog {
        initial_val_top1: init_top1,
        initial_val_loss: init_loss,
        epochs: Vec::new(),
        best_epoch: 0,
        stopped_early: false,
    };

    let mut grads: Vec<Vec<f64>> = params.tensors.iter().map(|t| vec![0.0; t.len()]).collect();
    let mut velocity = grads.clone();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut batch: Vec<Example> = Vec::with_capacity(cfg.batch_size);
    let mut stale = 0;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut n_batches = 0usize;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data[i].clone()));
            let dropout = Dropout::Seeded(seed::derive(&[dropout_seed, epoch as u64, b as u64]));
            loss_sum += gradients_into(&params, &batch, dropout, &mut grads)?;
            n_batches += 1;
            for ((t, g), v) in params.tensors.iter_mut().zip(&grads).zip(velocity.iter_mut()) {
                for ((w, g), v) in t.data.iter_mut().zip(g).zip(v.iter_mut()) {
                    *v = cfg.momentum * *v - cfg.learning_rate * g;
                    *w += *v;
                }
            }
        }
        if !params.is_finite() {
            return Err(Error::InvalidInput(format!(
                "training diverged in epoch {epoch}; lower the learning rate"
            )));
        }
        let (top1, vloss) = evaluate(&params, &val_set.examples)?;
        log.epochs.push(EpochLog {
            epoch,
            train_loss: loss_sum / n_batches as f64,
            val_top1: top1,
            val_loss: vloss,
        });
        if !has_val {
            continue;
        }
        if top1 > best.0 || (top1 == best.0 && vloss < best.1) {
            best = (top1, vloss);
            best_params = params.clone();
            log.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.early_stop_patience {
                log.stopped_early = true;
                break;
            }
        }
    }
    if !has_val {
        log.best_epoch = log.epochs.len();
        return Ok((params, log));
    }
    Ok((best_params, log))
}
