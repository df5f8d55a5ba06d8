//! Minibatch SGD.

use alloc::vec;
use alloc::vec::Vec;

use super::{SurrogateModel, TrainConfig};
use crate::codec::SparseSequence;
use crate::error::SurrogateError;
use crate::rng::{Purpose, Stream};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Mean training loss over the epoch's minibatches, each evaluated
    /// before its update.
    pub loss: f64,
    /// Training accuracy at probability 0.5, measured the same way.
    pub accuracy: f64,
}

pub fn train(
    model: SurrogateModel,
    inputs: &[SparseSequence],
    labels: &[u8],
    config: &TrainConfig,
) -> Result<(SurrogateModel, Vec<EpochStats>), SurrogateError> {
    train_with(model, inputs, labels, config, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with<F: FnMut(&EpochStats)>(
    mut model: SurrogateModel,
    inputs: &[SparseSequence],
    labels: &[u8],
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<(SurrogateModel, Vec<EpochStats>), SurrogateError> {
    config.validate()?;
    if inputs.len() != labels.len() {
        return Err(SurrogateError::LabelCount {
            inputs: inputs.len(),
            labels: labels.len(),
        });
    }
    let positives = labels.iter().filter(|y| **y == 1).count();
    if inputs.is_empty() || positives == 0 || positives == labels.len() {
        return Err(SurrogateError::DegenerateDataset);
    }
    let targets: Vec<f64> = labels.iter().map(|&y| y as f64).collect();

    let n = inputs.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut grads = vec![0.0; model.layout.total];
    let mut batch_x = Vec::with_capacity(config.batch_size);
    let mut batch_y = Vec::with_capacity(config.batch_size);
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.iter_mut().enumerate().for_each(|(i, o)| *o = i);
        Stream::new(config.shuffle_seed, Purpose::Shuffle, epoch as u64).shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for chunk in order.chunks(config.batch_size) {
            batch_x.clear();
            batch_y.clear();
            batch_x.extend(chunk.iter().map(|&i| &inputs[i]));
            batch_y.extend(chunk.iter().map(|&i| targets[i]));
            grads.fill(0.0);
            let (loss, hits) = model
                .accumulate_gradients(&batch_x, &batch_y, &mut grads)
                .map_err(|e| match e {
                    SurrogateError::Divergence { .. } => SurrogateError::Divergence { epoch },
                    other => other,
                })?;
            loss_sum += loss * chunk.len() as f64;
            correct += hits;
            for (w, g) in model.params.iter_mut().zip(&grads) {
                *w -= config.learning_rate * g;
            }
        }
        if model.params.iter().any(|w| !w.is_finite()) {
            return Err(SurrogateError::Divergence { epoch });
        }
        let stats = EpochStats {
            epoch,
            loss: loss_sum / n as f64,
            accuracy: correct as f64 / n as f64,
        };
        on_epoch(&stats);
        history.push(stats);
    }
    Ok((model, history))
}
