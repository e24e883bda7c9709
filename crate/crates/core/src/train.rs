//! Adagrad on the mean squared error of labelled examples.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::autodiff::Gradients;
use std::collections::BTreeMap;

use crate::examples::Example;
use crate::frontend::PredicateId;
use crate::metrics::auc_roc;
use crate::model::{Model, ModelError};
use crate::store::{SlotId, WeightTable};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub epsilon: f64,
    /// Examples per update; all of them when `None`.
    pub batch_size: Option<usize>,
    /// Seed for batch shuffling.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            learning_rate: 0.1,
            epsilon: 1e-8,
            batch_size: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("no training examples")]
    NoExamples,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("loss became {loss} at epoch {epoch}")]
    NonFiniteLoss { epoch: usize, loss: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Per-coordinate Adagrad: `G += g²; θ -= η g / (√G + ε)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Adagrad {
    pub learning_rate: f64,
    pub epsilon: f64,
    accumulators: Vec<Vec<f64>>,
}

impl Adagrad {
    pub fn new(learning_rate: f64, epsilon: f64) -> Self {
        Adagrad {
            learning_rate,
            epsilon,
            accumulators: Vec::new(),
        }
    }

    pub fn step(&mut self, weights: &mut WeightTable, grads: &Gradients) {
        if self.accumulators.len() < grads.slots.len() {
            self.accumulators.resize(grads.slots.len(), Vec::new());
        }
        for (k, g) in grads.slots.iter().enumerate() {
            if g.is_empty() {
                continue;
            }
            let acc = &mut self.accumulators[k];
            if acc.is_empty() {
                acc.resize(g.len(), 0.0);
            }
            let w = weights.slot_mut(SlotId(k));
            for ((wi, gi), ai) in w.iter_mut().zip(g).zip(acc.iter_mut()) {
                *ai += gi * gi;
                *wi -= self.learning_rate * gi / (ai.sqrt() + self.epsilon);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Loss measured before each epoch's updates.
    pub losses: Vec<f64>,
}

pub fn train(model: &mut Model, examples: &[Example], config: &TrainConfig) -> Result<TrainReport, TrainError> {
    if examples.is_empty() {
        return Err(TrainError::NoExamples);
    }
    if config.epochs == 0 {
        return Err(TrainError::Config("epochs must be at least 1".into()));
    }
    if config.learning_rate.is_nan() || config.learning_rate <= 0.0 {
        return Err(TrainError::Config("learning rate must be positive".into()));
    }
    if config.batch_size == Some(0) {
        return Err(TrainError::Config("batch size must be positive".into()));
    }
    let mut opt = Adagrad::new(config.learning_rate, config.epsilon);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut losses = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let loss = match config.batch_size {
            None => {
                let (loss, grads) = model.loss_and_gradients(examples)?;
                check(epoch, loss)?;
                opt.step(&mut model.weights, &grads);
                loss
            }
            Some(size) => {
                order.shuffle(&mut rng);
                let mut total = 0.0;
                for chunk in order.chunks(size) {
                    let batch: Vec<Example> = chunk.iter().map(|&i| examples[i].clone()).collect();
                    let (loss, grads) = model.loss_and_gradients(&batch)?;
                    check(epoch, loss)?;
                    total += loss * batch.len() as f64;
                    opt.step(&mut model.weights, &grads);
                }
                total / examples.len() as f64
            }
        };
        losses.push(loss);
    }
    Ok(TrainReport { losses })
}

fn check(epoch: usize, loss: f64) -> Result<(), TrainError> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(TrainError::NonFiniteLoss { epoch, loss })
    }
}

/// AUC of one target predicate.
#[derive(Debug, Clone, PartialEq)]
pub struct PredicateAuc {
    pub predicate: PredicateId,
    pub auc: f64,
    pub positives: usize,
    pub negatives: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Predicates with both positive and negative examples.
    pub per_predicate: Vec<PredicateAuc>,
    /// Predicates lacking one of the classes.
    pub skipped: Vec<PredicateId>,
}

impl Evaluation {
    pub fn mean_auc(&self) -> Option<f64> {
        if self.per_predicate.is_empty() {
            return None;
        }
        Some(self.per_predicate.iter().map(|p| p.auc).sum::<f64>() / self.per_predicate.len() as f64)
    }

    /// Mean weighted by each predicate's example count.
    pub fn weighted_auc(&self) -> Option<f64> {
        let total: usize = self.per_predicate.iter().map(|p| p.positives + p.negatives).sum();
        if total == 0 {
            return None;
        }
        let s: f64 = self
            .per_predicate
            .iter()
            .map(|p| p.auc * (p.positives + p.negatives) as f64)
            .sum();
        Some(s / total as f64)
    }
}

pub fn evaluate(model: &Model, examples: &[Example]) -> Result<Evaluation, ModelError> {
    let atoms: Vec<_> = examples.iter().map(|e| e.atom.clone()).collect();
    let scores = model.predict(&atoms)?;
    let mut groups: BTreeMap<PredicateId, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (e, s) in examples.iter().zip(scores) {
        let g = groups.entry(e.atom.id()).or_default();
        if e.is_positive() {
            g.0.push(s);
        } else {
            g.1.push(s);
        }
    }
    let mut per_predicate = Vec::new();
    let mut skipped = Vec::new();
    for (predicate, (pos, neg)) in groups {
        match auc_roc(&pos, &neg) {
            Ok(auc) => per_predicate.push(PredicateAuc {
                predicate,
                auc,
                positives: pos.len(),
                negatives: neg.len(),
            }),
            Err(_) => skipped.push(predicate),
        }
    }
    Ok(Evaluation { per_predicate, skipped })
}
