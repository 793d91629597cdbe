//! Mini-batch SGD.
//!
//! Each batch draws its negatives sequentially from the training RNG, computes
//! gradient contributions in parallel against a frozen snapshot of the
//! parameters, then applies them in batch order. The result is independent of
//! the number of rayon workers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::loss::{group_loss, GradBuffer};
use super::sampling::negative_sample;
use super::{ModelParams, TrainingConfig};
use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, Triple};

/// Positives per parallel work unit inside a batch.
const CHUNK: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    /// Mean loss per positive triple.
    pub loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossTrace {
    pub epochs: Vec<EpochLoss>,
}

impl LossTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss\n");
        for e in &self.epochs {
            let _ = writeln!(out, "{},{}", e.epoch, e.loss);
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Passed to the observer after every parameter update.
#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    pub epoch: usize,
    pub step: usize,
    pub batch_loss: f64,
}

pub fn train(params: &mut ModelParams, kg: &KnowledgeGraph, config: &TrainingConfig) -> Result<LossTrace> {
    train_with_observer(params, kg, config, |_, _| {})
}

pub fn train_with_observer(
    params: &mut ModelParams,
    kg: &KnowledgeGraph,
    config: &TrainingConfig,
    mut observer: impl FnMut(StepInfo, &ModelParams),
) -> Result<LossTrace> {
    config.validate()?;
    if kg.is_empty() {
        return Err(Error::Contract("cannot train on an empty graph".into()));
    }
    if params.entity_count() != kg.entity_count() || params.relation_count() != kg.relation_count() {
        return Err(Error::Contract(format!(
            "model sized for {} entities / {} relations, graph has {} / {}",
            params.entity_count(),
            params.relation_count(),
            kg.entity_count(),
            kg.relation_count()
        )));
    }
    if kg.entity_count() < 2 {
        return Err(Error::Contract("negative sampling needs at least two entities".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let n_neg = config.negatives_per_positive;
    let mut order: Vec<Triple> = kg.triples().to_vec();
    let mut trace = LossTrace::default();
    let mut step = 0;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut negatives = Vec::with_capacity(batch.len() * n_neg);
            for p in batch {
                for _ in 0..n_neg {
                    negatives.push(negative_sample(kg, p, &mut rng));
                }
            }

            let snapshot: &ModelParams = params;
            let buffers: Vec<GradBuffer> = batch
                .par_chunks(CHUNK)
                .enumerate()
                .map(|(c, chunk)| {
                    let mut buf = GradBuffer::default();
                    for (i, p) in chunk.iter().enumerate() {
                        let k = c * CHUNK + i;
                        let negs = &negatives[k * n_neg..(k + 1) * n_neg];
                        group_loss(snapshot, p, negs, config.margin, Some(&mut buf));
                    }
                    buf
                })
                .collect();

            let batch_loss: f64 = buffers.iter().map(|b| b.loss).sum();
            if !batch_loss.is_finite() {
                return Err(Error::Numerical(format!(
                    "{} loss became {batch_loss} at epoch {epoch}, step {step}",
                    params.kind()
                )));
            }
            for buf in &buffers {
                buf.apply(params, config.learning_rate);
            }
            if !params.all_finite() {
                return Err(Error::Numerical(format!(
                    "{} parameters diverged at epoch {epoch}, step {step}",
                    params.kind()
                )));
            }
            epoch_loss += batch_loss;
            observer(
                StepInfo {
                    epoch,
                    step,
                    batch_loss,
                },
                params,
            );
            step += 1;
        }
        let mean = epoch_loss / order.len() as f64;
        log::debug!("{} epoch {epoch}: loss {mean}", params.kind());
        trace.epochs.push(EpochLoss { epoch, loss: mean });
    }
    Ok(trace)
}
