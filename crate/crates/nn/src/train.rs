//! Phased training: per-phase trainability transitions, epoch loop with
//! early stopping / plateau LR reduction, best-weight restoration, and
//! deterministic test-split prediction.
//!
//! Because everything below the first trainable unit is frozen and
//! batch-norm runs on fixed statistics, activations at that boundary are
//! constant for the whole phase. They are computed once per phase and the
//! epoch loop forwards only the trainable suffix and head.

use std::path::PathBuf;

use candle_core::{Tensor, D};
use rand::seq::SliceRandom;
use venation_core::predictions::PredictionMatrix;
use venation_core::train::{
    EarlyStopState, EpochRecord, PhaseHistory, PlateauState, StopDecision, TrainingHistory,
};

use crate::data::{batch_tensor, one_hot_batch, LoadedSplit};
use crate::error::{NnError, Result};
use crate::model::ModelHandle;
use crate::optim::PhaseOptimizer;
use crate::params::seeded_rng;

/// Files written by `execute_plan`.
pub struct PlanOutputs {
    pub history_path: PathBuf,
    pub checkpoint_path: PathBuf,
}

/// Progress callback: (phase name, epoch record).
pub type EpochSink<'a> = dyn FnMut(&str, &EpochRecord) + 'a;

fn finite_or_abort(value: f64, phase: &str, epoch: usize, quantity: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(NnError::NonFiniteLoss {
            phase: phase.to_string(),
            epoch,
            quantity: quantity.to_string(),
        })
    }
}

/// Run the frozen prefix over a whole split, batched, returning the cached
/// boundary activations (or pooled features when the backbone is fully
/// frozen).
fn build_cache(
    handle: &ModelHandle,
    split: &LoadedSplit,
    to_stage: usize,
    batch_size: usize,
) -> Result<Tensor> {
    let indices: Vec<usize> = (0..split.len()).collect();
    let mut chunks = Vec::new();
    for chunk in indices.chunks(batch_size) {
        let batch = batch_tensor(split, chunk, &handle.config().normalization, handle.device())?;
        chunks.push(handle.forward_prefix(&batch, to_stage)?);
    }
    Ok(Tensor::cat(&chunks, 0)?)
}

fn select_rows(cache: &Tensor, indices: &[usize]) -> Result<Tensor> {
    let idx = Tensor::from_vec(
        indices.iter().map(|&i| i as u32).collect::<Vec<u32>>(),
        indices.len(),
        cache.device(),
    )?;
    Ok(cache.index_select(&idx, 0)?)
}

/// Categorical cross-entropy against one-hot targets, averaged over the
/// batch.
fn cross_entropy(logits: &Tensor, targets: &Tensor) -> Result<Tensor> {
    let log_probs = candle_nn::ops::log_softmax(logits, D::Minus1)?;
    let batch = logits.dim(0)? as f64;
    Ok((targets.mul(&log_probs)?.sum_all()?.neg()? / batch)?)
}

fn count_correct(logits: &Tensor, labels: &[usize], indices: &[usize]) -> Result<usize> {
    let predicted = logits.argmax(D::Minus1)?.to_vec1::<u32>()?;
    Ok(predicted
        .iter()
        .zip(indices)
        .filter(|&(&p, &idx)| p as usize == labels[idx])
        .count())
}

/// Eval-mode pass over a cached split: (mean loss, accuracy).
fn evaluate_cached(
    handle: &ModelHandle,
    cache: &Tensor,
    labels: &[usize],
    from_stage: usize,
    classes: usize,
    batch_size: usize,
) -> Result<(f64, f64)> {
    let n = labels.len();
    let indices: Vec<usize> = (0..n).collect();
    let mut loss_sum = 0.0;
    let mut correct = 0usize;
    for chunk in indices.chunks(batch_size) {
        let feats = select_rows(cache, chunk)?;
        let logits = handle.forward_from_cache(&feats, from_stage, None)?;
        let targets = one_hot_batch(labels, chunk, classes, handle.device())?;
        let loss = cross_entropy(&logits, &targets)?.to_scalar::<f32>()? as f64;
        loss_sum += loss * chunk.len() as f64;
        correct += count_correct(&logits, labels, chunk)?;
    }
    Ok((loss_sum / n as f64, correct as f64 / n as f64))
}

/// Execute one training phase. Trainability must already match the phase
/// (see [`execute_plan`]); the optimizer is created here.
#[allow(clippy::too_many_arguments)]
pub fn run_phase(
    handle: &mut ModelHandle,
    train: &LoadedSplit,
    val: &LoadedSplit,
    phase: &venation_core::train::Phase,
    phase_index: usize,
    seed: u64,
    sink: Option<&mut EpochSink<'_>>,
) -> Result<PhaseHistory> {
    if train.is_empty() || val.is_empty() {
        return Err(NnError::EmptyData);
    }
    let classes = handle.classes();
    let batch_size = handle.config().batch_size.max(1);
    let from_stage = handle
        .backbone()
        .first_trainable_stage(handle.trainable_from());

    let cache_train = build_cache(handle, train, from_stage, batch_size)?;
    let cache_val = build_cache(handle, val, from_stage, batch_size)?;

    let mut optimizer = PhaseOptimizer::for_phase(phase, handle.trainable_vars())?;
    let mut early = phase.early_stop.map(|es| EarlyStopState::new(es.patience));
    let mut plateau = phase
        .plateau
        .map(|p| PlateauState::new(p, phase.learning_rate));
    let restore_requested = phase.early_stop.map(|es| es.restore_best).unwrap_or(false);

    let phase_tag = format!("{phase_index}");
    let model_id = handle.config().id.clone();
    let mut dropout_rng = seeded_rng(seed, &["dropout", &model_id, &phase_tag]);

    let mut learning_rate = phase.learning_rate;
    let mut records: Vec<EpochRecord> = Vec::new();
    let mut stopped_early = false;
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut best_snapshot: Option<Vec<Tensor>> = None;
    let mut sink = sink;

    for epoch in 1..=phase.max_epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        let epoch_tag = format!("{epoch}");
        order.shuffle(&mut seeded_rng(
            seed,
            &["shuffle", &model_id, &phase_tag, &epoch_tag],
        ));

        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for chunk in order.chunks(batch_size) {
            let feats = select_rows(&cache_train, chunk)?;
            let targets = one_hot_batch(&train.labels, chunk, classes, handle.device())?;
            let logits = handle.forward_from_cache(&feats, from_stage, Some(&mut dropout_rng))?;
            let loss = cross_entropy(&logits, &targets)?;
            let loss_value =
                finite_or_abort(loss.to_scalar::<f32>()? as f64, &phase.name, epoch, "train loss")?;
            optimizer.backward_step(&loss)?;
            loss_sum += loss_value * chunk.len() as f64;
            correct += count_correct(&logits, &train.labels, chunk)?;
        }
        let train_loss = loss_sum / train.len() as f64;
        let train_accuracy = correct as f64 / train.len() as f64;

        let (val_loss, val_accuracy) = evaluate_cached(
            handle,
            &cache_val,
            &val.labels,
            from_stage,
            classes,
            batch_size,
        )?;
        let val_loss = finite_or_abort(val_loss, &phase.name, epoch, "validation loss")?;

        let record = EpochRecord {
            epoch,
            train_loss,
            val_loss,
            train_accuracy,
            val_accuracy,
            learning_rate,
        };
        if let Some(sink) = sink.as_mut() {
            sink(&phase.name, &record);
        }
        records.push(record);

        if val_loss < best_loss {
            best_loss = val_loss;
            best_epoch = epoch;
            if restore_requested {
                best_snapshot = Some(
                    handle
                        .trainable_vars()
                        .iter()
                        .map(|v| v.as_tensor().copy())
                        .collect::<candle_core::Result<Vec<_>>>()?,
                );
            }
        }

        if let Some(plateau) = plateau.as_mut() {
            let next = plateau.observe(val_loss);
            if next != learning_rate {
                learning_rate = next;
                optimizer.set_learning_rate(learning_rate);
            }
        }
        if let Some(early) = early.as_mut() {
            if early.observe(val_loss) == StopDecision::Stop {
                stopped_early = true;
                break;
            }
        }
    }

    if let Some(snapshot) = best_snapshot {
        for (var, saved) in handle.trainable_vars().iter().zip(&snapshot) {
            var.set(saved)?;
        }
    }

    Ok(PhaseHistory {
        name: phase.name.clone(),
        records,
        best_epoch,
        stopped_early,
    })
}

/// Run every phase of the configured plan in order, applying trainability
/// transitions between phases, then persist the history and the final
/// (best-restored) checkpoint.
pub fn execute_plan(
    handle: &mut ModelHandle,
    train: &LoadedSplit,
    val: &LoadedSplit,
    seed: u64,
    outputs: &PlanOutputs,
    mut sink: Option<&mut EpochSink<'_>>,
) -> Result<TrainingHistory> {
    let plan = handle.config().plan.clone();
    plan.validate()?;
    let mut history = TrainingHistory::default();
    for (phase_index, phase) in plan.phases.iter().enumerate() {
        handle.set_trainable_suffix(phase.unfreeze_last)?;
        let phase_history = run_phase(
            handle,
            train,
            val,
            phase,
            phase_index,
            seed,
            sink.as_deref_mut(),
        )?;
        history.phases.push(phase_history);
    }
    history.save(&outputs.history_path)?;
    handle.save_checkpoint(&outputs.checkpoint_path)?;
    Ok(history)
}

/// Deterministic eval-mode predictions for a loaded split; row order is the
/// split's manifest order.
pub fn evaluate_split_data(handle: &ModelHandle, data: &LoadedSplit) -> Result<PredictionMatrix> {
    if data.is_empty() {
        return Err(NnError::EmptyData);
    }
    let batch_size = handle.config().batch_size.max(1);
    let indices: Vec<usize> = (0..data.len()).collect();
    let mut scores = Vec::with_capacity(data.len());
    for chunk in indices.chunks(batch_size) {
        let batch = batch_tensor(data, chunk, &handle.config().normalization, handle.device())?;
        let probs = handle.predict_probs(&batch)?;
        let rows = probs.to_vec2::<f32>()?;
        if rows.first().map(|r| r.len()) != Some(handle.classes()) {
            return Err(NnError::ClassCountMismatch {
                expected: handle.classes(),
                actual: rows.first().map(|r| r.len()).unwrap_or(0),
            });
        }
        scores.extend(
            rows.into_iter()
                .map(|r| r.into_iter().map(|v| v as f64).collect::<Vec<f64>>()),
        );
    }
    Ok(PredictionMatrix {
        image_ids: data.ids.clone(),
        true_labels: data.labels.clone(),
        scores,
    })
}
