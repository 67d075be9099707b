//! Pushforward loss and the epoch loop.

use crate::error::{Result, TrainError};
use crate::optimizer::Adam;
use crate::sampler::{draw_samples, TrainSample};
use crate::schedule::{lr_schedule, unroll_schedule, TrainConfig};
use oilpore_core::{GeometryMask, SplitMix64};
use oilpore_data::{Dataset, SimulationRecord};
use oilpore_surrogate::{encode_checkpoint, HasParams, SurrogateModel, Tens, TimeBundle};

/// Loss and the gradient with respect to the sample's input frames.
pub struct PushforwardReport {
    pub loss: f64,
    /// Gradient of the loss with respect to the original input bundle.
    /// Zero by construction for `n_unroll >= 2`: the final step's input is
    /// a detached intermediate prediction, so no path reaches the sample
    /// input.
    pub input_grad: Tens,
}

/// Run `n_unroll` forward predictions, treat all intermediate predictions
/// as constants, and backpropagate the fluid-cell MSE of the final bundle
/// through the last step only. Parameter gradients accumulate into the
/// model (callers zero them per batch).
pub fn pushforward_loss(
    model: &mut SurrogateModel,
    records: &[SimulationRecord],
    sample: &TrainSample,
    mask: &GeometryMask,
) -> Result<PushforwardReport> {
    let k = model.spec.k;
    let input = sample.bundle(records, 0, k)?;
    let target = sample.target(records, k)?;

    // constant-treated intermediate steps
    let mut current = input.clone();
    for _ in 0..sample.n_unroll - 1 {
        current = model.predict_bundle(&current, mask)?;
    }

    let pass = model.forward(&current, mask)?;
    let fluid = mask.fluid_count().max(1) as f64;
    let norm = 1.0 / (k as f64 * fluid);
    let hw = input.h * input.w;
    let mut loss = 0.0f64;
    let mut g_out = Tens::zeros(k, input.h, input.w);
    for (idx, (p, t)) in pass.output.frames.iter().zip(&target.frames).enumerate() {
        if mask.is_fluid_idx(idx % hw) {
            let d = (*p - *t) as f64;
            loss += d * d * norm;
            g_out.data[idx] = (2.0 * d * norm) as f32;
        }
    }
    let final_step_grad = model.backward(&pass, mask, &g_out);
    let input_grad = if sample.n_unroll == 1 {
        final_step_grad
    } else {
        // the gradient above belongs to a detached intermediate; nothing
        // reaches the sample input
        Tens::zeros(k, input.h, input.w)
    };
    Ok(PushforwardReport { loss, input_grad })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRow {
    pub epoch: usize,
    pub lr: f64,
    pub n_unroll: usize,
    pub train_mse: f64,
    pub val_rollout_mse: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Completed,
    Diverged { epoch: usize },
}

pub struct TrainOutcome {
    pub model: SurrogateModel,
    pub history: Vec<EpochRow>,
    pub stop: StopReason,
    /// Checkpoint bytes of the best-validation parameters.
    pub best_checkpoint: Vec<u8>,
    pub best_val: f64,
}

/// Full-rollout validation MSE on a subset of records (also used as the
/// checkpoint-selection metric; it never feeds parameter updates).
fn validation_rollout_mse(
    model: &SurrogateModel,
    records: &[SimulationRecord],
    limit: usize,
) -> Result<f64> {
    let k = model.spec.k;
    let mut total = 0.0f64;
    let mut count = 0usize;
    for record in records.iter().take(limit) {
        if record.t_len < 2 * k {
            continue;
        }
        let mask = &record.mask;
        let hw = record.grid().len();
        let first = TimeBundle::from_frames_clamped(
            k,
            record.height(),
            record.width(),
            0,
            &record.frames[..k * hw],
        )?;
        let n_blocks = (record.t_len - k) / k;
        let blocks = model.rollout(&first, mask, n_blocks)?;
        let mut sum = 0.0f64;
        let mut cells = 0usize;
        for (b, block) in blocks.iter().enumerate() {
            let offset = (b + 1) * k;
            for t in 0..k {
                let reference = record.frame(offset + t);
                let predicted = block.frame(t);
                for idx in 0..hw {
                    if mask.is_fluid_idx(idx) {
                        let d = (predicted[idx] - reference[idx]) as f64;
                        sum += d * d;
                        cells += 1;
                    }
                }
            }
        }
        if cells > 0 {
            total += sum / cells as f64;
            count += 1;
        }
    }
    if count == 0 {
        return Err(TrainError::Config(
            "validation needs at least one record with 2k frames".into(),
        ));
    }
    Ok(total / count as f64)
}

fn snapshot(model: &SurrogateModel) -> Vec<Vec<f32>> {
    let mut params = Vec::new();
    model.for_each_param(&mut |p| params.push(p.w.clone()));
    params
}

fn restore(model: &mut SurrogateModel, params: &[Vec<f32>]) {
    let mut slot = 0;
    model.for_each_param_mut(&mut |p| {
        p.w.copy_from_slice(&params[slot]);
        slot += 1;
    });
}

/// Train a model on the dataset's train split.
pub fn train(mut model: SurrogateModel, dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if dataset.train.is_empty() {
        return Err(TrainError::Config("training split is empty".into()));
    }
    model.spec.mass_epsilon = cfg.mass_epsilon;
    let k = model.spec.k;
    let records = &dataset.train;
    let val_records = if dataset.val.is_empty() { records } else { &dataset.val };

    let mut optimizer = Adam::new(&model, cfg);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best_val = f64::INFINITY;
    let mut best_checkpoint = encode_checkpoint(&model);
    let mut last_good = snapshot(&model);

    for epoch in 0..cfg.epochs {
        let n_unroll = unroll_schedule(epoch, cfg);
        let lr = lr_schedule(epoch, cfg);
        let mut rng = SplitMix64::derive(cfg.seed, epoch as u64);
        let samples = draw_samples(records, k, n_unroll, cfg.samples_per_record, &mut rng);
        if samples.is_empty() {
            return Err(TrainError::Config(format!(
                "no record long enough for unroll depth {n_unroll} (needs {} frames)",
                (n_unroll + 1) * k
            )));
        }

        let mut epoch_loss = 0.0f64;
        let mut epoch_batches = 0usize;
        for batch in samples.chunks(cfg.batch_size) {
            model.zero_grads();
            let mut batch_loss = 0.0f64;
            for sample in batch {
                let mask = &records[sample.record].mask;
                let report = pushforward_loss(&mut model, records, sample, mask)?;
                batch_loss += report.loss;
            }
            batch_loss /= batch.len() as f64;
            if !batch_loss.is_finite() {
                restore(&mut model, &last_good);
                return Ok(TrainOutcome {
                    model,
                    history,
                    stop: StopReason::Diverged { epoch },
                    best_checkpoint,
                    best_val,
                });
            }
            optimizer.step(&mut model, lr, 1.0 / batch.len() as f64);
            epoch_loss += batch_loss;
            epoch_batches += 1;
        }
        let train_mse = epoch_loss / epoch_batches as f64;

        let val_metric = if epoch % cfg.val_every == 0 || epoch + 1 == cfg.epochs {
            let metric = validation_rollout_mse(&model, val_records, cfg.val_records)?;
            if metric < best_val {
                best_val = metric;
                best_checkpoint = encode_checkpoint(&model);
            }
            Some(metric)
        } else {
            None
        };

        history.push(EpochRow {
            epoch,
            lr,
            n_unroll,
            train_mse,
            val_rollout_mse: val_metric,
        });
        last_good = snapshot(&model);
    }

    Ok(TrainOutcome {
        model,
        history,
        stop: StopReason::Completed,
        best_checkpoint,
        best_val,
    })
}

/// History rows as CSV (epoch, lr, n_unroll, train_mse, val_rollout_mse).
pub fn history_to_csv(history: &[EpochRow]) -> String {
    let mut out = String::from("epoch,lr,n_unroll,train_mse,val_rollout_mse\n");
    for row in history {
        let val = row
            .val_rollout_mse
            .map(|v| format!("{v:.8e}"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{:.8e},{},{:.8e},{}\n",
            row.epoch, row.lr, row.n_unroll, row.train_mse, val
        ));
    }
    out
}
