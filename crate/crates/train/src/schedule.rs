//! Unroll and learning-rate schedules plus the training configuration.

use crate::error::{Result, TrainError};
use oilpore_core::config::ConfigDoc;

/// Training hyperparameters. Defaults follow the reference protocol:
/// 500 epochs at base rate 1e-4 decayed by 0.4 at epochs {25, 125, 250,
/// 375}, with the pushforward unroll deepening by one every 25 epochs up
/// to 8.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub base_lr: f64,
    pub lr_decay: f64,
    pub lr_milestones: Vec<usize>,
    pub unroll_period: usize,
    pub max_unroll: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Per-step mass tolerance used by the in-training post-processing.
    pub mass_epsilon: f64,
    /// Random bundle starts drawn per record per epoch.
    pub samples_per_record: usize,
    /// Validation rollout cadence and subset size.
    pub val_every: usize,
    pub val_records: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            base_lr: 1e-4,
            lr_decay: 0.4,
            lr_milestones: vec![25, 125, 250, 375],
            unroll_period: 25,
            max_unroll: 8,
            batch_size: 16,
            seed: 7,
            mass_epsilon: 4e-4,
            samples_per_record: 4,
            val_every: 5,
            val_records: 2,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(TrainError::Config("epochs must be positive".into()));
        }
        if self.max_unroll == 0 {
            return Err(TrainError::Config("max_unroll must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch_size must be at least 1".into()));
        }
        if !(self.base_lr > 0.0 && self.lr_decay > 0.0) {
            return Err(TrainError::Config("learning rates must be positive".into()));
        }
        if self.unroll_period == 0 {
            return Err(TrainError::Config("unroll_period must be positive".into()));
        }
        if self.samples_per_record == 0 {
            return Err(TrainError::Config("samples_per_record must be positive".into()));
        }
        Ok(())
    }

    pub fn from_doc(doc: &ConfigDoc) -> Result<Self> {
        let mut cfg = Self::default();
        let s = "training";
        if let Some(v) = doc.get_usize(s, "epochs")? {
            cfg.epochs = v;
        }
        if let Some(v) = doc.get_f64(s, "base_lr")? {
            cfg.base_lr = v;
        }
        if let Some(v) = doc.get_f64(s, "lr_decay")? {
            cfg.lr_decay = v;
        }
        if let Some(v) = doc.get_usize_list(s, "lr_milestones")? {
            cfg.lr_milestones = v;
        }
        if let Some(v) = doc.get_usize(s, "unroll_period")? {
            cfg.unroll_period = v;
        }
        if let Some(v) = doc.get_usize(s, "max_unroll")? {
            cfg.max_unroll = v;
        }
        if let Some(v) = doc.get_usize(s, "batch_size")? {
            cfg.batch_size = v;
        }
        if let Some(v) = doc.get_u64(s, "seed")? {
            cfg.seed = v;
        }
        if let Some(v) = doc.get_f64(s, "mass_epsilon")? {
            cfg.mass_epsilon = v;
        }
        if let Some(v) = doc.get_usize(s, "samples_per_record")? {
            cfg.samples_per_record = v;
        }
        if let Some(v) = doc.get_usize(s, "val_every")? {
            cfg.val_every = v;
        }
        if let Some(v) = doc.get_usize(s, "val_records")? {
            cfg.val_records = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Number of forward passes per sample at a given epoch: one more every
/// `unroll_period` epochs, capped at `max_unroll`.
pub fn unroll_schedule(epoch: usize, cfg: &TrainConfig) -> usize {
    (1 + epoch / cfg.unroll_period).min(cfg.max_unroll)
}

/// Base rate multiplied by the decay once per milestone passed.
pub fn lr_schedule(epoch: usize, cfg: &TrainConfig) -> f64 {
    let passed = cfg
        .lr_milestones
        .iter()
        .filter(|m| epoch >= **m)
        .count() as i32;
    cfg.base_lr * cfg.lr_decay.powi(passed)
}
