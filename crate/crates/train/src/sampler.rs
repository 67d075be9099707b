//! Training samples: an input bundle plus the unrolled target bundles.

use crate::error::{Result, TrainError};
use oilpore_core::SplitMix64;
use oilpore_data::SimulationRecord;
use oilpore_surrogate::TimeBundle;

/// One pushforward sample drawn from a record.
#[derive(Debug, Clone)]
pub struct TrainSample {
    pub record: usize,
    pub start: usize,
    pub n_unroll: usize,
}

impl TrainSample {
    /// Bundle `[start + step * k, ...)` of the record.
    pub fn bundle(&self, records: &[SimulationRecord], step: usize, k: usize) -> Result<TimeBundle> {
        let record = &records[self.record];
        let n = record.grid().len();
        let start = self.start + step * k;
        if (start + k) * n > record.frames.len() {
            return Err(TrainError::Config(format!(
                "bundle window [{start}, {}) outside record of {} frames",
                start + k,
                record.t_len
            )));
        }
        TimeBundle::from_frames_clamped(
            k,
            record.height(),
            record.width(),
            start,
            &record.frames[start * n..(start + k) * n],
        )
        .map_err(TrainError::from)
    }

    /// The final target bundle (step `n_unroll`).
    pub fn target(&self, records: &[SimulationRecord], k: usize) -> Result<TimeBundle> {
        self.bundle(records, self.n_unroll, k)
    }
}

/// Uniformly sample valid start indices for the epoch's unroll depth.
pub fn draw_samples(
    records: &[SimulationRecord],
    k: usize,
    n_unroll: usize,
    per_record: usize,
    rng: &mut SplitMix64,
) -> Vec<TrainSample> {
    let mut samples = Vec::new();
    for (idx, record) in records.iter().enumerate() {
        let window = (n_unroll + 1) * k;
        if record.t_len < window {
            continue;
        }
        let max_start = record.t_len - window;
        for _ in 0..per_record {
            let start = rng.below(max_start as u64 + 1) as usize;
            samples.push(TrainSample {
                record: idx,
                start,
                n_unroll,
            });
        }
    }
    rng.shuffle(&mut samples);
    samples
}
