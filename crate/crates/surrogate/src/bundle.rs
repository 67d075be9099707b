//! Time bundles: blocks of consecutive phase frames handled as one
//! surrogate input/output unit.

use crate::error::{ModelError, Result};
use crate::tensor::Tens;

/// `k` consecutive phase frames on an H x W grid, time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeBundle {
    pub k: usize,
    pub h: usize,
    pub w: usize,
    /// Index of the bundle's first frame within its source trajectory.
    pub start: usize,
    pub frames: Vec<f32>,
}

impl TimeBundle {
    /// Build from raw trajectory frames, clamping values into [-1, 1].
    /// Reference trajectories may overshoot the phase bounds by a small
    /// solver tolerance; bundles hold the physical range.
    pub fn from_frames_clamped(
        k: usize,
        h: usize,
        w: usize,
        start: usize,
        frames: &[f32],
    ) -> Result<Self> {
        let clamped = frames.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
        Self::new(k, h, w, start, clamped)
    }

    pub fn new(k: usize, h: usize, w: usize, start: usize, frames: Vec<f32>) -> Result<Self> {
        if k == 0 {
            return Err(ModelError::Config("bundle length must be at least 1".into()));
        }
        if frames.len() != k * h * w {
            return Err(ModelError::Dimension(format!(
                "bundle expected {} values, got {}",
                k * h * w,
                frames.len()
            )));
        }
        for value in &frames {
            if !value.is_finite() || !(-1.0..=1.0).contains(value) {
                return Err(ModelError::Config(format!(
                    "bundle value {value} outside [-1, 1]"
                )));
            }
        }
        Ok(Self { k, h, w, start, frames })
    }

    #[inline]
    pub fn frame(&self, t: usize) -> &[f32] {
        &self.frames[t * self.h * self.w..(t + 1) * self.h * self.w]
    }

    pub fn last_frame(&self) -> &[f32] {
        self.frame(self.k - 1)
    }

    /// View the bundle as a k-channel tensor.
    pub fn as_tensor(&self) -> Tens {
        Tens::from_data(self.k, self.h, self.w, self.frames.clone())
    }

    pub fn shifted_x(&self, s: i64) -> TimeBundle {
        let t = self.as_tensor().shifted_x(s);
        TimeBundle {
            k: self.k,
            h: self.h,
            w: self.w,
            start: self.start,
            frames: t.data,
        }
    }
}
