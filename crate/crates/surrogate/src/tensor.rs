//! Minimal CHW tensor for single-sample network evaluation.

/// Dense f32 tensor with channel-major layout: `data[(c * h + j) * w + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tens {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f32>,
}

impl Tens {
    pub fn zeros(c: usize, h: usize, w: usize) -> Self {
        Self {
            c,
            h,
            w,
            data: vec![0.0; c * h * w],
        }
    }

    pub fn from_data(c: usize, h: usize, w: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), c * h * w);
        Self { c, h, w, data }
    }

    #[inline]
    pub fn plane(&self, ch: usize) -> &[f32] {
        &self.data[ch * self.h * self.w..(ch + 1) * self.h * self.w]
    }

    #[inline]
    pub fn plane_mut(&mut self, ch: usize) -> &mut [f32] {
        let hw = self.h * self.w;
        &mut self.data[ch * hw..(ch + 1) * hw]
    }

    #[inline]
    pub fn at(&self, ch: usize, j: usize, i: usize) -> f32 {
        self.data[(ch * self.h + j) * self.w + i]
    }

    #[inline]
    pub fn set(&mut self, ch: usize, j: usize, i: usize, v: f32) {
        self.data[(ch * self.h + j) * self.w + i] = v;
    }

    /// Append extra channels (used for mask conditioning).
    pub fn with_extra_channel(&self, channel: &[f32]) -> Tens {
        assert_eq!(channel.len(), self.h * self.w);
        let mut data = Vec::with_capacity((self.c + 1) * self.h * self.w);
        data.extend_from_slice(&self.data);
        data.extend_from_slice(channel);
        Tens {
            c: self.c + 1,
            h: self.h,
            w: self.w,
            data,
        }
    }

    /// Drop the trailing channel of a gradient (the mask channel is not
    /// learnable and receives no gradient).
    pub fn without_last_channel(mut self) -> Tens {
        assert!(self.c >= 1);
        self.c -= 1;
        self.data.truncate(self.c * self.h * self.w);
        self
    }

    pub fn max_abs(&self) -> f32 {
        self.data.iter().fold(0.0f32, |m, v| m.max(v.abs()))
    }

    /// Cyclic shift along the horizontal axis (testing helper).
    pub fn shifted_x(&self, s: i64) -> Tens {
        let w = self.w as i64;
        let shift = ((s % w) + w) % w;
        let mut out = Tens::zeros(self.c, self.h, self.w);
        for ch in 0..self.c {
            for j in 0..self.h {
                for i in 0..self.w {
                    let src = ((i as i64 - shift + w) % w) as usize;
                    out.set(ch, j, i, self.at(ch, j, src));
                }
            }
        }
        out
    }
}
