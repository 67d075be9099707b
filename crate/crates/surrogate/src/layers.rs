//! Network layers with explicit forward/backward passes.
//!
//! Spatial convolutions pad circularly along the periodic horizontal axis
//! (or with zeros when periodicity enforcement is ablated) and with zeros
//! vertically. Downsampling strides and upsampling duplication act on the
//! vertical axis only, which keeps every layer exactly equivariant to
//! horizontal cyclic shifts.

use crate::param::{HasParams, ParamTensor};
use crate::tensor::Tens;
use oilpore_core::{par, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PadX {
    Circular,
    Zero,
}

/// 2D convolution with odd kernels, optional dilation and vertical stride.
#[derive(Debug, Clone)]
pub struct Conv2d {
    pub weight: ParamTensor,
    pub bias: ParamTensor,
    pub in_c: usize,
    pub out_c: usize,
    pub kh: usize,
    pub kw: usize,
    pub dilation: usize,
    pub stride_y: usize,
    pub pad_x: PadX,
}

impl Conv2d {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        in_c: usize,
        out_c: usize,
        kh: usize,
        kw: usize,
        dilation: usize,
        stride_y: usize,
        pad_x: PadX,
        rng: &mut SplitMix64,
    ) -> Self {
        assert!(kh % 2 == 1 && kw % 2 == 1, "odd kernels only");
        let scale = 1.0 / ((in_c * kh * kw) as f64).sqrt();
        Self {
            weight: ParamTensor::uniform(
                format!("{name}.weight"),
                vec![out_c, in_c, kh, kw],
                scale,
                rng,
            ),
            bias: ParamTensor::zeros(format!("{name}.bias"), vec![out_c]),
            in_c,
            out_c,
            kh,
            kw,
            dilation,
            stride_y,
            pad_x,
        }
    }

    pub fn pointwise(name: &str, in_c: usize, out_c: usize, rng: &mut SplitMix64) -> Self {
        Self::new(name, in_c, out_c, 1, 1, 1, 1, PadX::Circular, rng)
    }

    pub fn out_height(&self, h: usize) -> usize {
        if self.stride_y == 1 {
            h
        } else {
            debug_assert_eq!(h % self.stride_y, 0);
            h / self.stride_y
        }
    }

    pub fn forward(&self, x: &Tens) -> Tens {
        debug_assert_eq!(x.c, self.in_c);
        let (h, w) = (x.h, x.w);
        let h_out = self.out_height(h);
        let cy = (self.kh as isize - 1) / 2;
        let cx = (self.kw as isize - 1) / 2;
        let dil = self.dilation as isize;
        let mut out = Tens::zeros(self.out_c, h_out, w);
        let wv = &self.weight.w;
        let bv = &self.bias.w;
        let per_oc = self.in_c * self.kh * self.kw;

        par::for_each_row_mut(&mut out.data, h_out * w, |oc, plane| {
            plane.fill(bv[oc]);
            for ic in 0..self.in_c {
                let xplane = x.plane(ic);
                for ky in 0..self.kh {
                    for kx in 0..self.kw {
                        let weight =
                            wv[oc * per_oc + (ic * self.kh + ky) * self.kw + kx];
                        if weight == 0.0 {
                            continue;
                        }
                        let dy = (ky as isize - cy) * dil;
                        let dx = (kx as isize - cx) * dil;
                        for jo in 0..h_out {
                            let ji = jo as isize * self.stride_y as isize + dy;
                            if ji < 0 || ji >= h as isize {
                                continue;
                            }
                            let xrow = &xplane[ji as usize * w..(ji as usize + 1) * w];
                            let orow = &mut plane[jo * w..(jo + 1) * w];
                            axpy_offset(orow, xrow, weight, dx, self.pad_x == PadX::Circular);
                        }
                    }
                }
            }
        });
        out
    }

    /// Accumulates weight/bias gradients from `(x, gy)` and returns the
    /// input gradient.
    pub fn backward(&mut self, x: &Tens, gy: &Tens) -> Tens {
        let (h, w) = (x.h, x.w);
        let h_out = gy.h;
        let cy = (self.kh as isize - 1) / 2;
        let cx = (self.kw as isize - 1) / 2;
        let dil = self.dilation as isize;
        let per_oc = self.in_c * self.kh * self.kw;

        // bias gradients
        for oc in 0..self.out_c {
            let sum: f64 = gy.plane(oc).iter().map(|v| *v as f64).sum();
            self.bias.g[oc] += sum as f32;
        }

        // weight gradients, parallel over output channels
        {
            let gw = &mut self.weight.g;
            par::for_each_row_mut(gw, per_oc, |oc, gslice| {
                let gplane = gy.plane(oc);
                for ic in 0..self.in_c {
                    let xplane = x.plane(ic);
                    for ky in 0..self.kh {
                        for kx in 0..self.kw {
                            let dy = (ky as isize - cy) * dil;
                            let dx = (kx as isize - cx) * dil;
                            let mut acc = 0.0f64;
                            for jo in 0..h_out {
                                let ji = jo as isize * self.stride_y as isize + dy;
                                if ji < 0 || ji >= h as isize {
                                    continue;
                                }
                                let xrow = &xplane[ji as usize * w..(ji as usize + 1) * w];
                                let grow = &gplane[jo * w..(jo + 1) * w];
                                acc += dot_offset(grow, xrow, dx, self.pad_x == PadX::Circular);
                            }
                            gslice[(ic * self.kh + ky) * self.kw + kx] += acc as f32;
                        }
                    }
                }
            });
        }

        // input gradients, parallel over input channels (gather form)
        let mut gx = Tens::zeros(self.in_c, h, w);
        let wv = &self.weight.w;
        par::for_each_row_mut(&mut gx.data, h * w, |ic, plane| {
            for oc in 0..self.out_c {
                let gplane = gy.plane(oc);
                for ky in 0..self.kh {
                    for kx in 0..self.kw {
                        let weight = wv[oc * per_oc + (ic * self.kh + ky) * self.kw + kx];
                        if weight == 0.0 {
                            continue;
                        }
                        let dy = (ky as isize - cy) * dil;
                        let dx = (kx as isize - cx) * dil;
                        for j in 0..h {
                            // output rows jo with jo * sy + dy == j
                            let num = j as isize - dy;
                            if num < 0 || num % self.stride_y as isize != 0 {
                                continue;
                            }
                            let jo = (num / self.stride_y as isize) as usize;
                            if jo >= h_out {
                                continue;
                            }
                            let grow = &gplane[jo * w..(jo + 1) * w];
                            let prow = &mut plane[j * w..(j + 1) * w];
                            // io + dx == i, so gather with the negated offset
                            axpy_offset(prow, grow, weight, -dx, self.pad_x == PadX::Circular);
                        }
                    }
                }
            }
        });
        gx
    }
}

/// `out[i] += weight * x[i + dx]` with circular or zero handling of the
/// horizontal offset. The in-range bulk runs as a branch-free fused loop
/// (the hot path of every convolution); the wrapped remainders are short.
#[inline]
fn axpy_offset(out: &mut [f32], x: &[f32], weight: f32, dx: isize, circular: bool) {
    let w = out.len() as isize;
    debug_assert_eq!(x.len() as isize, w);
    let lo = (-dx).clamp(0, w) as usize;
    let hi = (w - dx).clamp(0, w) as usize;
    if lo < hi {
        let src = &x[(lo as isize + dx) as usize..(hi as isize + dx) as usize];
        for (o, s) in out[lo..hi].iter_mut().zip(src) {
            *o += weight * s;
        }
    }
    if circular {
        for (io, o) in out[..lo].iter_mut().enumerate() {
            *o += weight * x[(io as isize + dx + w) as usize];
        }
        for (offset, o) in out[hi..].iter_mut().enumerate() {
            *o += weight * x[(hi as isize + offset as isize + dx - w) as usize];
        }
    }
}

/// `sum_i g[i] * x[i + dx]` with the same offset handling.
#[inline]
fn dot_offset(g: &[f32], x: &[f32], dx: isize, circular: bool) -> f64 {
    let w = g.len() as isize;
    let lo = (-dx).clamp(0, w) as usize;
    let hi = (w - dx).clamp(0, w) as usize;
    let mut acc = 0.0f32;
    if lo < hi {
        let src = &x[(lo as isize + dx) as usize..(hi as isize + dx) as usize];
        for (gv, s) in g[lo..hi].iter().zip(src) {
            acc += gv * s;
        }
    }
    if circular {
        for (io, gv) in g[..lo].iter().enumerate() {
            acc += gv * x[(io as isize + dx + w) as usize];
        }
        for (offset, gv) in g[hi..].iter().enumerate() {
            acc += gv * x[(hi as isize + offset as isize + dx - w) as usize];
        }
    }
    acc as f64
}

impl HasParams for Conv2d {
    fn for_each_param(&self, f: &mut dyn FnMut(&ParamTensor)) {
        f(&self.weight);
        f(&self.bias);
    }

    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor)) {
        f(&mut self.weight);
        f(&mut self.bias);
    }
}

/// GELU activation (tanh approximation).
pub fn gelu_forward(x: &Tens) -> Tens {
    let mut y = x.clone();
    for v in y.data.iter_mut() {
        *v = gelu(*v);
    }
    y
}

pub fn gelu_backward(x: &Tens, gy: &Tens) -> Tens {
    let mut gx = gy.clone();
    for (g, xv) in gx.data.iter_mut().zip(&x.data) {
        *g *= gelu_grad(*xv);
    }
    gx
}

const GELU_C: f32 = 0.797_884_6; // sqrt(2/pi)
const GELU_A: f32 = 0.044_715;

#[inline]
pub fn gelu(x: f32) -> f32 {
    let inner = GELU_C * (x + GELU_A * x * x * x);
    0.5 * x * (1.0 + inner.tanh())
}

#[inline]
pub fn gelu_grad(x: f32) -> f32 {
    let inner = GELU_C * (x + GELU_A * x * x * x);
    let t = inner.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

/// Group normalization with affine parameters.
#[derive(Debug, Clone)]
pub struct GroupNorm {
    pub gamma: ParamTensor,
    pub beta: ParamTensor,
    pub groups: usize,
    pub channels: usize,
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct GroupNormCache {
    pub mean: Vec<f64>,
    pub inv_std: Vec<f64>,
}

impl GroupNorm {
    pub fn new(name: &str, groups: usize, channels: usize) -> Self {
        assert!(
            channels % groups == 0,
            "channels {channels} not divisible by groups {groups}"
        );
        Self {
            gamma: ParamTensor::constant(format!("{name}.gamma"), vec![channels], 1.0),
            beta: ParamTensor::zeros(format!("{name}.beta"), vec![channels]),
            groups,
            channels,
            eps: 1e-5,
        }
    }

    pub fn forward(&self, x: &Tens) -> (Tens, GroupNormCache) {
        debug_assert_eq!(x.c, self.channels);
        let per_group = self.channels / self.groups;
        let hw = x.h * x.w;
        let group_len = (per_group * hw) as f64;
        let mut mean = vec![0.0f64; self.groups];
        let mut inv_std = vec![0.0f64; self.groups];
        let mut y = x.clone();
        for g in 0..self.groups {
            let lo = g * per_group * hw;
            let hi = lo + per_group * hw;
            let slice = &x.data[lo..hi];
            let m: f64 = slice.iter().map(|v| *v as f64).sum::<f64>() / group_len;
            let var: f64 = slice
                .iter()
                .map(|v| {
                    let d = *v as f64 - m;
                    d * d
                })
                .sum::<f64>()
                / group_len;
            let istd = 1.0 / (var + self.eps).sqrt();
            mean[g] = m;
            inv_std[g] = istd;
            for (offset, v) in y.data[lo..hi].iter_mut().enumerate() {
                let ch = g * per_group + offset / hw;
                let xhat = (*v as f64 - m) * istd;
                *v = (xhat * self.gamma.w[ch] as f64 + self.beta.w[ch] as f64) as f32;
            }
        }
        (y, GroupNormCache { mean, inv_std })
    }

    pub fn backward(&mut self, x: &Tens, cache: &GroupNormCache, gy: &Tens) -> Tens {
        let per_group = self.channels / self.groups;
        let hw = x.h * x.w;
        let group_len = (per_group * hw) as f64;
        let mut gx = Tens::zeros(x.c, x.h, x.w);
        for g in 0..self.groups {
            let lo = g * per_group * hw;
            let hi = lo + per_group * hw;
            let m = cache.mean[g];
            let istd = cache.inv_std[g];

            // per-channel affine gradients plus group sums
            let mut sum_g = 0.0f64; // sum of gamma-weighted upstream grads
            let mut sum_gx = 0.0f64; // sum of gamma-weighted grads times xhat
            for offset in 0..hi - lo {
                let ch = g * per_group + offset / hw;
                let xhat = (x.data[lo + offset] as f64 - m) * istd;
                let gyv = gy.data[lo + offset] as f64;
                self.gamma.g[ch] += (gyv * xhat) as f32;
                self.beta.g[ch] += gyv as f32;
                let gamma_gy = gyv * self.gamma.w[ch] as f64;
                sum_g += gamma_gy;
                sum_gx += gamma_gy * xhat;
            }
            let mean_g = sum_g / group_len;
            let mean_gx = sum_gx / group_len;
            for offset in 0..hi - lo {
                let ch = g * per_group + offset / hw;
                let xhat = (x.data[lo + offset] as f64 - m) * istd;
                let gamma_gy = gy.data[lo + offset] as f64 * self.gamma.w[ch] as f64;
                gx.data[lo + offset] = ((gamma_gy - mean_g - xhat * mean_gx) * istd) as f32;
            }
        }
        gx
    }
}

impl HasParams for GroupNorm {
    fn for_each_param(&self, f: &mut dyn FnMut(&ParamTensor)) {
        f(&self.gamma);
        f(&self.beta);
    }

    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor)) {
        f(&mut self.gamma);
        f(&mut self.beta);
    }
}

/// Nearest-neighbor vertical upsampling by 2 (used instead of transposed
/// convolutions in the UNet up path).
pub fn upsample_vertical(x: &Tens) -> Tens {
    let mut out = Tens::zeros(x.c, x.h * 2, x.w);
    for ch in 0..x.c {
        for j in 0..x.h {
            let row = &x.plane(ch)[j * x.w..(j + 1) * x.w];
            out.plane_mut(ch)[2 * j * x.w..(2 * j + 1) * x.w].copy_from_slice(row);
            out.plane_mut(ch)[(2 * j + 1) * x.w..(2 * j + 2) * x.w].copy_from_slice(row);
        }
    }
    out
}

pub fn upsample_vertical_backward(gy: &Tens) -> Tens {
    let h = gy.h / 2;
    let mut gx = Tens::zeros(gy.c, h, gy.w);
    for ch in 0..gy.c {
        for j in 0..h {
            for i in 0..gy.w {
                gx.set(ch, j, i, gy.at(ch, 2 * j, i) + gy.at(ch, 2 * j + 1, i));
            }
        }
    }
    gx
}

/// Channel concatenation (UNet skip connections).
pub fn concat_channels(a: &Tens, b: &Tens) -> Tens {
    assert_eq!((a.h, a.w), (b.h, b.w));
    let mut data = Vec::with_capacity((a.c + b.c) * a.h * a.w);
    data.extend_from_slice(&a.data);
    data.extend_from_slice(&b.data);
    Tens::from_data(a.c + b.c, a.h, a.w, data)
}

pub fn split_channels(g: &Tens, c_first: usize) -> (Tens, Tens) {
    let hw = g.h * g.w;
    let first = Tens::from_data(c_first, g.h, g.w, g.data[..c_first * hw].to_vec());
    let second = Tens::from_data(g.c - c_first, g.h, g.w, g.data[c_first * hw..].to_vec());
    (first, second)
}

/// 1D convolution along the bundle's temporal axis. The input is a CHW
/// tensor whose channels factor as `k * d`; weights connect the `d`
/// features across a temporal window with zero padding in time.
#[derive(Debug, Clone)]
pub struct TemporalConv {
    pub weight: ParamTensor, // [d_out, d_in, kt]
    pub bias: ParamTensor,   // [d_out]
    pub d_in: usize,
    pub d_out: usize,
    pub kt: usize,
    pub k: usize,
}

impl TemporalConv {
    pub fn new(name: &str, k: usize, d_in: usize, d_out: usize, kt: usize, rng: &mut SplitMix64) -> Self {
        assert!(kt % 2 == 1, "odd temporal kernels only");
        let scale = 1.0 / ((d_in * kt) as f64).sqrt();
        Self {
            weight: ParamTensor::uniform(format!("{name}.weight"), vec![d_out, d_in, kt], scale, rng),
            bias: ParamTensor::zeros(format!("{name}.bias"), vec![d_out]),
            d_in,
            d_out,
            kt,
            k,
        }
    }

    pub fn forward(&self, x: &Tens) -> Tens {
        debug_assert_eq!(x.c, self.k * self.d_in);
        let hw = x.h * x.w;
        let ct = (self.kt as isize - 1) / 2;
        let mut out = Tens::zeros(self.k * self.d_out, x.h, x.w);
        for t in 0..self.k {
            for od in 0..self.d_out {
                let plane = out.plane_mut(t * self.d_out + od);
                plane.fill(self.bias.w[od]);
                for id in 0..self.d_in {
                    for tau in 0..self.kt {
                        let ts = t as isize + tau as isize - ct;
                        if ts < 0 || ts >= self.k as isize {
                            continue;
                        }
                        let wv = self.weight.w[(od * self.d_in + id) * self.kt + tau];
                        let xplane = x.plane(ts as usize * self.d_in + id);
                        for idx in 0..hw {
                            plane[idx] += wv * xplane[idx];
                        }
                    }
                }
            }
        }
        out
    }

    pub fn backward(&mut self, x: &Tens, gy: &Tens) -> Tens {
        let hw = x.h * x.w;
        let ct = (self.kt as isize - 1) / 2;
        let mut gx = Tens::zeros(x.c, x.h, x.w);
        for t in 0..self.k {
            for od in 0..self.d_out {
                let gplane = gy.plane(t * self.d_out + od);
                let gsum: f64 = gplane.iter().map(|v| *v as f64).sum();
                self.bias.g[od] += gsum as f32;
                for id in 0..self.d_in {
                    for tau in 0..self.kt {
                        let ts = t as isize + tau as isize - ct;
                        if ts < 0 || ts >= self.k as isize {
                            continue;
                        }
                        let widx = (od * self.d_in + id) * self.kt + tau;
                        let wv = self.weight.w[widx];
                        let xplane = x.plane(ts as usize * self.d_in + id);
                        let gxplane = gx.plane_mut(ts as usize * self.d_in + id);
                        let mut acc = 0.0f64;
                        for idx in 0..hw {
                            acc += (gplane[idx] * xplane[idx]) as f64;
                            gxplane[idx] += wv * gplane[idx];
                        }
                        self.weight.g[widx] += acc as f32;
                    }
                }
            }
        }
        gx
    }
}

impl HasParams for TemporalConv {
    fn for_each_param(&self, f: &mut dyn FnMut(&ParamTensor)) {
        f(&self.weight);
        f(&self.bias);
    }

    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor)) {
        f(&mut self.weight);
        f(&mut self.bias);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finite_diff_check(
        forward: &dyn Fn(&Tens) -> f64,
        x: &Tens,
        analytic: &Tens,
        eps: f32,
        tol: f64,
    ) {
        for probe in [0usize, x.data.len() / 3, x.data.len() - 1] {
            let mut xp = x.clone();
            xp.data[probe] += eps;
            let mut xm = x.clone();
            xm.data[probe] -= eps;
            let fd = (forward(&xp) - forward(&xm)) / (2.0 * eps as f64);
            let an = analytic.data[probe] as f64;
            assert!(
                (fd - an).abs() <= tol * an.abs().max(1.0),
                "probe {probe}: fd {fd} vs analytic {an}"
            );
        }
    }

    fn loss(y: &Tens) -> f64 {
        // sum of squares / 2 so the gradient is just y
        y.data.iter().map(|v| 0.5 * (*v as f64) * (*v as f64)).sum()
    }

    #[test]
    fn conv_gradients_match_finite_differences() {
        let mut rng = SplitMix64::new(3);
        for (pad, stride, dil) in [
            (PadX::Circular, 1usize, 1usize),
            (PadX::Zero, 1, 2),
            (PadX::Circular, 2, 1),
        ] {
            let mut conv = Conv2d::new("t", 2, 3, 3, 3, dil, stride, pad, &mut rng);
            let mut x = Tens::zeros(2, 8, 6);
            for v in x.data.iter_mut() {
                *v = rng.range_f64(-1.0, 1.0) as f32;
            }
            let y = conv.forward(&x);
            let gy = y.clone(); // d(loss)/dy = y
            let gx = conv.backward(&x, &gy);
            let f = |x: &Tens| loss(&conv.forward(x));
            finite_diff_check(&f, &x, &gx, 1e-3, 2e-2);

            // weight gradient at one index
            let widx = 5;
            let analytic = conv.weight.g[widx] as f64;
            let mut cp = conv.clone();
            cp.weight.w[widx] += 1e-3;
            let mut cm = conv.clone();
            cm.weight.w[widx] -= 1e-3;
            let fd = (loss(&cp.forward(&x)) - loss(&cm.forward(&x))) / 2e-3;
            assert!(
                (fd - analytic).abs() <= 2e-2 * analytic.abs().max(1.0),
                "weight fd {fd} vs {analytic} (pad {pad:?} stride {stride} dil {dil})"
            );
        }
    }

    #[test]
    fn circular_conv_is_shift_equivariant_bitwise() {
        let mut rng = SplitMix64::new(5);
        let conv = Conv2d::new("t", 1, 2, 3, 5, 1, 1, PadX::Circular, &mut rng);
        let mut x = Tens::zeros(1, 6, 10);
        for v in x.data.iter_mut() {
            *v = rng.range_f64(-1.0, 1.0) as f32;
        }
        let shifted_out = conv.forward(&x.shifted_x(3));
        let out_shifted = conv.forward(&x).shifted_x(3);
        assert_eq!(shifted_out, out_shifted);
    }

    #[test]
    fn zero_pad_conv_is_not_shift_equivariant() {
        let mut rng = SplitMix64::new(5);
        let conv = Conv2d::new("t", 1, 1, 3, 5, 1, 1, PadX::Zero, &mut rng);
        let mut x = Tens::zeros(1, 4, 10);
        for v in x.data.iter_mut() {
            *v = rng.range_f64(-1.0, 1.0) as f32;
        }
        let shifted_out = conv.forward(&x.shifted_x(3));
        let out_shifted = conv.forward(&x).shifted_x(3);
        assert_ne!(shifted_out, out_shifted);
    }

    #[test]
    fn groupnorm_gradients_match_finite_differences() {
        let mut rng = SplitMix64::new(9);
        let mut norm = GroupNorm::new("t", 2, 4);
        for g in norm.gamma.w.iter_mut() {
            *g = rng.range_f64(0.5, 1.5) as f32;
        }
        let mut x = Tens::zeros(4, 5, 4);
        for v in x.data.iter_mut() {
            *v = rng.range_f64(-1.0, 1.0) as f32;
        }
        let (y, cache) = norm.forward(&x);
        let gx = norm.backward(&x, &cache, &y.clone());
        let f = |x: &Tens| {
            let (y, _) = norm.forward(x);
            loss(&y)
        };
        finite_diff_check(&f, &x, &gx, 1e-3, 5e-2);
    }

    #[test]
    fn gelu_grad_matches_finite_differences() {
        for x in [-2.0f32, -0.5, 0.0, 0.7, 3.0] {
            let eps = 1e-3;
            let fd = (gelu(x + eps) - gelu(x - eps)) / (2.0 * eps);
            assert!((fd - gelu_grad(x)).abs() < 1e-3, "x={x}");
        }
        assert_eq!(gelu(0.0), 0.0);
    }

    #[test]
    fn upsample_backward_sums_duplicated_rows() {
        let x = Tens::from_data(1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let up = upsample_vertical(&x);
        assert_eq!(up.h, 4);
        assert_eq!(up.at(0, 0, 0), up.at(0, 1, 0));
        let gx = upsample_vertical_backward(&up);
        assert_eq!(gx.at(0, 0, 0), 2.0);
        assert_eq!(gx.at(0, 1, 1), 8.0);
    }

    #[test]
    fn temporal_conv_gradients_match_finite_differences() {
        let mut rng = SplitMix64::new(13);
        let mut conv = TemporalConv::new("t", 4, 2, 3, 3, &mut rng);
        let mut x = Tens::zeros(8, 3, 4);
        for v in x.data.iter_mut() {
            *v = rng.range_f64(-1.0, 1.0) as f32;
        }
        let y = conv.forward(&x);
        assert_eq!(y.c, 4 * 3);
        let gx = conv.backward(&x, &y.clone());
        let f = |x: &Tens| loss(&conv.forward(x));
        finite_diff_check(&f, &x, &gx, 1e-3, 2e-2);
    }
}
