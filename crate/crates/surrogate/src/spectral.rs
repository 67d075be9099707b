//! Truncated spectral convolution layer.
//!
//! The input is transformed with a 2D FFT, the retained low-frequency
//! coefficients are multiplied by learned complex weights, and the result
//! is transformed back; only the real part is kept. The FFT is exact on
//! the periodic horizontal axis; the vertical axis is transformed as-is.
//! When periodicity enforcement is ablated, the input is windowed along x
//! to suppress wraparound coupling.

use crate::param::{HasParams, ParamTensor};
use crate::tensor::Tens;
use oilpore_core::SplitMix64;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Frequencies retained per axis: all `k` with `min(k, n - k) < modes`.
pub fn kept_frequencies(n: usize, modes: usize) -> Vec<usize> {
    (0..n).filter(|k| (*k).min(n - *k) < modes).collect()
}

/// Largest admissible `modes` for an axis of length `n`.
pub fn max_modes(n: usize) -> usize {
    n / 2 + 1
}

#[derive(Clone)]
struct Fft2 {
    row: Arc<dyn Fft<f64>>,
    col: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    h: usize,
    w: usize,
}

impl Fft2 {
    fn new(h: usize, w: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            row: planner.plan_fft_forward(w),
            col: planner.plan_fft_forward(h),
            row_inv: planner.plan_fft_inverse(w),
            col_inv: planner.plan_fft_inverse(h),
            h,
            w,
        }
    }

    /// Unnormalized forward 2D FFT of a real plane.
    fn forward(&self, plane: &[f32]) -> Vec<Complex<f64>> {
        let (h, w) = (self.h, self.w);
        let mut buf: Vec<Complex<f64>> = plane
            .iter()
            .map(|v| Complex::new(*v as f64, 0.0))
            .collect();
        for row in buf.chunks_exact_mut(w) {
            self.row.process(row);
        }
        let mut col = vec![Complex::new(0.0, 0.0); h];
        for i in 0..w {
            for j in 0..h {
                col[j] = buf[j * w + i];
            }
            self.col.process(&mut col);
            for j in 0..h {
                buf[j * w + i] = col[j];
            }
        }
        buf
    }

    /// Unnormalized inverse 2D FFT; returns the real part scaled by 1/(h w).
    fn inverse_real(&self, mut buf: Vec<Complex<f64>>) -> Vec<f32> {
        let (h, w) = (self.h, self.w);
        let mut col = vec![Complex::new(0.0, 0.0); h];
        for i in 0..w {
            for j in 0..h {
                col[j] = buf[j * w + i];
            }
            self.col_inv.process(&mut col);
            for j in 0..h {
                buf[j * w + i] = col[j];
            }
        }
        for row in buf.chunks_exact_mut(w) {
            self.row_inv.process(row);
        }
        let norm = 1.0 / (h * w) as f64;
        buf.iter().map(|z| (z.re * norm) as f32).collect()
    }
}

/// Spectral convolution with learned complex weights on retained modes.
#[derive(Clone)]
pub struct SpectralConv2d {
    /// Interleaved (re, im) pairs, shape [out_c, in_c, n_ky, n_kx, 2].
    pub weight: ParamTensor,
    pub in_c: usize,
    pub out_c: usize,
    pub modes: usize,
    pub kept_x: Vec<usize>,
    pub kept_y: Vec<usize>,
    /// Hann window along x, applied when periodicity is not enforced.
    pub window: Option<Vec<f32>>,
    fft: std::sync::OnceLock<Fft2>,
}

impl std::fmt::Debug for SpectralConv2d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralConv2d")
            .field("in_c", &self.in_c)
            .field("out_c", &self.out_c)
            .field("modes", &self.modes)
            .finish()
    }
}

impl SpectralConv2d {
    pub fn new(
        name: &str,
        in_c: usize,
        out_c: usize,
        modes: usize,
        h: usize,
        w: usize,
        periodic: bool,
        rng: &mut SplitMix64,
    ) -> crate::error::Result<Self> {
        if modes > max_modes(w) || modes > max_modes(h) {
            return Err(crate::error::ModelError::Config(format!(
                "modes {modes} exceed the Nyquist limit for a {w}x{h} grid"
            )));
        }
        let kept_x = kept_frequencies(w, modes);
        let kept_y = kept_frequencies(h, modes);
        let scale = 1.0 / (in_c * out_c) as f64;
        let weight = ParamTensor::uniform(
            format!("{name}.weight"),
            vec![out_c, in_c, kept_y.len(), kept_x.len(), 2],
            scale,
            rng,
        );
        let window = if periodic {
            None
        } else {
            Some(
                (0..w)
                    .map(|i| {
                        let phase = std::f64::consts::PI * (i as f64 + 0.5) / w as f64;
                        (phase.sin() * phase.sin()) as f32
                    })
                    .collect(),
            )
        };
        Ok(Self {
            weight,
            in_c,
            out_c,
            modes,
            kept_x,
            kept_y,
            window,
            fft: std::sync::OnceLock::new(),
        })
    }

    fn fft(&self, h: usize, w: usize) -> &Fft2 {
        let fft = self.fft.get_or_init(|| Fft2::new(h, w));
        assert_eq!((fft.h, fft.w), (h, w), "spectral layer reused across grids");
        fft
    }

    fn windowed(&self, x: &Tens) -> Tens {
        match &self.window {
            None => x.clone(),
            Some(window) => {
                let mut y = x.clone();
                for ch in 0..y.c {
                    let plane = y.plane_mut(ch);
                    for j in 0..x.h {
                        for i in 0..x.w {
                            plane[j * x.w + i] *= window[i];
                        }
                    }
                }
                y
            }
        }
    }

    /// Retained spectra of every input channel (cached for backward).
    pub fn input_spectra(&self, x: &Tens) -> Vec<Vec<Complex<f64>>> {
        let xw = self.windowed(x);
        let fft = self.fft(x.h, x.w);
        (0..self.in_c)
            .map(|ic| {
                let full = fft.forward(xw.plane(ic));
                let mut kept =
                    Vec::with_capacity(self.kept_y.len() * self.kept_x.len());
                for &ky in &self.kept_y {
                    for &kx in &self.kept_x {
                        kept.push(full[ky * x.w + kx]);
                    }
                }
                kept
            })
            .collect()
    }

    pub fn forward_with_spectra(
        &self,
        x: &Tens,
        spectra: &[Vec<Complex<f64>>],
    ) -> Tens {
        let (h, w) = (x.h, x.w);
        let fft = self.fft(h, w);
        let n_kx = self.kept_x.len();
        let n_ky = self.kept_y.len();
        let per_pair = n_ky * n_kx * 2;
        let mut out = Tens::zeros(self.out_c, h, w);
        for oc in 0..self.out_c {
            let mut full = vec![Complex::new(0.0, 0.0); h * w];
            for ic in 0..self.in_c {
                let base = (oc * self.in_c + ic) * per_pair;
                let spec = &spectra[ic];
                let mut ki = 0;
                for &ky in &self.kept_y {
                    for &kx in &self.kept_x {
                        let r = Complex::new(
                            self.weight.w[base + ki * 2] as f64,
                            self.weight.w[base + ki * 2 + 1] as f64,
                        );
                        full[ky * w + kx] += r * spec[ki];
                        ki += 1;
                    }
                }
            }
            let plane = fft.inverse_real(full);
            out.plane_mut(oc).copy_from_slice(&plane);
        }
        out
    }

    pub fn forward(&self, x: &Tens) -> (Tens, Vec<Vec<Complex<f64>>>) {
        let spectra = self.input_spectra(x);
        let y = self.forward_with_spectra(x, &spectra);
        (y, spectra)
    }

    /// Backward pass: accumulates weight gradients and returns the input
    /// gradient. Uses the adjoint identity: the input gradient is the same
    /// spectral product with conjugated weights applied to the upstream
    /// gradient, and the weight gradient is `G_k conj(X_k) / N`.
    pub fn backward(
        &mut self,
        x: &Tens,
        spectra: &[Vec<Complex<f64>>],
        gy: &Tens,
    ) -> Tens {
        let (h, w) = (x.h, x.w);
        let fft = self.fft(h, w).clone();
        let n_kx = self.kept_x.len();
        let n_ky = self.kept_y.len();
        let per_pair = n_ky * n_kx * 2;
        let norm = 1.0 / (h * w) as f64;

        // spectra of the upstream gradient
        let g_spectra: Vec<Vec<Complex<f64>>> = (0..self.out_c)
            .map(|oc| {
                let full = fft.forward(gy.plane(oc));
                let mut kept = Vec::with_capacity(n_ky * n_kx);
                for &ky in &self.kept_y {
                    for &kx in &self.kept_x {
                        kept.push(full[ky * w + kx]);
                    }
                }
                kept
            })
            .collect();

        // weight gradients: (1/N) G conj(X)
        for oc in 0..self.out_c {
            for ic in 0..self.in_c {
                let base = (oc * self.in_c + ic) * per_pair;
                for ki in 0..n_ky * n_kx {
                    let grad = g_spectra[oc][ki] * spectra[ic][ki].conj() * norm;
                    self.weight.g[base + ki * 2] += grad.re as f32;
                    self.weight.g[base + ki * 2 + 1] += grad.im as f32;
                }
            }
        }

        // input gradients: conjugated weights applied to gradient spectra
        let mut gx = Tens::zeros(self.in_c, h, w);
        for ic in 0..self.in_c {
            let mut full = vec![Complex::new(0.0, 0.0); h * w];
            for oc in 0..self.out_c {
                let base = (oc * self.in_c + ic) * per_pair;
                let mut ki = 0;
                for &ky in &self.kept_y {
                    for &kx in &self.kept_x {
                        let r = Complex::new(
                            self.weight.w[base + ki * 2] as f64,
                            self.weight.w[base + ki * 2 + 1] as f64,
                        );
                        full[ky * w + kx] += r.conj() * g_spectra[oc][ki];
                        ki += 1;
                    }
                }
            }
            let plane = fft.inverse_real(full);
            gx.plane_mut(ic).copy_from_slice(&plane);
        }
        // chain through the window
        if let Some(window) = &self.window {
            for ch in 0..gx.c {
                let plane = gx.plane_mut(ch);
                for j in 0..h {
                    for i in 0..w {
                        plane[j * w + i] *= window[i];
                    }
                }
            }
        }
        gx
    }

    /// Dense circular-convolution oracle: materialize the equivalent real
    /// spatial kernel with a direct DFT sum and convolve by brute force.
    /// Independent of the FFT path; only meaningful with full modes.
    pub fn circulant_oracle(&self, x: &Tens) -> Tens {
        let (h, w) = (x.h, x.w);
        let n_kx = self.kept_x.len();
        let per_pair = self.kept_y.len() * n_kx * 2;
        let tau = std::f64::consts::TAU;
        let mut out = Tens::zeros(self.out_c, h, w);
        for oc in 0..self.out_c {
            for ic in 0..self.in_c {
                let base = (oc * self.in_c + ic) * per_pair;
                // real spatial kernel g[dy][dx] = Re( (1/N) sum_k R_k e^{+i k.d} )
                let mut kernel = vec![0.0f64; h * w];
                for (dy, row) in kernel.chunks_exact_mut(w).enumerate() {
                    for (dx, cell) in row.iter_mut().enumerate() {
                        let mut acc = Complex::new(0.0, 0.0);
                        let mut ki = 0;
                        for &ky in &self.kept_y {
                            for &kx in &self.kept_x {
                                let r = Complex::new(
                                    self.weight.w[base + ki * 2] as f64,
                                    self.weight.w[base + ki * 2 + 1] as f64,
                                );
                                let phase = tau
                                    * (ky as f64 * dy as f64 / h as f64
                                        + kx as f64 * dx as f64 / w as f64);
                                acc += r * Complex::new(phase.cos(), phase.sin());
                                ki += 1;
                            }
                        }
                        *cell = acc.re / (h * w) as f64;
                    }
                }
                // brute-force circular convolution y[j][i] += sum kernel[dy][dx] x[j-dy][i-dx]
                let xp = x.plane(ic);
                let op = out.plane_mut(oc);
                for j in 0..h {
                    for i in 0..w {
                        let mut acc = 0.0f64;
                        for dy in 0..h {
                            for dx in 0..w {
                                let sj = (j + h - dy) % h;
                                let si = (i + w - dx) % w;
                                acc += kernel[dy * w + dx] * xp[sj * w + si] as f64;
                            }
                        }
                        op[j * w + i] += acc as f32;
                    }
                }
            }
        }
        out
    }
}

impl HasParams for SpectralConv2d {
    fn for_each_param(&self, f: &mut dyn FnMut(&ParamTensor)) {
        f(&self.weight);
    }

    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor)) {
        f(&mut self.weight);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_input(c: usize, h: usize, w: usize, seed: u64) -> Tens {
        let mut rng = SplitMix64::new(seed);
        let mut x = Tens::zeros(c, h, w);
        for v in x.data.iter_mut() {
            *v = rng.range_f64(-1.0, 1.0) as f32;
        }
        x
    }

    #[test]
    fn full_modes_match_circulant_oracle() {
        let mut rng = SplitMix64::new(21);
        let layer =
            SpectralConv2d::new("t", 2, 2, max_modes(8), 8, 8, true, &mut rng).unwrap();
        let x = random_input(2, 8, 8, 4);
        let (fft_path, _) = layer.forward(&x);
        let oracle = layer.circulant_oracle(&x);
        for (a, b) in fft_path.data.iter().zip(&oracle.data) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn truncated_layer_is_shift_equivariant() {
        let mut rng = SplitMix64::new(22);
        let layer = SpectralConv2d::new("t", 1, 2, 3, 8, 12, true, &mut rng).unwrap();
        let x = random_input(1, 8, 12, 5);
        let (y, _) = layer.forward(&x);
        let (ys, _) = layer.forward(&x.shifted_x(5));
        let y_shift = y.shifted_x(5);
        for (a, b) in ys.data.iter().zip(&y_shift.data) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn constant_in_x_input_stays_constant_in_x() {
        let mut rng = SplitMix64::new(23);
        let layer = SpectralConv2d::new("t", 1, 1, 4, 8, 12, true, &mut rng).unwrap();
        let mut x = Tens::zeros(1, 8, 12);
        for j in 0..8 {
            for i in 0..12 {
                x.set(0, j, i, (j as f32 * 0.3).sin());
            }
        }
        let (y, _) = layer.forward(&x);
        for j in 0..8 {
            let first = y.at(0, j, 0);
            for i in 1..12 {
                assert!(
                    (y.at(0, j, i) - first).abs() < 1e-6,
                    "row {j} column {i} varies"
                );
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = SplitMix64::new(24);
        let mut layer = SpectralConv2d::new("t", 2, 2, 3, 6, 8, true, &mut rng).unwrap();
        let x = random_input(2, 6, 8, 6);
        let loss = |layer: &SpectralConv2d, x: &Tens| -> f64 {
            let (y, _) = layer.forward(x);
            y.data.iter().map(|v| 0.5 * (*v as f64) * (*v as f64)).sum()
        };
        let (y, spectra) = layer.forward(&x);
        let gx = layer.backward(&x, &spectra, &y.clone());

        for probe in [0usize, 17, x.data.len() - 1] {
            let mut xp = x.clone();
            xp.data[probe] += 1e-3;
            let mut xm = x.clone();
            xm.data[probe] -= 1e-3;
            let fd = (loss(&layer, &xp) - loss(&layer, &xm)) / 2e-3;
            let an = gx.data[probe] as f64;
            assert!((fd - an).abs() <= 2e-2 * an.abs().max(1.0), "fd {fd} vs {an}");
        }
        for widx in [0usize, 7, layer.weight.w.len() - 1] {
            let analytic = layer.weight.g[widx] as f64;
            let mut lp = layer.clone();
            lp.weight.w[widx] += 1e-3;
            let mut lm = layer.clone();
            lm.weight.w[widx] -= 1e-3;
            let fd = (loss(&lp, &x) - loss(&lm, &x)) / 2e-3;
            assert!(
                (fd - analytic).abs() <= 2e-2 * analytic.abs().max(1.0),
                "weight {widx}: fd {fd} vs {analytic}"
            );
        }
    }

    #[test]
    fn windowed_variant_breaks_shift_equivariance() {
        let mut rng = SplitMix64::new(25);
        let layer = SpectralConv2d::new("t", 1, 1, 3, 8, 12, false, &mut rng).unwrap();
        let x = random_input(1, 8, 12, 7);
        let (y, _) = layer.forward(&x);
        let (ys, _) = layer.forward(&x.shifted_x(5));
        let y_shift = y.shifted_x(5);
        let diff: f32 = ys
            .data
            .iter()
            .zip(&y_shift.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f32::max);
        assert!(diff > 1e-3, "window should break equivariance, diff {diff}");
    }

    #[test]
    fn nyquist_violation_rejected() {
        let mut rng = SplitMix64::new(26);
        assert!(SpectralConv2d::new("t", 1, 1, 20, 8, 12, true, &mut rng).is_err());
    }
}
