//! Thin wrapper over `rustfft` with the normalisation used throughout the crate.
//!
//! Forward transform: `F_i = sum_n f_n e^{-2 pi i i n / N}`.
//! Inverse transform: `f_n = (1/N) sum_i F_i e^{+2 pi i i n / N}`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub struct Transform {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch_len: usize,
    len: usize,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform").field("len", &self.len).finish()
    }
}

impl Transform {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            scratch_len,
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.scratch_len];
        self.forward.process_with_scratch(data, &mut scratch);
    }

    /// Normalised inverse (includes the `1/N` factor).
    pub fn inverse(&self, data: &mut [Complex64]) {
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.scratch_len];
        self.inverse.process_with_scratch(data, &mut scratch);
        let scale = 1.0 / self.len as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    pub fn forward_copy(&self, data: &[Complex64]) -> Vec<Complex64> {
        let mut out = data.to_vec();
        self.forward(&mut out);
        out
    }

    pub fn inverse_copy(&self, data: &[Complex64]) -> Vec<Complex64> {
        let mut out = data.to_vec();
        self.inverse(&mut out);
        out
    }
}
