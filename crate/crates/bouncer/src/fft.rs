use std::sync::Arc;

use fermi_core::quantum::SpectralTransform;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// [`SpectralTransform`] backed by planned `rustfft` transforms.
pub struct PlannedFft {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl PlannedFft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        PlannedFft { forward, inverse, scratch: vec![Complex64::new(0.0, 0.0); len] }
    }
}

impl SpectralTransform for PlannedFft {
    fn len(&self) -> usize {
        self.forward.len()
    }

    fn forward(&mut self, data: &mut [Complex64]) {
        self.forward.process_with_scratch(data, &mut self.scratch);
    }

    fn inverse(&mut self, data: &mut [Complex64]) {
        self.inverse.process_with_scratch(data, &mut self.scratch);
    }
}

impl std::fmt::Debug for PlannedFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PlannedFft").field("len", &self.forward.len()).finish()
    }
}
