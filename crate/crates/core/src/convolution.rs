//! Circulant application of a [`KernelTable`]: `(C f)_i = h Σ_j w_j f_{i−j}`,
//! diagonalized by the FFT.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::kernel::KernelTable;

pub struct CirculantOperator {
    eigenvalues: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CirculantOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantOperator")
            .field("len", &self.eigenvalues.len())
            .finish()
    }
}

impl CirculantOperator {
    pub fn new(table: &KernelTable) -> Self {
        let n = table.grid_size();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let h = table.spacing();
        let mut buf: Vec<Complex<f64>> = table
            .weights()
            .iter()
            .map(|&w| Complex::new(h * w, 0.0))
            .collect();
        forward.process(&mut buf);
        // The weights are even, so the spectrum is real up to rounding.
        let eigenvalues = buf.iter().map(|c| c.re).collect();
        Self {
            eigenvalues,
            forward,
            inverse,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalue of the operator on the Fourier mode `e^{2πijk/N}`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        assert_eq!(
            f.len(),
            self.len(),
            "profile length does not match the operator"
        );
        let mut buf: Vec<Complex<f64>> = f.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        for (c, lam) in buf.iter_mut().zip(&self.eigenvalues) {
            *c *= lam;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.len() as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }
}
