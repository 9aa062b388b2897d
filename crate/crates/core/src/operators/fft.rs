use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Cyclic convolution of length `len` with two fixed kernels, evaluated as a
/// zero-padded linear convolution of power-of-two length and folded back.
#[derive(Clone)]
pub(crate) struct CyclicConvolver {
    len: usize,
    padded: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// spectrum of the kernel used by `apply`
    apply_kernel: Vec<Complex64>,
    /// spectrum of the kernel used by `apply_adjoint`
    adjoint_kernel: Vec<Complex64>,
}

impl fmt::Debug for CyclicConvolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CyclicConvolver")
            .field("len", &self.len)
            .field("padded", &self.padded)
            .finish()
    }
}

impl CyclicConvolver {
    /// Builds the convolver for the circulant generator `g`, i.e. the map
    /// `y_k = sum_j g[(j - k) mod L] x_j` and its transpose
    /// `x_j = sum_k g[(j - k) mod L] u_k`.
    pub(crate) fn for_circulant(g: &[f64]) -> Self {
        let len = g.len();
        let padded = (2 * len - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(padded);
        let inverse = planner.plan_fft_inverse(padded);

        // y = h * x (cyclic) with h[m] = g[(-m) mod L]
        let reversed: Vec<f64> = (0..len).map(|m| g[(len - m) % len]).collect();
        let apply_kernel = Self::spectrum(&*forward, &reversed, padded);
        let adjoint_kernel = Self::spectrum(&*forward, g, padded);

        Self {
            len,
            padded,
            forward,
            inverse,
            apply_kernel,
            adjoint_kernel,
        }
    }

    fn spectrum(fft: &dyn Fft<f64>, h: &[f64], padded: usize) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); padded];
        for (b, &v) in buf.iter_mut().zip(h) {
            b.re = v;
        }
        fft.process(&mut buf);
        buf
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    pub(crate) fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.convolve(&self.apply_kernel, x)
    }

    pub(crate) fn apply_adjoint(&self, u: &[f64]) -> Vec<f64> {
        self.convolve(&self.adjoint_kernel, u)
    }

    fn convolve(&self, kernel: &[Complex64], x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.len);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.padded];
        for (b, &v) in buf.iter_mut().zip(x) {
            b.re = v;
        }
        self.forward.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(kernel) {
            *b *= k;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.padded as f64;
        // linear convolution has length 2L-1; fold the tail onto the head
        let mut out: Vec<f64> = buf[..self.len].iter().map(|c| c.re * scale).collect();
        for k in 0..self.len - 1 {
            out[k] += buf[k + self.len].re * scale;
        }
        out
    }
}
