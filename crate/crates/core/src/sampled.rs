//! Uniformly sampled functions and their discrete spectra.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

/// Real samples `values[n] = f(x0 + n·h)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledFunction {
    pub x0: f64,
    pub h: f64,
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn from_fn<F: Fn(f64) -> f64>(x0: f64, h: f64, len: usize, f: F) -> Self {
        let values = (0..len).map(|n| f(x0 + n as f64 * h)).collect();
        Self { x0, h, values }
    }

    pub fn zeros(x0: f64, h: f64, len: usize) -> Self {
        Self {
            x0,
            h,
            values: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, n: usize) -> f64 {
        self.x0 + n as f64 * self.h
    }

    pub fn x_end(&self) -> f64 {
        self.x(self.len().saturating_sub(1))
    }

    /// Trapezoid/Riemann inner product, spectrally accurate for smooth compactly supported data.
    pub fn dot(&self, other: &SampledFunction) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.h * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Complex samples on a frequency axis `xi0 + n·dxi` (cycles per unit length).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSpectrum {
    pub xi0: f64,
    pub dxi: f64,
    pub values: Vec<Complex64>,
}

impl SampledSpectrum {
    pub fn xi(&self, n: usize) -> f64 {
        self.xi0 + n as f64 * self.dxi
    }

    /// Σ |F|² Δξ.
    pub fn energy(&self) -> f64 {
        self.dxi * self.values.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

/// Signed frequency of DFT bin `k` for `n` samples with spacing `h`.
pub fn bin_frequency(k: usize, n: usize, h: f64) -> f64 {
    let signed = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    signed / (n as f64 * h)
}

/// Continuous Fourier transform `∫ f(x) e^{-2πixξ} dx` estimated from samples by
/// zero padding to `padded_len` and a forward DFT; returned centred (ξ ascending).
pub fn centred_spectrum(f: &SampledFunction, padded_len: usize) -> SampledSpectrum {
    assert!(padded_len >= f.len());
    let mut buf: Vec<Complex64> = f
        .values
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(padded_len)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(padded_len).process(&mut buf);
    let n = padded_len;
    let dxi = 1.0 / (n as f64 * f.h);
    let half = n / 2;
    let values = (0..n)
        .map(|i| {
            let k = (i + half) % n;
            let xi = bin_frequency(k, n, f.h);
            // shift phase so x0 maps to the physical origin
            let phase = -2.0 * std::f64::consts::PI * xi * f.x0;
            buf[k] * f.h * Complex64::from_polar(1.0, phase)
        })
        .collect();
    SampledSpectrum {
        xi0: -(half as f64) * dxi,
        dxi,
        values,
    }
}
