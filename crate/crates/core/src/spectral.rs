//! Discretization of `T = R_I P_J R_I` with `J = [-1/2, 1/2]`, `I = [-D/2, D/2]`.
//!
//! The integral form `(Tf)(x) = ∫_I sinc(x − y) f(y) dy` is discretized by Nyström's
//! method on Gauss–Legendre nodes; sampled functions are acted on through the FFT.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::quadrature::GaussLegendre;
use crate::sampled::{bin_frequency, is_power_of_two, SampledFunction};

/// `sin(π(x − y)) / (π(x − y))`, equal to one on the diagonal.
pub fn sinc_kernel(x: f64, y: f64) -> f64 {
    sinc(x - y)
}

pub fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        let a = PI * t;
        a.sin() / a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatorConfig {
    pub d: f64,
    pub quad_order: usize,
    pub grid_rate: f64,
}

/// Padding on each side of `I` for FFT application.
pub const APPLY_PADDING: f64 = 8.0;

impl OperatorConfig {
    pub fn new(d: f64, quad_order: usize, grid_rate: f64) -> Result<Self> {
        let c = Self {
            d,
            quad_order,
            grid_rate,
        };
        c.validate()?;
        Ok(c)
    }

    /// `quad_order = 16·D + 64`, `grid_rate = 32`.
    pub fn with_defaults(d: f64) -> Result<Self> {
        Self::new(d, Self::default_quad_order(d), 32.0)
    }

    pub fn default_quad_order(d: f64) -> usize {
        (16.0 * d).ceil() as usize + 64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d >= 2.0 && self.d.is_finite()) {
            return Err(invalid(format!("D = {} must be at least 2", self.d)));
        }
        if (self.quad_order as f64) < 8.0 * self.d {
            return Err(invalid(format!(
                "quad_order = {} must be at least 8·D = {}",
                self.quad_order,
                8.0 * self.d
            )));
        }
        if !(self.grid_rate >= 16.0 && self.grid_rate.is_finite()) {
            return Err(invalid(format!("grid_rate = {} must be at least 16", self.grid_rate)));
        }
        Ok(())
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.d
    }

    /// Zero function on a power-of-two grid of spacing `1/grid_rate` covering
    /// `[-D/2 - 8, D/2 + 8]`.
    pub fn grid(&self) -> SampledFunction {
        let h = 1.0 / self.grid_rate;
        let x0 = -self.half_width() - APPLY_PADDING;
        let needed = ((self.d + 2.0 * APPLY_PADDING) / h).ceil() as usize + 1;
        SampledFunction::zeros(x0, h, needed.next_power_of_two())
    }

    /// Gauss–Legendre nodes and weights on `I`.
    pub fn nodes(&self) -> (Vec<f64>, Vec<f64>) {
        let gl = GaussLegendre::new(self.quad_order);
        gl.mapped(-self.half_width(), self.half_width()).unzip()
    }
}

/// The symmetrized Nyström matrix `W^{1/2} K W^{1/2}`.
pub fn build_nystrom(config: &OperatorConfig) -> Result<DMatrix<f64>> {
    config.validate()?;
    let (x, w) = config.nodes();
    let root: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let n = x.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|a| {
            (0..n)
                .map(|b| root[a] * sinc_kernel(x[a], x[b]) * root[b])
                .collect()
        })
        .collect();
    Ok(DMatrix::from_fn(n, n, |a, b| {
        if a <= b {
            rows[a][b]
        } else {
            rows[b][a]
        }
    }))
}

/// Eigenvalues in non-increasing order with trace data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub lambdas: Vec<f64>,
    pub d: f64,
    pub quad_order: usize,
    pub trace: f64,
    pub trace_sq: f64,
}

/// Eigenvalues below this are solver noise.
pub const EIGEN_NOISE: f64 = 1e-13;

/// Eigenvalues within this distance of a band edge count as outside the band.
pub const BAND_EDGE_TOL: f64 = 1e-12;

impl Spectrum {
    /// Spectrum from given values (sorted here); traces are taken from the values.
    pub fn from_values(d: f64, mut lambdas: Vec<f64>) -> Self {
        lambdas.sort_by(|a, b| b.total_cmp(a));
        let trace = lambdas.iter().sum();
        let trace_sq = lambdas.iter().map(|l| l * l).sum();
        Self {
            lambdas,
            d,
            quad_order: 0,
            trace,
            trace_sq,
        }
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// 1-based indices `k` with `λ_k ∈ (ε, 1 − ε)`.
    pub fn band_indices(&self, epsilon: f64) -> Vec<usize> {
        self.lambdas
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > epsilon + BAND_EDGE_TOL && l < 1.0 - epsilon - BAND_EDGE_TOL)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// `#{k : λ_k ∈ (ε, 1 − ε)}`.
    pub fn count_in_band(&self, epsilon: f64) -> usize {
        self.band_indices(epsilon).len()
    }

    /// Number of eigenvalues at least 1/2.
    pub fn half_crossing(&self) -> usize {
        self.lambdas.iter().filter(|&&l| l >= 0.5).count()
    }

    pub fn max_lambda(&self) -> f64 {
        self.lambdas.first().copied().unwrap_or(0.0)
    }

    pub fn min_lambda(&self) -> f64 {
        self.lambdas.last().copied().unwrap_or(0.0)
    }
}

/// Eigenpairs of the Nyström matrix with the nodes needed to interpolate eigenfunctions.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub spectrum: Spectrum,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Column `i` belongs to `spectrum.lambdas[i]`.
    pub vectors: DMatrix<f64>,
}

impl Eigensystem {
    /// Nyström interpolant `f(x) = λ⁻¹ Σ_b w_b K(x, x_b) f(x_b)` of eigenfunction `i`,
    /// normalized in `L²(I)`.
    pub fn eigenfunction(&self, i: usize, x: f64) -> f64 {
        let lambda = self.spectrum.lambdas[i];
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .enumerate()
            .map(|(b, (&xb, &wb))| wb.sqrt() * sinc_kernel(x, xb) * self.vectors[(b, i)])
            .sum();
        s / lambda
    }
}

fn check_matrix(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// Traces are sums over the computed eigenvalues, not over matrix entries.
fn spectrum_from(config: &OperatorConfig, values: &[f64]) -> Result<Spectrum> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure("non-finite eigenvalue".into()));
    }
    let mut s = Spectrum::from_values(config.d, values.to_vec());
    s.quad_order = config.quad_order;
    Ok(s)
}

pub fn eigen_spectrum(config: &OperatorConfig) -> Result<Spectrum> {
    let m = build_nystrom(config)?;
    check_matrix(&m)?;
    let values = m.clone().symmetric_eigenvalues();
    spectrum_from(config, values.as_slice())
}

pub fn eigensystem(config: &OperatorConfig) -> Result<Eigensystem> {
    let m = build_nystrom(config)?;
    check_matrix(&m)?;
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    let spectrum = spectrum_from(config, &values)?;
    let (nodes, weights) = config.nodes();
    Ok(Eigensystem {
        spectrum,
        nodes,
        weights,
        vectors,
    })
}

/// `R_I P_J R_I f` on the sample grid of `f`.
///
/// Bins with `|ξ| < 1/2` keep weight one, bins at exactly `±1/2` get one half.
pub fn apply_t(f: &SampledFunction, config: &OperatorConfig) -> Result<SampledFunction> {
    let n = f.len();
    if !is_power_of_two(n) {
        return Err(invalid(format!("grid length {n} must be a power of two")));
    }
    if f.h > 1.0 / 16.0 {
        return Err(Error::GridTooCoarse(format!(
            "spacing {} exceeds 1/16",
            f.h
        )));
    }
    let half = config.half_width();
    if f.x0 > -half || f.x_end() < half {
        return Err(invalid(format!(
            "grid [{}, {}] does not cover I = [-{half}, {half}]",
            f.x0,
            f.x_end()
        )));
    }
    let inside = |x: f64| x.abs() <= half * (1.0 + 1e-15);
    let mut buf: Vec<Complex64> = (0..n)
        .map(|i| {
            let v = if inside(f.x(i)) { f.values[i] } else { 0.0 };
            Complex64::new(v, 0.0)
        })
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let xi = bin_frequency(k, n, f.h).abs();
        let weight = if (xi - 0.5).abs() <= 1e-12 {
            0.5
        } else if xi < 0.5 {
            1.0
        } else {
            0.0
        };
        *c *= weight;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    let values = (0..n)
        .map(|i| if inside(f.x(i)) { buf[i].re * scale } else { 0.0 })
        .collect();
    Ok(SampledFunction {
        x0: f.x0,
        h: f.h,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `λ_⌊D⌋ ≥ 1/2 ≥ λ_⌈D⌉+1` (1-based, non-increasing); for integer `D` this is
    /// `λ_D ≥ 1/2 ≥ λ_D+1`.
    Classical,
    /// `λ_[D]−1 ≤ 1/2 ≤ λ_[D]`, read literally on the non-increasing sequence.
    Literal,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandauReport {
    pub d: f64,
    pub floor_d: usize,
    /// Number of eigenvalues at least 1/2.
    pub crossing: usize,
    /// 1-based index of the eigenvalue closest to 1/2.
    pub nearest_index: usize,
    pub orientation: Orientation,
    pub pass: bool,
}

/// Locates the crossing of 1/2 relative to `[D]`.
///
/// Passes when either orientation holds.
pub fn landau_check(spec: &Spectrum) -> LandauReport {
    let floor_d = spec.d.floor() as usize;
    let ceil_d = spec.d.ceil() as usize;
    let lam = |k: usize| -> f64 {
        // 1-based; λ_0 = +∞ and values past the end are zero
        if k == 0 {
            f64::INFINITY
        } else {
            spec.lambdas.get(k - 1).copied().unwrap_or(0.0)
        }
    };
    let crossing = spec.half_crossing();
    let classical = lam(floor_d) >= 0.5 && 0.5 >= lam(ceil_d + 1);
    let literal = floor_d >= 1 && lam(floor_d - 1) <= 0.5 && 0.5 <= lam(floor_d);
    let orientation = if classical {
        Orientation::Classical
    } else if literal {
        Orientation::Literal
    } else {
        Orientation::Neither
    };
    let nearest_index = spec
        .lambdas
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - 0.5).abs().total_cmp(&(b.1 - 0.5).abs()))
        .map(|(i, _)| i + 1)
        .unwrap_or(0);
    LandauReport {
        d: spec.d,
        floor_d,
        crossing,
        nearest_index,
        orientation,
        pass: classical || literal,
    }
}

/// Samples of `f` on `grid`'s points (used to load functions for [`apply_t`]).
pub fn sample_on<F: Fn(f64) -> f64>(grid: &SampledFunction, f: F) -> SampledFunction {
    SampledFunction::from_fn(grid.x0, grid.h, grid.len(), f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_2_PI;

    #[test]
    fn sinc_examples() {
        assert_eq!(sinc_kernel(0.3, 0.3), 1.0);
        assert!(sinc_kernel(0.0, 1.0).abs() < 1e-16);
        assert!((sinc_kernel(0.0, 0.5) - FRAC_2_PI).abs() < 1e-16);
    }

    #[test]
    fn config_validation() {
        assert!(OperatorConfig::new(1.0, 64, 32.0).is_err());
        assert!(OperatorConfig::new(8.0, 63, 32.0).is_err());
        assert!(OperatorConfig::new(8.0, 64, 8.0).is_err());
        assert!(OperatorConfig::new(8.0, 64, 16.0).is_ok());
    }

    #[test]
    fn nystrom_matrix_is_symmetric_with_trace_d() {
        let c = OperatorConfig::new(4.0, 96, 32.0).unwrap();
        let m = build_nystrom(&c).unwrap();
        assert_eq!((&m - m.transpose()).amax(), 0.0);
        assert!((m.trace() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn band_counting_uses_open_interval() {
        let s = Spectrum::from_values(2.0, vec![1.0, 0.9, 0.5, 0.1 + 1e-13, 0.05]);
        assert_eq!(s.band_indices(0.1), vec![3]);
        assert_eq!(s.lambdas[0], 1.0);
    }

    #[test]
    fn degenerate_spectrum_passes_landau() {
        let r = landau_check(&Spectrum::from_values(2.0, vec![1.0, 0.5, 0.0]));
        assert!(r.pass);
        assert_eq!(r.orientation, Orientation::Classical);
        assert_eq!(r.crossing, 2);
    }

    #[test]
    fn misplaced_crossing_fails_landau() {
        let r = landau_check(&Spectrum::from_values(4.0, vec![1.0, 0.9, 0.4, 0.3, 0.1]));
        assert!(!r.pass);
        assert_eq!(r.orientation, Orientation::Neither);
    }

    #[test]
    fn apply_t_kills_functions_outside_i() {
        let c = OperatorConfig::new(4.0, 64, 32.0).unwrap();
        let g = c.grid();
        let f = sample_on(&g, |x| if x.abs() > 2.5 { (3.0 * x).sin() } else { 0.0 });
        let t = apply_t(&f, &c).unwrap();
        assert_eq!(t.max_abs(), 0.0);
    }

    #[test]
    fn apply_t_rejects_bad_grids() {
        let c = OperatorConfig::new(4.0, 64, 32.0).unwrap();
        let coarse = SampledFunction::zeros(-10.0, 0.1, 256);
        assert!(matches!(apply_t(&coarse, &c), Err(Error::GridTooCoarse(_))));
        let odd = SampledFunction::zeros(-10.0, 1.0 / 32.0, 700);
        assert!(apply_t(&odd, &c).is_err());
        let short = SampledFunction::zeros(-1.0, 1.0 / 32.0, 64);
        assert!(apply_t(&short, &c).is_err());
    }
}
