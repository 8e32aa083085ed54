//! The smooth cutoff `θ = sin ∘ A`, where `A` is the normalized antiderivative of the
//! flat bump `a(x) = exp(-(1-x)^{-m}) · exp(-(1+x)^{-m})` on (-1, 1).
//!
//! `θ` vanishes on (-∞, -1], equals one on [1, ∞), and satisfies
//! `θ²(x) + θ²(-x) = 1`. The antiderivative is tabulated once on a dense grid and
//! evaluated by monotone cubic Hermite interpolation using the exact derivative `a`.

use std::f64::consts::{FRAC_PI_2, PI};

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::quadrature::integrate_adaptive;
use crate::sampled::{is_power_of_two, SampledFunction};

/// Number of cells of the antiderivative table on [-1, 1].
const CACHE_CELLS: usize = 4096;

/// Largest value of `a`, attained at the origin.
pub const BUMP_MAX: f64 = 0.135_335_283_236_612_7; // e^{-2}

/// `a(x)` for sharpness exponent `m`; zero outside (-1, 1).
pub fn bump(x: f64, m: u32) -> f64 {
    if x <= -1.0 || x >= 1.0 {
        return 0.0;
    }
    let m = m as i32;
    let e = (1.0 - x).powi(-m) + (1.0 + x).powi(-m);
    (-e).exp()
}

/// The cutoff for a fixed sharpness `m`, with its antiderivative table.
#[derive(Debug, Clone)]
pub struct CutoffSpec {
    m: u32,
    eta: f64,
    quad_tol: f64,
    norm_const: f64,
    table: Vec<f64>,
    slopes: Vec<f64>,
}

impl CutoffSpec {
    pub const DEFAULT_M: u32 = 4;
    pub const DEFAULT_QUAD_TOL: f64 = 1e-12;

    /// Cutoff with smoothness exponent `η = 1/m`.
    pub fn new(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(invalid("m must be at least 1"));
        }
        Self::with_params(m, 1.0 / m as f64, Self::DEFAULT_QUAD_TOL)
    }

    pub fn with_params(m: u32, eta: f64, quad_tol: f64) -> Result<Self> {
        if m == 0 {
            return Err(invalid("m must be at least 1"));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid(format!("eta must be positive, got {eta}")));
        }
        // The derivative bound exponent 1 + 1/m must not exceed 1 + η.
        if (m as f64) * eta < 1.0 - 1e-12 {
            return Err(invalid(format!("m = {m} is too small for eta = {eta}: need m ≥ 1/eta")));
        }
        if !(quad_tol > 0.0) {
            return Err(invalid("quad_tol must be positive"));
        }

        let h = 2.0 / CACHE_CELLS as f64;
        let cell_tol = quad_tol / CACHE_CELLS as f64;
        let mut cumulative = Vec::with_capacity(CACHE_CELLS + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for i in 0..CACHE_CELLS {
            let lo = -1.0 + i as f64 * h;
            let hi = if i + 1 == CACHE_CELLS { 1.0 } else { lo + h };
            acc += integrate_adaptive(|y| bump(y, m), lo, hi, cell_tol)?;
            cumulative.push(acc);
        }
        let norm_const = acc;
        let upper = 2.0 * BUMP_MAX;
        if !(norm_const > 0.0 && norm_const <= upper) {
            return Err(invalid(format!(
                "normalization integral {norm_const} outside (0, {upper}]"
            )));
        }
        let scale = FRAC_PI_2 / norm_const;
        let table: Vec<f64> = cumulative.iter().map(|c| c * scale).collect();
        let mut slopes: Vec<f64> = (0..=CACHE_CELLS)
            .map(|i| scale * bump(-1.0 + i as f64 * h, m))
            .collect();
        limit_slopes(&table, &mut slopes, h);

        Ok(Self {
            m,
            eta,
            quad_tol,
            norm_const,
            table,
            slopes,
        })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    /// `∫ a`.
    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    /// `π / (2 ∫ a)`, the factor turning `∫_{-∞}^x a` into `A(x)`.
    pub fn scale(&self) -> f64 {
        FRAC_PI_2 / self.norm_const
    }

    pub fn eval_a(&self, x: f64) -> f64 {
        bump(x, self.m)
    }

    /// Lipschitz constant of `A`.
    pub fn antiderivative_lipschitz(&self) -> f64 {
        self.scale() * BUMP_MAX
    }

    /// `A(x)` from the table.
    pub fn eval_antiderivative(&self, x: f64) -> f64 {
        if x <= -1.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return FRAC_PI_2;
        }
        let h = 2.0 / CACHE_CELLS as f64;
        let t = (x + 1.0) / h;
        let i = (t.floor() as usize).min(CACHE_CELLS - 1);
        let s = t - i as f64;
        let (y0, y1) = (self.table[i], self.table[i + 1]);
        let (d0, d1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * d1;
        v.clamp(y0.min(y1), y0.max(y1))
    }

    /// `A(x)` by direct adaptive quadrature, bypassing the table.
    pub fn antiderivative_direct(&self, x: f64) -> Result<f64> {
        if x <= -1.0 {
            return Ok(0.0);
        }
        let hi = x.min(1.0);
        let v = integrate_adaptive(|y| self.eval_a(y), -1.0, hi, self.quad_tol)?;
        Ok(self.scale() * v)
    }

    pub fn eval_theta(&self, x: f64) -> f64 {
        if x <= -1.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            self.eval_antiderivative(x).sin()
        }
    }

    /// `θ'(x) = cos(A(x)) · A'(x)`.
    pub fn eval_theta_derivative(&self, x: f64) -> f64 {
        if x <= -1.0 || x >= 1.0 {
            return 0.0;
        }
        self.eval_antiderivative(x).cos() * self.scale() * self.eval_a(x)
    }

    /// Compactly supported plateau `θ(x + 2) · θ(2 − x)`: zero outside [-3, 3], one on [-1, 1].
    pub fn eval_plateau(&self, x: f64) -> f64 {
        self.eval_theta(x + 2.0) * self.eval_theta(2.0 - x)
    }

    pub fn verify_partition_of_unity(&self, grid: &[f64], tol: f64) -> PartitionOfUnityReport {
        let mut worst = 0.0f64;
        let mut worst_x = f64::NAN;
        for &x in grid {
            let a = self.eval_theta(x);
            let b = self.eval_theta(-x);
            let dev = (a * a + b * b - 1.0).abs();
            if dev > worst || worst_x.is_nan() {
                worst = worst.max(dev);
                worst_x = x;
            }
        }
        PartitionOfUnityReport {
            max_deviation: worst,
            worst_x,
            tol,
            pass: worst <= tol,
        }
    }

    /// Stretched-exponential fit `A·exp(−a·|ξ|^p)` to the spectrum of [`Self::eval_plateau`].
    pub fn estimate_fourier_decay(&self, grid_pts: usize, pad_factor: usize) -> Result<DecayFit> {
        fit_fourier_decay(|x| self.eval_plateau(x), 3.0, grid_pts, pad_factor)
    }

    /// Spectral estimates of `max |Dᵏθ|` for `k = 0..=k_max`, with the smallest `C`
    /// such that `max |Dᵏθ| ≤ Cᵏ · k^{(1+η)k}`.
    pub fn verify_derivative_growth(&self, k_max: usize) -> Result<DerivativeGrowthReport> {
        if k_max > 10 {
            return Err(invalid(format!("k_max = {k_max} exceeds 10")));
        }
        let coarse = self.spectral_derivative_maxima(k_max, 1 << 12)?;
        let fine = self.spectral_derivative_maxima(k_max, 1 << 13)?;
        for k in 1..=k_max {
            let rel = (coarse[k] - fine[k]).abs() / fine[k].max(f64::MIN_POSITIVE);
            if rel > 0.1 {
                return Err(Error::Instability(format!(
                    "order {k}: {} vs {} under grid refinement",
                    coarse[k], fine[k]
                )));
            }
        }
        let exponent = 1.0 + self.eta;
        let per_order: Vec<f64> = fine
            .iter()
            .enumerate()
            .map(|(k, &mk)| {
                if k == 0 {
                    1.0
                } else {
                    let kf = k as f64;
                    (mk / kf.powf(exponent * kf)).powf(1.0 / kf)
                }
            })
            .collect();
        let constant = per_order.iter().cloned().fold(1.0, f64::max);
        Ok(DerivativeGrowthReport {
            max_abs_derivative: fine,
            constant_per_order: per_order,
            constant,
            lemma_scale: 16.0 * self.m as f64,
            within_lemma_scale: constant <= 16.0 * self.m as f64,
        })
    }

    fn spectral_derivative_maxima(&self, k_max: usize, n: usize) -> Result<Vec<f64>> {
        // θ' lives on [-1, 1]; sample it on the periodic window [-2, 2).
        let period = 4.0;
        let h = period / n as f64;
        let mut spectrum: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(self.eval_theta_derivative(-2.0 + i as f64 * h), 0.0))
            .collect();
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(n).process(&mut spectrum);
        let inverse = planner.plan_fft_inverse(n);

        // Discard the band where the coefficients have sunk into rounding noise.
        let mags: Vec<f64> = (0..=n / 2).map(|k| spectrum[k].norm()).collect();
        let peak = mags.iter().cloned().fold(0.0, f64::max);
        let floor = 1e-13 * peak;
        let mut cutoff = n / 2;
        let mut running = 0.0f64;
        for k in (0..=n / 2).rev() {
            running = running.max(mags[k]);
            if running > floor {
                cutoff = k;
                break;
            }
        }

        let mut maxima = vec![1.0; k_max + 1];
        for k in 1..=k_max {
            let order = (k - 1) as i32;
            let mut buf: Vec<Complex64> = (0..n)
                .map(|i| {
                    let signed = if i <= n / 2 { i as i64 } else { i as i64 - n as i64 };
                    if signed.unsigned_abs() as usize > cutoff || (n % 2 == 0 && i == n / 2 && order % 2 == 1) {
                        return Complex64::new(0.0, 0.0);
                    }
                    let w = 2.0 * PI * signed as f64 / period;
                    spectrum[i] * Complex64::new(0.0, w).powi(order)
                })
                .collect();
            inverse.process(&mut buf);
            maxima[k] = buf.iter().map(|c| c.re.abs() / n as f64).fold(0.0, f64::max);
        }
        maxima[0] = (0..n)
            .map(|i| self.eval_theta(-2.0 + i as f64 * h).abs())
            .fold(0.0, f64::max);
        Ok(maxima)
    }
}

/// Fritsch–Carlson limiter applied to exact derivatives so each cell stays monotone.
fn limit_slopes(values: &[f64], slopes: &mut [f64], h: f64) {
    for i in 0..values.len() - 1 {
        let delta = (values[i + 1] - values[i]) / h;
        if delta <= 0.0 {
            slopes[i] = 0.0;
            slopes[i + 1] = 0.0;
            continue;
        }
        let alpha = slopes[i] / delta;
        let beta = slopes[i + 1] / delta;
        let r = alpha * alpha + beta * beta;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            slopes[i] = tau * alpha * delta;
            slopes[i + 1] = tau * beta * delta;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionOfUnityReport {
    pub max_deviation: f64,
    pub worst_x: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeGrowthReport {
    /// `max |Dᵏθ|`, index k.
    pub max_abs_derivative: Vec<f64>,
    pub constant_per_order: Vec<f64>,
    pub constant: f64,
    /// `16m`, the scale suggested by the bump's own derivative bound.
    pub lemma_scale: f64,
    pub within_lemma_scale: bool,
}

/// Fitted envelope `amplitude · exp(−rate · |ξ|^exponent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub amplitude: f64,
    pub rate: f64,
    pub exponent: f64,
    /// Decades of magnitude spanned by the fitted samples, measured from the peak.
    pub decades: f64,
    pub usable_points: usize,
    pub noise_floor: f64,
    pub rms_residual: f64,
}

impl DecayFit {
    pub fn eval(&self, xi: f64) -> f64 {
        self.amplitude * (-self.rate * xi.abs().powf(self.exponent)).exp()
    }
}

/// Samples `f` (supported in `[-half_width, half_width]`) on a window `pad_factor` times
/// wider, transforms, and fits the decaying envelope of `|f̂|`.
pub fn fit_fourier_decay<F: Fn(f64) -> f64>(
    f: F,
    half_width: f64,
    grid_pts: usize,
    pad_factor: usize,
) -> Result<DecayFit> {
    if !is_power_of_two(grid_pts) || grid_pts < (1 << 12) {
        return Err(invalid(format!("grid_pts = {grid_pts} must be a power of two ≥ 4096")));
    }
    if pad_factor < 4 {
        return Err(invalid(format!("pad_factor = {pad_factor} must be at least 4")));
    }
    let period = 2.0 * half_width * pad_factor as f64;
    let h = period / grid_pts as f64;
    let samples = SampledFunction::from_fn(-0.5 * period, h, grid_pts, f);
    let mut buf: Vec<Complex64> = samples
        .values
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    FftPlanner::new()
        .plan_fft_forward(grid_pts)
        .process(&mut buf);
    let mags: Vec<f64> = (0..=grid_pts / 2).map(|k| buf[k].norm() * h).collect();
    let xis: Vec<f64> = (0..=grid_pts / 2).map(|k| k as f64 / period).collect();
    fit_stretched_exponential(&xis, &mags)
}

/// Fits `log|F(ξ)| ≈ log A − a·ξ^p` on the upper envelope of `mags`, restricted to
/// magnitudes in `[10·noise, 10⁻²·peak]`. `xis` must be non-negative and ascending.
pub fn fit_stretched_exponential(xis: &[f64], mags: &[f64]) -> Result<DecayFit> {
    assert_eq!(xis.len(), mags.len());
    let n = mags.len();
    if n < 32 {
        return Err(Error::FitFailure(format!("only {n} spectral samples")));
    }
    let peak = mags.iter().cloned().fold(0.0, f64::max);
    let mut tail: Vec<f64> = mags[n - n / 4..].to_vec();
    tail.sort_by(f64::total_cmp);
    let noise_floor = tail[tail.len() / 2].max(f64::MIN_POSITIVE);

    // Record-setting samples scanning from the highest frequency down form the
    // decreasing envelope; zeros of an oscillating transform never qualify.
    // Only the band before the spectrum first sinks into the noise is used, so
    // isolated noise spikes at high frequency cannot enter the fit.
    let signal_end = mags
        .iter()
        .position(|&m| m < 10.0 * noise_floor)
        .unwrap_or(n);
    let mut envelope = Vec::new();
    let mut running = 0.0f64;
    for i in (0..signal_end).rev() {
        if mags[i] > running {
            running = mags[i];
            envelope.push((xis[i], mags[i]));
        }
    }
    envelope.reverse();
    let usable: Vec<(f64, f64)> = envelope
        .into_iter()
        .filter(|&(xi, m)| xi > 0.0 && m <= 1e-2 * peak && m >= 10.0 * noise_floor)
        .collect();
    if usable.len() < 16 {
        return Err(Error::FitFailure(format!(
            "{} usable samples above the noise floor {noise_floor:e}",
            usable.len()
        )));
    }

    let ys: Vec<f64> = usable.iter().map(|&(_, m)| m.ln()).collect();
    let fit_at = |p: f64| -> (f64, f64, f64) {
        let zs: Vec<f64> = usable.iter().map(|&(xi, _)| xi.powf(p)).collect();
        let k = zs.len() as f64;
        let mz = zs.iter().sum::<f64>() / k;
        let my = ys.iter().sum::<f64>() / k;
        let szz: f64 = zs.iter().map(|z| (z - mz) * (z - mz)).sum();
        let szy: f64 = zs.iter().zip(&ys).map(|(z, y)| (z - mz) * (y - my)).sum();
        let slope = szy / szz;
        let intercept = my - slope * mz;
        let rss: f64 = zs
            .iter()
            .zip(&ys)
            .map(|(z, y)| {
                let r = y - intercept - slope * z;
                r * r
            })
            .sum();
        (rss, intercept, -slope)
    };

    let mut best_p = 0.05;
    let mut best_rss = f64::INFINITY;
    let mut p = 0.05;
    while p <= 4.0 + 1e-12 {
        let (rss, _, _) = fit_at(p);
        if rss < best_rss {
            best_rss = rss;
            best_p = p;
        }
        p += 0.01;
    }
    // golden-section refinement inside the bracketing grid cell
    let (mut lo, mut hi) = ((best_p - 0.01).max(0.05), (best_p + 0.01).min(4.0));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if fit_at(x1).0 < fit_at(x2).0 {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let exponent = 0.5 * (lo + hi);
    let (rss, intercept, rate) = fit_at(exponent);
    let min_used = usable.iter().map(|&(_, m)| m).fold(f64::INFINITY, f64::min);
    Ok(DecayFit {
        amplitude: intercept.exp(),
        rate,
        exponent,
        decades: (peak / min_used).log10(),
        usable_points: usable.len(),
        noise_floor,
        rms_residual: (rss / usable.len() as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, FRAC_1_SQRT_2};

    fn spec(m: u32) -> CutoffSpec {
        CutoffSpec::new(m).unwrap()
    }

    #[test]
    fn bump_values() {
        assert!((bump(0.0, 1) - E.powi(-2)).abs() < 1e-16);
        assert_eq!(bump(1.0, 3), 0.0);
        assert_eq!(bump(-1.0, 3), 0.0);
        assert!((bump(0.5, 1) - (-8.0f64 / 3.0).exp()).abs() < 1e-16);
        assert_eq!(bump(0.999_999, 4), 0.0); // underflow flushes to zero
    }

    #[test]
    fn antiderivative_endpoints_and_midpoint() {
        for m in [1, 2, 4] {
            let c = spec(m);
            assert_eq!(c.eval_antiderivative(-1.0), 0.0);
            assert_eq!(c.eval_antiderivative(1.0), FRAC_PI_2);
            assert!((c.eval_antiderivative(0.0) - PI / 4.0).abs() < 1e-13);
        }
    }

    #[test]
    fn table_agrees_with_direct_quadrature() {
        let c = spec(2);
        for i in 0..=40 {
            let x = -1.0 + i as f64 * 0.05;
            let direct = c.antiderivative_direct(x).unwrap();
            assert!((c.eval_antiderivative(x) - direct).abs() < 1e-11, "x = {x}");
        }
    }

    #[test]
    fn theta_examples() {
        let c = spec(4);
        assert!((c.eval_theta(0.0) - FRAC_1_SQRT_2).abs() < 1e-13);
        assert_eq!(c.eval_theta(-2.0), 0.0);
        assert_eq!(c.eval_theta(1.5), 1.0);
        let c2 = spec(2);
        let (t2, t3) = (c2.eval_theta(0.2), c2.eval_theta(0.3));
        assert!(t3 > t2 && t3 < 1.0 && t2 > 0.0);
    }

    #[test]
    fn norm_const_below_twice_bump_max() {
        // ∫a ≤ 2·max a = 2e⁻²; reference values from independent adaptive quadrature
        for (m, want) in [(1, 0.133_086_120_844_993_16), (2, 0.084_389_600_748_097_4), (4, 0.048_540_152_895_101_45)] {
            let c = spec(m);
            assert!((c.norm_const() - want).abs() < 1e-12, "m = {m}: {}", c.norm_const());
        }
    }

    #[test]
    fn m_must_dominate_inverse_eta() {
        assert!(CutoffSpec::with_params(4, 0.25, 1e-12).is_ok());
        assert!(CutoffSpec::with_params(3, 0.25, 1e-12).is_err());
        assert!(CutoffSpec::new(0).is_err());
    }

    #[test]
    fn partition_of_unity_examples() {
        let c = spec(4);
        let r = c.verify_partition_of_unity(&[0.0], 1e-12);
        assert!(r.pass, "{r:?}");
        let r = c.verify_partition_of_unity(&[-3.0, 3.0], 0.0);
        assert_eq!(r.max_deviation, 0.0);
        assert!(r.pass);
        let grid: Vec<f64> = (0..=2000).map(|i| -1.0 + i as f64 * 1e-3).collect();
        assert!(c.verify_partition_of_unity(&grid, 1e-9).pass);
    }

    #[test]
    fn gaussian_decay_exponent_is_two() {
        let fit = fit_fourier_decay(|x| (-PI * x * x).exp(), 6.0, 1 << 12, 4).unwrap();
        assert!((fit.exponent - 2.0).abs() < 0.05, "{fit:?}");
        assert!((fit.rate - PI).abs() < 0.2, "{fit:?}");
    }

    #[test]
    fn decay_fit_rejects_bad_grids() {
        let c = spec(4);
        assert!(c.estimate_fourier_decay(1000, 4).is_err());
        assert!(c.estimate_fourier_decay(1 << 12, 2).is_err());
    }

    #[test]
    fn derivative_growth_rejects_large_orders() {
        assert!(spec(2).verify_derivative_growth(11).is_err());
    }
}
