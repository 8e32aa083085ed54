//! Numeric constants for the parameter formulas, measured once and frozen.
//!
//! [`calibrate`] re-derives every value in [`CALIBRATED`]; bump [`Calibration::version`]
//! whenever the frozen numbers change.

use rayon::prelude::*;
use serde::Serialize;

use crate::cutoff::CutoffSpec;
use crate::error::Result;
use crate::localcosine::{frequency_center, frequency_count, normalization_constant, BasisAtom, BasisIndex, LocalCosineBasis, TransitionWidths, Window};
use crate::partition::{atom_band_energy, classify, FrequencyClass, GammaPartition, PartitionParams};
use crate::spectral::{eigen_spectrum, OperatorConfig};
use crate::whitney::WhitneyDecomposition;

/// Per-atom leakage law `E(u) ≤ amplitude · exp(−rate · u^exponent)`, where `u` is the
/// interval length times the distance from the frequency centre to the band edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyLaw {
    pub amplitude: f64,
    pub rate: f64,
    pub exponent: f64,
}

impl EnergyLaw {
    pub fn eval(&self, u: f64) -> f64 {
        self.amplitude * (-self.rate * u.max(0.0).powf(self.exponent)).exp()
    }

    /// `Σ_{n ≥ 0} E(u0 + n/2)`: the law summed over consecutive frequency indices.
    pub fn tail_sum(&self, u0: f64) -> f64 {
        let mut total = 0.0;
        let mut n = 0u64;
        loop {
            let term = self.eval(u0 + 0.5 * n as f64);
            total += term;
            if term <= 1e-18 * total || term == 0.0 || n > 50_000_000 {
                break;
            }
            n += 1;
        }
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub version: u32,
    /// Sharpness of the cutoff the constants were measured with.
    pub m: u32,
    pub energy: EnergyLaw,
    /// Edge-to-length ratio of the windows used to measure `energy`.
    pub edge_ratio: f64,
    /// `C_η`: in-band energy of intervals shorter than `δ` is at most `C_η · δ`.
    pub sliver_constant: f64,
    /// `A_η` in `s = A_η · (log(log(D)/ε))^{1/(1−η)}`.
    pub s_scale: f64,
    /// Constant in `K = A · (log(log(D)/ε))^{1+η} · log(D/ε)`.
    pub k_scale: f64,
    /// `#{j : δ_j ≥ δ} ≤ C · log(D/δ)`.
    pub whitney_count: f64,
    /// `#(Γ_med) ≤ C · s · log(D/δ_min)`.
    pub med_count: f64,
}

pub const CALIBRATED: Calibration = Calibration {
    version: 2,
    m: 4,
    energy: EnergyLaw {
        amplitude: 0.62,
        rate: 0.397,
        exponent: 0.75,
    },
    edge_ratio: 1.0 / 40.0,
    sliver_constant: 9.6,
    s_scale: 30.9,
    k_scale: 0.081,
    whitney_count: 2.57,
    med_count: 6.19,
};

/// Smallest `η/δ` produced by [`crate::localcosine::select_transition_widths`]: Whitney
/// neighbours differ by at most a factor 2 and share `min(δ)/20`.
pub const WORST_EDGE_RATIO: f64 = 1.0 / 40.0;

/// One measured leakage sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeakageSample {
    pub delta: f64,
    pub k: usize,
    pub margin: f64,
    pub energy: f64,
}

/// Energy outside `J` (centres inside) or inside `J` (centres outside) for atoms on
/// long intervals with edges `edge_ratio · δ`.
pub fn leakage_samples(cutoff: &CutoffSpec, edge_ratio: f64, deltas: &[f64], max_margin: f64) -> Result<Vec<LeakageSample>> {
    let mut jobs = Vec::new();
    for &delta in deltas {
        let kmax = ((2.0 * delta + 4.0 * max_margin - 1.0) / 2.0).floor() as usize;
        jobs.extend((0..=kmax).map(|k| (delta, k)));
    }
    jobs.par_iter()
        .map(|&(delta, k)| {
            let eta = edge_ratio * delta;
            let window = Window {
                x_j: -0.5 * delta,
                delta_j: delta,
                widths: TransitionWidths {
                    eta_left: eta,
                    eta_right: eta,
                },
            };
            let xi = frequency_center(delta, k);
            let c_jk = normalization_constant(cutoff, &window, k, (16.0 * xi).max(16.0))?;
            let atom = BasisAtom {
                index: BasisIndex { j: 0, k },
                window,
                c_jk,
                xi_jk: xi,
            };
            let e = atom_band_energy(cutoff, &atom);
            let energy = if xi < 0.5 { e.outside } else { e.inside };
            Ok(LeakageSample {
                delta,
                k,
                margin: delta * (xi - 0.5).abs(),
                energy,
            })
        })
        .collect()
}

/// Samples below this energy are dominated by cancellation in `total − inside`.
pub const LEAKAGE_FLOOR: f64 = 1e-12;

/// Least-squares fit of `log E` against `u^exponent` over samples with `u ≥ 1` above
/// the floor, with the intercept raised until the law dominates every sample used.
pub fn fit_energy_law(samples: &[LeakageSample], exponent: f64) -> Option<EnergyLaw> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|p| p.margin >= 1.0 && p.energy > LEAKAGE_FLOOR)
        .map(|p| (p.margin.powf(exponent), p.energy.ln()))
        .collect();
    if pts.len() < 4 {
        return None;
    }
    let n = pts.len() as f64;
    let mz = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let szz: f64 = pts.iter().map(|p| (p.0 - mz).powi(2)).sum();
    let szy: f64 = pts.iter().map(|p| (p.0 - mz) * (p.1 - my)).sum();
    let slope = szy / szz;
    let rate = -slope;
    if !(rate > 0.0) {
        return None;
    }
    let lift = pts
        .iter()
        .map(|&(z, y)| y + rate * z)
        .fold(f64::NEG_INFINITY, f64::max);
    Some(EnergyLaw {
        amplitude: lift.exp(),
        rate,
        exponent,
    })
}

/// Bound on `sliver(δ)/δ` for every `D` and `δ_stop = δ`.
///
/// The finest accepted cell has length `ℓ ∈ [δ, 2δ)`. An uncovered point lies in a cell of
/// length `ℓ` closer than `ℓ` to `∂I`, so each end leaves less than `2ℓ` uncovered.
pub const SLIVER_RATIO_BOUND: f64 = 8.0;

/// `C_η`: the sliver bound times the window overlap factor 1.2 (each window extends its
/// interval by at most `δ_j/10` on both sides).
pub const fn sliver_constant() -> f64 {
    1.2 * SLIVER_RATIO_BOUND
}

/// Largest `sliver(δ)/δ` over the given lengths and all `δ ≤ min(1/2, D/16)` down to 1e-6.
///
/// Interval lengths are powers of two, so every `δ ∈ (δ′/2, δ′]` yields the decomposition
/// at the dyadic `δ′`; the supremum over that range is `sliver(δ′)/(δ′/2)`.
pub fn measure_sliver_ratio(ds: &[f64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &d in ds {
        let mut delta = 2f64.powf(0.5f64.min(d / 16.0).log2().floor());
        while delta >= 1e-6 {
            let w = WhitneyDecomposition::decompose(d, delta)?;
            worst = worst.max(w.sliver_measure() / (0.5 * delta));
            delta *= 0.5;
        }
    }
    Ok(worst)
}

/// Largest `count_at_scale(δ)/log(D/δ)` for dyadic `δ` between `delta_stop` and `D/2`.
pub fn measure_whitney_count(d: f64, delta_stop: f64) -> Result<f64> {
    let w = WhitneyDecomposition::decompose(d, delta_stop)?;
    let mut worst = 0.0f64;
    let mut delta = delta_stop;
    while delta <= 0.5 * d {
        worst = worst.max(w.count_at_scale(delta)? as f64 / (d / delta).ln());
        delta *= 2.0;
    }
    Ok(worst)
}

/// Largest `#(Γ_med)/(s · log(D/δ_min))` over the given `s`.
pub fn measure_med_count(cutoff: &CutoffSpec, d: f64, delta_min: f64, ss: &[f64]) -> Result<f64> {
    let basis = LocalCosineBasis::build(cutoff.clone(), WhitneyDecomposition::decompose(d, delta_min)?, LocalCosineBasis::DEFAULT_XI_MAX)?;
    let mut worst = 0.0f64;
    for &s in ss {
        let p = PartitionParams::new(s, delta_min, 0.1, cutoff.eta().min(0.5))?;
        let g = GammaPartition::build(&basis, p);
        worst = worst.max(g.med.len() as f64 / (s * (d / delta_min).ln()));
    }
    Ok(worst)
}

/// `log(log(D)/ε)`, the common factor of the parameter formulas.
pub fn loglog_factor(d: f64, epsilon: f64) -> f64 {
    (d.ln() / epsilon).ln()
}

/// Bound on `Σ_{low} E_out + Σ_{high} E_in` over every index of the decomposition with
/// `δ_j ≥ δ_min`, as a function of `s`: measured energies for constructed atoms and
/// the law for unconstructed high indices.
pub struct EnergyBudget {
    /// (delta, k, measured energy) for every constructed atom on an interval `≥ δ_min`.
    atoms: Vec<(f64, usize, f64)>,
    /// (delta, first unconstructed k) per interval.
    frontiers: Vec<(f64, usize)>,
    law: EnergyLaw,
    delta_min: f64,
}

impl EnergyBudget {
    pub fn measure(basis: &LocalCosineBasis, delta_min: f64, law: EnergyLaw) -> Self {
        let atoms = basis
            .atoms
            .par_iter()
            .filter(|a| a.delta() >= delta_min)
            .map(|a| {
                let e = atom_band_energy(&basis.cutoff, a);
                let energy = if a.xi_jk < 0.5 { e.outside } else { e.inside };
                (a.delta(), a.index.k, energy)
            })
            .collect();
        let frontiers = basis
            .decomposition
            .intervals
            .iter()
            .filter(|iv| iv.delta_j >= delta_min)
            .map(|iv| (iv.delta_j, frequency_count(iv.delta_j, basis.xi_max)))
            .collect();
        Self {
            atoms,
            frontiers,
            law,
            delta_min,
        }
    }

    /// (measured part, law tail) at margin parameter `s`.
    pub fn at(&self, s: f64) -> (f64, f64) {
        let p = PartitionParams {
            s,
            delta_min: self.delta_min,
            epsilon: 0.25,
            eta: 0.25,
        };
        let measured = self
            .atoms
            .iter()
            .filter(|&&(d, k, _)| classify(d, k, &p) != FrequencyClass::Med)
            .map(|&(_, _, e)| e)
            .sum();
        let tail = self
            .frontiers
            .iter()
            .map(|&(d, k0)| high_tail(&self.law, d, k0, s))
            .sum();
        (measured, tail)
    }
}

/// Law bound for high indices `k ≥ k0` on an interval of length `delta`.
pub fn high_tail(law: &EnergyLaw, delta: f64, k0: usize, s: f64) -> f64 {
    // margin of index k is (2k+1)/4 − δ/2; high indices have margin ≥ s
    let first_high = (((2.0 * delta + 4.0 * s - 1.0) / 2.0).ceil().max(0.0)) as usize;
    let k = k0.max(first_high);
    let u0 = (2 * k + 1) as f64 / 4.0 - 0.5 * delta;
    law.tail_sum(u0)
}

/// Smallest `s` on a geometric grid (ratio 1.01) whose budget is at most `target`.
pub fn required_s(budget: &EnergyBudget, target: f64) -> f64 {
    let mut s = 1.0f64;
    while s < 1e6 {
        let (m, t) = budget.at(s);
        if m + t <= target {
            return s;
        }
        s *= 1.01;
    }
    f64::INFINITY
}

/// One grid point of the parameter calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalePoint {
    pub d: f64,
    pub epsilon: f64,
    pub required: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub constants: Calibration,
    pub leakage_points: usize,
    /// Measured supremum of `sliver(δ)/δ`, at most [`SLIVER_RATIO_BOUND`].
    pub sliver_ratio: f64,
    pub s_points: Vec<ScalePoint>,
    pub k_points: Vec<ScalePoint>,
}

/// Rounds up to three significant digits.
pub fn round_up3(x: f64) -> f64 {
    if x <= 0.0 || !x.is_finite() {
        return x;
    }
    let e = x.log10().floor() as i32 - 2;
    from_digits((x / 10f64.powi(e) - 1e-9).ceil(), e)
}

/// `digits · 10^e`, dividing for negative `e` so the result matches the decimal literal.
fn from_digits(digits: f64, e: i32) -> f64 {
    if e < 0 {
        digits / 10f64.powi(-e)
    } else {
        digits * 10f64.powi(e)
    }
}

/// Re-derives every constant on the desk grid `D ∈ {4, 16, 64}`, `ε ∈ {0.1, 0.01}`.
pub fn calibrate(m: u32) -> Result<CalibrationReport> {
    let cutoff = CutoffSpec::new(m)?;
    let eta = cutoff.eta().min(0.5);
    let exponent = 1.0 - eta;

    let samples = leakage_samples(&cutoff, WORST_EDGE_RATIO, &[16.0, 32.0, 64.0], 400.0)?;
    let energy = fit_energy_law(&samples, exponent)
        .ok_or_else(|| crate::Error::FitFailure("leakage law has no decay".into()))?;

    let desk_d = [4.0, 16.0, 64.0];
    let desk_eps = [0.1f64, 0.01];
    // off-dyadic lengths exercise the uncovered ends
    let sliver_ds: Vec<f64> = (0..256).map(|i| 2.0 + i as f64 * (62.0 / 255.0)).chain(desk_d).collect();
    let sliver_ratio = measure_sliver_ratio(&sliver_ds)?;
    let sliver_constant = sliver_constant();
    let whitney_count = round_up3(measure_whitney_count(8.0, 1.0 / 64.0)?);
    let med_count = round_up3(measure_med_count(&cutoff, 8.0, 1.0 / 16.0, &[1.0, 2.0, 4.0, 8.0])?);

    let mut s_points = Vec::new();
    for &d in &desk_d {
        for &epsilon in &desk_eps {
            let delta_min = epsilon.powi(3) / (2.0 * sliver_constant);
            let basis = LocalCosineBasis::build(cutoff.clone(), WhitneyDecomposition::decompose(d, delta_min)?, LocalCosineBasis::DEFAULT_XI_MAX)?;
            let budget = EnergyBudget::measure(&basis, delta_min, energy);
            let required = required_s(&budget, 0.5 * epsilon.powi(3));
            let ratio = required / loglog_factor(d, epsilon).powf(1.0 / exponent);
            s_points.push(ScalePoint {
                d,
                epsilon,
                required,
                ratio,
            });
        }
    }
    let s_scale = round_up3(s_points.iter().map(|p| p.ratio).fold(1.0, f64::max));

    let mut k_points = Vec::new();
    for &d in &desk_d {
        let spec = eigen_spectrum(&OperatorConfig::with_defaults(d)?)?;
        for &epsilon in &desk_eps {
            let anchor = d.floor();
            let required = spec
                .band_indices(epsilon)
                .iter()
                .map(|&k| (k as f64 - anchor).abs())
                .fold(0.0, f64::max);
            let shape = loglog_factor(d, epsilon).powf(1.0 + eta) * (d / epsilon).ln();
            k_points.push(ScalePoint {
                d,
                epsilon,
                required,
                ratio: required / shape,
            });
        }
    }
    let k_scale = round_up3(k_points.iter().map(|p| p.ratio).fold(0.0, f64::max));

    Ok(CalibrationReport {
        constants: Calibration {
            version: CALIBRATED.version,
            m,
            energy: EnergyLaw {
                amplitude: round_up3(energy.amplitude),
                rate: round_down3(energy.rate),
                exponent,
            },
            edge_ratio: WORST_EDGE_RATIO,
            sliver_constant,
            s_scale,
            k_scale,
            whitney_count,
            med_count,
        },
        leakage_points: samples.len(),
        sliver_ratio,
        s_points,
        k_points,
    })
}

/// Rounds down to three significant digits.
pub fn round_down3(x: f64) -> f64 {
    if x <= 0.0 || !x.is_finite() {
        return x;
    }
    let e = x.log10().floor() as i32 - 2;
    from_digits((x / 10f64.powi(e) + 1e-9).floor(), e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_to_three_digits() {
        assert_eq!(round_up3(1.2341), 1.24);
        assert_eq!(round_up3(1.23), 1.23);
        assert_eq!(round_down3(0.0456789), 0.0456);
        assert_eq!(round_up3(30.86), 30.9);
        assert_eq!(round_up3(1234.5), 1240.0);
    }

    #[test]
    fn tail_sum_of_a_pure_exponential() {
        let law = EnergyLaw {
            amplitude: 1.0,
            rate: 1.0,
            exponent: 1.0,
        };
        let want = 1.0 / (1.0 - (-0.5f64).exp());
        assert!((law.tail_sum(0.0) - want).abs() < 1e-12);
    }

    #[test]
    fn dominating_fit_lies_above_every_sample() {
        let samples: Vec<LeakageSample> = (1..40)
            .map(|i| {
                let u = i as f64;
                LeakageSample {
                    delta: 16.0,
                    k: i,
                    margin: u,
                    energy: 0.3 * (-0.4 * u.powf(0.75)).exp() * (1.0 + 0.2 * (u * 1.7).sin()),
                }
            })
            .collect();
        let law = fit_energy_law(&samples, 0.75).unwrap();
        assert!(law.rate > 0.3 && law.rate < 0.5, "{law:?}");
        for p in &samples {
            assert!(law.eval(p.margin) >= p.energy * (1.0 - 1e-12));
        }
    }
}
