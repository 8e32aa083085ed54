//! Splitting basis indices into low, medium and high frequency classes.
//!
//! On an interval of length `δ ≥ δ_min`, index `k` has centre `ξ = (2k+1)/(4δ)`. It is
//! *low* when `dist(ξ, ℝ∖J) ≥ s/δ`, *medium* when `dist(ξ, ∂J) < s/δ`, and *high*
//! otherwise. Intervals shorter than `δ_min` put everything in *high*. Multiplying
//! through by `4δ` turns each test into a comparison of `2k + 1` with `2δ ± 4s`, which
//! is exact in binary floating point for dyadic `δ`.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::localcosine::{band_energy, frequency_center, required_grid_pts, sample_atom, BandEnergy, BasisAtom, BasisIndex, LocalCosineBasis};
use crate::cutoff::CutoffSpec;
use crate::spectral::{apply_t, OperatorConfig};
use crate::whitney::WhitneyDecomposition;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionParams {
    pub s: f64,
    pub delta_min: f64,
    pub epsilon: f64,
    pub eta: f64,
}

impl PartitionParams {
    pub fn new(s: f64, delta_min: f64, epsilon: f64, eta: f64) -> Result<Self> {
        if !(s >= 1.0 && s.is_finite()) {
            return Err(invalid(format!("s = {s} must be at least 1")));
        }
        if !(delta_min > 0.0 && delta_min < 1.0) {
            return Err(invalid(format!("delta_min = {delta_min} must lie in (0, 1)")));
        }
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(invalid(format!("epsilon = {epsilon} must lie in (0, 1/2)")));
        }
        if !(eta > 0.0 && eta <= 0.5) {
            return Err(invalid(format!("eta = {eta} must lie in (0, 1/2]")));
        }
        Ok(Self {
            s,
            delta_min,
            epsilon,
            eta,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyClass {
    Low,
    Med,
    High,
}

/// Class of frequency index `k` on an interval of length `delta`.
pub fn classify(delta: f64, k: usize, params: &PartitionParams) -> FrequencyClass {
    if delta < params.delta_min {
        return FrequencyClass::High;
    }
    let odd = (2 * k + 1) as f64;
    let two_delta = 2.0 * delta;
    let margin = 4.0 * params.s;
    if two_delta - odd >= margin {
        FrequencyClass::Low
    } else if (odd - two_delta).abs() < margin {
        FrequencyClass::Med
    } else {
        FrequencyClass::High
    }
}

pub fn classify_index(j: usize, k: usize, params: &PartitionParams, decomp: &WhitneyDecomposition) -> FrequencyClass {
    classify(decomp.intervals[j].delta_j, k, params)
}

/// Every `k` with `2k + 1 ≤ 2δ − 4s`.
pub fn low_range(delta: f64, s: f64) -> std::ops::Range<usize> {
    let top = 2.0 * delta - 4.0 * s;
    if top < 1.0 {
        return 0..0;
    }
    0..(((top - 1.0) / 2.0).floor() as usize + 1)
}

/// Every `k` with `|2k + 1 − 2δ| < 4s`.
pub fn med_range(delta: f64, s: f64) -> std::ops::Range<usize> {
    let lo = 2.0 * delta - 4.0 * s;
    let hi = 2.0 * delta + 4.0 * s;
    // smallest k with 2k + 1 > lo, largest with 2k + 1 < hi
    let first = if lo < 1.0 {
        0
    } else {
        ((lo - 1.0) / 2.0).floor() as usize + 1
    };
    let last_excl = if hi <= 1.0 {
        0
    } else {
        ((hi - 1.0) / 2.0).ceil() as usize
    };
    first..last_excl.max(first)
}

/// The three classes over a constructed basis.
///
/// `low` and `med` hold the full index sets of every interval with `δ_j ≥ δ_min`,
/// including medium indices above the constructed frequency range; `high` holds the
/// constructed high indices only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaPartition {
    pub low: BTreeSet<BasisIndex>,
    pub med: BTreeSet<BasisIndex>,
    pub high: BTreeSet<BasisIndex>,
    pub params: PartitionParams,
}

impl GammaPartition {
    pub fn build(basis: &LocalCosineBasis, params: PartitionParams) -> Self {
        let mut low = BTreeSet::new();
        let mut med = BTreeSet::new();
        let mut high = BTreeSet::new();
        for iv in &basis.decomposition.intervals {
            if iv.delta_j < params.delta_min {
                continue;
            }
            low.extend(low_range(iv.delta_j, params.s).map(|k| BasisIndex { j: iv.j, k }));
            med.extend(med_range(iv.delta_j, params.s).map(|k| BasisIndex { j: iv.j, k }));
        }
        for a in &basis.atoms {
            if classify(a.delta(), a.index.k, &params) == FrequencyClass::High {
                high.insert(a.index);
            }
        }
        Self {
            low,
            med,
            high,
            params,
        }
    }

    pub fn class_of(&self, index: &BasisIndex) -> Option<FrequencyClass> {
        if self.low.contains(index) {
            Some(FrequencyClass::Low)
        } else if self.med.contains(index) {
            Some(FrequencyClass::Med)
        } else if self.high.contains(index) {
            Some(FrequencyClass::High)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalCount {
    pub j: usize,
    pub delta: f64,
    pub low: usize,
    pub med: usize,
    pub high: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassCounts {
    pub n_low: usize,
    pub n_med: usize,
    pub n_high: usize,
    pub per_interval: Vec<IntervalCount>,
}

/// Counts each class and checks the per-interval bounds:
/// `#med ≤ 10s`, `#low = 0` when `δ < s`, and `δ − 2s − 1/2 ≤ #low ≤ δ + 1` when `δ ≥ s`.
pub fn count_classes(partition: &GammaPartition, decomp: &WhitneyDecomposition) -> Result<ClassCounts> {
    let s = partition.params.s;
    let mut per_interval: Vec<IntervalCount> = decomp
        .intervals
        .iter()
        .map(|iv| IntervalCount {
            j: iv.j,
            delta: iv.delta_j,
            low: 0,
            med: 0,
            high: 0,
        })
        .collect();
    for i in &partition.low {
        per_interval[i.j].low += 1;
    }
    for i in &partition.med {
        per_interval[i.j].med += 1;
    }
    for i in &partition.high {
        per_interval[i.j].high += 1;
    }
    for c in &per_interval {
        if c.delta < partition.params.delta_min {
            continue;
        }
        if c.med as f64 > 10.0 * s {
            return Err(Error::CountViolation {
                interval: c.j,
                detail: format!("{} medium indices exceed 10s = {}", c.med, 10.0 * s),
            });
        }
        if c.delta < s && c.low != 0 {
            return Err(Error::CountViolation {
                interval: c.j,
                detail: format!("{} low indices on an interval shorter than s", c.low),
            });
        }
        if c.delta >= s {
            let lo = c.delta - 2.0 * s - 0.5;
            let hi = c.delta + 1.0;
            if (c.low as f64) < lo || (c.low as f64) > hi {
                return Err(Error::CountViolation {
                    interval: c.j,
                    detail: format!("{} low indices outside [{lo}, {hi}]", c.low),
                });
            }
        }
    }
    Ok(ClassCounts {
        n_low: partition.low.len(),
        n_med: partition.med.len(),
        n_high: partition.high.len(),
        per_interval,
    })
}

/// In-band and out-of-band energy of one atom, from its uniform samples.
pub fn atom_band_energy(cutoff: &CutoffSpec, atom: &BasisAtom) -> BandEnergy {
    let n = required_grid_pts(atom);
    let (lo, hi) = atom.window.support();
    let h = (hi - lo) / (n - 1) as f64;
    band_energy(&sample_atom(cutoff, atom, lo, h, n))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    /// `Σ_{low} ‖Φ̂‖²` outside `J`.
    pub low_out: f64,
    /// `Σ_{high, constructed} ‖Φ̂‖²` inside `J`.
    pub high_in: f64,
    pub low_atoms: usize,
    pub high_atoms: usize,
    /// Scale `δ_min` of the analytic bound on high indices that are not constructed.
    pub high_tail_scale: f64,
}

fn atoms_in<'a>(basis: &'a LocalCosineBasis, set: &'a BTreeSet<BasisIndex>) -> Vec<&'a BasisAtom> {
    basis.atoms.iter().filter(|a| set.contains(&a.index)).collect()
}

pub fn energy_sums(partition: &GammaPartition, basis: &LocalCosineBasis) -> Result<EnergyReport> {
    let low = atoms_in(basis, &partition.low);
    if low.len() != partition.low.len() {
        return Err(Error::PipelineAssertion(format!(
            "{} low indices but only {} constructed atoms",
            partition.low.len(),
            low.len()
        )));
    }
    let high = atoms_in(basis, &partition.high);
    let low_out: f64 = low
        .par_iter()
        .map(|a| atom_band_energy(&basis.cutoff, a).outside)
        .sum();
    let high_in: f64 = high
        .par_iter()
        .map(|a| atom_band_energy(&basis.cutoff, a).inside)
        .sum();
    // empty float sums are −0.0
    Ok(EnergyReport {
        low_out: low_out + 0.0,
        high_in: high_in + 0.0,
        low_atoms: low.len(),
        high_atoms: high.len(),
        high_tail_scale: partition.params.delta_min,
    })
}

/// Smallest power-of-two grid rate resolving every atom's narrowest edge with 16 samples
/// and its frequency with 8 samples per cycle.
pub fn required_grid_rate(atoms: &[&BasisAtom]) -> f64 {
    let need = atoms
        .iter()
        .map(|a| {
            let w = a.window.widths;
            (16.0 / w.eta_left.min(w.eta_right)).max(8.0 * a.xi_jk)
        })
        .fold(16.0, f64::max);
    2f64.powi(need.log2().ceil() as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    /// `Σ_{high} ‖TΦ‖²`.
    pub high: f64,
    /// `Σ_{low} ‖TΦ − Φ‖²`.
    pub low: f64,
    pub total: f64,
    /// `E_high_in + E_low_out`.
    pub bound: f64,
    pub tol: f64,
    pub within_bound: bool,
    pub grid_rate: f64,
}

/// Per-atom tolerance when comparing time-domain residuals with spectral energies.
pub const RESIDUAL_TOL_PER_ATOM: f64 = 1e-8;

pub fn residual_sums(partition: &GammaPartition, basis: &LocalCosineBasis, config: &OperatorConfig, energy: &EnergyReport) -> Result<ResidualReport> {
    let low = atoms_in(basis, &partition.low);
    let high = atoms_in(basis, &partition.high);
    let all: Vec<&BasisAtom> = low.iter().chain(&high).copied().collect();
    let need = required_grid_rate(&all);
    if config.grid_rate < need {
        return Err(Error::GridTooCoarse(format!(
            "grid rate {} below {need} needed by the narrowest atom edge",
            config.grid_rate
        )));
    }
    let grid = config.grid();
    let residual = |a: &BasisAtom, subtract: bool| -> Result<f64> {
        let f = sample_atom(&basis.cutoff, a, grid.x0, grid.h, grid.len());
        let tf = apply_t(&f, config)?;
        let r: f64 = tf
            .values
            .iter()
            .zip(&f.values)
            .map(|(t, v)| {
                let d = if subtract { t - v } else { *t };
                d * d
            })
            .sum();
        Ok(r * grid.h)
    };
    let high_sum: f64 = high
        .par_iter()
        .map(|a| residual(a, false))
        .collect::<Result<Vec<_>>>()?
        .iter()
        .sum();
    let low_sum: f64 = low
        .par_iter()
        .map(|a| residual(a, true))
        .collect::<Result<Vec<_>>>()?
        .iter()
        .sum();
    let (high_sum, low_sum) = (high_sum + 0.0, low_sum + 0.0);
    let total = high_sum + low_sum;
    let bound = energy.high_in + energy.low_out;
    let tol = RESIDUAL_TOL_PER_ATOM * all.len().max(1) as f64;
    Ok(ResidualReport {
        high: high_sum,
        low: low_sum,
        total,
        bound,
        tol,
        within_bound: total <= bound + tol,
        grid_rate: config.grid_rate,
    })
}

/// Shell counts `#{k : dist ∈ [s·2^ℓ/δ, s·2^{ℓ+1}/δ)}` for the low side (distance to
/// `ℝ∖J`) and the high side (distance to `J`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellProfile {
    pub low: Vec<usize>,
    pub high: Vec<usize>,
}

pub fn dyadic_shell_profile(delta: f64, params: &PartitionParams, levels: usize) -> Result<ShellProfile> {
    if delta < params.delta_min {
        return Err(invalid(format!(
            "delta = {delta} below delta_min = {}",
            params.delta_min
        )));
    }
    let two_delta = 2.0 * delta;
    let unit = 4.0 * params.s;
    // odd integers n ≥ 1 with lo ≤ n < hi
    let count_odd = |lo: f64, hi: f64| -> usize {
        let lo = lo.max(1.0);
        if hi <= lo {
            return 0;
        }
        let first = {
            let c = lo.ceil() as i64;
            if c % 2 == 0 {
                c + 1
            } else {
                c
            }
        };
        let last = {
            let f = hi.ceil() as i64 - 1;
            if f % 2 == 0 {
                f - 1
            } else {
                f
            }
        };
        if last < first {
            0
        } else {
            ((last - first) / 2 + 1) as usize
        }
    };
    let mut low = vec![0; levels];
    for k in low_range(delta, params.s) {
        let offset = two_delta - (2 * k + 1) as f64;
        let l = (offset / unit).log2().floor() as usize;
        if l < levels {
            low[l] += 1;
        }
    }
    let high = (0..levels)
        .map(|l| {
            let a = unit * 2f64.powi(l as i32);
            count_odd(two_delta + a, two_delta + 2.0 * a)
        })
        .collect();
    Ok(ShellProfile { low, high })
}

/// Frequency centre of `(j, k)` in `decomp`.
pub fn index_frequency(index: &BasisIndex, decomp: &WhitneyDecomposition) -> f64 {
    frequency_center(decomp.intervals[index.j].delta_j, index.k)
}
