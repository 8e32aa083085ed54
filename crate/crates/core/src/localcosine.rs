//! Local cosine (Coifman–Meyer) basis over a Whitney decomposition.
//!
//! Atom `(j, k)` is `C_jk · δ_j^{-1/2} · w_j(x) · cos(π(k + 1/2)(x − x_j)/δ_j)`, where the
//! window `w_j(x) = θ((x − x_j)/η_j) · θ((x_j + δ_j − x)/η′_j)` has smooth edges of
//! half-width `η_j` and `η′_j`. Neighbouring windows share the same edge width, which
//! together with `θ²(x) + θ²(−x) = 1` makes the family orthonormal.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::cutoff::{CutoffSpec, DecayFit};
use crate::error::{invalid, Error, Result};
use crate::quadrature::GaussLegendre;
use crate::sampled::{centred_spectrum, is_power_of_two, SampledFunction, SampledSpectrum};
use crate::whitney::WhitneyDecomposition;

/// Edge half-widths of one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionWidths {
    pub eta_left: f64,
    pub eta_right: f64,
}

impl TransitionWidths {
    /// Checks `δ/100 ≤ η, η′ ≤ δ/10` and `η + η′ ≤ δ/10`.
    pub fn admissible_for(&self, delta: f64) -> bool {
        let lo = delta / 100.0;
        let hi = delta / 10.0;
        let in_range = |e: f64| e >= lo * (1.0 - 1e-12) && e <= hi * (1.0 + 1e-12);
        in_range(self.eta_left)
            && in_range(self.eta_right)
            && self.eta_left + self.eta_right <= hi * (1.0 + 1e-12)
    }
}

/// Edge widths for every interval: `min(δ_left, δ_right)/20` at shared endpoints and
/// `δ_j/20` at the two outermost endpoints.
pub fn select_transition_widths(decomp: &WhitneyDecomposition) -> Result<Vec<TransitionWidths>> {
    let iv = &decomp.intervals;
    let mut widths: Vec<TransitionWidths> = iv
        .iter()
        .map(|i| TransitionWidths {
            eta_left: i.delta_j / 20.0,
            eta_right: i.delta_j / 20.0,
        })
        .collect();
    for (a, b) in decomp.adjacent_pairs() {
        let (da, db) = (iv[a].delta_j, iv[b].delta_j);
        if da.max(db) > 4.0 * da.min(db) {
            return Err(Error::IncompatibleScales { left: a, right: b });
        }
        let shared = da.min(db) / 20.0;
        widths[a].eta_right = shared;
        widths[b].eta_left = shared;
    }
    Ok(widths)
}

/// A window on `(x_j, x_j + δ_j]`. Zero widths give the sharp indicator window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub x_j: f64,
    pub delta_j: f64,
    pub widths: TransitionWidths,
}

impl Window {
    pub fn sharp(x_j: f64, delta_j: f64) -> Self {
        Self {
            x_j,
            delta_j,
            widths: TransitionWidths {
                eta_left: 0.0,
                eta_right: 0.0,
            },
        }
    }

    pub fn right(&self) -> f64 {
        self.x_j + self.delta_j
    }

    pub fn support(&self) -> (f64, f64) {
        (
            self.x_j - self.widths.eta_left,
            self.right() + self.widths.eta_right,
        )
    }

    /// Support split at the edges of the two transition zones; the flag marks transitions.
    pub fn segments(&self) -> Vec<(f64, f64, bool)> {
        let (el, er) = (self.widths.eta_left, self.widths.eta_right);
        let mut out = Vec::with_capacity(3);
        if el > 0.0 {
            out.push((self.x_j - el, self.x_j + el, true));
        }
        out.push((self.x_j + el, self.right() - er, false));
        if er > 0.0 {
            out.push((self.right() - er, self.right() + er, true));
        }
        out
    }
}

fn edge(cutoff: &CutoffSpec, t: f64, width: f64) -> f64 {
    if width == 0.0 {
        if t > 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        cutoff.eval_theta(t / width)
    }
}

pub fn eval_window(cutoff: &CutoffSpec, w: &Window, x: f64) -> f64 {
    let (lo, hi) = w.support();
    if x <= lo || x >= hi {
        return 0.0;
    }
    edge(cutoff, x - w.x_j, w.widths.eta_left) * edge(cutoff, w.right() - x, w.widths.eta_right)
}

/// Composite Gauss–Legendre nodes with panel breaks at window edges.
///
/// Flat segments get 24-node panels of length `8/rate`; transition segments get at
/// least eight such panels regardless of their length.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub rate: f64,
}

const PANEL_NODES: usize = 24;
const MIN_TRANSITION_PANELS: usize = 8;

impl QuadratureGrid {
    /// Segments `(lo, hi, is_transition)` must be ordered and non-overlapping.
    pub fn from_segments(segments: &[(f64, f64, bool)], rate: f64) -> Self {
        let rule = GaussLegendre::new(PANEL_NODES);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for &(lo, hi, transition) in segments {
            if hi <= lo {
                continue;
            }
            let mut panels = ((hi - lo) * rate / 8.0).ceil().max(1.0) as usize;
            if transition {
                panels = panels.max(MIN_TRANSITION_PANELS);
            }
            for (x, w) in rule.composite(lo, hi, panels) {
                nodes.push(x);
                weights.push(w);
            }
        }
        Self {
            nodes,
            weights,
            rate,
        }
    }

    /// Grid over the union of the given windows' supports, broken at every edge.
    pub fn covering(windows: &[Window], rate: f64) -> Self {
        let mut marks: Vec<(f64, bool)> = Vec::new();
        for w in windows {
            for (lo, hi, t) in w.segments() {
                marks.push((lo, t));
                marks.push((hi, t));
            }
        }
        let mut pts: Vec<f64> = marks.iter().map(|m| m.0).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let is_transition = |a: f64, b: f64| {
            let mid = 0.5 * (a + b);
            windows.iter().any(|w| {
                w.segments()
                    .iter()
                    .any(|&(lo, hi, t)| t && lo <= mid && mid <= hi)
            })
        };
        let inside = |a: f64, b: f64| {
            let mid = 0.5 * (a + b);
            windows.iter().any(|w| {
                let (lo, hi) = w.support();
                lo <= mid && mid <= hi
            })
        };
        let segments: Vec<(f64, f64, bool)> = pts
            .windows(2)
            .filter(|p| inside(p[0], p[1]))
            .map(|p| (p[0], p[1], is_transition(p[0], p[1])))
            .collect();
        Self::from_segments(&segments, rate)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// `C = δ^{1/2} · (∫ w² cos²)^{-1/2}`, computed at `rate` and `2·rate`; the two must agree.
pub fn normalization_constant(cutoff: &CutoffSpec, window: &Window, k: usize, rate: f64) -> Result<f64> {
    let xi = frequency_center(window.delta_j, k);
    if rate < 8.0 * xi {
        return Err(Error::GridTooCoarse(format!(
            "rate {rate} below 8 samples per cycle at frequency {xi}"
        )));
    }
    let omega = PI * (k as f64 + 0.5) / window.delta_j;
    let integrand = |x: f64| {
        let v = eval_window(cutoff, window, x) * (omega * (x - window.x_j)).cos();
        v * v
    };
    let coarse = QuadratureGrid::from_segments(&window.segments(), rate).integrate(integrand);
    let fine = QuadratureGrid::from_segments(&window.segments(), 2.0 * rate).integrate(integrand);
    let tol = 1e-10 * fine.abs().max(1e-300);
    if (coarse - fine).abs() > tol {
        return Err(Error::QuadratureFailure {
            tol,
            estimate: (coarse - fine).abs(),
        });
    }
    Ok((window.delta_j / fine).sqrt())
}

/// `(2k + 1) / (4δ)`.
pub fn frequency_center(delta: f64, k: usize) -> f64 {
    (2 * k + 1) as f64 / (4.0 * delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BasisIndex {
    pub j: usize,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasisAtom {
    pub index: BasisIndex,
    pub window: Window,
    pub c_jk: f64,
    pub xi_jk: f64,
}

impl BasisAtom {
    pub fn delta(&self) -> f64 {
        self.window.delta_j
    }

    pub fn angular_frequency(&self) -> f64 {
        PI * (self.index.k as f64 + 0.5) / self.window.delta_j
    }
}

pub fn eval_atom(cutoff: &CutoffSpec, atom: &BasisAtom, x: f64) -> f64 {
    let w = eval_window(cutoff, &atom.window, x);
    if w == 0.0 {
        return 0.0;
    }
    atom.c_jk / atom.delta().sqrt() * w * (atom.angular_frequency() * (x - atom.window.x_j)).cos()
}

pub fn sample_atom(cutoff: &CutoffSpec, atom: &BasisAtom, x0: f64, h: f64, len: usize) -> SampledFunction {
    SampledFunction::from_fn(x0, h, len, |x| eval_atom(cutoff, atom, x))
}

/// Number of frequencies kept on an interval of length `delta`: `max(1, ⌈2δ·ξ_max⌉)`.
pub fn frequency_count(delta: f64, xi_max: f64) -> usize {
    ((2.0 * delta * xi_max).ceil() as usize).max(1)
}

/// All atoms with frequency centres below the analysis band edge on every interval.
#[derive(Debug, Clone)]
pub struct LocalCosineBasis {
    pub cutoff: CutoffSpec,
    pub decomposition: WhitneyDecomposition,
    pub widths: Vec<TransitionWidths>,
    pub atoms: Vec<BasisAtom>,
    pub xi_max: f64,
}

impl LocalCosineBasis {
    pub const DEFAULT_XI_MAX: f64 = 4.0;

    pub fn build(cutoff: CutoffSpec, decomposition: WhitneyDecomposition, xi_max: f64) -> Result<Self> {
        if !(xi_max > 0.0 && xi_max.is_finite()) {
            return Err(invalid(format!("xi_max = {xi_max} must be positive")));
        }
        let widths = select_transition_widths(&decomposition)?;
        let mut atoms = Vec::new();
        for (iv, w) in decomposition.intervals.iter().zip(&widths) {
            let window = Window {
                x_j: iv.x_j,
                delta_j: iv.delta_j,
                widths: *w,
            };
            for k in 0..frequency_count(iv.delta_j, xi_max) {
                atoms.push(BasisAtom {
                    index: BasisIndex { j: iv.j, k },
                    window,
                    c_jk: f64::NAN,
                    xi_jk: frequency_center(iv.delta_j, k),
                });
            }
        }
        let constants: Result<Vec<f64>> = atoms
            .par_iter()
            .map(|a| {
                let rate = (16.0 * a.xi_jk).max(16.0);
                normalization_constant(&cutoff, &a.window, a.index.k, rate)
            })
            .collect();
        for (a, c) in atoms.iter_mut().zip(constants?) {
            a.c_jk = c;
        }
        Ok(Self {
            cutoff,
            decomposition,
            widths,
            atoms,
            xi_max,
        })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn eval(&self, atom: &BasisAtom, x: f64) -> f64 {
        eval_atom(&self.cutoff, atom, x)
    }

    pub fn max_frequency(&self) -> f64 {
        self.atoms.iter().map(|a| a.xi_jk).fold(0.0, f64::max)
    }

    /// Multiplies every normalization constant by `factor`; used to inject faults.
    pub fn scale_normalizations(&mut self, factor: f64) {
        for a in &mut self.atoms {
            a.c_jk *= factor;
        }
    }

    /// Quadrature grid adequate for inner products among `atoms`.
    pub fn quadrature_grid(atoms: &[BasisAtom], rate: f64) -> QuadratureGrid {
        let windows: Vec<Window> = atoms.iter().map(|a| a.window).collect();
        QuadratureGrid::covering(&windows, rate)
    }
}

/// Pairwise inner products `⟨Φ_a, Φ_b⟩`.
pub fn gram_matrix(cutoff: &CutoffSpec, atoms: &[BasisAtom], grid: &QuadratureGrid) -> Result<DMatrix<f64>> {
    let xi_top = atoms.iter().map(|a| a.xi_jk).fold(0.0, f64::max);
    if grid.rate < 8.0 * xi_top {
        return Err(Error::GridTooCoarse(format!(
            "grid rate {} below 8 × highest frequency {xi_top}",
            grid.rate
        )));
    }
    let n = grid.len();
    let columns: Vec<Vec<f64>> = atoms
        .par_iter()
        .map(|a| {
            grid.nodes
                .iter()
                .zip(&grid.weights)
                .map(|(&x, &w)| w.sqrt() * eval_atom(cutoff, a, x))
                .collect()
        })
        .collect();
    let samples = DMatrix::from_fn(n, atoms.len(), |r, c| columns[c][r]);
    Ok(samples.transpose() * &samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GramSummary {
    pub max_diagonal_deviation: f64,
    pub max_off_diagonal: f64,
    pub size: usize,
}

pub fn summarize_gram(g: &DMatrix<f64>) -> GramSummary {
    let mut diag = 0.0f64;
    let mut off = 0.0f64;
    for r in 0..g.nrows() {
        for c in 0..g.ncols() {
            if r == c {
                diag = diag.max((g[(r, c)] - 1.0).abs());
            } else {
                off = off.max(g[(r, c)].abs());
            }
        }
    }
    GramSummary {
        max_diagonal_deviation: diag,
        max_off_diagonal: off,
        size: g.nrows(),
    }
}

/// Uniform samples of one atom resolving its narrowest edge, with the spectrum.
#[derive(Debug, Clone)]
pub struct AtomSpectrum {
    pub samples: SampledFunction,
    pub spectrum: SampledSpectrum,
}

/// Samples per narrowest edge half-width used by [`atom_spectrum`].
pub const EDGE_SAMPLES: f64 = 16.0;

/// Smallest power-of-two sample count with spacing `≤ min(η, η′)/16` across the support.
pub fn required_grid_pts(atom: &BasisAtom) -> usize {
    let (lo, hi) = atom.window.support();
    let h = max_spacing(atom);
    (((hi - lo) / h).ceil() as usize + 1).next_power_of_two()
}

fn max_spacing(atom: &BasisAtom) -> f64 {
    let w = atom.window.widths;
    let edge = w.eta_left.min(w.eta_right) / EDGE_SAMPLES;
    edge.min(1.0 / (8.0 * atom.xi_jk))
}

pub fn atom_spectrum(cutoff: &CutoffSpec, atom: &BasisAtom, grid_pts: usize, pad: usize) -> Result<AtomSpectrum> {
    if !is_power_of_two(grid_pts) {
        return Err(invalid(format!("grid_pts = {grid_pts} must be a power of two")));
    }
    if pad < 4 {
        return Err(invalid(format!("pad = {pad} must be at least 4")));
    }
    let (lo, hi) = atom.window.support();
    let h = (hi - lo) / (grid_pts - 1) as f64;
    if h > max_spacing(atom) * (1.0 + 1e-12) {
        return Err(Error::GridTooCoarse(format!(
            "{grid_pts} points give spacing {h}, need at most {}",
            max_spacing(atom)
        )));
    }
    let samples = sample_atom(cutoff, atom, lo, h, grid_pts);
    let spectrum = centred_spectrum(&samples, grid_pts * pad);
    Ok(AtomSpectrum { samples, spectrum })
}

/// Energy of the continuous transform of the sampled function inside and outside `[-1/2, 1/2]`.
///
/// The in-band part is exact for the trapezoidal transform: `h² Σ_d r_d · sinc(d·h)` with
/// `r` the sample autocorrelation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandEnergy {
    pub inside: f64,
    pub outside: f64,
    pub total: f64,
}

pub fn band_energy(f: &SampledFunction) -> BandEnergy {
    let n = f.len();
    let m = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex64> = f
        .values
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(m)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex64::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let r: Vec<f64> = buf.iter().take(n).map(|c| c.re / m as f64).collect();
    let h = f.h;
    let mut inside = r[0];
    for (d, rd) in r.iter().enumerate().skip(1) {
        let t = PI * d as f64 * h;
        inside += 2.0 * rd * t.sin() / t;
    }
    inside *= h * h;
    let total = h * f.values.iter().map(|v| v * v).sum::<f64>();
    let inside = inside.clamp(0.0, total);
    BandEnergy {
        inside,
        outside: total - inside,
        total,
    }
}

/// Upper envelope `B` for atoms' spectra: `|Φ̂(ξ)| ≤ δ^{1/2} [B(δ(ξ − ξ_jk)) + B(δ(ξ + ξ_jk))]`.
///
/// `B` is fitted to the transform of the unit window with the narrowest admissible
/// edges, then its amplitude is raised until it dominates every fitted sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowEnvelope {
    pub fit: DecayFit,
    pub edge_ratio: f64,
}

impl WindowEnvelope {
    pub fn fit(cutoff: &CutoffSpec, edge_ratio: f64) -> Result<Self> {
        let window = Window {
            x_j: -0.5,
            delta_j: 1.0,
            widths: TransitionWidths {
                eta_left: edge_ratio,
                eta_right: edge_ratio,
            },
        };
        let grid_pts = 1 << 16;
        let pad = 8;
        let half = 0.5 + edge_ratio;
        let period = 2.0 * half * pad as f64;
        let h = period / grid_pts as f64;
        let samples = SampledFunction::from_fn(-0.5 * period, h, grid_pts, |x| {
            eval_window(cutoff, &window, x)
        });
        let spec = centred_spectrum(&samples, grid_pts);
        let mid = grid_pts / 2;
        let xis: Vec<f64> = (mid..grid_pts).map(|i| spec.xi(i)).collect();
        let mags: Vec<f64> = (mid..grid_pts).map(|i| spec.values[i].norm()).collect();
        let mut fit = crate::cutoff::fit_stretched_exponential(&xis, &mags)?;
        // Dominate every sample above the noise floor, including the low-frequency cap.
        let mut ratio = 1.0f64;
        for (&xi, &m) in xis.iter().zip(&mags) {
            if m < 10.0 * fit.noise_floor {
                break;
            }
            ratio = ratio.max(m / fit.eval(xi));
        }
        fit.amplitude *= ratio;
        Ok(Self { fit, edge_ratio })
    }

    /// Envelope at physical frequency `xi` for `atom` (the `C/2` factor of the atom is
    /// absorbed, valid while `C_jk ≤ 2`).
    pub fn bound(&self, atom: &BasisAtom, xi: f64) -> f64 {
        let d = atom.delta();
        d.sqrt() * (self.fit.eval(d * (xi - atom.xi_jk)) + self.fit.eval(d * (xi + atom.xi_jk)))
    }

    /// Largest `|Φ̂(ξ)| / bound(ξ)` over samples above `floor`.
    pub fn worst_ratio(&self, atom: &BasisAtom, spec: &SampledSpectrum, floor: f64) -> f64 {
        (0..spec.len())
            .filter(|&i| spec.values[i].norm() > floor)
            .map(|i| spec.values[i].norm() / self.bound(atom, spec.xi(i)))
            .fold(0.0, f64::max)
    }
}
