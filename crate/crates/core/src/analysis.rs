//! The counting lemma in matrix form and the end-to-end plunge-width pipeline.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::calibration::{high_tail, loglog_factor, Calibration, EnergyBudget};
use crate::cutoff::CutoffSpec;
use crate::error::{invalid, Error, Result};
use crate::localcosine::{frequency_count, LocalCosineBasis};
use crate::partition::{count_classes, energy_sums, residual_sums, GammaPartition, PartitionParams};
use crate::spectral::{eigen_spectrum, landau_check, LandauReport, OperatorConfig, BAND_EDGE_TOL};
use crate::whitney::WhitneyDecomposition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    /// Expected to be nearly annihilated by `T`.
    Killed,
    /// No constraint.
    Free,
    /// Expected to be nearly fixed by `T`.
    Kept,
}

/// A contraction `T` with an orthonormal basis whose columns are labelled.
#[derive(Debug, Clone, PartialEq)]
pub struct AbstractInstance {
    pub t: DMatrix<f64>,
    pub basis: DMatrix<f64>,
    pub labels: Vec<Label>,
    pub epsilon: f64,
}

pub const INSTANCE_TOL: f64 = 1e-12;

/// Scale-aware tolerance for checks on matrices of dimension `n`.
fn instance_tol(n: usize) -> f64 {
    INSTANCE_TOL * n.max(1) as f64
}

impl AbstractInstance {
    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.t.ncols() != n || self.basis.nrows() != n || self.basis.ncols() != n || self.labels.len() != n {
            return Err(invalid("T, basis and labels must share one dimension"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(invalid(format!("epsilon = {} must lie in (0, 1/2)", self.epsilon)));
        }
        let tol = instance_tol(n);
        if (&self.t - self.t.transpose()).amax() > tol {
            return Err(invalid("T is not symmetric"));
        }
        let eig = self.t.clone().symmetric_eigenvalues();
        if eig.iter().any(|&l| l < -tol || l > 1.0 + tol) {
            return Err(invalid("T is not a positive contraction"));
        }
        let gram = self.basis.transpose() * &self.basis;
        if (gram - DMatrix::identity(n, n)).amax() > tol {
            return Err(invalid("basis is not orthonormal"));
        }
        Ok(())
    }

    /// `Σ_{killed} ‖Tφ‖² + Σ_{kept} ‖Tφ − φ‖²`.
    pub fn hypothesis_sum(&self) -> f64 {
        let tb = &self.t * &self.basis;
        self.labels
            .iter()
            .enumerate()
            .map(|(k, label)| match label {
                Label::Killed => tb.column(k).norm_squared(),
                Label::Kept => (tb.column(k) - self.basis.column(k)).norm_squared(),
                Label::Free => 0.0,
            })
            .sum()
    }

    pub fn free_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == Label::Free).count()
    }
}

/// Number of eigenvalues of a symmetric matrix in `(ε, 1 − ε)`, endpoints widened by
/// [`BAND_EDGE_TOL`] toward the outside.
pub fn band_count(t: &DMatrix<f64>, epsilon: f64) -> usize {
    t.clone()
        .symmetric_eigenvalues()
        .iter()
        .filter(|&&l| l > epsilon + BAND_EDGE_TOL && l < 1.0 - epsilon - BAND_EDGE_TOL)
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MainLemmaReport {
    pub hypothesis_sum: f64,
    pub m_eps: usize,
    pub free_count: usize,
    pub hypothesis_holds: bool,
    pub conclusion_holds: bool,
    /// True when the hypothesis holds, so the conclusion was asserted.
    pub asserted: bool,
}

impl MainLemmaReport {
    pub fn counterexample(&self) -> bool {
        self.asserted && !self.conclusion_holds
    }
}

pub fn check_main_lemma(inst: &AbstractInstance) -> MainLemmaReport {
    let hypothesis_sum = inst.hypothesis_sum();
    let m_eps = band_count(&inst.t, inst.epsilon);
    let free_count = inst.free_count();
    let hypothesis_holds = hypothesis_sum <= inst.epsilon.powi(3);
    MainLemmaReport {
        hypothesis_sum,
        m_eps,
        free_count,
        hypothesis_holds,
        conclusion_holds: m_eps <= 2 * free_count,
        asserted: hypothesis_holds,
    }
}

/// How instance labels and spectra are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    /// Uniform spectrum, independent basis, uniform labels.
    Random,
    /// Uniform spectrum, independent basis, labels chosen greedily to fit the budget.
    Greedy,
    /// Spectrum clustered at 0 and 1 with a few mid values, basis a small rotation of
    /// the eigenbasis, labels chosen greedily.
    NearlyAligned,
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with `diag(R) > 0`.
pub fn haar_orthogonal<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..n {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    q
}

/// Orthogonal matrix `exp(τ·S)` for a random skew `S`, via its Cayley transform.
fn small_rotation<R: Rng>(rng: &mut R, n: usize, tau: f64) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let s = (&g - g.transpose()) * (0.5 * tau);
    let id = DMatrix::<f64>::identity(n, n);
    let inv = (&id - &s).try_inverse().expect("I − S is invertible for skew S");
    inv * (&id + &s)
}

/// Labels each column with its cheaper constraint while the running cost stays within
/// `ε³`, cheapest first; the rest are free.
pub fn greedy_labels(t: &DMatrix<f64>, basis: &DMatrix<f64>, epsilon: f64) -> Vec<Label> {
    let tb = t * basis;
    let mut costs: Vec<(f64, usize, Label)> = (0..basis.ncols())
        .map(|k| {
            let kill = tb.column(k).norm_squared();
            let keep = (tb.column(k) - basis.column(k)).norm_squared();
            if kill <= keep {
                (kill, k, Label::Killed)
            } else {
                (keep, k, Label::Kept)
            }
        })
        .collect();
    costs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut labels = vec![Label::Free; basis.ncols()];
    let budget = epsilon.powi(3);
    let mut used = 0.0;
    for (cost, k, label) in costs {
        if used + cost > budget {
            break;
        }
        used += cost;
        labels[k] = label;
    }
    labels
}

/// Seeded instance of dimension `n`.
pub fn random_instance(seed: u64, n: usize, epsilon: f64, kind: InstanceKind) -> AbstractInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = haar_orthogonal(&mut rng, n);
    let lambdas: Vec<f64> = match kind {
        InstanceKind::Random | InstanceKind::Greedy => (0..n).map(|_| rng.random::<f64>()).collect(),
        InstanceKind::NearlyAligned => (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                let jitter = epsilon.powi(2) * rng.random::<f64>();
                if u < 0.4 {
                    jitter
                } else if u < 0.8 {
                    1.0 - jitter
                } else {
                    rng.random()
                }
            })
            .collect(),
    };
    let t = &q * DMatrix::from_diagonal(&DVector::from_vec(lambdas)) * q.transpose();
    let t = (&t + t.transpose()) * 0.5;
    let basis = match kind {
        InstanceKind::NearlyAligned => {
            let tau = epsilon.powi(2) * rng.random::<f64>();
            &q * small_rotation(&mut rng, n, tau)
        }
        _ => haar_orthogonal(&mut rng, n),
    };
    let labels = match kind {
        InstanceKind::Random => (0..n)
            .map(|_| match rng.random_range(0..3) {
                0 => Label::Killed,
                1 => Label::Free,
                _ => Label::Kept,
            })
            .collect(),
        _ => greedy_labels(&t, &basis, epsilon),
    };
    AbstractInstance {
        t,
        basis,
        labels,
        epsilon,
    }
}

/// Orthogonal projector onto the eigenvectors of `t` with eigenvalue in `(ε, 1 − ε)`.
pub fn band_projector(t: &DMatrix<f64>, epsilon: f64) -> DMatrix<f64> {
    let eig = t.clone().symmetric_eigen();
    let n = t.nrows();
    let mut p = DMatrix::zeros(n, n);
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l > epsilon + BAND_EDGE_TOL && l < 1.0 - epsilon - BAND_EDGE_TOL {
            let v = eig.eigenvectors.column(i);
            p += &v * v.transpose();
        }
    }
    p
}

/// Largest violation of each identity used in the counting argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectorIdentities {
    /// `‖Tπ − πT‖_max`.
    pub commutator: f64,
    /// `‖π² − π‖_max`.
    pub idempotence: f64,
    /// `max_k (‖πφ_k‖ − ‖φ_k‖)⁺`.
    pub contraction: f64,
    /// `max_k (ε‖πφ_k‖ − min(‖Tφ_k‖, ‖Tφ_k − φ_k‖))⁺`.
    pub lower_bound: f64,
    /// `|Σ_k ‖πφ_k‖² − M_ε|`.
    pub dimension: f64,
}

impl ProjectorIdentities {
    pub fn max_violation(&self) -> f64 {
        self.commutator
            .max(self.idempotence)
            .max(self.contraction)
            .max(self.lower_bound)
            .max(self.dimension)
    }
}

pub fn projector_identities(inst: &AbstractInstance) -> ProjectorIdentities {
    let p = band_projector(&inst.t, inst.epsilon);
    let commutator = (&inst.t * &p - &p * &inst.t).amax();
    let idempotence = (&p * &p - &p).amax();
    let pb = &p * &inst.basis;
    let tb = &inst.t * &inst.basis;
    let mut contraction = 0.0f64;
    let mut lower_bound = 0.0f64;
    let mut mass = 0.0;
    for k in 0..inst.dim() {
        let pn = pb.column(k).norm();
        mass += pn * pn;
        contraction = contraction.max(pn - inst.basis.column(k).norm());
        let t_norm = tb.column(k).norm();
        let r_norm = (tb.column(k) - inst.basis.column(k)).norm();
        lower_bound = lower_bound.max(inst.epsilon * pn - t_norm.min(r_norm));
    }
    let dimension = (mass - band_count(&inst.t, inst.epsilon) as f64).abs();
    ProjectorIdentities {
        commutator,
        idempotence,
        contraction: contraction.max(0.0),
        lower_bound: lower_bound.max(0.0),
        dimension,
    }
}

/// Outcome of a seeded batch of random instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSummary {
    pub instances: u64,
    pub asserted: u64,
    pub counterexamples: u64,
    pub max_projector_violation: f64,
}

/// Instance `i` of a sweep: kind cycles through [`InstanceKind`], dimension through
/// 2..=12 and `ε` through a fixed list.
pub fn sweep_instance(seed: u64, i: u64) -> AbstractInstance {
    const KINDS: [InstanceKind; 3] = [InstanceKind::Random, InstanceKind::Greedy, InstanceKind::NearlyAligned];
    const EPSILONS: [f64; 5] = [0.05, 0.1, 0.2, 0.3, 0.45];
    let kind = KINDS[(i % 3) as usize];
    let n = 2 + (i / 3 % 11) as usize;
    let epsilon = EPSILONS[(i / 33 % 5) as usize];
    random_instance(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i), n, epsilon, kind)
}

pub fn main_lemma_sweep(seed: u64, count: u64) -> SweepSummary {
    use rayon::prelude::*;
    let rows: Vec<(bool, bool, f64)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let inst = sweep_instance(seed, i);
            let r = check_main_lemma(&inst);
            (r.asserted, r.counterexample(), projector_identities(&inst).max_violation())
        })
        .collect();
    SweepSummary {
        instances: count,
        asserted: rows.iter().filter(|r| r.0).count() as u64,
        counterexamples: rows.iter().filter(|r| r.1).count() as u64,
        max_projector_violation: rows.iter().map(|r| r.2).fold(0.0, f64::max),
    }
}

fn check_common(d: f64, epsilon: f64, eta: f64) -> Result<()> {
    if !(d >= 2.0 && d.is_finite()) {
        return Err(invalid(format!("D = {d} must be at least 2")));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(invalid(format!("epsilon = {epsilon} must lie in (0, 1/2)")));
    }
    if !(eta > 0.0 && eta <= 0.5) {
        return Err(invalid(format!("eta = {eta} must lie in (0, 1/2]")));
    }
    Ok(())
}

/// `δ_min = ε³/(2C)` and `s = max(1, A·(log(log(D)/ε))^{1/(1−η)})`.
pub fn choose_parameters(d: f64, epsilon: f64, eta: f64, sliver_constant: f64, s_scale: f64) -> Result<(f64, f64)> {
    check_common(d, epsilon, eta)?;
    if !(sliver_constant > 0.0 && s_scale > 0.0) {
        return Err(invalid("calibration constants must be positive"));
    }
    let delta_min = epsilon.powi(3) / (2.0 * sliver_constant);
    let s = (s_scale * loglog_factor(d, epsilon).max(0.0).powf(1.0 / (1.0 - eta))).max(1.0);
    Ok((s, delta_min))
}

/// `K = A·(log(log(D)/ε))^{1+η}·log(D/ε)`.
pub fn theorem_bound_k(d: f64, epsilon: f64, eta: f64, scale: f64) -> Result<f64> {
    check_common(d, epsilon, eta)?;
    let l = loglog_factor(d, epsilon);
    if !(l > 0.0) {
        return Err(invalid(format!("log(D)/ε = {} must exceed 1", d.ln() / epsilon)));
    }
    if !(scale > 0.0) {
        return Err(invalid("K scale must be positive"));
    }
    Ok(scale * l.powf(1.0 + eta) * (d / epsilon).ln())
}

/// Desk-scale limits of the pipeline.
pub const PIPELINE_MAX_D: f64 = 128.0;
pub const PIPELINE_MIN_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub d: f64,
    pub epsilon: f64,
    pub m: u32,
    pub quad_order: Option<usize>,
    pub grid_rate: Option<f64>,
    pub constants: Calibration,
    /// Re-solve at doubled quadrature order and compare band counts.
    pub check_refinement: bool,
    /// Multiplies every normalization constant (fault injection).
    pub normalization_fault: Option<f64>,
}

impl PipelineOptions {
    pub fn new(d: f64, epsilon: f64, constants: Calibration) -> Self {
        Self {
            d,
            epsilon,
            m: constants.m,
            quad_order: None,
            grid_rate: None,
            constants,
            check_refinement: false,
            normalization_fault: None,
        }
    }
}

/// One named check with its measured value and bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, measured: f64, bound: f64) -> Self {
        Self {
            name: name.to_string(),
            measured,
            bound,
            pass: measured <= bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremReport {
    pub d: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub s: f64,
    pub delta_min: f64,
    pub m_eps: usize,
    pub gamma_low_count: usize,
    pub gamma_med_count: usize,
    pub gamma_high_count: usize,
    /// Measured `Σ_{low} ‖TΦ − Φ‖² + Σ_{high} ‖TΦ‖²` over constructed atoms.
    pub residual: f64,
    /// Constructed-atom leakage plus the law tail plus the short-interval term.
    pub residual_budget: f64,
    pub k_bound: f64,
    /// 1-based band indices `(first, last)`, if any.
    pub mid_indices: Option<(usize, usize)>,
    pub landau: LandauReport,
    /// `[anchor − 2M_ε, anchor + 2M_ε]` around the crossing index.
    pub anchored_window: (f64, f64),
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl TheoremReport {
    pub fn failed(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    /// Turns a failed report into [`Error::PipelineAssertion`].
    pub fn into_result(self) -> Result<Self> {
        if self.pass {
            return Ok(self);
        }
        let detail: Vec<String> = self
            .failed()
            .iter()
            .map(|c| format!("{}: measured {:e} vs bound {:e}", c.name, c.measured, c.bound))
            .collect();
        Err(Error::PipelineAssertion(format!(
            "D = {}, ε = {}, s = {}, δ_min = {:e}: {}",
            self.d,
            self.epsilon,
            self.s,
            self.delta_min,
            detail.join("; ")
        )))
    }
}

/// Builds the basis at the calibrated `(s, δ_min)`, measures leakage and residuals,
/// solves for the spectrum, and checks the count and window conclusions.
pub fn run_theorem_pipeline(opts: &PipelineOptions) -> Result<TheoremReport> {
    let PipelineOptions { d, epsilon, .. } = *opts;
    if !(d <= PIPELINE_MAX_D) {
        return Err(invalid(format!("D = {d} exceeds the desk-scale limit {PIPELINE_MAX_D}")));
    }
    if !(epsilon >= PIPELINE_MIN_EPSILON) {
        return Err(invalid(format!("epsilon = {epsilon} is below {PIPELINE_MIN_EPSILON}")));
    }
    let c = &opts.constants;
    if opts.m != c.m {
        return Err(invalid(format!(
            "constants were calibrated for m = {}, not m = {}",
            c.m, opts.m
        )));
    }
    let cutoff = CutoffSpec::new(opts.m)?;
    let eta = cutoff.eta().min(0.5);
    let (s, delta_min) = choose_parameters(d, epsilon, eta, c.sliver_constant, c.s_scale)?;
    let params = PartitionParams::new(s, delta_min, epsilon, eta)?;

    let decomp = WhitneyDecomposition::decompose(d, delta_min)?;
    let mut basis = LocalCosineBasis::build(cutoff, decomp, LocalCosineBasis::DEFAULT_XI_MAX)?;
    if let Some(f) = opts.normalization_fault {
        basis.scale_normalizations(f);
    }
    let partition = GammaPartition::build(&basis, params);
    let counts = count_classes(&partition, &basis.decomposition)?;
    let energy = energy_sums(&partition, &basis)?;

    let quad_order = opts.quad_order.unwrap_or_else(|| OperatorConfig::default_quad_order(d));
    let grid_rate = opts.grid_rate.unwrap_or(OperatorConfig::with_defaults(d)?.grid_rate);
    let config = OperatorConfig::new(d, quad_order, grid_rate)?;
    let residual = residual_sums(&partition, &basis, &config, &energy)?;

    let tail: f64 = basis
        .decomposition
        .intervals
        .iter()
        .filter(|iv| iv.delta_j >= delta_min)
        .map(|iv| high_tail(&c.energy, iv.delta_j, frequency_count(iv.delta_j, basis.xi_max), s))
        .sum();
    let short_intervals = c.sliver_constant * delta_min;
    let residual_budget = energy.low_out + energy.high_in + tail + short_intervals;
    let eps3 = epsilon.powi(3);

    let spectrum = eigen_spectrum(&config)?;
    let band = spectrum.band_indices(epsilon);
    let m_eps = band.len();
    let landau = landau_check(&spectrum);
    let k_bound = theorem_bound_k(d, epsilon, eta, c.k_scale)?;
    let mid_indices = band.first().map(|&lo| (lo, *band.last().unwrap()));
    let spread = |anchor: f64| band.iter().map(|&k| (k as f64 - anchor).abs()).fold(0.0, f64::max);
    let anchor = landau.crossing as f64;
    let window = 2.0 * m_eps as f64;

    let mut checks = vec![
        Check::at_most("residual_sum", residual.total, eps3),
        Check::at_most("residual_vs_leakage", residual.total, residual.bound + residual.tol),
        Check::at_most("residual_budget", residual_budget, eps3),
        Check::at_most("band_count_vs_medium", m_eps as f64, 2.0 * counts.n_med as f64),
        Check::at_most("band_window_nominal", spread(d), window),
        Check::at_most("band_window_anchored", spread(anchor), window),
        Check::at_most("band_window_theorem", spread(d), k_bound),
        Check {
            name: "landau_midpoint".into(),
            measured: landau.crossing as f64,
            bound: d,
            pass: landau.pass,
        },
    ];
    checks.extend(basis_checks(&basis)?);
    if opts.check_refinement {
        let fine = OperatorConfig::new(d, 2 * quad_order, grid_rate)?;
        let m_fine = eigen_spectrum(&fine)?.count_in_band(epsilon);
        checks.push(Check {
            name: "band_count_refinement".into(),
            measured: m_fine as f64,
            bound: m_eps as f64,
            pass: m_fine == m_eps,
        });
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(TheoremReport {
        d,
        epsilon,
        eta,
        s,
        delta_min,
        m_eps,
        gamma_low_count: counts.n_low,
        gamma_med_count: counts.n_med,
        gamma_high_count: counts.n_high,
        residual: residual.total,
        residual_budget,
        k_bound,
        mid_indices,
        landau,
        anchored_window: (anchor - window, anchor + window),
        checks,
        pass,
    })
}

/// Largest interval length whose atoms enter the orthonormality check.
pub const ORTHONORMALITY_MIN_DELTA: f64 = 1.0 / 32.0;
pub const ORTHONORMALITY_TOL: f64 = 1e-6;

/// Orthonormality of the atoms on intervals of length at least [`ORTHONORMALITY_MIN_DELTA`]
/// and the calibrated edge ratio.
pub fn basis_checks(basis: &LocalCosineBasis) -> Result<Vec<Check>> {
    let atoms: Vec<_> = basis
        .atoms
        .iter()
        .filter(|a| a.delta() >= ORTHONORMALITY_MIN_DELTA)
        .cloned()
        .collect();
    let xi_max = atoms.iter().map(|a| a.xi_jk).fold(0.0, f64::max);
    let rate = (8.0 * xi_max).max(64.0);
    let grid = LocalCosineBasis::quadrature_grid(&atoms, rate);
    let gram = crate::localcosine::gram_matrix(&basis.cutoff, &atoms, &grid)?;
    let g = crate::localcosine::summarize_gram(&gram);
    let edge = basis
        .decomposition
        .intervals
        .iter()
        .zip(&basis.widths)
        .map(|(iv, w)| w.eta_left.min(w.eta_right) / iv.delta_j)
        .fold(f64::INFINITY, f64::min);
    Ok(vec![
        Check::at_most("orthonormality", g.max_diagonal_deviation.max(g.max_off_diagonal), ORTHONORMALITY_TOL),
        Check {
            name: "edge_ratio".into(),
            measured: edge,
            bound: crate::calibration::WORST_EDGE_RATIO,
            pass: edge >= crate::calibration::WORST_EDGE_RATIO * (1.0 - 1e-12),
        },
    ])
}

/// Budget-driven bound for a single `(D, ε)`, exposed for reporting.
pub fn leakage_budget(basis: &LocalCosineBasis, delta_min: f64, s: f64, constants: &Calibration) -> (f64, f64) {
    EnergyBudget::measure(basis, delta_min, constants.energy).at(s)
}
