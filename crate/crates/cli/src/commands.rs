//! One function per subcommand. Each returns its in-memory results and writes the
//! requested files under `out_dir`.

use std::path::PathBuf;

use plunge_core::analysis::{choose_parameters, main_lemma_sweep, run_theorem_pipeline, theorem_bound_k, Check, PipelineOptions, SweepSummary, TheoremReport};
use plunge_core::calibration::{calibrate, Calibration, CalibrationReport, CALIBRATED, SLIVER_RATIO_BOUND};
use plunge_core::cutoff::CutoffSpec;
use plunge_core::localcosine::{gram_matrix, summarize_gram, GramSummary, LocalCosineBasis};
use plunge_core::partition::{count_classes, energy_sums, required_grid_rate, residual_sums, ClassCounts, EnergyReport, GammaPartition, PartitionParams, ResidualReport};
use plunge_core::spectral::{eigen_spectrum, landau_check, OperatorConfig, Spectrum};
use plunge_core::whitney::WhitneyDecomposition;
use serde::Serialize;
use serde_json::json;

use crate::output::{eigenvalue_csv, section, write_json, write_text, Envelope};
use crate::svg::{plunge_plot, PlotSpec};
use crate::{Failure, Format, RunConfig};

pub type CmdResult<T> = std::result::Result<T, Failure>;

pub const TRACE_REL_TOL: f64 = 1e-8;
pub const UNITY_TOL: f64 = 1e-9;
pub const UNITY_GRID: usize = 10_000;
pub const PROJECTOR_TOL: f64 = 1e-10;

/// The calibrated constants, if they apply to the configured cutoff.
fn constants_for(cfg: &RunConfig) -> Option<Calibration> {
    (cfg.m == CALIBRATED.m).then_some(CALIBRATED)
}

pub struct SpectrumOutcome {
    pub spectrum: Spectrum,
    pub checks: Vec<Check>,
    pub k_bound: Option<f64>,
    pub files: Vec<PathBuf>,
}

fn spectrum_checks(spec: &Spectrum) -> Vec<Check> {
    let landau = landau_check(spec);
    vec![
        Check::at_most("trace_identity", (spec.trace - spec.d).abs() / spec.d, TRACE_REL_TOL),
        Check {
            name: "landau_midpoint".into(),
            measured: landau.crossing as f64,
            bound: spec.d,
            pass: landau.pass,
        },
    ]
}

pub fn cmd_spectrum(cfg: &RunConfig) -> CmdResult<SpectrumOutcome> {
    let spectrum = eigen_spectrum(&cfg.operator()?)?;
    let checks = spectrum_checks(&spectrum);
    let k_bound = match constants_for(cfg) {
        Some(c) => Some(theorem_bound_k(cfg.d, cfg.epsilon, cfg.eta.min(0.5), c.k_scale)?),
        None => None,
    };
    let mut files = Vec::new();
    if cfg.wants(Format::Csv) {
        files.push(write_text(&cfg.out_dir, "eigenvalues.csv", &eigenvalue_csv(&spectrum.lambdas))?);
    }
    if cfg.wants(Format::Json) {
        let mut env = Envelope::new(cfg, checks.clone());
        env.spectrum = Some(spectrum_section(&spectrum, cfg.epsilon, k_bound));
        files.push(write_json(&cfg.out_dir, "spectrum.json", &env)?);
    }
    if cfg.wants(Format::Svg) {
        files.push(write_text(&cfg.out_dir, "plunge.svg", &plot(cfg, &spectrum, k_bound))?);
    }
    Ok(SpectrumOutcome {
        spectrum,
        checks,
        k_bound,
        files,
    })
}

fn spectrum_section(spec: &Spectrum, epsilon: f64, k_bound: Option<f64>) -> serde_json::Value {
    json!({
        "lambdas": spec.lambdas,
        "D": spec.d,
        "quad_order": spec.quad_order,
        "trace": spec.trace,
        "trace_sq": spec.trace_sq,
        "band_indices": spec.band_indices(epsilon),
        "landau": section(&landau_check(spec)),
        "K_bound": k_bound,
    })
}

fn plot(cfg: &RunConfig, spec: &Spectrum, k_bound: Option<f64>) -> String {
    plunge_plot(&PlotSpec {
        lambdas: &spec.lambdas,
        d: cfg.d,
        window: k_bound.map(|k| (cfg.d - k, cfg.d + k)),
        log_scale: cfg.log_scale,
        title: format!("eigenvalues, D = {}, quad order {}", cfg.d, cfg.quad_order),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BasisOutcome {
    pub intervals: usize,
    pub atoms: usize,
    pub grid_nodes: usize,
    pub gram: GramSummary,
    pub checks: Vec<Check>,
}

pub fn cmd_basis(cfg: &RunConfig) -> CmdResult<BasisOutcome> {
    let cutoff = CutoffSpec::new(cfg.m)?;
    let decomp = WhitneyDecomposition::decompose(cfg.d, cfg.delta_stop)?;
    let mut basis = LocalCosineBasis::build(cutoff, decomp, LocalCosineBasis::DEFAULT_XI_MAX)?;
    if let Some(f) = cfg.fault_normalization {
        basis.scale_normalizations(f);
    }
    let rate = cfg.grid_rate.max(8.0 * basis.max_frequency());
    let grid = LocalCosineBasis::quadrature_grid(&basis.atoms, rate);
    let gram = summarize_gram(&gram_matrix(&basis.cutoff, &basis.atoms, &grid)?);
    let w = &basis.decomposition;
    let checks = vec![
        Check::at_most(
            "orthonormality",
            gram.max_diagonal_deviation.max(gram.max_off_diagonal),
            plunge_core::analysis::ORTHONORMALITY_TOL,
        ),
        Check::at_most("whitney_w2_violations", w.w2_violations().len() as f64, 0.0),
        Check::at_most("adjacent_ratio", w.max_adjacent_ratio(), 4.0),
    ];
    let out = BasisOutcome {
        intervals: w.len(),
        atoms: basis.len(),
        grid_nodes: grid.len(),
        gram,
        checks: checks.clone(),
    };
    if cfg.wants(Format::Csv) {
        let mut csv = String::from("j,k,x_j,delta_j,xi,c_jk\n");
        for a in &basis.atoms {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                a.index.j, a.index.k, a.window.x_j, a.window.delta_j, a.xi_jk, a.c_jk
            ));
        }
        write_text(&cfg.out_dir, "atoms.csv", &csv)?;
    }
    if cfg.wants(Format::Json) {
        let mut env = Envelope::new(cfg, checks);
        env.basis = Some(json!({
            "intervals": section(&w.intervals),
            "widths": section(&basis.widths),
            "sliver_measure": w.sliver_measure(),
            "atoms": out.atoms,
            "grid_nodes": out.grid_nodes,
            "gram": section(&out.gram),
        }));
        write_json(&cfg.out_dir, "basis.json", &env)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionOutcome {
    pub params: PartitionParams,
    pub counts: ClassCounts,
    pub energy: EnergyReport,
    pub residual: ResidualReport,
    pub checks: Vec<Check>,
}

/// Partition at the calibrated `(s, δ_min)`, or at `--s` with `δ_min = --delta-stop`.
pub fn cmd_partition(cfg: &RunConfig) -> CmdResult<PartitionOutcome> {
    let eta = cfg.eta.min(0.5);
    let (s, delta_min) = match (cfg.s, constants_for(cfg)) {
        (Some(s), _) => (s, cfg.delta_stop),
        (None, Some(c)) => choose_parameters(cfg.d, cfg.epsilon, eta, c.sliver_constant, c.s_scale)?,
        (None, None) => {
            return Err(plunge_core::Error::InvalidParameter(format!(
                "no calibrated constants for m = {}; pass --s",
                cfg.m
            ))
            .into())
        }
    };
    let params = PartitionParams::new(s, delta_min, cfg.epsilon, eta)?;
    let cutoff = CutoffSpec::new(cfg.m)?;
    let decomp = WhitneyDecomposition::decompose(cfg.d, delta_min)?;
    let basis = LocalCosineBasis::build(cutoff, decomp, LocalCosineBasis::DEFAULT_XI_MAX)?;
    let partition = GammaPartition::build(&basis, params);
    let counts = count_classes(&partition, &basis.decomposition)?;
    let energy = energy_sums(&partition, &basis)?;
    let used: Vec<_> = basis
        .atoms
        .iter()
        .filter(|a| partition.low.contains(&a.index) || partition.high.contains(&a.index))
        .collect();
    let rate = cfg.grid_rate.max(required_grid_rate(&used));
    let residual = residual_sums(&partition, &basis, &OperatorConfig::new(cfg.d, cfg.quad_order, rate)?, &energy)?;
    let checks = vec![Check::at_most(
        "residual_vs_leakage",
        residual.total,
        residual.bound + residual.tol,
    )];
    let out = PartitionOutcome {
        params,
        counts,
        energy,
        residual,
        checks: checks.clone(),
    };
    if cfg.wants(Format::Json) {
        let mut env = Envelope::new(cfg, checks);
        env.partition = Some(section(&out));
        write_json(&cfg.out_dir, "partition.json", &env)?;
    }
    if cfg.wants(Format::Csv) {
        let mut csv = String::from("j,delta,low,med,high\n");
        for c in &out.counts.per_interval {
            csv.push_str(&format!("{},{},{},{},{}\n", c.j, c.delta, c.low, c.med, c.high));
        }
        write_text(&cfg.out_dir, "classes.csv", &csv)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOutcome {
    pub theorem: TheoremReport,
    pub sweep: SweepSummary,
    pub checks: Vec<Check>,
    pub pass: bool,
}

fn verify_battery(cfg: &RunConfig) -> CmdResult<VerifyOutcome> {
    let constants = constants_for(cfg).ok_or_else(|| {
        plunge_core::Error::InvalidParameter(format!("no calibrated constants for m = {}", cfg.m))
    })?;
    let mut opts = PipelineOptions::new(cfg.d, cfg.epsilon, constants);
    opts.quad_order = Some(cfg.quad_order);
    opts.grid_rate = Some(cfg.grid_rate);
    opts.check_refinement = cfg.refine;
    opts.normalization_fault = cfg.fault_normalization;
    let theorem = run_theorem_pipeline(&opts)?;

    let spectrum = eigen_spectrum(&cfg.operator()?)?;
    let mut checks = theorem.checks.clone();
    checks.push(spectrum_checks(&spectrum).remove(0));
    checks.push(Check::at_most(
        "band_nesting",
        spectrum.count_in_band(0.49) as f64,
        spectrum.count_in_band(cfg.epsilon.min(0.49)) as f64,
    ));
    let grid: Vec<f64> = (0..UNITY_GRID)
        .map(|i| -2.0 + 4.0 * i as f64 / (UNITY_GRID - 1) as f64)
        .collect();
    let unity = CutoffSpec::new(cfg.m)?.verify_partition_of_unity(&grid, UNITY_TOL);
    checks.push(Check::at_most("partition_of_unity", unity.max_deviation, UNITY_TOL));
    let sweep = main_lemma_sweep(cfg.seed, cfg.instances);
    checks.push(Check::at_most("counting_lemma_counterexamples", sweep.counterexamples as f64, 0.0));
    checks.push(Check::at_most("projector_identities", sweep.max_projector_violation, PROJECTOR_TOL));
    let pass = checks.iter().all(|c| c.pass);
    Ok(VerifyOutcome {
        theorem,
        sweep,
        checks,
        pass,
    })
}

fn write_report(cfg: &RunConfig, v: &VerifyOutcome, spectrum: Option<&SpectrumOutcome>) -> CmdResult<()> {
    if cfg.wants(Format::Json) {
        let mut env = Envelope::new(cfg, v.checks.clone());
        env.theorem = Some(json!({
            "report": section(&v.theorem),
            "counting_lemma": section(&v.sweep),
        }));
        env.spectrum = spectrum.map(|s| spectrum_section(&s.spectrum, cfg.epsilon, s.k_bound));
        write_json(&cfg.out_dir, "report.json", &env)?;
    }
    Ok(())
}

pub fn cmd_verify(cfg: &RunConfig) -> CmdResult<VerifyOutcome> {
    let v = verify_battery(cfg)?;
    write_report(cfg, &v, None)?;
    for c in v.checks.iter().filter(|c| !c.pass) {
        eprintln!("check failed: {} (measured {:e}, bound {:e})", c.name, c.measured, c.bound);
    }
    Ok(v)
}

pub fn cmd_report(cfg: &RunConfig) -> CmdResult<VerifyOutcome> {
    let s = cmd_spectrum(cfg)?;
    let v = verify_battery(cfg)?;
    write_report(cfg, &v, Some(&s))?;
    Ok(v)
}

pub fn cmd_calibrate(cfg: &RunConfig) -> CmdResult<CalibrationReport> {
    let r = calibrate(cfg.m)?;
    if cfg.wants(Format::Json) {
        let frozen = constants_for(cfg);
        let mut checks = vec![Check::at_most("sliver_ratio", r.sliver_ratio, SLIVER_RATIO_BOUND)];
        checks.extend(match frozen {
            Some(f) => {
                let pairs = [
                    ("energy_amplitude", r.constants.energy.amplitude, f.energy.amplitude),
                    ("energy_rate", r.constants.energy.rate, f.energy.rate),
                    ("sliver_constant", r.constants.sliver_constant, f.sliver_constant),
                    ("s_scale", r.constants.s_scale, f.s_scale),
                    ("k_scale", r.constants.k_scale, f.k_scale),
                    ("whitney_count", r.constants.whitney_count, f.whitney_count),
                    ("med_count", r.constants.med_count, f.med_count),
                ];
                pairs
                    .iter()
                    .map(|&(n, got, want)| Check {
                        name: format!("frozen_{n}"),
                        measured: got,
                        bound: want,
                        pass: got == want,
                    })
                    .collect()
            }
            None => Vec::new(),
        });
        let mut env = Envelope::new(cfg, checks);
        env.calibration = Some(section(&r));
        write_json(&cfg.out_dir, "calibration.json", &env)?;
    }
    Ok(r)
}
