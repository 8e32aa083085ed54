//! Acceptance battery. Prints one line per criterion and exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use plunge_core::analysis::{main_lemma_sweep, run_theorem_pipeline, PipelineOptions};
use plunge_core::calibration::CALIBRATED;
use plunge_core::cutoff::CutoffSpec;
use plunge_core::localcosine::{gram_matrix, summarize_gram, LocalCosineBasis};
use plunge_core::partition::{count_classes, energy_sums, GammaPartition, PartitionParams};
use plunge_core::spectral::{eigen_spectrum, landau_check, OperatorConfig};
use plunge_core::whitney::WhitneyDecomposition;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Gauss–Legendre rule on [-1, 1] by Newton iteration on the three-term recurrence.
fn legendre_rule(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        (PI * t).sin() / (PI * t)
    }
}

/// `∫_I ∫_I sinc²(x − y)` by a tensor composite rule: unit panels, 20 nodes each.
fn double_integral_sinc_sq(d: f64) -> f64 {
    let rule = legendre_rule(20);
    let panels = d.ceil() as usize;
    let h = d / panels as f64;
    let pts: Vec<(f64, f64)> = (0..panels)
        .flat_map(|p| {
            let mid = -0.5 * d + (p as f64 + 0.5) * h;
            rule.iter().map(move |&(x, w)| (mid + 0.5 * h * x, 0.5 * h * w))
        })
        .collect();
    pts.iter()
        .map(|&(x, wx)| pts.iter().map(|&(y, wy)| wy * sinc(x - y).powi(2)).sum::<f64>() * wx)
        .sum()
}

fn trace_identity() -> Outcome {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for d in [2.0, 4.0, 8.0, 16.0, 32.0] {
        let cfg = OperatorConfig::new(d, 32 * d as usize, 32.0).unwrap();
        let s = eigen_spectrum(&cfg).unwrap();
        worst = worst.max((s.trace - d).abs() / d);
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(worst <= 1e-8 && secs <= 60.0, format!("max relative error {worst:.1e}, {secs:.1} s"))
}

fn second_moment() -> Outcome {
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for d in [2.0, 8.0] {
        let s = eigen_spectrum(&OperatorConfig::new(d, 32 * d as usize, 32.0).unwrap()).unwrap();
        let oracle = double_integral_sinc_sq(d);
        worst = worst.max((s.trace_sq - oracle).abs());
        parts.push(format!("D={d}: {:.10} vs {oracle:.10}", s.trace_sq));
    }
    outcome(worst <= 1e-6, format!("{}; max error {worst:.1e}", parts.join(", ")))
}

fn landau_midpoint() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for d in [2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 2.5, 5.3, 8.5, 8.9, 12.7] {
        let r = landau_check(&eigen_spectrum(&OperatorConfig::with_defaults(d).unwrap()).unwrap());
        pass &= r.pass;
        parts.push(format!("{d}:{}/{:?}", r.crossing, r.orientation));
    }
    outcome(pass, format!("D:#(λ≥1/2)/orientation {}", parts.join(" ")))
}

fn orthonormality() -> Outcome {
    let t = Instant::now();
    let cutoff = CutoffSpec::new(4).unwrap();
    let decomp = WhitneyDecomposition::decompose(8.0, 2f64.powi(-5)).unwrap();
    let basis = LocalCosineBasis::build(cutoff, decomp, LocalCosineBasis::DEFAULT_XI_MAX).unwrap();
    let grid = LocalCosineBasis::quadrature_grid(&basis.atoms, 64.0);
    let g = summarize_gram(&gram_matrix(&basis.cutoff, &basis.atoms, &grid).unwrap());
    outcome(
        g.max_diagonal_deviation <= 1e-6 && g.max_off_diagonal <= 1e-5,
        format!(
            "{} atoms, diagonal deviation {:.1e}, off-diagonal {:.1e}, {:.2} s",
            g.size,
            g.max_diagonal_deviation,
            g.max_off_diagonal,
            t.elapsed().as_secs_f64()
        ),
    )
}

fn partition_of_unity() -> Outcome {
    let grid: Vec<f64> = (0..10_000).map(|i| -2.0 + 4.0 * i as f64 / 9_999.0).collect();
    let mut worst = 0.0f64;
    for m in [1, 2, 4] {
        worst = worst.max(CutoffSpec::new(m).unwrap().verify_partition_of_unity(&grid, 1e-9).max_deviation);
    }
    outcome(worst <= 1e-9, format!("max deviation {worst:.1e} over m ∈ {{1, 2, 4}}"))
}

fn fourier_decay() -> Outcome {
    let fit = CutoffSpec::new(4).unwrap().estimate_fourier_decay(1 << 14, 4).unwrap();
    outcome(
        fit.exponent >= 0.5 && fit.decades >= 6.0,
        format!("exponent {:.3}, rate {:.3}, {:.1} decades", fit.exponent, fit.rate, fit.decades),
    )
}

fn local_counts() -> Outcome {
    let mut violations = 0usize;
    let mut intervals = 0usize;
    for d in [8.0, 32.0] {
        let decomp = WhitneyDecomposition::decompose(d, 2f64.powi(-6)).unwrap();
        let basis = LocalCosineBasis::build(CutoffSpec::new(4).unwrap(), decomp, 4.0).unwrap();
        for s in [1.0, 2.0, 4.0, 8.0] {
            let p = PartitionParams::new(s, 2f64.powi(-6), 0.1, 0.25).unwrap();
            let g = GammaPartition::build(&basis, p);
            if count_classes(&g, &basis.decomposition).is_err() {
                violations += 1;
            }
            for iv in &basis.decomposition.intervals {
                intervals += 1;
                // brute-force count of centres within s/δ of the band edge
                let med = (0..(4.0 * (iv.delta_j + 2.0 * s)) as usize)
                    .filter(|&k| ((2 * k + 1) as f64 - 2.0 * iv.delta_j).abs() < 4.0 * s)
                    .count();
                let ours = g.med.iter().filter(|i| i.j == iv.j).count();
                if med as f64 > 10.0 * s || ours != med {
                    violations += 1;
                }
            }
        }
    }
    outcome(violations == 0, format!("{intervals} interval checks, {violations} violations"))
}

fn energy_trend() -> Outcome {
    let d = 16.0;
    let delta_min = 2f64.powi(-6);
    let decomp = WhitneyDecomposition::decompose(d, delta_min).unwrap();
    let basis = LocalCosineBasis::build(CutoffSpec::new(4).unwrap(), decomp, 4.0).unwrap();
    let low_out = |s: f64| {
        let g = GammaPartition::build(&basis, PartitionParams::new(s, delta_min, 0.1, 0.25).unwrap());
        let e = energy_sums(&g, &basis).unwrap();
        (e.low_out, e.low_atoms)
    };
    let (e1, n1) = low_out(1.0);
    let (e8, n8) = low_out(8.0);
    // fit log E = a − c·s^{3/4} where low atoms exist
    let pts: Vec<(f64, f64)> = [1.0, 1.125, 1.25, 1.375, 1.5, 1.625, 1.75]
        .iter()
        .map(|&s| (s, low_out(s).0))
        .filter(|p| p.1 > 0.0)
        .map(|(s, e)| (f64::powf(s, 0.75), e.ln()))
        .collect();
    let n = pts.len() as f64;
    let (mz, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let c_fit = -pts.iter().map(|p| (p.0 - mz) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mz).powi(2)).sum::<f64>();
    let drop_ok = e8 * 10.0 <= e1;
    outcome(
        drop_ok && c_fit > 0.0 && pts.len() >= 3,
        format!(
            "E(1) = {e1:.3e} over {n1} atoms, E(8) = {e8:.3e} over {n8} atoms (no interval ≥ 2s), \
             c_fit = {c_fit:.3} from {} points, per-atom law rate {}",
            pts.len(),
            CALIBRATED.energy.rate
        ),
    )
}

fn counting_lemma() -> Outcome {
    let r = main_lemma_sweep(20_240_601, 10_000);
    outcome(
        r.counterexamples == 0 && r.max_projector_violation <= 1e-10,
        format!(
            "{} instances, {} satisfy the hypothesis, {} counterexamples, projector identities {:.1e}",
            r.instances, r.asserted, r.counterexamples, r.max_projector_violation
        ),
    )
}

fn end_to_end() -> Outcome {
    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    let mut m01 = [0usize; 2];
    for (i, d) in [4.0, 16.0, 64.0].into_iter().enumerate() {
        for eps in [0.1, 0.01] {
            let r = run_theorem_pipeline(&PipelineOptions::new(d, eps, CALIBRATED)).unwrap();
            let window_ok = r
                .mid_indices
                .is_none_or(|(lo, hi)| lo as f64 >= d - 2.0 * r.m_eps as f64 && hi as f64 <= d + 2.0 * r.m_eps as f64);
            let ok = r.residual <= eps.powi(3)
                && r.residual_budget <= eps.powi(3)
                && r.m_eps <= 2 * r.gamma_med_count
                && window_ok
                && r.pass;
            pass &= ok;
            if eps == 0.01 && i != 1 {
                m01[i / 2] = r.m_eps;
            }
            parts.push(format!(
                "({d},{eps}) s={:.0} M={} mid={:?} S={:.0e} budget={:.2e}",
                r.s, r.m_eps, r.mid_indices, r.residual, r.residual_budget
            ));
        }
    }
    let growth = m01[1] as f64 / m01[0].max(1) as f64;
    let secs = t.elapsed().as_secs_f64();
    pass &= growth <= 4.0 && secs <= 600.0;
    outcome(pass, format!("{}; M_0.01(64)/M_0.01(4) = {growth:.2}; {secs:.1} s", parts.join("; ")))
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_plunge-lab");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut csv = Vec::new();
    for dir in &dirs {
        let status = Command::new(bin)
            .args(["spectrum", "--D", "12.7", "--seed", "11", "--formats", "csv", "--out-dir"])
            .arg(dir.path())
            .status()
            .unwrap();
        if !status.success() {
            return outcome(false, format!("spectrum exited with {status}"));
        }
        csv.push(std::fs::read(dir.path().join("eigenvalues.csv")).unwrap());
    }
    outcome(csv[0] == csv[1], format!("{} bytes, identical: {}", csv[0].len(), csv[0] == csv[1]))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("trace identity", trace_identity),
        ("second moment", second_moment),
        ("Landau midpoint", landau_midpoint),
        ("orthonormality", orthonormality),
        ("partition of unity", partition_of_unity),
        ("Fourier decay", fourier_decay),
        ("local count bounds", local_counts),
        ("energy trend", energy_trend),
        ("counting lemma oracle", counting_lemma),
        ("end-to-end plunge width", end_to_end),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        failed += usize::from(!o.pass);
        println!("[{}] {:>2}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
