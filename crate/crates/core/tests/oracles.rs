//! Library results against independent computations done here from first principles.

use std::f64::consts::PI;

use plunge_core::cutoff::CutoffSpec;
use plunge_core::localcosine::{eval_atom, gram_matrix, LocalCosineBasis};
use plunge_core::sampled::SampledFunction;
use plunge_core::spectral::{apply_t, eigen_spectrum, OperatorConfig};
use plunge_core::whitney::WhitneyDecomposition;

fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        (PI * t).sin() / (PI * t)
    }
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

#[test]
fn second_moment_matches_the_one_dimensional_reduction() {
    // ∫_I∫_I sinc²(x − y) = ∫_{−D}^{D} (D − |t|) sinc²(t) dt
    for d in [3.0, 8.5] {
        let s = eigen_spectrum(&OperatorConfig::with_defaults(d).unwrap()).unwrap();
        let oracle = 2.0 * simpson(|t| (d - t) * sinc(t).powi(2), 0.0, d, 200_000);
        assert!((s.trace_sq - oracle).abs() < 1e-9, "D = {d}: {} vs {oracle}", s.trace_sq);
    }
}

#[test]
fn eigenvalues_are_converged_at_the_default_order() {
    let d = 6.0;
    let coarse = eigen_spectrum(&OperatorConfig::with_defaults(d).unwrap()).unwrap();
    let fine = eigen_spectrum(&OperatorConfig::new(d, 64 * 6, 32.0).unwrap()).unwrap();
    for k in 0..20 {
        assert!((coarse.lambdas[k] - fine.lambdas[k]).abs() < 1e-12, "k = {k}");
    }
}

#[test]
fn gram_entries_match_a_uniform_trapezoid() {
    let cutoff = CutoffSpec::new(4).unwrap();
    let decomp = WhitneyDecomposition::decompose(8.0, 1.0 / 16.0).unwrap();
    let basis = LocalCosineBasis::build(cutoff.clone(), decomp, 4.0).unwrap();
    // a spread of atoms: first, last, and a run of neighbours in the middle
    let n = basis.atoms.len();
    let picks: Vec<usize> = [0, 1, 2, n / 2 - 1, n / 2, n / 2 + 1, n - 2, n - 1].into();
    let atoms: Vec<_> = picks.iter().map(|&i| basis.atoms[i].clone()).collect();
    let grid = LocalCosineBasis::quadrature_grid(&atoms, 64.0);
    let g = gram_matrix(&cutoff, &atoms, &grid).unwrap();
    let h = 1.0 / 8192.0;
    let pts = (8.5 / h) as usize;
    for (r, a) in atoms.iter().enumerate() {
        for (c, b) in atoms.iter().enumerate() {
            // both atoms vanish at the ends of [−4.25, 4.25], so the trapezoid is a plain sum
            let t: f64 = (0..=pts)
                .map(|i| {
                    let x = -4.25 + i as f64 * h;
                    eval_atom(&cutoff, a, x) * eval_atom(&cutoff, b, x)
                })
                .sum::<f64>()
                * h;
            assert!((g[(r, c)] - t).abs() < 1e-9, "({r}, {c}): {} vs {t}", g[(r, c)]);
        }
    }
}

/// Kernel of the discrete band mask on a period-`L` grid: bins with `|ξ| < 1/2` weigh one,
/// the two bins at `±1/2` weigh one half.
fn periodic_sinc(t: f64, period: f64) -> f64 {
    let u = PI * t / period;
    if u.sin().abs() < 1e-15 {
        (PI * t).cos() / u.cos()
    } else {
        (PI * t).sin() / (period * u.tan())
    }
}

#[test]
fn localization_matches_direct_convolution() {
    let d = 6.0;
    let cfg = OperatorConfig::with_defaults(d).unwrap();
    let f = |y: f64| (-(y - 0.7f64).powi(2)).exp() * (2.0 * PI * 0.3 * y).cos();
    let grid = cfg.grid();
    let period = grid.len() as f64 * grid.h;
    let samples = SampledFunction::from_fn(grid.x0, grid.h, grid.len(), f);
    let tf = apply_t(&samples, &cfg).unwrap();
    let l1 = simpson(|y| f(y).abs(), -0.5 * d, 0.5 * d, 40_000);
    for target in [-2.9, -1.3, 0.0, 0.55, 2.2, 2.95] {
        let i = ((target - grid.x0) / grid.h).round() as usize;
        let x = grid.x0 + i as f64 * grid.h;
        let periodic = simpson(|y| periodic_sinc(x - y, period) * f(y), -0.5 * d, 0.5 * d, 40_000);
        let aperiodic = simpson(|y| sinc(x - y) * f(y), -0.5 * d, 0.5 * d, 40_000);
        // the grid sum sees the jump of f at ∂I, an O(h·|f(±D/2)|) trapezoid error
        assert!((tf.values[i] - periodic).abs() < 2e-4, "x = {x}: {} vs {periodic}", tf.values[i]);
        // K_L(t) − sinc(t) = sinc(t)·(u/tan u − 1) with u = πt/L, and
        // |u/tan u − 1| ≤ 1.2·u²/3 for u ≤ 0.6, so the gap is at most 1.2·π·D·‖f‖₁/(3L²)
        assert!(PI * d / period <= 0.6);
        let wrap = 1.2 * PI * d * l1 / (3.0 * period * period);
        assert!((tf.values[i] - aperiodic).abs() < wrap, "x = {x}");
    }
}

/// Taylor coefficients of θ at `x0` up to order `n`, by power-series arithmetic.
fn theta_jet(m: u32, x0: f64, a_at_x0: f64, scale: f64, n: usize) -> Vec<f64> {
    let mf = m as f64;
    // (c + d·t)^{−m} = c^{−m} Σ binom(−m, j) (d/c)^j t^j
    let inv_pow = |c: f64, dd: f64| -> Vec<f64> {
        let mut out = vec![c.powf(-mf)];
        for j in 1..=n {
            let prev = out[j - 1];
            out.push(prev * (-mf - (j - 1) as f64) / j as f64 * dd / c);
        }
        out
    };
    let left = inv_pow(1.0 - x0, -1.0);
    let right = inv_pow(1.0 + x0, 1.0);
    let f: Vec<f64> = (0..=n).map(|j| -left[j] - right[j]).collect();
    // g = exp(f): n g_n = Σ_{j=1}^{n} j f_j g_{n−j}
    let mut g = vec![f[0].exp()];
    for k in 1..=n {
        let s: f64 = (1..=k).map(|j| j as f64 * f[j] * g[k - j]).sum();
        g.push(s / k as f64);
    }
    // A = scale·∫a, value supplied
    let mut a = vec![a_at_x0];
    for k in 1..=n {
        a.push(scale * g[k - 1] / k as f64);
    }
    let (mut s, mut c) = (vec![a[0].sin()], vec![a[0].cos()]);
    for k in 1..=n {
        let sk: f64 = (1..=k).map(|j| j as f64 * a[j] * c[k - j]).sum::<f64>() / k as f64;
        let ck: f64 = -(1..=k).map(|j| j as f64 * a[j] * s[k - j]).sum::<f64>() / k as f64;
        s.push(sk);
        c.push(ck);
    }
    s
}

#[test]
fn derivative_maxima_match_taylor_jets() {
    for m in [2, 4] {
        let spec = CutoffSpec::new(m).unwrap();
        let report = spec.verify_derivative_growth(6).unwrap();
        let bump = |x: f64| (-(1.0 - x).powi(-(m as i32)) - (1.0 + x).powi(-(m as i32))).exp();
        let total = simpson(bump, -1.0, 1.0, 200_000);
        let scale = PI / (2.0 * total);
        let mut maxima = [0.0f64; 7];
        let steps = 4000;
        let mut area = simpson(bump, -1.0, -0.95, 2000);
        let mut prev = -0.95;
        for i in 0..=steps {
            let x0 = -0.95 + 1.9 * i as f64 / steps as f64;
            area += simpson(bump, prev, x0, 8);
            prev = x0;
            let jet = theta_jet(m, x0, scale * area, scale, 6);
            let mut fact = 1.0;
            for (k, mk) in maxima.iter_mut().enumerate().skip(1) {
                fact *= k as f64;
                *mk = mk.max((jet[k] * fact).abs());
            }
        }
        for k in 1..=6 {
            let got = report.max_abs_derivative[k];
            let rel = (got - maxima[k]).abs() / maxima[k];
            assert!(rel < 0.02, "m = {m}, order {k}: {got} vs {}", maxima[k]);
        }
    }
}

#[test]
fn unsharp_cutoff_decay_exponent_is_stable_under_refinement() {
    let spec = CutoffSpec::new(1).unwrap();
    let reference = spec.estimate_fourier_decay(1 << 20, 4).unwrap();
    let coarse = spec.estimate_fourier_decay(1 << 14, 4).unwrap();
    assert!((reference.exponent - 0.395).abs() < 0.01, "{reference:?}");
    assert!((coarse.exponent - reference.exponent).abs() < 0.015, "{coarse:?}");
}
