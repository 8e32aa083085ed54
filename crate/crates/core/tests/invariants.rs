//! Structural invariants over randomized inputs.

use proptest::prelude::*;

use plunge_core::analysis::{
    band_count, check_main_lemma, choose_parameters, projector_identities, random_instance, theorem_bound_k,
    InstanceKind,
};
use plunge_core::calibration::CALIBRATED;
use plunge_core::cutoff::CutoffSpec;
use plunge_core::localcosine::{gram_matrix, select_transition_widths, summarize_gram, LocalCosineBasis};
use plunge_core::partition::{classify, low_range, med_range, FrequencyClass, PartitionParams};
use plunge_core::sampled::SampledFunction;
use plunge_core::spectral::{apply_t, OperatorConfig};
use plunge_core::whitney::WhitneyDecomposition;

fn kind(i: u8) -> InstanceKind {
    match i % 3 {
        0 => InstanceKind::Random,
        1 => InstanceKind::Greedy,
        _ => InstanceKind::NearlyAligned,
    }
}

/// `(D, δ_stop)` with `δ_stop` log-uniform in `[D/4096, D/9]`.
fn whitney_input() -> impl Strategy<Value = (f64, f64)> {
    (2.0f64..200.0, 0.0f64..1.0).prop_map(|(d, u)| {
        let lo = (d / 4096.0).ln();
        let hi = (d / 9.0).ln();
        (d, (lo + u * (hi - lo)).exp())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn whitney_intervals_tile_the_interior((d, delta_stop) in whitney_input()) {
        let w = WhitneyDecomposition::decompose(d, delta_stop).unwrap();
        prop_assert!(w.w2_violations().is_empty());
        prop_assert!(w.max_adjacent_ratio() <= 2.0);
        let half = 0.5 * d;
        for iv in &w.intervals {
            prop_assert!(iv.delta_j >= delta_stop);
            prop_assert!(iv.x_j >= -half && iv.right() <= half);
        }
        for pair in w.intervals.windows(2) {
            prop_assert!(pair[0].right() <= pair[1].x_j);
        }
        // only the two boundary slivers are left uncovered
        let gaps = w.intervals.windows(2).filter(|p| p[0].right() < p[1].x_j).count();
        prop_assert_eq!(gaps, 0);
        prop_assert!(w.sliver_measure() >= 0.0);
        // the calibrated constant covers stop lengths up to min(1/2, D/16), with the 1.2 overlap factor
        if delta_stop <= 0.5f64.min(d / 16.0) {
            prop_assert!(1.2 * w.sliver_measure() <= CALIBRATED.sliver_constant * delta_stop);
        }
    }

    #[test]
    fn transition_widths_are_admissible((d, delta_stop) in whitney_input()) {
        let w = WhitneyDecomposition::decompose(d, delta_stop).unwrap();
        let widths = select_transition_widths(&w).unwrap();
        for (iv, tw) in w.intervals.iter().zip(&widths) {
            prop_assert!(tw.admissible_for(iv.delta_j), "{:?} on δ = {}", tw, iv.delta_j);
            prop_assert!(iv.delta_j / tw.eta_left.min(tw.eta_right) <= 1.0 / CALIBRATED.edge_ratio);
        }
    }

    #[test]
    fn theta_is_a_monotone_partition_of_unity(m in 1u32..=8, x in -1.5f64..1.5, y in -1.5f64..1.5) {
        let c = CutoffSpec::new(m).unwrap();
        let (a, b) = (c.eval_theta(x), c.eval_theta(-x));
        prop_assert!((a * a + b * b - 1.0).abs() <= 1e-9);
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        prop_assert!(c.eval_theta(lo) <= c.eval_theta(hi) + 1e-15);
    }

    #[test]
    fn classes_match_their_index_ranges(delta in 0.01f64..1000.0, s in 1.0f64..50.0, k in 0usize..4000) {
        let params = PartitionParams::new(s, 0.01, 0.1, 0.25).unwrap();
        let class = classify(delta, k, &params);
        let (low, med) = (low_range(delta, s), med_range(delta, s));
        prop_assert!(low.end <= med.start);
        prop_assert_eq!(class == FrequencyClass::Low, low.contains(&k));
        prop_assert_eq!(class == FrequencyClass::Med, med.contains(&k));
    }

    #[test]
    fn parameters_move_monotonically_in_epsilon(
        d in 2.0f64..1e6,
        e1 in 0.001f64..0.49,
        e2 in 0.001f64..0.49,
        m in 2u32..=8,
    ) {
        let (small, large) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let eta = 1.0 / m as f64;
        let c = CALIBRATED;
        let (s_small, dm_small) = choose_parameters(d, small, eta, c.sliver_constant, c.s_scale).unwrap();
        let (s_large, dm_large) = choose_parameters(d, large, eta, c.sliver_constant, c.s_scale).unwrap();
        prop_assert!(s_small >= s_large);
        prop_assert!(dm_small <= dm_large);
        prop_assume!((d.ln() / large).ln() > 0.0);
        let k_small = theorem_bound_k(d, small, eta, 1.0).unwrap();
        let k_large = theorem_bound_k(d, large, eta, 1.0).unwrap();
        prop_assert!(k_small >= k_large);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn main_lemma_holds_on_random_instances(
        seed in any::<u64>(),
        n in 2usize..=10,
        eps in 0.02f64..0.45,
        k in 0u8..3,
    ) {
        let inst = random_instance(seed, n, eps, kind(k));
        let r = check_main_lemma(&inst);
        prop_assert!(!r.asserted || r.conclusion_holds, "{:?}", r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn band_projector_identities(seed in any::<u64>(), n in 2usize..=10, eps in 0.02f64..0.45, k in 0u8..3) {
        let inst = random_instance(seed, n, eps, kind(k));
        let id = projector_identities(&inst);
        prop_assert!(id.max_violation() <= 1e-10, "{:?}", id);
    }

    #[test]
    fn band_count_shrinks_as_epsilon_grows(seed in any::<u64>(), n in 2usize..=12, e1 in 0.0f64..0.5, e2 in 0.0f64..0.5) {
        let inst = random_instance(seed, n, 0.1, InstanceKind::Random);
        let (small, large) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(band_count(&inst.t, small) >= band_count(&inst.t, large));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn localization_is_a_positive_contraction(
        d in 2.0f64..10.0,
        centres in prop::collection::vec(-5.0f64..5.0, 1..4),
        freqs in prop::collection::vec(0.0f64..2.0, 4),
        seed in any::<u64>(),
    ) {
        let cfg = OperatorConfig::with_defaults(d).unwrap();
        let grid = cfg.grid();
        let signal = |shift: f64| {
            let centres = centres.clone();
            let freqs = freqs.clone();
            move |x: f64| {
                centres
                    .iter()
                    .zip(&freqs)
                    .map(|(&c, &f)| (-(x - c).powi(2)).exp() * (std::f64::consts::TAU * f * x + shift).cos())
                    .sum::<f64>()
            }
        };
        let f = SampledFunction::from_fn(grid.x0, grid.h, grid.len(), signal(0.0));
        let g = SampledFunction::from_fn(grid.x0, grid.h, grid.len(), signal((seed % 7) as f64));
        let tf = apply_t(&f, &cfg).unwrap();
        let tg = apply_t(&g, &cfg).unwrap();
        let ttf = apply_t(&tf, &cfg).unwrap();
        let scale = f.norm_sq().max(g.norm_sq()).max(1e-300);
        prop_assert!((tf.dot(&g) - f.dot(&tg)).abs() <= 1e-10 * scale);
        prop_assert!(ttf.dot(&f) <= tf.dot(&f) + 1e-10 * scale);
        prop_assert!(tf.dot(&f) >= -1e-10 * scale);
        prop_assert!(tf.norm_sq() <= f.norm_sq() * (1.0 + 1e-10));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn small_bases_are_orthonormal(d in 2.0f64..6.0, m in 2u32..=6) {
        let cutoff = CutoffSpec::new(m).unwrap();
        let w = WhitneyDecomposition::decompose(d, 1.0 / 16.0).unwrap();
        let basis = LocalCosineBasis::build(cutoff.clone(), w, 2.0).unwrap();
        let grid = LocalCosineBasis::quadrature_grid(&basis.atoms, 64.0);
        let g = gram_matrix(&cutoff, &basis.atoms, &grid).unwrap();
        let s = summarize_gram(&g);
        prop_assert!(s.max_diagonal_deviation <= 1e-6, "{:?}", s);
        prop_assert!(s.max_off_diagonal <= 1e-6, "{:?}", s);
    }
}
