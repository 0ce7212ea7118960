//! Property tests for the structural invariants of the cumulant, the MAP
//! estimator and the comparison edits.

mod common;

use gbt_core::properties::{
    inverse_hessian_structure, measure_resilience, neutral_comparison, resilience_bound, ProbeConfig,
};
use gbt_core::sim::{erdos_renyi_graph, sample_ground_truth, synthesize_comparisons};
use gbt_core::solver::{hessian, map_estimate, map_estimate_gaussian};
use gbt_core::{ComparisonEdit, ComparisonMatrix, PriorConfig, RootLaw, ScoreVector, SolverOptions};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::family_laws;

fn law_strategy() -> impl Strategy<Value = RootLaw> {
    (0..family_laws().len()).prop_map(|i| family_laws()[i].clone())
}

fn instance(law: &RootLaw, n: usize, p: f64, seed: u64) -> ComparisonMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = sample_ground_truth(n, 1.0, &mut rng).unwrap();
    let mut pairs = erdos_renyi_graph(n, p, &mut rng).unwrap();
    if pairs.is_empty() {
        pairs.push((0, 1));
    }
    synthesize_comparisons(law, &truth, &pairs, &mut rng).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn cumulant_is_even_and_convex(law in law_strategy(), t in -30.0f64..30.0) {
        let (p, m) = (law.cgf_triple(t), law.cgf_triple(-t));
        prop_assert!((p.value - m.value).abs() <= 1e-12 * (1.0 + p.value.abs()));
        prop_assert!((p.first + m.first).abs() <= 1e-12 * (1.0 + p.first.abs()));
        prop_assert!((p.second - m.second).abs() <= 1e-10 * (1.0 + p.second.abs()));
        prop_assert!(p.value >= 0.0);
        prop_assert!(p.second > 0.0);
        prop_assert!(p.first * t >= 0.0);
        if law.is_bounded() {
            prop_assert!(p.first.abs() <= law.r_max());
        }
    }

    #[test]
    fn scores_sum_to_zero_and_obey_sup_norm(
        law in law_strategy(), n in 2usize..25, p in 0.05f64..1.0, s2 in 0.05f64..10.0, seed in any::<u64>()
    ) {
        let r = instance(&law, n, p, seed);
        let prior = PriorConfig::new(s2).unwrap();
        let (s, report) = map_estimate(&law, &prior, &r, &SolverOptions::default()).unwrap();
        prop_assert!(report.converged);
        prop_assert!(s.sum().abs() <= 1e-8 * n as f64);
        if law.is_bounded() {
            for (a, d) in r.degrees().into_iter().enumerate() {
                prop_assert!(s.values()[a].abs() <= 2.0 * d as f64 * law.r_max() * s2 + 1e-6);
            }
        }
    }

    #[test]
    fn gaussian_estimate_is_linear_in_the_data(
        n in 2usize..30, p in 0.1f64..1.0, s0 in 0.2f64..4.0, s2 in 0.1f64..5.0, lambda in -20.0f64..20.0, seed in any::<u64>()
    ) {
        let law = RootLaw::gaussian(s0).unwrap();
        let r = instance(&law, n, p, seed);
        let prior = PriorConfig::new(s2).unwrap();
        let base = map_estimate_gaussian(s0, &prior, &r).unwrap();
        let scaled = map_estimate_gaussian(s0, &prior, &r.scaled(lambda)).unwrap();
        for (x, y) in base.values().iter().zip(scaled.values()) {
            prop_assert!((lambda * x - y).abs() <= 1e-10 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn certified_error_bounds_distance_to_optimum(
        law in law_strategy(), n in 3usize..20, p in 0.1f64..0.8, s2 in 0.2f64..5.0, seed in any::<u64>()
    ) {
        let r = instance(&law, n, p, seed);
        let prior = PriorConfig::new(s2).unwrap();
        let (reference, rr) = map_estimate(&law, &prior, &r, &SolverOptions::default().with_tolerance(1e-12)).unwrap();
        let (s, report) = map_estimate(&law, &prior, &r, &SolverOptions::default().with_tolerance(1e-4)).unwrap();
        prop_assert!(report.certified_error <= 1e-4);
        prop_assert!(s.distance(&reference).unwrap() <= report.certified_error + rr.certified_error);
    }

    #[test]
    fn hessian_is_diagonally_dominant_with_m_matrix_inverse(
        law in law_strategy(), n in 2usize..12, p in 0.0f64..1.0, s2 in 0.1f64..5.0, seed in any::<u64>(),
        spread in 0.0f64..4.0
    ) {
        let r = instance(&law, n, p, seed);
        let prior = PriorConfig::new(s2).unwrap();
        let values = (0..n).map(|i| spread * ((i as f64 * 1.7 + seed as f64).sin())).collect();
        let theta = ScoreVector::new(r.alternatives().clone(), values).unwrap();
        let h = hessian(&law, &prior, &r, &theta).unwrap();
        prop_assert!(h.is_strictly_diagonally_dominant());
        prop_assert!(inverse_hessian_structure(&h).unwrap().holds());
    }

    #[test]
    fn neutral_comparison_leaves_scores_fixed(
        law in law_strategy(), n in 3usize..8, seed in any::<u64>()
    ) {
        let r = instance(&law, n, 0.5, seed);
        let missing = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).find(|&(a, b)| !r.contains(a, b));
        prop_assume!(missing.is_some());
        let (a, b) = missing.unwrap();
        let prior = PriorConfig::new(1.0).unwrap();
        let opts = SolverOptions::default().with_tolerance(1e-10);
        let neutral = neutral_comparison(&law, &prior, &r, a, b, &opts).unwrap();
        prop_assert!(law.in_hull(neutral.value));
        let (base, _) = map_estimate(&law, &prior, &r, &opts).unwrap();
        let (with, _) = map_estimate(&law, &prior, &r.apply_edit(&ComparisonEdit::add(a, b, neutral.value)).unwrap(), &opts).unwrap();
        prop_assert!(base.distance(&with).unwrap() <= 1e-9);
    }

    #[test]
    fn edits_round_trip(n in 3usize..10, seed in any::<u64>(), v in -1.0f64..1.0) {
        let r = instance(&RootLaw::uniform(), n, 0.5, seed);
        let edit = match r.pairs().next() {
            Some((a, b, old)) if old != v => ComparisonEdit::change(a, b, v),
            Some((a, b, _)) => ComparisonEdit::remove(a, b),
            None => ComparisonEdit::add(0, 1, v),
        };
        let edited = r.apply_edit(&edit).unwrap();
        prop_assert_eq!(r.edit_distance(&edited).unwrap(), 1);
        let back = edited.apply_edit(&edit.inverse(&r).unwrap()).unwrap();
        prop_assert_eq!(r.edit_distance(&back).unwrap(), 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn resilience_ratio_stays_below_bound(i in 0usize..5, s2 in 0.2f64..3.0, seed in any::<u64>()) {
        let law = common::bounded_laws()[i].clone();
        let prior = PriorConfig::new(s2).unwrap();
        let config = ProbeConfig { probes: 40, max_edits: 2, seed, ..ProbeConfig::default() };
        let probe = measure_resilience(&law, &prior, &config).unwrap();
        prop_assert!(probe.within_bound(), "{} ratio {} bound {}", law, probe.observed_ratio, resilience_bound(&law, &prior));
    }
}
