//! Significance tests against independent references.

mod support;

use qreform::stattests::{welch_t, wilcoxon_signed_rank};
use qreform::synthgen::Rng;
use support::stats::{exact_vs_enumeration, exact_vs_normal, welch_against_reference};

#[test]
fn exact_path_matches_enumeration() {
    exact_vs_enumeration(12, 100).unwrap();
}

#[test]
fn exact_and_normal_paths_agree_for_moderate_n() {
    exact_vs_normal(99, 40).unwrap();
}

#[test]
fn welch_matches_reference_table() {
    let (rows, _) = welch_against_reference(1e-3).unwrap();
    assert_eq!(rows, 10);
}

#[test]
fn p_values_are_scale_invariant() {
    let mut rng = Rng::new(5);
    for _ in 0..200 {
        let n = 2 + rng.below(30);
        let a: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
        let b: Vec<f64> = (0..n + rng.below(4)).map(|_| rng.next_f64() + 0.2).collect();
        let c = 0.5 + rng.below(8) as f64;
        let scale = |xs: &[f64]| xs.iter().map(|x| x * c).collect::<Vec<_>>();
        let (p1, p2) = (welch_t(&a, &b).unwrap().p_value, welch_t(&scale(&a), &scale(&b)).unwrap().p_value);
        assert!((p1 - p2).abs() < 1e-10);
        let d: Vec<f64> = a.iter().map(|x| x - 0.5).collect();
        let (w1, w2) = (wilcoxon_signed_rank(&d).p_value, wilcoxon_signed_rank(&scale(&d)).p_value);
        assert!((w1 - w2).abs() < 1e-10);
    }
}
