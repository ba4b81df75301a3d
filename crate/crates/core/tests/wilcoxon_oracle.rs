use keyprosody_core::stats::{normal_p, wilcoxon_normal_approximation, wilcoxon_signed_rank, Stars};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod oracles;
use oracles::enumerate_p;

fn pairs(diffs: &[f64]) -> Vec<(f64, f64)> {
    diffs.iter().map(|d| (1.0, 1.0 + d)).collect()
}

#[test]
fn three_positive_ones() {
    let r = wilcoxon_signed_rank(&pairs(&[1.0, 1.0, 1.0]));
    assert!((r.p_value - 0.25).abs() < 1e-12);
    assert_eq!(r.stars, Stars::None);
    assert!(r.exact);
}

#[test]
fn five_hundred_random_samples_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(20200);
    for case in 0..500 {
        let n = rng.random_range(1..=12);
        let diffs: Vec<f64> = (0..n).map(|_| rng.random_range(-4i32..=4) as f64 * 0.5).collect();
        let want = enumerate_p(&diffs);
        let got = wilcoxon_signed_rank(&pairs(&diffs)).p_value;
        assert!((got - want).abs() < 1e-12, "case {case} {diffs:?}: {got} vs {want}");
    }
}

#[test]
fn scipy_reference_values() {
    // scipy.stats.wilcoxon(method="exact")
    let p = wilcoxon_signed_rank(&pairs(&[1.0, 2.0, 3.0, -4.0, 5.0, 6.0, 7.0, 8.0])).p_value;
    assert!((p - 0.0546875).abs() < 1e-12);
    let p = wilcoxon_signed_rank(&pairs(&[
        1.5, -2.25, 3.0, 4.5, -0.5, 6.0, 7.0, 8.5, 9.0, 10.25, -11.0, 12.0,
    ]))
    .p_value;
    assert!((p - 0.06396484375).abs() < 1e-12);
    // scipy.stats.wilcoxon(method="approx", correction=True), n = 30 with ties
    let x = [
        0.5, 1.5, -0.5, 2.0, 3.0, 1.0, 1.0, -1.0, 2.5, 0.5, 1.5, 2.0, -2.0, 3.0, 1.0, 1.0, 0.5, 2.0, 1.5, -0.5, 2.0,
        1.0, 3.0, -1.0, 0.5, 1.5, 2.0, 1.0, 0.5, 2.5,
    ];
    let r = wilcoxon_signed_rank(&pairs(&x));
    assert!(!r.exact);
    assert!((r.p_value - 0.00022422465089762275).abs() < 1e-12, "{}", r.p_value);
}

#[test]
fn star_thresholds() {
    assert_eq!(Stars::from_p(0.0099), Stars::Two);
    assert_eq!(Stars::from_p(0.01), Stars::One);
    assert_eq!(Stars::from_p(0.0499), Stars::One);
    assert_eq!(Stars::from_p(0.05), Stars::None);
    assert_eq!(Stars::Two.as_str(), "**");
    assert_eq!(Stars::One.as_str(), "*");
    assert_eq!(Stars::None.as_str(), "");
}

#[test]
fn zeros_are_dropped() {
    let r = wilcoxon_signed_rank(&pairs(&[0.0, 0.0, 1.0, 1.0, 1.0]));
    assert_eq!(r.n_effective, 3);
    assert!((r.p_value - 0.25).abs() < 1e-12);
    let r = wilcoxon_signed_rank(&pairs(&[0.0, 0.0]));
    assert_eq!(r.p_value, 1.0);
}

#[test]
fn normal_route_tracks_exact_for_moderate_n() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let diffs: Vec<f64> = (0..25).map(|_| rng.random_range(-3.0..5.0)).collect();
        let exact = wilcoxon_signed_rank(&pairs(&diffs)).p_value;
        let approx = wilcoxon_normal_approximation(&pairs(&diffs)).unwrap();
        assert!((exact - approx).abs() < 0.02, "{exact} vs {approx}");
    }
    assert!((normal_p(10, &[], 27.5) - 1.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn swapping_columns_preserves_p(diffs in prop::collection::vec(-3i32..=3, 1..30)) {
        let d: Vec<f64> = diffs.iter().map(|&x| x as f64).collect();
        let fwd = pairs(&d);
        let back: Vec<(f64, f64)> = fwd.iter().map(|(a, b)| (*b, *a)).collect();
        let p1 = wilcoxon_signed_rank(&fwd).p_value;
        let p2 = wilcoxon_signed_rank(&back).p_value;
        prop_assert!((p1 - p2).abs() < 1e-12);
        prop_assert!(p1 > 0.0 && p1 <= 1.0);
    }
}
