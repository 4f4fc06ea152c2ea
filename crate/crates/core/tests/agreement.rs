use effiara_core::agreement::krippendorff_alpha_nominal;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Textbook alpha: build the full coincidence matrix from every ordered pair
/// of values inside each unit, weighted by 1 / (m_u - 1).
fn brute_force_alpha(units: &[(u8, u8)], num_labels: usize) -> f64 {
    let mut o = vec![vec![0.0f64; num_labels]; num_labels];
    for &(a, b) in units {
        let values = [a as usize, b as usize];
        let m = values.len() as f64;
        for i in 0..values.len() {
            for j in 0..values.len() {
                if i != j {
                    o[values[i]][values[j]] += 1.0 / (m - 1.0);
                }
            }
        }
    }
    let n_c: Vec<f64> = o.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = n_c.iter().sum();
    let mut d_o = 0.0;
    let mut d_e = 0.0;
    for c in 0..num_labels {
        for k in 0..num_labels {
            if c != k {
                d_o += o[c][k];
                d_e += n_c[c] * n_c[k];
            }
        }
    }
    d_o /= n;
    d_e /= n * (n - 1.0);
    if d_e == 0.0 {
        1.0
    } else {
        1.0 - d_o / d_e
    }
}

#[test]
fn matches_brute_force_on_random_fixtures() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa1fa);
    for _ in 0..200 {
        let labels = rng.random_range(2..=4u8);
        let units: Vec<(u8, u8)> = (0..rng.random_range(1..=12))
            .map(|_| (rng.random_range(0..labels), rng.random_range(0..labels)))
            .collect();
        let got = krippendorff_alpha_nominal(&units).unwrap();
        let want = brute_force_alpha(&units, labels as usize);
        assert!((got - want).abs() < 1e-12, "{units:?}: {got} vs {want}");
    }
}

#[test]
fn worked_fixture() {
    let alpha = krippendorff_alpha_nominal(&[('A', 'A'), ('A', 'B'), ('B', 'B'), ('B', 'B')]).unwrap();
    assert!((alpha - (1.0 - 0.25 / (30.0 / 56.0))).abs() < 1e-12);
    assert!((alpha - 0.5333).abs() < 1e-4);
    assert!((brute_force_alpha(&[(0, 0), (0, 1), (1, 1), (1, 1)], 2) - alpha).abs() < 1e-12);
}

fn units() -> impl Strategy<Value = Vec<(u8, u8)>> {
    prop::collection::vec((0u8..3, 0u8..3), 1..=6)
}

proptest! {
    #[test]
    fn exact_on_small_instances(u in units()) {
        let got = krippendorff_alpha_nominal(&u).unwrap();
        prop_assert!((got - brute_force_alpha(&u, 3)).abs() < 1e-12);
        prop_assert!(got <= 1.0);
    }

    #[test]
    fn symmetric_in_raters(u in units()) {
        let swapped: Vec<_> = u.iter().map(|&(a, b)| (b, a)).collect();
        prop_assert_eq!(krippendorff_alpha_nominal(&u).unwrap(), krippendorff_alpha_nominal(&swapped).unwrap());
    }

    #[test]
    fn invariant_under_relabeling(u in units(), perm in Just([0u8, 1, 2]).prop_shuffle()) {
        let relabeled: Vec<_> = u.iter().map(|&(a, b)| (perm[a as usize], perm[b as usize])).collect();
        let a = krippendorff_alpha_nominal(&u).unwrap();
        let b = krippendorff_alpha_nominal(&relabeled).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn agreeing_unit_never_lowers_alpha(u in units(), label in 0u8..3) {
        let before = brute_force_alpha(&u, 3);
        prop_assume!(before < 1.0);
        let mut more = u.clone();
        more.push((label, label));
        let after = krippendorff_alpha_nominal(&more).unwrap();
        prop_assert!(after >= before - 1e-12, "{} -> {}", before, after);
    }
}
