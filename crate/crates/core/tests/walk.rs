use bpre_core::lattice;
use bpre_core::rng::StreamSeeder;
use bpre_core::walk::{path_statistics, rho, IncrementLaw, StableParams, WalkPath};
use proptest::prelude::*;

proptest! {
    #[test]
    fn path_statistics_match_brute_force(xs in prop::collection::vec(-3.0f64..3.0, 1..60)) {
        let path = WalkPath::from_increments(&xs);
        let v = path.values();
        let st = path_statistics(v);
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = v[1..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(st.min, min);
        prop_assert_eq!(st.max, max);
        prop_assert_eq!(st.argmin, v.iter().position(|x| *x == min).unwrap());
        for k in 0..v.len() {
            let post = v[k..].iter().map(|s| s - v[k]).fold(f64::INFINITY, f64::min);
            prop_assert!((path.post_min(k) - post).abs() < 1e-12);
        }
    }

    #[test]
    fn rho_is_a_probability(alpha in 0.2f64..2.0, beta in -1.0f64..1.0) {
        let r = rho(alpha, beta).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
    }
}

/// All 2^n simple-walk paths, for the exact lattice formulas.
fn enumerate(n: u32, mut f: impl FnMut(&[i64])) {
    for mask in 0u32..(1 << n) {
        let mut s = vec![0i64];
        for i in 0..n {
            let last = *s.last().unwrap();
            s.push(last + if mask >> i & 1 == 1 { 1 } else { -1 });
        }
        f(&s);
    }
}

#[test]
fn lattice_formulas_match_enumeration() {
    let n = 10;
    let w = 0.5f64.powi(n as i32);
    for r in 0..4u64 {
        let mut total = 0.0;
        let mut by_end = std::collections::BTreeMap::new();
        enumerate(n, |s| {
            if *s.iter().min().unwrap() >= -(r as i64) {
                total += w;
                *by_end.entry(*s.last().unwrap()).or_insert(0.0) += w;
            }
        });
        assert!((lattice::prob_min_at_least(n as u64, r) - total).abs() < 1e-12);
        for (y, p) in by_end {
            assert!((lattice::pmf_min_at_least(n as u64, y, r) - p).abs() < 1e-12);
        }
    }
}

#[test]
fn stable_positivity_frequency_matches_rho() {
    for (alpha, beta) in [(2.0, 0.0), (1.5, 0.5), (0.8, -0.3)] {
        let law = IncrementLaw::exact_stable(StableParams::standard(alpha, beta).unwrap());
        let mut rng = StreamSeeder::new(11).replicate(0);
        let n = 200_000;
        let k = (0..n).filter(|_| law.sample(&mut rng) > 0.0).count() as f64 / n as f64;
        assert!((k - rho(alpha, beta).unwrap()).abs() < 0.005, "alpha {alpha} beta {beta}: {k}");
    }
}

#[test]
fn norming_makes_the_endpoint_order_one() {
    let law = IncrementLaw::gaussian(1.0).unwrap();
    let c = law.norming_cn(400);
    assert!((c - 20.0).abs() / 20.0 < 0.05, "{c}");
}
