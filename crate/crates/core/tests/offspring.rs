use bpre_core::offspring::{OffspringFamily, OffspringLaw};
use bpre_core::rng::StreamSeeder;
use proptest::prelude::*;

fn laws(x: f64) -> Vec<OffspringLaw<f64>> {
    vec![
        OffspringFamily::Geometric.build(x).unwrap(),
        OffspringFamily::Poisson.build(x).unwrap(),
        OffspringFamily::LinearFractional { eta: 3.0 }.build(x.min(0.3)).unwrap(),
        OffspringLaw::explicit(vec![0.3, 0.2, 0.5]).unwrap(),
    ]
}

proptest! {
    #[test]
    fn gf_is_monotone_and_convex(x in -2.0f64..2.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let mid = 0.5 * (lo + hi);
        for law in laws(x) {
            prop_assert!(law.gf(lo) <= law.gf(hi) + 1e-15);
            prop_assert!(law.gf(mid) <= 0.5 * (law.gf(lo) + law.gf(hi)) + 1e-12);
            prop_assert!((law.gf(1.0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn complement_matches_one_minus_gf(x in -2.0f64..2.0, s in 0.0f64..1.0) {
        for law in laws(x) {
            prop_assert!((law.gf_complement(1.0 - s) - (1.0 - law.gf(s))).abs() < 1e-12);
        }
    }

    #[test]
    fn family_log_mean_is_exact(x in -3.0f64..3.0) {
        prop_assert_eq!(OffspringFamily::Geometric.build(x).unwrap().log_mean(), x);
        prop_assert_eq!(OffspringFamily::<f64>::Poisson.build(x).unwrap().log_mean(), x);
    }
}

#[test]
fn pmf_sums_to_one_and_matches_the_mean() {
    for law in laws(0.4) {
        let (mut total, mut mean) = (0.0, 0.0);
        for k in 0..400 {
            let p = law.pmf(k);
            total += p;
            mean += k as f64 * p;
        }
        assert!((total - 1.0).abs() < 1e-10, "{law:?}");
        assert!((mean - law.mean()).abs() < 1e-8, "{law:?}");
    }
}

#[test]
fn sample_mean_agrees_with_mean() {
    let mut rng = StreamSeeder::new(3).replicate(0);
    for law in laws(0.2) {
        let n = 200_000;
        let m: f64 = (0..n).map(|_| law.sample(&mut rng) as f64).sum::<f64>() / n as f64;
        let se = (law.variance() / n as f64).sqrt();
        assert!((m - law.mean()).abs() < 5.0 * se, "{law:?}: {m} vs {}", law.mean());
    }
}

#[test]
fn geometric_eta_is_two() {
    assert!((OffspringLaw::<f64>::geometric(1.7).unwrap().eta() - 2.0).abs() < 1e-12);
}

#[test]
fn f32_scalar_agrees_with_f64() {
    let a = OffspringFamily::<f32>::Geometric.build(0.5).unwrap();
    let b = OffspringFamily::<f64>::Geometric.build(0.5).unwrap();
    assert!((a.gf(0.3) as f64 - b.gf(0.3)).abs() < 1e-6);
}
