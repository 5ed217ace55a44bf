use bpre_core::branching::{
    extinction_schedule, j_plus, reduced_count, simulate_environment, survival_probability, EnvironmentPath,
};
use bpre_core::genealogy::{binomial_counts, genealogy_counts, joint_law, total_variation};
use bpre_core::offspring::{EnvironmentModel, OffspringFamily, OffspringLaw};
use bpre_core::rng::StreamSeeder;
use bpre_core::walk::IncrementLaw;
use proptest::prelude::*;

fn gaussian_model(family: OffspringFamily<f64>) -> EnvironmentModel<f64> {
    EnvironmentModel::iid(IncrementLaw::gaussian(1.0).unwrap(), family)
}

proptest! {
    #[test]
    fn schedule_is_a_probability_increasing_in_the_horizon(seed in 0u64..1000, n in 2usize..200) {
        let mut rng = StreamSeeder::new(seed).replicate(0);
        let env = simulate_environment(&gaussian_model(OffspringFamily::Poisson), n, &mut rng).unwrap();
        let s = extinction_schedule(&env);
        prop_assert_eq!(s.horizon(), n);
        prop_assert_eq!(s.q[n], 0.0);
        for p in 0..=n {
            prop_assert!((0.0..=1.0).contains(&s.q[p]));
            prop_assert!((0.0..=1.0).contains(&s.t[p]));
            if p < n {
                prop_assert_eq!(s.q[p], env.law(p + 1).gf(s.q[p + 1]));
                prop_assert_eq!(s.t[p], env.law(p + 1).gf_complement(s.t[p + 1]));
            }
        }
        let shorter = EnvironmentPath::from_laws(env.laws()[..n / 2].to_vec());
        prop_assert!(extinction_schedule(&shorter).t[0] >= s.t[0]);
    }
}

#[test]
fn linear_fractional_schedule_matches_the_closed_form() {
    let mut worst: f64 = 0.0;
    for (i, family) in [OffspringFamily::Geometric, OffspringFamily::LinearFractional { eta: 3.0 }].iter().enumerate() {
        let increments = if i == 0 { IncrementLaw::gaussian(1.0).unwrap() } else { IncrementLaw::LatticeSsrw };
        let model = EnvironmentModel::iid(increments, *family);
        for r in 0..50 {
            let mut rng = StreamSeeder::new(5).replicate(r);
            let env = simulate_environment(&model, 1000, &mut rng).unwrap();
            let s = extinction_schedule(&env);
            for p in [0, 10, 500, 999] {
                let closed: f64 = 1.0 / j_plus(&env, p, 1000, 0.5);
                worst = worst.max((s.t[p] - closed).abs());
            }
        }
    }
    assert!(worst <= 1e-9, "{worst}");
}

#[test]
fn survival_from_several_parents() {
    let env = EnvironmentPath::<f64>::from_laws(vec![OffspringLaw::geometric(1.0).unwrap(); 3]);
    let s = extinction_schedule(&env);
    let one = survival_probability(&s, 1);
    assert!((one - 0.25).abs() < 1e-12);
    assert!((survival_probability(&s, 3) - (1.0 - 0.75f64.powi(3))).abs() < 1e-12);
}

#[test]
fn reduced_count_edges() {
    let mut rng = StreamSeeder::new(1).replicate(0);
    assert_eq!(reduced_count(0, 0.3, &mut rng).unwrap(), 0);
    assert_eq!(reduced_count(17, 0.0, &mut rng).unwrap(), 17);
    assert_eq!(reduced_count(17, 1.0, &mut rng).unwrap(), 0);
    assert!(reduced_count(5, 1.5, &mut rng).is_err());
}

#[test]
fn binomial_reduction_matches_the_genealogy() {
    let model = gaussian_model(OffspringFamily::Geometric);
    let mut worst: f64 = 0.0;
    for e in 0..3 {
        let mut rng = StreamSeeder::new(21).replicate(e);
        let env = simulate_environment(&model, 10, &mut rng).unwrap();
        let reps = 20_000;
        let mut a = Vec::with_capacity(reps);
        let mut b = Vec::with_capacity(reps);
        for _ in 0..reps {
            a.push(genealogy_counts(&env, 4, &mut rng, 1_000_000).unwrap());
            b.push(binomial_counts(&env, 4, &mut rng).unwrap());
        }
        worst = worst.max(total_variation(&joint_law(&a), &joint_law(&b)));
    }
    assert!(worst < 0.04, "{worst}");
}
