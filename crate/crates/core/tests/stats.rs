use bpre_core::parallel::{map_chunks, CHUNK};
use bpre_core::rng::StreamSeeder;
use bpre_core::stats::{bootstrap_ci, ks_statistic, linear_fit, EmpiricalCdf};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #[test]
    fn ecdf_is_a_distribution_function(xs in prop::collection::vec(-10.0f64..10.0, 1..100), a in -12.0f64..12.0, b in -12.0f64..12.0) {
        let e = EmpiricalCdf::new(&xs).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(e.eval(lo) <= e.eval(hi));
        prop_assert!(e.eval_left(lo) <= e.eval(lo));
        prop_assert_eq!(e.eval(11.0), 1.0);
        prop_assert_eq!(e.eval(-11.0), 0.0);
        prop_assert!((e.survival(lo) + e.eval_left(lo) - 1.0).abs() < 1e-12);
        let below = xs.iter().filter(|x| **x <= lo).count() as f64 / xs.len() as f64;
        prop_assert!((e.eval(lo) - below).abs() < 1e-12);
    }

    #[test]
    fn ks_is_in_the_unit_interval(xs in prop::collection::vec(0.0f64..1.0, 1..50)) {
        let e = EmpiricalCdf::new(&xs).unwrap();
        let d = ks_statistic(&e, |x: f64| x.clamp(0.0, 1.0), &[0.0, 0.5, 1.0]);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!(d >= 0.5 / xs.len() as f64 - 1e-12);
    }
}

#[test]
fn ks_of_a_uniform_sample_shrinks() {
    let mut rng = StreamSeeder::new(4).replicate(0);
    let xs: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
    let d = ks_statistic(&EmpiricalCdf::new(&xs).unwrap(), |x: f64| x.clamp(0.0, 1.0), &[]);
    assert!(d < 0.02, "{d}");
}

#[test]
fn bootstrap_brackets_the_mean() {
    let mut rng = StreamSeeder::new(8).replicate(0);
    let xs: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let (lo, hi) = bootstrap_ci(&xs, None, mean, 500, 0.95, &mut rng).unwrap();
    assert!(lo < 0.5 && 0.5 < hi, "({lo}, {hi})");
    assert!(hi - lo < 0.05);
}

#[test]
fn linear_fit_recovers_a_line() {
    let x = [1.0, 2.0, 3.0, 4.0];
    let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
    let (a, b, se) = linear_fit(&x, &y).unwrap();
    assert!((a - 2.0).abs() < 1e-12 && (b + 0.5).abs() < 1e-12 && se < 1e-10);
}

#[test]
fn chunked_streams_do_not_depend_on_the_pool() {
    let seeder = StreamSeeder::new(99);
    let draw = || {
        map_chunks(5 * CHUNK + 7, CHUNK, |r| {
            let mut rng = seeder.replicate(r.start / CHUNK);
            r.map(|_| rng.random::<u64>()).collect::<Vec<_>>()
        })
    };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(draw);
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(draw);
    assert_eq!(one, four);
}
