use bpre_harness::config::{ExperimentKind, PRule};
use bpre_harness::experiments::{reduced_runs, run_experiment};
use bpre_harness::{ExperimentConfig, HarnessError};

fn small_reduced() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ExperimentKind::ReducedLaw);
    cfg.n_grid = vec![128];
    cfg.replicates = Some(20_000);
    cfg.min_survivors = 10;
    cfg.bootstrap_resamples = Some(20);
    cfg
}

#[test]
fn too_few_survivors_is_an_error() {
    let mut cfg = small_reduced();
    cfg.min_survivors = 1_000_000;
    match run_experiment(&cfg) {
        Err(HarnessError::Core(bpre_core::Error::InsufficientSample { .. })) => {}
        other => panic!("expected an insufficient-sample error, got {other:?}"),
    }
}

#[test]
fn survivors_satisfy_the_observation_invariants() {
    let runs = reduced_runs(&small_reduced()).unwrap();
    let run = &runs[0];
    assert!(!run.survivors.is_empty());
    for o in &run.survivors {
        assert!(o.survived && o.z_pn >= 1.0 && o.z_pn <= o.z_p);
        assert!((o.scaled_value.unwrap() - o.z_pn.ln() / run.c_p).abs() < 1e-12);
    }
}

#[test]
fn replicas_per_environment_share_clusters() {
    let mut cfg = small_reduced();
    cfg.replicas_per_environment = 4;
    let runs = reduced_runs(&cfg).unwrap();
    let run = &runs[0];
    assert_eq!(run.replicates % 4, 0);
    for (o, c) in run.survivors.iter().zip(&run.clusters) {
        assert_eq!(o.replicate / 4, *c);
        assert!(o.q_pn.is_some());
    }
    assert!(run_experiment(&cfg).is_ok());
}

#[test]
fn large_p_over_n_is_warned() {
    let mut cfg = small_reduced();
    cfg.p_rule = Some(PRule::List { values: vec![40] });
    let report = run_experiment(&cfg).unwrap();
    assert!(report.warnings.iter().any(|w| w.contains("p/n")));
}

#[test]
fn target_survivors_stops_at_a_block_boundary() {
    let mut cfg = small_reduced();
    cfg.replicates = None;
    cfg.target_survivors = Some(50);
    let runs = reduced_runs(&cfg).unwrap();
    assert!(runs[0].survivors.len() >= 50);
    assert_eq!(runs[0].replicates % bpre_harness::experiments::BLOCK, 0);
}

#[test]
fn survival_experiment_reports_theta() {
    let mut cfg = ExperimentConfig::new(ExperimentKind::SurvivalAsymptotics);
    cfg.n_grid = vec![32, 64, 128];
    cfg.replicates = Some(5_000);
    cfg.bootstrap_resamples = Some(20);
    let report = run_experiment(&cfg).unwrap();
    assert!(report.details["theta"]["value"].as_f64().unwrap() > 0.0);
    assert_eq!(report.tables[0].rows.len(), 3);
}
