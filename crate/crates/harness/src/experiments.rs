//! The seven experiments. Each turns a config into an [`ExperimentReport`]
//! with pass/fail checks, a details object and CSV tables.

use std::ops::Range;

use bpre_core::branching::{
    extinction_schedule, reduced_count_f64, simulate_environment, simulate_population, simulate_reduced,
    simulate_w_pair, survival_curve, ReducedObservation, SurvivalCurve, WPair,
};
use bpre_core::conditioned::{
    estimate_c0, estimate_u, estimate_v, min_cond_profile_exact, min_cond_profile_mc, sample_conditioned_endpoints,
    verify_harmonicity, HarmonicEstimate, LatticeV, Renewal, RenewalOptions,
};
use bpre_core::lattice;
use bpre_core::limit_law::{
    d_brownian, d_brownian_quadrature, d_mc_infimum, d_mc_meander_ratio, d_mc_pplus, maxwell_cdf, pplus_endpoints,
    t_small_cdf,
};
use bpre_core::offspring::EnvironmentModel;
use bpre_core::parallel::{map_chunks, CHUNK};
use bpre_core::rng::{ReplicateRng, StreamSeeder};
use bpre_core::stats::{bootstrap_ci, ks_statistic, linear_fit, EmpiricalCdf, Estimate, KsResult};
use bpre_core::walk::IncrementLaw;
use bpre_core::Error as CoreError;
use serde_json::json;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{HarnessError, Result};
use crate::report::{num, opt, Check, ExperimentReport, Table};

/// Replicates per block when simulating until a survivor target is met.
pub const BLOCK: u64 = 64 * CHUNK;
const DEFAULT_BUDGET: u64 = 50_000_000;
const KS_GRID_STEP: f64 = 0.01;
const KS_GRID_MAX: f64 = 4.0;

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.experiment {
        ExperimentKind::ReducedLaw | ExperimentKind::TSmall => run_reduced_experiment(cfg),
        ExperimentKind::MinimaLaw => run_minima_experiment(cfg),
        ExperimentKind::SurvivalAsymptotics => run_survival_asymptotics(cfg),
        ExperimentKind::WConstancy => run_w_constancy(cfg),
        ExperimentKind::Harmonicity => run_harmonicity(cfg),
        ExperimentKind::LimitLawRoutes => run_limit_law_routes(cfg),
    }
}

fn seeder_for(cfg: &ExperimentConfig) -> StreamSeeder {
    StreamSeeder::new(cfg.seed).child(cfg.experiment.name())
}

/// Runs `f` on replicate indices in blocks of [`BLOCK`], in order, handing
/// each block's results to `sink` until it returns true or `budget`
/// replicates are spent. Replicate i always draws from the stream of chunk
/// i / CHUNK, so the outcome does not depend on the worker count.
pub fn run_in_blocks<A, F, S>(budget: u64, seeder: &StreamSeeder, f: F, mut sink: S) -> Result<u64>
where
    A: Send,
    F: Fn(u64, &mut ReplicateRng) -> bpre_core::Result<A> + Sync + Send,
    S: FnMut(Vec<A>) -> bool,
{
    let mut offset = 0;
    while offset < budget {
        let len = BLOCK.min(budget - offset);
        let parts = map_chunks(len, CHUNK, |r: Range<u64>| -> bpre_core::Result<Vec<A>> {
            let mut rng = seeder.replicate((offset + r.start) / CHUNK);
            r.map(|i| f(offset + i, &mut rng)).collect()
        });
        let mut items = Vec::with_capacity(len as usize);
        for part in parts {
            items.extend(part?);
        }
        offset += len;
        if sink(items) {
            break;
        }
    }
    Ok(offset)
}

fn ks_grid() -> Vec<f64> {
    (0..=(KS_GRID_MAX / KS_GRID_STEP) as usize).map(|i| i as f64 * KS_GRID_STEP).collect()
}

/// KS distance of `values` against the CDF `reference`, with a (cluster)
/// bootstrap CI.
fn ks_with_ci(
    values: &[f64],
    clusters: Option<&[u64]>,
    reference: &(dyn Fn(f64) -> f64 + Sync),
    name: &str,
    threshold: f64,
    resamples: usize,
    seeder: &StreamSeeder,
) -> Result<KsResult> {
    let grid = ks_grid();
    let ecdf = EmpiricalCdf::new(values)?;
    let statistic = ks_statistic(&ecdf, reference, &grid);
    let mut rng = seeder.child("bootstrap").replicate(0);
    let ci = bootstrap_ci(
        values,
        clusters,
        |sample| EmpiricalCdf::new(sample).map(|e| ks_statistic(&e, reference, &grid)).unwrap_or(1.0),
        resamples,
        0.95,
        &mut rng,
    )?;
    Ok(KsResult {
        statistic,
        sample_size: values.len(),
        reference: name.into(),
        threshold,
        passed: statistic <= threshold,
        ci: Some(ci),
    })
}

type RealFn = Box<dyn Fn(f64) -> f64 + Sync>;

/// `f` tabulated on [0, hi] with spacing `step` and linearly interpolated;
/// constant beyond the ends. Keeps Monte Carlo references cheap to evaluate.
fn tabulated(f: impl Fn(f64) -> f64, hi: f64, step: f64) -> RealFn {
    let k = (hi / step).ceil() as usize;
    let table: Vec<f64> = (0..=k).map(|i| f(i as f64 * step)).collect();
    Box::new(move |x: f64| {
        if x <= 0.0 {
            return table[0];
        }
        let t = x / step;
        let i = t.floor() as usize;
        if i >= k {
            return table[k];
        }
        let w = t - i as f64;
        table[i] * (1.0 - w) + table[i + 1] * w
    })
}

/// D(x): closed form for alpha = 2, otherwise the meander Monte Carlo route.
fn limit_d(law: &IncrementLaw<f64>, seeder: &StreamSeeder) -> Result<(RealFn, &'static str)> {
    let params = law.limit_params();
    if params.alpha == 2.0 {
        return Ok((Box::new(|x: f64| if x <= 0.0 { 1.0 } else { d_brownian(x).unwrap_or(0.0) }), "2(1-Phi(x))"));
    }
    let n = 1024;
    let c_n = law.norming_cn(n);
    let sample = sample_conditioned_endpoints(n as usize, 0.0, law, &seeder.child("meander-reference"), 400_000)?;
    let endpoints: Vec<f64> = sample.samples.iter().map(|s| s / c_n).collect();
    let gamma = params.v_exponent();
    let d = tabulated(
        |x| {
            if x <= 0.0 {
                1.0
            } else {
                d_mc_meander_ratio(x, &endpoints, gamma).map(|e| e.value).unwrap_or(0.0)
            }
        },
        2.0 * KS_GRID_MAX,
        KS_GRID_STEP / 2.0,
    );
    Ok((d, "meander-mc D(x)"))
}

/// Grid of V-tabulation points reaching `extent` in `points` steps.
fn v_grid(extent: f64, points: usize) -> Vec<f64> {
    (0..=points).map(|i| extent * i as f64 / points as f64).collect()
}

/// The renewal function V: exact for the simple walk, estimated otherwise.
/// Keep `extent` near 4 c_p: further out the truncated series undershoots,
/// while the power-law continuation beyond the grid stays accurate.
fn renewal_v(law: &IncrementLaw<f64>, extent: f64, seeder: &StreamSeeder) -> Result<Box<dyn Renewal>> {
    if law.is_lattice() {
        return Ok(Box::new(LatticeV));
    }
    let est = estimate_v(law, &v_grid(extent, 40), &RenewalOptions::default(), &seeder.child("v"))?;
    Ok(Box::new(est))
}

/// CDF of the P+ endpoint at time 1: Maxwell for alpha = 2, otherwise the
/// weighted empirical law of P+ endpoints after p steps.
fn pplus_endpoint_cdf(law: &IncrementLaw<f64>, p: u64, seeder: &StreamSeeder) -> Result<(RealFn, &'static str)> {
    if law.limit_params().alpha == 2.0 {
        return Ok((Box::new(maxwell_cdf), "Maxwell |N(0,I3)|"));
    }
    let c_p = law.norming_cn(p);
    let v = renewal_v(law, 4.0 * c_p, seeder)?;
    let pts = pplus_endpoints(law, v.as_ref(), p as usize, c_p, 100_000, &seeder.child("pplus-reference"))?;
    let f = tabulated(|z| t_small_cdf(z, &pts).map(|e| e.value).unwrap_or(0.0), 2.0 * KS_GRID_MAX, KS_GRID_STEP / 2.0);
    Ok((f, "P+ endpoint MC"))
}

/// Survivors and counters of one (n, p) cell of the reduced experiment.
#[derive(Debug, Clone, Default)]
pub struct ReducedRun {
    pub n: u64,
    pub p: u64,
    pub c_p: f64,
    pub replicates: u64,
    pub survivors: Vec<ReducedObservation>,
    /// Environment index of each survivor.
    pub clusters: Vec<u64>,
    /// Replicates with Z_p > 0, and among them those with log Z_p / c_p > 1.
    pub reached_p: u64,
    pub reached_p_above_one: u64,
    pub saturated: u64,
    pub all: Vec<ReducedObservation>,
}

impl ReducedRun {
    fn absorb(&mut self, obs: ReducedObservation, cluster: u64, keep_all: bool) {
        if obs.z_p > 0.0 {
            self.reached_p += 1;
            if obs.z_p.ln() / self.c_p > 1.0 {
                self.reached_p_above_one += 1;
            }
        }
        self.saturated += u64::from(obs.saturated);
        if keep_all {
            self.all.push(obs.clone());
        }
        if obs.survived {
            self.survivors.push(obs);
            self.clusters.push(cluster);
        }
    }
}

/// Simulates reduced observations for one (n, p). With M = 1 the coupled
/// simulator draws a fresh environment per replicate and stops early once
/// extinction is certain. With M > 1 each environment is drawn in full and
/// shared by M populations, each reduced by a Binomial(Z_p, 1 - q_p) draw.
pub fn simulate_reduced_run(
    model: &EnvironmentModel<f64>,
    n: u64,
    p: u64,
    replicas: u64,
    target_survivors: Option<u64>,
    budget: u64,
    keep_all: bool,
    seeder: &StreamSeeder,
) -> Result<ReducedRun> {
    let law = model
        .increments()
        .ok_or_else(|| HarnessError::Config("the reduced experiment needs an i.i.d. environment".into()))?;
    let c_p = law.norming_cn(p);
    let mut run = ReducedRun { n, p, c_p, ..Default::default() };
    let (n_us, p_us) = (n as usize, p as usize);
    let done = |run: &ReducedRun| target_survivors.is_some_and(|t| run.survivors.len() as u64 >= t);
    if replicas <= 1 {
        let used = run_in_blocks(
            budget,
            seeder,
            |i, rng| Ok(simulate_reduced(model, n_us, p_us, c_p, i, rng)?.0),
            |items| {
                for obs in items {
                    let id = obs.replicate;
                    run.absorb(obs, id, keep_all);
                }
                done(&run)
            },
        )?;
        run.replicates = used;
    } else {
        let envs = budget.div_ceil(replicas);
        let used = run_in_blocks(
            envs,
            seeder,
            |e, rng| {
                let env = simulate_environment(model, n_us, rng)?;
                let q = (1.0 - extinction_schedule(&env).t[p_us]).clamp(0.0, 1.0);
                (0..replicas)
                    .map(|j| {
                        let traj = simulate_population(&env, 1, p_us, rng, 1e300)?;
                        let z_p = traj.last();
                        let z_pn = reduced_count_f64(z_p, q, rng)?;
                        let survived = z_pn >= 1.0;
                        Ok(ReducedObservation {
                            replicate: e * replicas + j,
                            n: n_us,
                            p: p_us,
                            z_p,
                            q_pn: Some(q),
                            z_pn,
                            survived,
                            scaled_value: survived.then(|| z_pn.ln() / c_p),
                            scaled_z_p: survived.then(|| z_p.ln() / c_p),
                            saturated: traj.saturated,
                        })
                    })
                    .collect::<bpre_core::Result<Vec<_>>>()
            },
            |items| {
                for (obs, e) in items.into_iter().flatten().map(|o| {
                    let e = o.replicate / replicas;
                    (o, e)
                }) {
                    run.absorb(obs, e, keep_all);
                }
                done(&run)
            },
        )?;
        run.replicates = used * replicas;
    }
    Ok(run)
}

fn observation_table(runs: &[ReducedRun], all: bool) -> Table {
    let mut t = Table::new("observations", &["replicate", "n", "p", "Z_p", "q_pn", "Z_pn", "survived", "scaled_value"]);
    for run in runs {
        let rows = if all { &run.all } else { &run.survivors };
        for o in rows {
            t.push(vec![
                json!(o.replicate),
                json!(o.n),
                json!(o.p),
                num(o.z_p),
                opt(o.q_pn),
                num(o.z_pn),
                json!(o.survived),
                opt(o.scaled_value),
            ]);
        }
    }
    t
}

/// Theorem 1 (reduced-law) or the T_small law (t-small): per (n, p) the
/// survivors' log Z_{p,n} / c_p (resp. log Z_p / c_p) against D (resp. the
/// P+ endpoint law).
pub fn run_reduced_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let runs = reduced_runs(cfg)?;
    evaluate_reduced(cfg, &runs)
}

/// The simulation half of [`run_reduced_experiment`], exposed so that the
/// same runs can be scored as both reduced-law and t-small.
pub fn reduced_runs(cfg: &ExperimentConfig) -> Result<Vec<ReducedRun>> {
    let model = cfg.environment.model()?;
    let (pairs, _) = cfg.np_pairs()?;
    if pairs.is_empty() {
        return Err(HarnessError::Config("empty n grid".into()));
    }
    let seeder = StreamSeeder::new(cfg.seed).child("reduced");
    let budget = cfg.replicates.unwrap_or(if cfg.target_survivors.is_some() { DEFAULT_BUDGET } else { 100_000 });
    pairs
        .iter()
        .map(|&(n, p)| {
            let run = simulate_reduced_run(
                &model,
                n,
                p,
                cfg.replicas_per_environment,
                cfg.target_survivors,
                budget,
                cfg.write_all_observations,
                &seeder.child_index(n),
            )?;
            if (run.survivors.len() as u64) < cfg.min_survivors {
                return Err(CoreError::InsufficientSample {
                    achieved: run.survivors.len(),
                    required: cfg.min_survivors as usize,
                }
                .into());
            }
            Ok(run)
        })
        .collect()
}

pub fn evaluate_reduced(cfg: &ExperimentConfig, runs: &[ReducedRun]) -> Result<ExperimentReport> {
    let t_small = cfg.experiment == ExperimentKind::TSmall;
    let model = cfg.environment.model()?;
    let law = *model.increments().expect("checked by reduced_runs");
    let (_, mut warnings) = cfg.np_pairs()?;
    let seeder = seeder_for(cfg);
    let threshold = cfg.thresholds.ks.unwrap_or(0.15);
    let resamples = cfg.bootstrap_resamples.unwrap_or(1000);
    let mut checks = Vec::new();
    let mut details = Vec::new();
    let mut ks_table =
        Table::new("ks", &["n", "p", "c_p", "replicates", "survivors", "survival_rate", "ks", "ci_low", "ci_high"]);
    let mut ks_values = Vec::new();
    for (i, run) in runs.iter().enumerate() {
        let (values, reference, name): (Vec<f64>, RealFn, &str) = if t_small {
            let v = run.survivors.iter().map(|o| o.scaled_z_p.expect("survivor")).collect();
            let (f, name) = pplus_endpoint_cdf(&law, run.p, &seeder.child_index(run.p))?;
            (v, f, name)
        } else {
            let v = run.survivors.iter().map(|o| o.scaled_value.expect("survivor")).collect();
            let (d, name) = limit_d(&law, &seeder)?;
            (v, Box::new(move |x: f64| if x < 0.0 { 0.0 } else { 1.0 - d(x) }), name)
        };
        let clusters = (cfg.replicas_per_environment > 1).then_some(run.clusters.as_slice());
        let ks = ks_with_ci(
            &values,
            clusters,
            reference.as_ref(),
            name,
            threshold,
            resamples,
            &seeder.child_index(i as u64),
        )?;
        let rate = run.survivors.len() as f64 / run.replicates as f64;
        let ci = ks.ci.expect("bootstrap CI");
        ks_table.push(vec![
            json!(run.n),
            json!(run.p),
            num(run.c_p),
            json!(run.replicates),
            json!(run.survivors.len()),
            num(rate),
            num(ks.statistic),
            num(ci.0),
            num(ci.1),
        ]);
        if run.saturated > 0 {
            warnings.push(format!("n = {}: {} replicates hit the population cap", run.n, run.saturated));
        }
        let mut d = json!({
            "n": run.n, "p": run.p, "c_p": run.c_p, "replicates": run.replicates,
            "survivors": run.survivors.len(), "survival_rate": rate, "ks": ks,
        });
        if t_small {
            let cond = run.survivors.iter().filter(|o| o.scaled_z_p.unwrap_or(0.0) > 1.0).count() as f64
                / run.survivors.len() as f64;
            let uncond = run.reached_p_above_one as f64 / run.reached_p.max(1) as f64;
            d["p_above_one_given_survival"] = num(cond);
            d["p_above_one_given_zp_positive"] = num(uncond);
            checks.push(Check::flag(
                format!("n={} P(log Z_p/c_p > 1 | Z_n>0) >= P(. | Z_p>0)", run.n),
                cond >= uncond,
                format!("{cond:.4} >= {uncond:.4}"),
            ));
            let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            checks.push(Check::flag(
                format!("n={} empirical CDF reaches 1", run.n),
                EmpiricalCdf::new(&values)?.eval(top) == 1.0,
                "F(max) = 1",
            ));
        } else {
            let at_zero = EmpiricalCdf::new(&values)?.survival(0.0);
            checks.push(Check::within(format!("n={} survival function at 0", run.n), at_zero, 1.0, 1.0));
        }
        details.push(d);
        ks_values.push(ks.statistic);
    }
    let last = runs.last().expect("nonempty");
    checks.push(Check::at_most(format!("KS at n={}", last.n), *ks_values.last().expect("nonempty"), threshold));
    if cfg.thresholds.require_decreasing && ks_values.len() > 1 {
        let decreasing = ks_values.windows(2).all(|w| w[1] < w[0]);
        checks.push(Check::flag("KS strictly decreasing in n", decreasing, format!("{ks_values:?}")));
    }
    let mut tables = vec![ks_table];
    tables.push(observation_table(runs, cfg.write_all_observations));
    Ok(ExperimentReport::new(cfg, checks, warnings, json!({ "cells": details }), tables))
}

/// Lemma L_MinCond: P(L_{p,n} >= x c_p | L_n >= -r) against D(x), per r.
pub fn run_minima_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let law = cfg.environment.increments.build()?;
    let (pairs, warnings) = cfg.np_pairs()?;
    let &(n, p) = pairs.first().ok_or_else(|| HarnessError::Config("empty n grid".into()))?;
    let r_values = cfg.r_values.clone().unwrap_or_else(|| vec![0.0, 5.0]);
    let x_grid = cfg.x_grid.clone().unwrap_or_else(|| vec![0.25, 0.5, 1.0, 1.5]);
    let tol = cfg.thresholds.tolerance.unwrap_or(0.05);
    let seeder = seeder_for(cfg);
    let c_p = law.norming_cn(p);
    let (d, d_name) = limit_d(&law, &seeder)?;
    let mut profiles = Vec::new();
    for (i, &r) in r_values.iter().enumerate() {
        let prof = if cfg.exact && law.is_lattice() {
            if r.fract() != 0.0 {
                return Err(HarnessError::Config("exact lattice profiles need integer r".into()));
            }
            min_cond_profile_exact(n, p, r as u64, &x_grid, c_p)?
        } else {
            let samples = cfg.replicates.unwrap_or(1_000_000);
            min_cond_profile_mc(&law, n, p, r, &x_grid, c_p, samples, &seeder.child_index(i as u64))?
        };
        profiles.push(prof);
    }
    let mut checks = Vec::new();
    let mut table = Table::new("profile", &["x", "r", "profile", "se", "reference"]);
    for prof in &profiles {
        for (x, v) in prof.x.iter().zip(&prof.values) {
            let dx = d(*x);
            table.push(vec![num(*x), num(prof.r), num(v.value), num(v.se), num(dx)]);
            checks.push(Check::at_most(format!("r={} x={x} |profile - D|", prof.r), (v.value - dx).abs(), tol));
        }
    }
    for prof in profiles.iter().skip(1) {
        for ((x, a), b) in prof.x.iter().zip(&prof.values).zip(&profiles[0].values) {
            checks.push(Check::at_most(
                format!("x={x} |profile(r={}) - profile(r={})|", prof.r, profiles[0].r),
                (a.value - b.value).abs(),
                tol,
            ));
        }
    }
    let details = json!({ "n": n, "p": p, "c_p": c_p, "reference": d_name, "profiles": profiles });
    Ok(ExperimentReport::new(cfg, checks, warnings, details, vec![table]))
}

/// P(Z_n > 0) as the environment average of the exact 1 - q_0, against
/// P(L_n >= 0): slope, ratio plateau and the theta estimate.
pub fn run_survival_asymptotics(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let model = cfg.environment.model()?;
    let law = cfg.environment.increments.build()?;
    let mut grid: Vec<u64> = cfg.n_grid.clone();
    if grid.is_empty() {
        grid = (10..=14).map(|k| 1u64 << k).collect();
    }
    if grid.len() < 2 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::Config("survival asymptotics needs an increasing n grid of length >= 2".into()));
    }
    let grid_us: Vec<usize> = grid.iter().map(|&n| n as usize).collect();
    let envs = cfg.replicates.unwrap_or(200_000);
    let seeder = seeder_for(cfg);
    let stop_level = -25.0;
    let parts = map_chunks(envs, CHUNK, |r| -> bpre_core::Result<Vec<SurvivalCurve>> {
        let mut rng = seeder.replicate(r.start / CHUNK);
        r.map(|_| survival_curve(&model, &grid_us, stop_level, &mut rng)).collect()
    });
    let mut curves = Vec::with_capacity(envs as usize);
    for part in parts {
        curves.extend(part?);
    }
    let m = grid.len();
    let nf = envs as f64;
    let mut surv = Vec::with_capacity(m);
    let mut minp = Vec::with_capacity(m);
    for i in 0..m {
        let vals: Vec<f64> = curves.iter().map(|c| c.survival[i]).collect();
        surv.push(bpre_core::stats::mean_se(&vals)?);
        minp.push(if law.is_lattice() {
            Estimate::exact(lattice::prob_min_at_least(grid[i], 0))
        } else {
            let k = curves.iter().filter(|c| c.min_nonneg[i]).count() as f64;
            let q = k / nf;
            Estimate::new(q, (q * (1.0 - q) / nf).sqrt())
        });
    }
    let ratio: Vec<Estimate> = surv
        .iter()
        .zip(&minp)
        .map(|(s, l)| {
            let v = s.value / l.value;
            Estimate::new(v, v * ((s.se / s.value).powi(2) + (l.se / l.value).powi(2)).sqrt())
        })
        .collect();
    let logs_n: Vec<f64> = grid.iter().map(|&n| (n as f64).ln()).collect();
    let logs_p: Vec<f64> = surv.iter().map(|s| s.value.ln()).collect();
    let (_, slope, slope_se) = linear_fit(&logs_n, &logs_p)?;
    let target = law.limit_params().rho() - 1.0;
    let band = cfg.thresholds.slope_band.unwrap_or(0.05);
    let (na, nb) =
        cfg.thresholds.plateau_pair.unwrap_or(if m >= 4 { (grid[1], grid[m - 2]) } else { (grid[0], grid[m - 1]) });
    let ia = grid.iter().position(|&n| n == na).ok_or_else(|| HarnessError::Config(format!("{na} not in n grid")))?;
    let ib = grid.iter().position(|&n| n == nb).ok_or_else(|| HarnessError::Config(format!("{nb} not in n grid")))?;
    let variation = (ratio[ia].value - ratio[ib].value).abs() / ratio[ib].value;
    // theta: ratio at the largest n with a bootstrap CI over environments
    let last = m - 1;
    let idx: Vec<f64> = (0..curves.len()).map(|i| i as f64).collect();
    let exact_den = law.is_lattice().then(|| minp[last].value);
    let theta_stat = |sample: &[f64]| {
        let (mut s, mut l) = (0.0, 0.0);
        for &i in sample {
            let c = &curves[i as usize];
            s += c.survival[last];
            l += f64::from(u8::from(c.min_nonneg[last]));
        }
        match exact_den {
            Some(d) => s / sample.len() as f64 / d,
            None if l > 0.0 => s / l,
            None => f64::INFINITY,
        }
    };
    let mut rng = seeder.child("bootstrap").replicate(0);
    let theta_ci = bootstrap_ci(&idx, None, theta_stat, cfg.bootstrap_resamples.unwrap_or(1000), 0.95, &mut rng)?;
    let stopped = curves.iter().filter(|c| c.stopped_at.is_some()).count();
    let checks = vec![
        Check::within("log-log slope of P(Z_n>0)", slope, target - band, target + band),
        Check::at_most(format!("ratio variation n={na} vs n={nb}"), variation, cfg.thresholds.relative.unwrap_or(0.10)),
        Check::positive("theta CI lower bound", theta_ci.0),
    ];
    let mut table = Table::new("survival", &["n", "p_survival", "se", "p_min_nonneg", "se_min", "ratio", "ratio_se"]);
    for i in 0..m {
        table.push(vec![
            json!(grid[i]),
            num(surv[i].value),
            num(surv[i].se),
            num(minp[i].value),
            num(minp[i].se),
            num(ratio[i].value),
            num(ratio[i].se),
        ]);
    }
    let details = json!({
        "environments": envs,
        "slope": slope, "slope_se": slope_se, "slope_target": target,
        "theta": ratio[last], "theta_ci": theta_ci,
        "ratio_variation": variation,
        "stop_level": stop_level,
        "stopped_environments": stopped,
        "truncation_bias_bound": stop_level.exp(),
    });
    Ok(ExperimentReport::new(cfg, checks, Vec::new(), details, vec![table]))
}

/// Median of |W_2 - W_1| / max(W_1, eps) over surviving replicates for
/// q in the grid, p = q^2, n = 64 p.
pub fn run_w_constancy(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let model = cfg.environment.model()?;
    let q_grid = cfg.q_grid.clone().unwrap_or_else(|| vec![8, 32, 128]);
    let target = cfg.target_survivors.unwrap_or(cfg.min_survivors);
    let budget = cfg.replicates.unwrap_or(DEFAULT_BUDGET);
    let eps = 1e-12;
    let seeder = seeder_for(cfg);
    let mut table = Table::new("w", &["q", "p", "n", "replicates", "survivors", "median_statistic"]);
    let mut pairs_table = Table::new("pairs", &["q", "w1", "w2"]);
    let mut medians = Vec::new();
    let mut checks = Vec::new();
    let mut details = Vec::new();
    for &q in &q_grid {
        let p = q * q;
        let n = 64 * p;
        let m1 = p;
        let m2 = (q + 2 * (p - q)).min(n);
        let mut pairs: Vec<WPair> = Vec::new();
        let used = run_in_blocks(
            budget,
            &seeder.child_index(q),
            |_, rng| simulate_w_pair(&model, n as usize, m1 as usize, m2 as usize, rng),
            |items| {
                pairs.extend(items.into_iter().flatten());
                pairs.len() as u64 >= target
            },
        )?;
        if (pairs.len() as u64) < cfg.min_survivors {
            return Err(
                CoreError::InsufficientSample { achieved: pairs.len(), required: cfg.min_survivors as usize }.into()
            );
        }
        let mut stats: Vec<f64> = pairs.iter().map(|w| (w.w2 - w.w1).abs() / w.w1.max(eps)).collect();
        stats.sort_by(f64::total_cmp);
        let median = stats[stats.len() / 2];
        let finite = pairs.iter().all(|w| w.w1.is_finite() && w.w2.is_finite() && w.w1 > 0.0 && w.w2 > 0.0);
        checks.push(Check::flag(format!("q={q} W finite and positive on survivors"), finite, "0 < W < inf"));
        table.push(vec![json!(q), json!(p), json!(n), json!(used), json!(pairs.len()), num(median)]);
        for w in &pairs {
            pairs_table.push(vec![json!(q), num(w.w1), num(w.w2)]);
        }
        details.push(json!({
            "q": q, "p": p, "n": n, "m1": m1, "m2": m2, "replicates": used, "survivors": pairs.len(),
            "median": median, "approximated": pairs.iter().filter(|w| w.approximated).count(),
        }));
        medians.push(median);
    }
    checks.push(Check::flag(
        "median statistic strictly decreasing in q",
        medians.windows(2).all(|w| w[1] < w[0]),
        format!("{medians:?}"),
    ));
    Ok(ExperimentReport::new(cfg, checks, Vec::new(), json!({ "cells": details }), vec![table, pairs_table]))
}

fn harmonic_table(name: &str, est: &HarmonicEstimate) -> Table {
    let mut t = Table::new(name, &["x", "value", "se", "K", "n_mc"]);
    for r in est.rows() {
        t.push(vec![num(r.x), num(r.value), num(r.se), json!(r.k), json!(r.n_mc)]);
    }
    t
}

/// V̂ and Û tabulated by Monte Carlo, checked for harmonicity and, for the
/// simple walk, against the exact renewal functions.
pub fn run_harmonicity(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let law = cfg.environment.increments.build()?;
    let lattice_walk = law.is_lattice();
    let step = cfg.grid_step.unwrap_or(if lattice_walk { 1.0 } else { 0.125 });
    let max = cfg.grid_max.unwrap_or(if lattice_walk { 12.0 } else { 15.0 });
    let k = (max / step).round() as usize;
    let grid: Vec<f64> = (0..=k).map(|i| i as f64 * step).collect();
    let opts = RenewalOptions {
        truncation: cfg.truncation.unwrap_or(10_000),
        n_mc: cfg.replicates.unwrap_or(100_000),
        tail_correction: true,
    };
    let seeder = seeder_for(cfg);
    let v = estimate_v(&law, &grid, &opts, &seeder.child("v"))?;
    let neg: Vec<f64> = grid.iter().map(|x| -x).collect();
    let u = estimate_u(&law, &neg, &opts, &seeder.child("u"))?;
    let points = cfg.check_points.clone().unwrap_or_else(|| {
        if lattice_walk {
            vec![0.0, 1.0, 2.0, 5.0]
        } else {
            vec![0.5, 1.0, 2.0, 5.0]
        }
    });
    let z = cfg.thresholds.z.unwrap_or(3.0);
    let n_check = 2 * opts.n_mc;
    let rv = verify_harmonicity(&v, &law, &points, n_check, &seeder.child("check-v"))?;
    let neg_points: Vec<f64> = points.iter().map(|x| -x).collect();
    let ru = verify_harmonicity(&u, &law, &neg_points, n_check, &seeder.child("check-u"))?;
    let mut checks = Vec::new();
    let mut res_table = Table::new("residuals", &["function", "x", "residual", "se"]);
    for (name, res) in [("V", &rv), ("U", &ru)] {
        for r in res {
            res_table.push(vec![json!(name), num(r.x), num(r.residual), num(r.se)]);
            let zval = if r.se > 0.0 {
                r.residual.abs() / r.se
            } else if r.residual == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            checks.push(Check::at_most(format!("{name} residual at x={} (in SE)", r.x), zval, z));
        }
    }
    checks.push(Check::at_most("V raw monotonicity violation (in SE)", v.max_violation_z, 3.0));
    checks.push(Check::at_most("U raw monotonicity violation (in SE)", u.max_violation_z, 3.0));
    if lattice_walk {
        let rel = cfg.thresholds.relative.unwrap_or(0.02);
        let worst = |est: &HarmonicEstimate, exact: fn(f64) -> f64| {
            est.grid.iter().zip(&est.values).map(|(x, v)| (v / exact(*x) - 1.0).abs()).fold(0.0, f64::max)
        };
        checks.push(Check::at_most("V vs floor(x)+1 (max relative error)", worst(&v, lattice::renewal_v), rel));
        checks.push(Check::at_most("U vs exact U (max relative error)", worst(&u, lattice::renewal_u), rel));
    }
    let details = json!({
        "v_last_decade_share": v.last_decade_share.last(),
        "u_last_decade_share": u.last_decade_share.last(),
        "v_exponent": v.exponent, "u_exponent": u.exponent,
    });
    Ok(ExperimentReport::new(
        cfg,
        checks,
        Vec::new(),
        details,
        vec![harmonic_table("v", &v), harmonic_table("u", &u), res_table],
    ))
}

/// D(x) by the closed form (alpha = 2), the meander route, the P+ route
/// and, for the simple walk, the infimum route; plus C0.
pub fn run_limit_law_routes(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let law = cfg.environment.increments.build()?;
    let params = law.limit_params();
    let gamma = params.v_exponent();
    let x_grid = cfg.x_grid_or_default();
    let n = cfg.n_grid.first().copied().unwrap_or(if law.is_lattice() { 4096 } else { 1024 });
    let p = match &cfg.p_rule {
        Some(rule) => rule.p_for(0, n)?,
        None => n,
    };
    let samples = cfg.replicates.unwrap_or(20_000);
    let proposals = cfg.target_survivors.map(|t| t * 80).unwrap_or(800_000);
    let tol = cfg.thresholds.tolerance.unwrap_or(0.03);
    let z = cfg.thresholds.z.unwrap_or(3.0);
    let seeder = seeder_for(cfg);
    let mut checks = Vec::new();
    let mut table = Table::new("routes", &["x", "route", "estimate", "se"]);

    let c_n = law.norming_cn(n);
    let meander = sample_conditioned_endpoints(n as usize, 0.0, &law, &seeder.child("meander"), proposals)?;
    let endpoints: Vec<f64> = meander.samples.iter().map(|s| s / c_n).collect();
    let c_p = law.norming_cn(p);
    let v = renewal_v(&law, 4.0 * c_p, &seeder)?;
    let pts = pplus_endpoints(&law, v.as_ref(), p as usize, c_p, samples, &seeder.child("pplus"))?;
    let mut meander_est = Vec::new();
    let mut pplus_est = Vec::new();
    for &x in &x_grid {
        meander_est.push(d_mc_meander_ratio(x, &endpoints, gamma)?);
        pplus_est.push(d_mc_pplus(x, &pts, gamma)?);
    }
    let closed = params.alpha == 2.0;
    let mut quad_gap: f64 = 0.0;
    for (i, &x) in x_grid.iter().enumerate() {
        if closed {
            let d = d_brownian(x)?;
            quad_gap = quad_gap.max((d - d_brownian_quadrature(x)?).abs());
            table.push(vec![num(x), json!("closed-form-brownian"), num(d), num(0.0)]);
            for (route, e) in [("meander-mc", meander_est[i]), ("pplus-mc", pplus_est[i])] {
                let limit = tol.max(z * e.se);
                checks.push(Check::at_most(format!("{route} x={x} |D - 2(1-Phi)|"), (e.value - d).abs(), limit));
            }
        } else {
            checks.push(Check::at_most(
                format!("x={x} meander vs pplus (joint SE)"),
                meander_est[i].joint_z(&pplus_est[i]),
                z,
            ));
        }
        table.push(vec![num(x), json!("meander-mc"), num(meander_est[i].value), num(meander_est[i].se)]);
        table.push(vec![num(x), json!("pplus-mc"), num(pplus_est[i].value), num(pplus_est[i].se)]);
    }
    if closed {
        checks.push(Check::at_most("closed form vs defD quadrature", quad_gap, 1e-10));
    }
    let mut details = json!({
        "alpha": params.alpha, "beta": params.beta, "rho": params.rho(), "exponent": gamma,
        "n": n, "c_n": c_n, "p": p, "c_p": c_p,
        "meander_accepted": endpoints.len(), "meander_rate": meander.rate, "pplus_samples": pts.len(),
    });
    if law.is_lattice() {
        // infimum route at a quarter of p, against the P+ route at the same p
        let p_inf = (p / 4).max(1);
        let c_inf = law.norming_cn(p_inf);
        let count = (samples / 4).max(1000);
        let inf = d_mc_infimum(&x_grid, &law, &LatticeV, p_inf as usize, c_inf, count, true, &seeder.child("infimum"))?;
        let pts_inf = pplus_endpoints(&law, &LatticeV, p_inf as usize, c_inf, count, &seeder.child("pplus-infimum"))?;
        for (i, &x) in x_grid.iter().enumerate() {
            let e = d_mc_pplus(x, &pts_inf, gamma)?;
            table.push(vec![num(x), json!("infimum"), num(inf[i].value), num(inf[i].se)]);
            checks.push(Check::at_most(
                format!("x={x} infimum vs pplus at p={p_inf} (joint SE)"),
                inf[i].joint_z(&e),
                z,
            ));
        }
        let c0 = estimate_c0(&law, &[n / 4, n / 2, n], &LatticeV, &seeder.child("c0"), 0)?;
        let target = (2.0 / std::f64::consts::PI).sqrt();
        checks.push(Check::at_most("C0 route 1 relative error", (c0.route1.value / target - 1.0).abs(), 0.05));
        checks.push(Check::at_most("C0 route 2 relative error", (c0.route2.value / target - 1.0).abs(), 0.05));
        details["c0"] = serde_json::to_value(&c0)?;
    } else {
        let den: Vec<f64> = endpoints.iter().map(|b| b.max(0.0).powf(gamma)).collect();
        let m = bpre_core::stats::mean_se(&den)?;
        details["c0_route2"] = json!(Estimate::new(1.0 / m.value, m.se / (m.value * m.value)));
    }
    Ok(ExperimentReport::new(cfg, checks, Vec::new(), details, vec![table]))
}
