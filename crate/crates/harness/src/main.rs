use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bpre_core::conditioned::{estimate_u, estimate_v, RenewalOptions};
use bpre_core::rng::StreamSeeder;
use bpre_harness::config::{ExperimentKind, IncrementSpec, OutputFormat, PRule};
use bpre_harness::experiments::{reduced_runs, run_experiment, run_limit_law_routes};
use bpre_harness::report::{num, ExperimentReport, Table};
use bpre_harness::{ExperimentConfig, HarnessError, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(name = "bpre", version, about = "Branching processes in random environment: simulation and limit laws")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Walk {
    Lattice,
    Gaussian,
    Stable,
    Pareto,
}

#[derive(Args)]
struct WalkArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    walk: Walk,
    /// Stability index for stable or Pareto increments.
    #[arg(long, default_value_t = 1.5)]
    alpha: f64,
    /// Skewness for stable increments.
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
}

impl WalkArgs {
    fn spec(&self) -> IncrementSpec {
        match self.walk {
            Walk::Lattice => IncrementSpec::LatticeSsrw,
            Walk::Gaussian => IncrementSpec::Gaussian { sigma: 1.0 },
            Walk::Stable => IncrementSpec::ExactStable { alpha: self.alpha, beta: self.beta, scale: 0.5 },
            Walk::Pareto => IncrementSpec::TwoSidedPareto { alpha: self.alpha, right_weight: 0.5 },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate reduced observations (Z_p, Z_{p,n}) for one (n, p).
    Simulate {
        #[command(flatten)]
        walk: WalkArgs,
        #[arg(long)]
        n: u64,
        /// Defaults to floor(sqrt(n)).
        #[arg(long)]
        p: Option<u64>,
        #[arg(long, default_value_t = 100_000)]
        replicates: u64,
        /// Write every replicate, not only survivors.
        #[arg(long)]
        all: bool,
    },
    /// Tabulate V (or U with --u) by Monte Carlo.
    EstimateV {
        #[command(flatten)]
        walk: WalkArgs,
        #[arg(long, default_value_t = 0.125)]
        grid_step: f64,
        #[arg(long, default_value_t = 15.0)]
        grid_max: f64,
        #[arg(long, default_value_t = 10_000)]
        truncation: u64,
        #[arg(long, default_value_t = 100_000)]
        n_mc: u64,
        #[arg(long)]
        u: bool,
    },
    /// Evaluate D(x) by every available route.
    LimitLaw {
        #[command(flatten)]
        walk: WalkArgs,
        #[arg(long)]
        n: Option<u64>,
        /// Comma-separated x values.
        #[arg(long, value_delimiter = ',')]
        x: Option<Vec<f64>>,
    },
    /// Run configured experiments.
    Experiment {
        #[command(subcommand)]
        action: ExperimentAction,
    },
    /// Print the summaries found in a directory.
    Report {
        /// Defaults to --out-dir.
        dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ExperimentAction {
    Run { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(1)
        }
    }
}

fn init_workers(workers: Option<usize>) -> Result<()> {
    if let Some(w) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
    }
    Ok(())
}

fn out_dir(g: &Global, cfg: Option<&ExperimentConfig>) -> PathBuf {
    g.out_dir
        .clone()
        .or_else(|| cfg.and_then(|c| c.out_dir.clone()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn format(g: &Global, cfg: Option<&ExperimentConfig>) -> OutputFormat {
    g.format.map(Into::into).or_else(|| cfg.and_then(|c| c.format)).unwrap_or(OutputFormat::Csv)
}

fn write_table(table: &Table, dir: &Path, stem: &str, fmt: OutputFormat) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let (ext, bytes) = match fmt {
        OutputFormat::Csv => ("csv", table.to_csv()?),
        OutputFormat::Json => ("json", table.to_json()?),
    };
    let path = dir.join(format!("{stem}.{ext}"));
    std::fs::write(&path, bytes)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

/// Ok(true) when everything passed, Ok(false) on a statistical failure.
fn run(cli: Cli) -> Result<bool> {
    let g = &cli.global;
    match cli.command {
        Command::Simulate { walk, n, p, replicates, all } => {
            init_workers(g.workers)?;
            let mut cfg = ExperimentConfig::new(ExperimentKind::ReducedLaw);
            cfg.seed = g.seed.unwrap_or(cfg.seed);
            cfg.environment.increments = walk.spec();
            cfg.n_grid = vec![n];
            cfg.p_rule = p.map(|p| PRule::List { values: vec![p] });
            cfg.replicates = Some(replicates);
            cfg.min_survivors = 0;
            cfg.write_all_observations = all;
            let (_, warnings) = cfg.np_pairs()?;
            warnings.iter().for_each(|w| log::warn!("{w}"));
            let runs = reduced_runs(&cfg)?;
            let run = &runs[0];
            log::info!("n = {n}, p = {}: {} survivors of {} replicates", run.p, run.survivors.len(), run.replicates);
            let mut t =
                Table::new("observations", &["replicate", "n", "p", "Z_p", "q_pn", "Z_pn", "survived", "scaled_value"]);
            for o in if all { &run.all } else { &run.survivors } {
                t.push(vec![
                    json!(o.replicate),
                    json!(o.n),
                    json!(o.p),
                    num(o.z_p),
                    o.q_pn.map_or(serde_json::Value::Null, num),
                    num(o.z_pn),
                    json!(o.survived),
                    o.scaled_value.map_or(serde_json::Value::Null, num),
                ]);
            }
            write_table(&t, &out_dir(g, None), &format!("simulate-n{n}"), format(g, None))?;
            Ok(true)
        }
        Command::EstimateV { walk, grid_step, grid_max, truncation, n_mc, u } => {
            init_workers(g.workers)?;
            let law = walk.spec().build()?;
            let k = (grid_max / grid_step).round() as usize;
            let sign = if u { -1.0 } else { 1.0 };
            let grid: Vec<f64> = (0..=k).map(|i| sign * i as f64 * grid_step).collect();
            let opts = RenewalOptions { truncation, n_mc, tail_correction: true };
            let seeder = StreamSeeder::new(g.seed.unwrap_or(1)).child(if u { "u" } else { "v" });
            let est =
                if u { estimate_u(&law, &grid, &opts, &seeder)? } else { estimate_v(&law, &grid, &opts, &seeder)? };
            let mut t = Table::new("estimate", &["x", "value", "se", "K", "n_mc"]);
            for r in est.rows() {
                t.push(vec![num(r.x), num(r.value), num(r.se), json!(r.k), json!(r.n_mc)]);
            }
            write_table(&t, &out_dir(g, None), if u { "estimate-u" } else { "estimate-v" }, format(g, None))?;
            Ok(true)
        }
        Command::LimitLaw { walk, n, x } => {
            init_workers(g.workers)?;
            let mut cfg = ExperimentConfig::new(ExperimentKind::LimitLawRoutes);
            cfg.seed = g.seed.unwrap_or(cfg.seed);
            cfg.environment.increments = walk.spec();
            cfg.n_grid = n.into_iter().collect();
            cfg.x_grid = x;
            let report = run_limit_law_routes(&cfg)?;
            finish(&report, &out_dir(g, None), format(g, None))
        }
        Command::Experiment { action: ExperimentAction::Run { config } } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = g.seed {
                cfg.seed = s;
            }
            init_workers(g.workers.or(cfg.workers))?;
            let dir = out_dir(g, Some(&cfg));
            let fmt = format(g, Some(&cfg));
            let report = run_experiment(&cfg)?;
            finish(&report, &dir, fmt)
        }
        Command::Report { dir } => {
            let dir = dir.unwrap_or_else(|| out_dir(g, None));
            let mut entries: Vec<PathBuf> = std::fs::read_dir(&dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.to_string_lossy().ends_with("-summary.json"))
                .collect();
            entries.sort();
            if entries.is_empty() {
                return Err(HarnessError::Config(format!("no summaries in {}", dir.display())));
            }
            let mut all = true;
            for path in entries {
                let report: ExperimentReport = serde_json::from_slice(&std::fs::read(&path)?)?;
                print!("{}", report.render());
                all &= report.passed;
            }
            Ok(all)
        }
    }
}

fn finish(report: &ExperimentReport, dir: &Path, fmt: OutputFormat) -> Result<bool> {
    for w in &report.warnings {
        log::warn!("{w}");
    }
    for path in report.write(dir, fmt)? {
        log::info!("wrote {}", path.display());
    }
    print!("{}", report.render());
    Ok(report.passed)
}
