//! `nsbandit`: run nonstationary bandit experiments and write CSV results.

mod config;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nsbandit::harness::output::{
    write_bounds_csv, write_slopes_csv, write_summary_csv, write_sweep_csv, write_trace_csv,
};
use nsbandit::harness::{
    run_batch, scaling_sweep, verify_robust_bound, verify_sw_bound, BatchConfig, SweepConfig,
};
use nsbandit::{PolicyKind, PolicyParams};

use config::{Budget, Overrides, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or configuration; exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Failure while running; exit code 1.
    #[error("{0}")]
    Runtime(String),
}

impl From<nsbandit::Error> for CliError {
    fn from(e: nsbandit::Error) -> Self {
        match e {
            nsbandit::Error::Config(_) | nsbandit::Error::Usage(_) | nsbandit::Error::Index { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "nsbandit", version, about = "Nonstationary multi-armed bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Policy to run (repeatable), e.g. sw-moss, d-ucb, fixed:0.
    #[arg(long = "policy", global = true)]
    policies: Vec<String>,
    /// Environment kind.
    #[arg(long, global = true)]
    env: Option<String>,
    /// Horizon T.
    #[arg(long = "T", global = true)]
    horizon: Option<usize>,
    /// Number of arms K.
    #[arg(long = "K", global = true)]
    arms: Option<usize>,
    /// Variation budget V_T, or "measured".
    #[arg(long, global = true)]
    budget: Option<Budget>,
    /// Replications [default: 500].
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Base seed; replication r uses seed + r [default: 0].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory [default: $NSBANDIT_OUT or ./nsbandit-out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads [default: 1].
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Keep every s-th step in trace.csv; 0 disables the trace [default: 100].
    #[arg(long, global = true)]
    thin: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a batch of policies and write trace.csv and summary.csv.
    Run,
    /// Mean regret over growing horizons on lower-bound switching envs.
    Sweep {
        /// Comma-separated horizons (at least 3).
        #[arg(long, value_delimiter = ',')]
        horizons: Option<Vec<usize>>,
    },
    /// Monte-Carlo check of the estimation error bounds; writes bounds.csv.
    VerifyBounds {
        #[arg(long)]
        trials: Option<u64>,
    },
    /// List policy kinds and their default parameters.
    ListPolicies,
    /// Write the mean table to means.csv and print the measured variation.
    DescribeEnv,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            policies: self.policies.clone(),
            env: self.env.clone(),
            horizon: self.horizon,
            arms: self.arms,
            budget: self.budget,
            reps: self.reps,
            seed: self.seed,
            out: self.out.clone(),
            workers: self.workers,
            thin: self.thin,
        }
    }

    fn config(&self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let mut cfg = file.merge(&self.overrides());
        match &self.command {
            Command::Sweep { horizons: Some(h) } => cfg.sweep.horizons = Some(h.clone()),
            Command::VerifyBounds { trials: Some(n) } => cfg.bounds.trials = Some(*n),
            _ => {}
        }
        cfg.finish()
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let env = cfg.environment()?;
    let policies = cfg.policy_list(&["r-moss", "sw-moss", "d-ucb"])?;
    let names: Vec<String> = policies.iter().map(|(k, _)| k.name()).collect();
    let mut batch = BatchConfig::new(policies, cfg.reps(), cfg.seed());
    batch.workers = cfg.workers();
    batch.thin = cfg.thin.filter(|&s| s > 0);
    let outcome = run_batch(&env, &batch)?;

    let dir = cfg.out();
    let preamble = cfg.preamble();
    if batch.thin.is_some() {
        write_trace_csv(create(&dir, "trace.csv")?, &preamble, &names, &outcome.trace)?;
    }
    write_summary_csv(create(&dir, "summary.csv")?, &preamble, &outcome.summaries)?;
    for s in &outcome.summaries {
        println!(
            "{:<10} mean {:>10.3}  std {:>9.3}  q50 {:>10.3}  ({} reps, T={}, V_T={:.4})",
            s.policy, s.mean, s.std, s.q50, s.reps, s.horizon, s.budget
        );
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let budget = match cfg.env.budget {
        Some(Budget::Value(v)) => v,
        Some(Budget::Measured) => {
            return Err(CliError::Usage("sweep needs a numeric budget".into()));
        }
        None => 1.0,
    };
    let horizons = cfg.sweep.horizons.clone().unwrap_or_else(|| vec![2000, 8000, 32000]);
    let mut results = Vec::new();
    for (policy, params) in cfg.policy_list(&["r-moss", "sw-moss", "d-ucb"])? {
        let res = scaling_sweep(&SweepConfig {
            policy,
            params,
            horizons: horizons.clone(),
            budget,
            arms: cfg.env.arms.unwrap_or(3),
            reps: cfg.reps(),
            base_seed: cfg.seed(),
            workers: cfg.workers(),
        })?;
        match res.slope {
            Some(s) => println!("{:<10} slope {s:.4}", policy.name()),
            None => println!("{:<10} slope undefined (zero regret)", policy.name()),
        }
        results.push(res);
    }
    let dir = cfg.out();
    let preamble = cfg.preamble();
    write_sweep_csv(create(&dir, "sweep.csv")?, &preamble, &results)?;
    write_slopes_csv(create(&dir, "slopes.csv")?, &preamble, &results)?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn verify_bounds(cfg: &RunConfig) -> Result<(), CliError> {
    let b = &cfg.bounds;
    let defaults = PolicyParams::default();
    let arms = b.arms.or(cfg.env.arms).unwrap_or(3);
    let tau = b.tau.unwrap_or(203);
    let grid = cfg.bound_grid();
    let mut rows = verify_sw_bound(b.eta.unwrap_or(defaults.eta), arms, tau, &grid)?;
    rows.extend(verify_robust_bound(
        b.a.unwrap_or(defaults.a),
        b.zeta.unwrap_or(defaults.zeta),
        arms,
        tau,
        &grid,
    )?);
    let dir = cfg.out();
    write_bounds_csv(create(&dir, "bounds.csv")?, &cfg.preamble(), &rows)?;
    let violations: Vec<_> = rows.iter().filter(|r| !r.holds()).collect();
    for r in &rows {
        println!(
            "{:<13} x={:<4} l={:<4} empirical {:.6}  bound {:.6}{}",
            r.lemma,
            r.x,
            r.l,
            r.empirical,
            r.bound,
            if r.holds() { "" } else { "  VIOLATED" }
        );
    }
    println!("wrote {}", dir.display());
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "{} grid points exceed bound + 3 std_err",
            violations.len()
        )))
    }
}

fn list_policies() -> Result<(), CliError> {
    let params = PolicyParams::default();
    let mut out = io::stdout().lock();
    for kind in PolicyKind::ALL {
        let name = match kind {
            PolicyKind::FixedArm(_) => "fixed:<arm>".to_string(),
            k => k.name(),
        };
        writeln!(out, "{name:<12} {}", kind.describe(&params))?;
    }
    Ok(())
}

fn describe_env(cfg: &RunConfig) -> Result<(), CliError> {
    let env = cfg.environment()?;
    let dir = cfg.out();
    let mut w = create(&dir, "means.csv")?;
    writeln!(w, "# {}", cfg.preamble())?;
    env.write_means_csv(&mut w)?;
    w.flush()?;
    let v = env.total_variation();
    println!("env        {}", env.kind().name());
    println!("K          {}", env.arms());
    println!("T          {}", env.horizon());
    println!("v_sup      {:.6}", v.sup);
    println!("v_max_arm  {:.6}", v.max_arm);
    println!("tuning V_T {:.6}", env.tuning_budget());
    println!("wrote {}", dir.join("means.csv").display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::ListPolicies => list_policies(),
        command => cli.config().and_then(|cfg| match command {
            Command::Run => run(&cfg),
            Command::Sweep { .. } => sweep(&cfg),
            Command::VerifyBounds { .. } => verify_bounds(&cfg),
            Command::DescribeEnv => describe_env(&cfg),
            Command::ListPolicies => unreachable!(),
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Usage(_) => ExitCode::from(2),
                CliError::Runtime(_) => ExitCode::from(1),
            }
        }
    }
}
