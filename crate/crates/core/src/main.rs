use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use cascade_bandits::bounds::BoundReport;
use cascade_bandits::harness::config::SEED_ENV_VAR;
use cascade_bandits::harness::output::render_csv;
use cascade_bandits::harness::suites::{self, Suite};
use cascade_bandits::harness::{run_experiment, write_results, ExperimentConfig};
use cascade_bandits::{selfcheck, Error, Result};

#[derive(Parser)]
#[command(version, about = "Cascading bandit simulations and regret diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and write the regret curve as CSV.
    Run {
        config: PathBuf,
        /// CSV path; overrides `output` in the config. Without either, CSV goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the regret bounds for the instance in a config.
    Bounds { config: PathBuf },
    /// Run a predefined grid and compare against the published values.
    Reproduce {
        /// table1, table2, dbn or ranked
        suite: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the randomized property suites.
    Selfcheck,
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(path)?;
    config.apply_env_overrides()?;
    Ok(config)
}

fn run(config: &Path, out: Option<PathBuf>, threads: Option<usize>) -> Result<()> {
    let mut config = load(config)?;
    if out.is_some() {
        config.output = out;
    }
    let result = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(|| run_experiment(&config))?,
        None => run_experiment(&config)?,
    };
    match &config.output {
        Some(path) => {
            write_results(&result, path)?;
            let s = result.final_summary();
            println!(
                "{}: final regret {:.3} over {} runs -> {}",
                result.fingerprint,
                s.mean,
                result.n_runs,
                path.display()
            );
        }
        None => print!("{}", render_csv(&result)),
    }
    Ok(())
}

fn bounds(config: &Path) -> Result<()> {
    let config = load(config)?;
    let (p, delta) = config.environment.blb_params();
    let report = BoundReport::blb(
        config.environment.num_items(),
        config.environment.list_size(),
        p,
        delta,
        config.n_steps,
        config.policy.epsilon,
    )?;
    println!("instance              {}", report.instance);
    println!("n                     {}", report.n);
    println!("CascadeUCB1 upper     {:.4}", report.ucb1_upper);
    println!(
        "CascadeKL-UCB upper   {:.4}  (epsilon = {}; leading terms only, understates the full bound)",
        report.klucb_upper_leading, report.epsilon
    );
    if let (Some(c), Some(a)) = (report.lower_constant, report.lower_asymptotic) {
        println!("lower bound constant  {c:.6}");
        println!("lower bound at n      {a:.4}  (asymptotic)");
    }
    Ok(())
}

fn base_seed() -> Result<u64> {
    match std::env::var(SEED_ENV_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::config(format!("{SEED_ENV_VAR}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn file_stem(config: &ExperimentConfig) -> String {
    let env = &config.environment;
    let (_, delta) = env.blb_params();
    let mut stem = format!("L{}_K{}_d{}", env.num_items(), env.list_size(), delta);
    if let cascade_bandits::harness::EnvironmentSpec::Dbn { nu, gamma, .. } = env {
        stem.push_str(&format!("_nu{nu}_g{gamma}"));
    }
    format!("{stem}_{}_{}", config.policy.name, config.policy.ordering.as_str())
}

/// Returns whether every check passed.
fn reproduce(suite: &str, out: Option<PathBuf>) -> Result<bool> {
    let suite: Suite = suite.parse()?;
    let seed = base_seed()?;
    info!("running {suite} with base seed {seed}");
    let results = suites::run_suite(suite, seed)?;
    let decreasing = match suite {
        Suite::Table2 => Some(suites::run_suite(Suite::Table1, seed)?),
        _ => None,
    };
    let mut report = String::new();
    match suite {
        Suite::Table1 => report.push_str(&suites::table_report(&results, &suites::TABLE1)?),
        Suite::Table2 => report.push_str(&suites::table_report(&results, &suites::TABLE2)?),
        Suite::Dbn | Suite::Ranked => {
            for r in &results {
                let s = r.final_summary();
                report.push_str(&format!(
                    "{:<48} {:>10.1} ± {:>5.1}\n",
                    file_stem(&r.config),
                    s.mean,
                    s.stderr.unwrap_or(0.0)
                ));
            }
        }
    }
    let checks = suites::suite_checks(suite, &results, decreasing.as_deref())?;
    for c in &checks {
        report.push_str(&format!("{c}\n"));
    }
    print!("{report}");
    if let Some(dir) = out {
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for r in results.iter().chain(decreasing.iter().flatten()) {
            write_results(r, &dir.join(format!("{}.csv", file_stem(&r.config))))?;
        }
        let path = dir.join(format!("{suite}_report.txt"));
        fs::write(&path, &report).map_err(|e| Error::io(&path, e))?;
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn run_selfcheck() -> Result<bool> {
    let seed = base_seed()?;
    let outcomes = selfcheck::run_all(seed);
    for o in &outcomes {
        println!(
            "{} {} ({} cases, {} failures, worst {:.3e})",
            if o.passed() { "PASS" } else { "FAIL" },
            o.name,
            o.cases,
            o.failures,
            o.worst
        );
    }
    Ok(outcomes.iter().all(|o| o.passed()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            out,
            threads,
        } => run(&config, out, threads).map(|_| true),
        Command::Bounds { config } => bounds(&config).map(|_| true),
        Command::Reproduce { suite, out } => reproduce(&suite, out),
        Command::Selfcheck => run_selfcheck(),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
