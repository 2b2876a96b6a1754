//! Command-line front end: scenario configuration, orchestration, caching,
//! reporting and plot-data emission.

mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stamlab::entropy::{
    relative_entropy_direct, relative_entropy_drift, relative_entropy_gamma,
};
use stamlab::simulate::{moment_curve, simulate_bridge};

use config::ScenarioConfig;
use pipeline::{run_scenario, RunOptions};

#[derive(Parser)]
#[command(
    name = "stamlab",
    about = "Shannon-Stam deficit laboratory: simulate the entropy-minimizing process, \
             estimate relative entropies three ways, and certify deficit lower bounds",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: out/<scenario-name>)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the path count
    #[arg(long)]
    paths: Option<usize>,
    /// Override the grid tail truncation ε
    #[arg(long)]
    epsilon: Option<f64>,
    /// Worker thread cap (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Disable the ensemble cache
    #[arg(long, default_value_t = false)]
    no_cache: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario end to end: simulate, estimate, bound, check, report
    Run(CommonArgs),
    /// Three-route relative entropy of measure_x only
    Entropy(CommonArgs),
    /// Moment curves only (CSV + plot data)
    Curve(CommonArgs),
    /// Diagnostics ledger only
    Checks(CommonArgs),
    /// Re-render summary.csv and plot data from an existing report.json
    Report {
        /// Directory holding report.json
        #[arg(long)]
        out: PathBuf,
    },
}

fn init_threads(n: Option<usize>) {
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn opts_for(args: &CommonArgs, cfg: &ScenarioConfig) -> RunOptions {
    RunOptions {
        out_dir: args
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name)),
        seed_override: args.seed,
        paths_override: args.paths,
        epsilon_override: args.epsilon,
        use_cache: !args.no_cache,
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run() -> stamlab::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            init_threads(args.threads);
            let cfg = ScenarioConfig::load(&args.config)?;
            let opts = opts_for(&args, &cfg);
            let outcome = run_scenario(&cfg, &opts)?;
            print_outcome(&outcome.document);
            for line in &outcome.display {
                println!("  {line}");
            }
            println!("artifacts: {}", opts.out_dir.display());
            Ok(if outcome.document.all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Entropy(args) => {
            init_threads(args.threads);
            let cfg = ScenarioConfig::load(&args.config)?;
            let m = cfg.measure_x.build("measure_x")?;
            let eye = nalgebra::DMatrix::<f64>::identity(m.dim, m.dim);
            let grid = stamlab::simulate::TimeGrid::new(
                cfg.scheme()?,
                cfg.grid.nodes,
                args.epsilon.unwrap_or(cfg.grid.epsilon),
            )?;
            let n_paths = args.paths.unwrap_or(cfg.run.n_paths);
            let seed = args.seed.unwrap_or(cfg.run.master_seed);
            let e = simulate_bridge(&m, &grid, n_paths, seed)?;
            let c = moment_curve(&e);
            let direct = relative_entropy_direct(&m, &eye)?;
            let drift = relative_entropy_drift(&m, &c, &e)?;
            let gamma = relative_entropy_gamma(&m, &c, &e)?;
            println!(
                "relative entropy of measure_x ({}d) to the standard Gaussian:",
                m.dim
            );
            println!(
                "  direct      : {:.8}  (residual {:.2e})",
                direct.value, direct.stderr
            );
            println!(
                "  drift-energy: {:.8}  (stderr {:.2e}, tail ≤ {:.2e})",
                drift.value, drift.stderr, drift.tail_bound
            );
            println!(
                "  Γ-identity  : {:.8}  (stderr {:.2e}, tail ≤ {:.2e})",
                gamma.value, gamma.stderr, gamma.tail_bound
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Curve(args) => {
            init_threads(args.threads);
            let cfg = ScenarioConfig::load(&args.config)?;
            let opts = opts_for(&args, &cfg);
            let mut cfg2 = cfg;
            cfg2.run.checks = false;
            cfg2.run.bounds = vec![];
            let _ = run_scenario(&cfg2, &opts)?;
            println!("curves written to {}", opts.out_dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Checks(args) => {
            init_threads(args.threads);
            let cfg = ScenarioConfig::load(&args.config)?;
            let opts = opts_for(&args, &cfg);
            let mut cfg2 = cfg;
            cfg2.run.checks = true;
            cfg2.run.bounds = vec![];
            let outcome = run_scenario(&cfg2, &opts)?;
            print_outcome(&outcome.document);
            Ok(if outcome.document.all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Report { out } => {
            pipeline::rerender(&out)?;
            println!("re-rendered artifacts in {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_outcome(doc: &pipeline::ScenarioDocument) {
    println!("scenario: {}", doc.scenario);
    for r in &doc.reports {
        println!(
            "  λ = {:<6} deficit = {:+.6e}  (dX {:.6e}, dY {:.6e}, dConv {:.6e})",
            r.lambda, r.deficit, r.d_x.value, r.d_y.value, r.d_conv.value
        );
        for b in &r.bounds {
            match (b.applicable, b.rhs, b.margin) {
                (true, Some(rhs), Some(margin)) => println!(
                    "      {:<16} rhs = {rhs:+.6e}  margin = {margin:+.6e}",
                    b.name
                ),
                _ => println!(
                    "      {:<16} inapplicable: {}",
                    b.name,
                    b.reason.as_deref().unwrap_or("")
                ),
            }
        }
    }
    if !doc.checks.is_empty() {
        println!("  checks:");
        for c in &doc.checks {
            println!(
                "      {:<32} {}  (statistic {:+.3e})",
                c.check_name,
                if c.passed { "pass" } else { "FAIL" },
                c.statistic
            );
        }
    }
    println!(
        "  overall: {}",
        if doc.all_passed { "PASS" } else { "FAIL" }
    );
}
