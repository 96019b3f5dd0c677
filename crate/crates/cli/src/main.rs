//! `krflow`: command-line front end for the radial Kähler-Ricci flow lab.
//!
//! Subcommands: `run` (integrate a configured flow and write diagnostics,
//! snapshots and a verdict), `proptest` (random-instance suites for the
//! curvature inequalities), `refine` (grid-refinement ladder), `oracle`
//! (curvature report for a family) and `resume` (continue from a snapshot
//! file, bit-exactly).
//!
//! Exit codes: 0 success / all criteria pass, 1 verdict or suite failure,
//! 2 configuration problem, 3 curvature hypothesis violated (without
//! `--force`), 4 numerical failure (positivity loss or non-finite values).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use krflow_core::config::RunConfig;
use krflow_core::runner::{
    self, exit_class, replay_tensor, run_property_suites, ExitClass, RunOptions, SuiteOptions,
};

#[derive(Parser)]
#[command(name = "krflow", version, about = "radial Kähler-Ricci flow laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured flow and verify its bounds.
    Run(RunArgs),
    /// Run the random-instance property suites.
    Proptest(PropArgs),
    /// Run a grid-refinement ladder and report observed orders.
    Refine(RefineArgs),
    /// Report curvature constants and closed-form-vs-numeric deltas.
    Oracle(OracleArgs),
    /// Continue a run from a snapshot file.
    Resume(ResumeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to the config's out_dir, then "out").
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Run even if the negative-curvature hypothesis fails.
    #[arg(long)]
    force: bool,
    /// Emit SVG line charts of the diagnostics columns.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct PropArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Samples per suite and dimension.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Directory for replay files of failing instances.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Inject a sub-tolerance symmetry defect to exercise the failure path.
    #[arg(long)]
    plant_violation: bool,
    /// Re-check a serialized failing instance instead of running suites.
    #[arg(long)]
    replay: Option<PathBuf>,
}

#[derive(Args)]
struct RefineArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated doubling ladder of grid sizes.
    #[arg(long, value_delimiter = ',')]
    ladder: Option<Vec<usize>>,
    /// Writes the convergence table here as refine.csv when given.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated list of s values to probe.
    #[arg(long, value_delimiter = ',')]
    s_values: Option<Vec<f64>>,
}

#[derive(Args)]
struct ResumeArgs {
    /// Snapshot file to continue from.
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
    #[arg(long)]
    svg: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Proptest(args) => cmd_proptest(args),
        Command::Refine(args) => cmd_refine(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Resume(args) => cmd_resume(args),
    };
    ExitCode::from(code)
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<RunConfig, u8> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read config {}: {e}", path.display());
        ExitClass::ConfigError as u8
    })?;
    let mut cfg = RunConfig::parse(&text).map_err(|e| {
        eprintln!("error: {e}");
        ExitClass::ConfigError as u8
    })?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| {
        eprintln!("error: {e}");
        ExitClass::ConfigError as u8
    })?;
    Ok(cfg)
}

fn out_dir(flag: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    flag.or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn cmd_run(args: RunArgs) -> u8 {
    let cfg = match load_config(&args.config, args.seed) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let out = out_dir(args.out, &cfg);
    let opts = RunOptions { force: args.force, emit_svg: args.svg };
    match runner::execute_run(&cfg, &out, opts) {
        Ok(outcome) => {
            print!("{}", outcome.verdict.render());
            println!(
                "run complete: t = {:.6}, steps = {}, kappa_est = {:.6e}, B_est = {:.6e}{}",
                outcome.final_state.t,
                outcome.final_state.step_count,
                outcome.kappa_est,
                outcome.b_est,
                if outcome.stopped_early { " (early stop)" } else { "" }
            );
            println!("artifacts: {}", out.display());
            if outcome.verdict.all_pass() {
                ExitClass::Ok as u8
            } else {
                ExitClass::VerdictFailure as u8
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            exit_class(&err) as u8
        }
    }
}

fn cmd_proptest(args: PropArgs) -> u8 {
    if let Some(replay) = &args.replay {
        return match replay_tensor(replay) {
            Ok(accepted) => {
                if accepted {
                    println!("replay: validator still accepts the instance (violation reproduces)");
                    ExitClass::VerdictFailure as u8
                } else {
                    println!("replay: validator rejects the instance");
                    ExitClass::Ok as u8
                }
            }
            Err(err) => {
                eprintln!("error: {err}");
                exit_class(&err) as u8
            }
        };
    }
    let opts = SuiteOptions {
        seed: args.seed,
        samples: args.samples,
        plant_violation: args.plant_violation,
    };
    if std::fs::create_dir_all(&args.out).is_err() {
        eprintln!("error: cannot create {}", args.out.display());
        return ExitClass::ConfigError as u8;
    }
    println!("# seed={} samples={}", opts.seed, opts.samples);
    let summaries = run_property_suites(&opts, &args.out);
    let mut failures = 0usize;
    for s in &summaries {
        println!("{}", s.render());
        failures += s.failures;
    }
    if failures == 0 {
        ExitClass::Ok as u8
    } else {
        ExitClass::VerdictFailure as u8
    }
}

fn cmd_refine(args: RefineArgs) -> u8 {
    let cfg = match load_config(&args.config, None) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let ladder = args
        .ladder
        .unwrap_or_else(|| vec![cfg.grid_n, 2 * cfg.grid_n, 4 * cfg.grid_n]);
    match runner::execute_refine(&cfg, &ladder) {
        Ok(table) => {
            print!("{}", table.render());
            if let Some(out) = args.out {
                if std::fs::create_dir_all(&out).is_err()
                    || std::fs::write(out.join("refine.csv"), table.render()).is_err()
                {
                    eprintln!("error: cannot write {}", out.display());
                    return ExitClass::ConfigError as u8;
                }
            }
            if table.pass {
                ExitClass::Ok as u8
            } else {
                ExitClass::VerdictFailure as u8
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            exit_class(&err) as u8
        }
    }
}

fn cmd_oracle(args: OracleArgs) -> u8 {
    let cfg = match load_config(&args.config, None) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let s_values = args
        .s_values
        .unwrap_or_else(|| (0..=6).map(|i| cfg.s_max * i as f64 / 6.0).collect());
    match runner::execute_oracle(&cfg, &s_values) {
        Ok(report) => {
            print!("{}", report.render());
            ExitClass::Ok as u8
        }
        Err(err) => {
            eprintln!("error: {err}");
            exit_class(&err) as u8
        }
    }
}

fn cmd_resume(args: ResumeArgs) -> u8 {
    let opts = RunOptions { force: args.force, emit_svg: args.svg };
    match runner::execute_resume(&args.snapshot, &args.out, opts) {
        Ok(outcome) => {
            print!("{}", outcome.verdict.render());
            println!(
                "resumed to t = {:.6}, steps = {}",
                outcome.final_state.t, outcome.final_state.step_count
            );
            if outcome.verdict.all_pass() {
                ExitClass::Ok as u8
            } else {
                ExitClass::VerdictFailure as u8
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            exit_class(&err) as u8
        }
    }
}
