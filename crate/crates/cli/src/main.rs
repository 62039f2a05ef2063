use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kgstab_cli::config::{parse_config, Analysis};
use kgstab_cli::report::{Outcome, Report};
use kgstab_cli::run::{run_scenario_with, RunError};
use kgstab_cli::selftest::run_selftest;

const SCHEMA_DOC: &str = include_str!("../../../docs/config.md");

#[derive(Parser)]
#[command(name = "kgstab", version, about = "Decay rates of damped fractional Klein-Gordon equations on a torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every analysis listed in the scenario.
    Run {
        config: PathBuf,
        /// Overrides `output` from the scenario.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Classify the scenario from its facts and geometric checks.
    Classify { config: PathBuf },
    /// Sweep the resolvent constant over lambda.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check the geometric control conditions.
    Gcc { config: PathBuf },
    /// Run the built-in numerical checks.
    Selftest,
    /// Print the scenario file reference.
    Schema,
}

fn summarize(report: &Report) {
    for run in &report.runs {
        println!("s = {}", run.s);
        if let Some(o) = &run.simulate {
            match o {
                Outcome::Ok(sim) => println!(
                    "  simulate: {} fit, semigroup rate {:.4e} (energy {:.3e} -> {:.3e})",
                    sim.selected.fit.model.name(),
                    sim.selected.semigroup_rate.value,
                    sim.initial_energy,
                    sim.final_energy
                ),
                Outcome::Error { error } => println!("  simulate: error: {error}"),
            }
        }
        if let Some(o) = &run.resolvent_sweep {
            match o {
                Outcome::Ok(sw) => println!(
                    "  resolvent_sweep ({}): sup constant {:.4e} at lambda = {:.3}",
                    sw.operator, sw.sup_constant.value, sw.argmax_lambda
                ),
                Outcome::Error { error } => println!("  resolvent_sweep: error: {error}"),
            }
        }
        if let Some(o) = &run.annihilation {
            match o {
                Outcome::Ok(an) => {
                    for p in &an.points {
                        let c = p.two_sided.map_or("vacuous".to_string(), |t| format!("{:.4e}", t.value));
                        println!("  annihilation lambda = {}: |Sigma| = {}, constant {c}", p.lambda, p.sigma_count);
                    }
                }
                Outcome::Error { error } => println!("  annihilation: error: {error}"),
            }
        }
        if let Some(o) = &run.gcc_check {
            match o {
                Outcome::Ok(g) => println!(
                    "  gcc_check: 0-GCC {:?}, d-GCC {:?}, 1-GCC {:?}",
                    g.zero.verdict, g.d.verdict, g.one.verdict
                ),
                Outcome::Error { error } => println!("  gcc_check: error: {error}"),
            }
        }
        if let Some(o) = &run.classify {
            match o {
                Outcome::Ok(c) => {
                    let class = &c.classification.class;
                    let rate = class.rate.map(|r| format!(", rate {r:.4}")).unwrap_or_default();
                    println!("  classify: {}{rate}", class.tag.name());
                    for cite in &class.provenance {
                        println!("    [{}] {}", cite.rule, cite.statement);
                    }
                }
                Outcome::Error { error } => println!("  classify: error: {error}"),
            }
        }
        if run.conformance.predicted.is_some() && run.conformance.fitted.is_some() {
            println!("  conformance: {:?}", run.conformance.status);
        }
        for w in &run.warnings {
            println!("  warning: {w}");
        }
    }
}

fn execute(config: PathBuf, output: Option<PathBuf>, only: Option<&[Analysis]>) -> ExitCode {
    let mut scn = match parse_config(&config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(o) = output {
        scn.output = o;
    }
    match run_scenario_with(&scn, only) {
        Ok(report) => {
            summarize(&report);
            println!("report written to {}", scn.output.join("report.json").display());
            if report.completed {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: some analyses failed; see report.json");
                ExitCode::from(2)
            }
        }
        Err(RunError::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, output } => execute(config, output, None),
        Command::Classify { config } => execute(config, None, Some(&[Analysis::Classify])),
        Command::Sweep { config, output } => execute(config, output, Some(&[Analysis::ResolventSweep])),
        Command::Gcc { config } => execute(config, None, Some(&[Analysis::GccCheck])),
        Command::Selftest => {
            let checks = run_selftest();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Command::Schema => {
            print!("{SCHEMA_DOC}");
            ExitCode::SUCCESS
        }
    }
}
