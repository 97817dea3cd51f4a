//! `entropy-lab`: scenario-driven front end for the conservation-law
//! laboratory. Exit codes: 0 success, 1 configuration error, 2 numerical
//! failure.

// `!(x > 0.0)`-style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod scenario;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use entropy_lab::bilinear::run_selftest;
use entropy_lab::meter::{holder_exponents, power_law_gamma, Verdict};
use scenario::{parse_scenario, run_scenario, write_riemann_artifacts, RunOptions, Scenario};

#[derive(Parser)]
#[command(name = "entropy-lab", version, about = "Verification lab for 1-D scalar conservation laws with convex fluxes")]
struct Cli {
    /// RNG seed for sampled diagnostics and self-tests.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Run up to this many scenarios in parallel.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Override solver.dx in every scenario file.
    #[arg(long, global = true)]
    dx_override: Option<f64>,
    /// Suppress per-scenario progress lines.
    #[arg(long, global = true)]
    quiet: bool,
    /// Output directory (also settable via ENTROPY_LAB_OUT; default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a Riemann problem exactly, classify the jump, sample a profile.
    Riemann {
        #[arg(long, required = true)]
        config: Vec<PathBuf>,
        /// Time at which to sample the fan profile.
        #[arg(long, default_value_t = 1.0)]
        t: f64,
    },
    /// Run a scenario's solver and write the solution CSV.
    Solve {
        #[arg(long, required = true)]
        config: Vec<PathBuf>,
    },
    /// Solve a scenario and run its diagnostics to CSV/JSON verdicts.
    Meter {
        #[arg(long, required = true)]
        config: Vec<PathBuf>,
    },
    /// Randomized verification of the bilinear-form properties.
    Bilinear {
        /// Number of randomized trials.
        #[arg(long)]
        selftest: u64,
    },
    /// Growth-condition report for a scenario's flux/entropy pair.
    Growth {
        #[arg(long)]
        config: PathBuf,
        /// Domination exponent; defaults to the closed-form value.
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Hölder exponents for given growth parameters (γ defaults to the
    /// power-law value max{(α+1)/(β+1), 1}).
    Holder {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Reproduce the standard fixtures end to end and check their verdicts.
    Demo,
}

enum CliError {
    Config(Vec<String>),
    Numeric(anyhow::Error),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help / --version land here with a "success" kind.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };

    let out_dir = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("ENTROPY_LAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let opts = RunOptions { out_dir, seed: cli.seed, quiet: cli.quiet };

    match dispatch(&cli, &opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(errors)) => {
            for e in errors {
                eprintln!("config error: {e}");
            }
            ExitCode::from(1)
        }
        Err(CliError::Numeric(e)) => {
            eprintln!("numerical failure: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli, opts: &RunOptions) -> Result<(), CliError> {
    match &cli.command {
        Command::Riemann { config, t } => {
            let scenarios = parse_all(config, cli.dx_override)?;
            for s in &scenarios {
                write_riemann_artifacts(s, opts, *t).map_err(CliError::Numeric)?;
            }
            Ok(())
        }
        Command::Solve { config } | Command::Meter { config } => {
            let scenarios = parse_all(config, cli.dx_override)?;
            run_many(scenarios, opts, cli.jobs)
        }
        Command::Bilinear { selftest } => {
            let report = run_selftest(*selftest, cli.seed);
            fs::create_dir_all(&opts.out_dir).map_err(|e| CliError::Numeric(e.into()))?;
            let path = opts.out_dir.join("bilinear_selftest.json");
            fs::write(&path, serde_json::to_string_pretty(&report).unwrap())
                .map_err(|e| CliError::Numeric(e.into()))?;
            if !cli.quiet {
                println!(
                    "bilinear self-test: {} trials (+{} quadratic), {} failure(s)",
                    report.trials,
                    report.quadratic_trials,
                    report.failures.len()
                );
            }
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::Numeric(anyhow::anyhow!(
                    "{} counterexample(s); repro records in {}",
                    report.failures.len(),
                    path.display()
                )))
            }
        }
        Command::Growth { config, gamma } => {
            let mut scenario = parse_scenario(config, cli.dx_override).map_err(CliError::Config)?;
            scenario.config.diagnostics =
                vec![scenario::DiagnosticSpec::Growth { gamma: *gamma }];
            let summary = run_scenario(&scenario, opts).map_err(CliError::Numeric)?;
            if !cli.quiet {
                println!("growth bounded: {:?}", summary.growth_bounded);
            }
            Ok(())
        }
        Command::Holder { alpha, beta, gamma } => {
            let gamma = gamma.unwrap_or_else(|| power_law_gamma(*alpha, *beta));
            let (g1, g2) = holder_exponents(*alpha, *beta, gamma)
                .map_err(|e| CliError::Config(vec![e.to_string()]))?;
            println!(
                "{}",
                serde_json::json!({ "alpha": alpha, "beta": beta, "gamma": gamma, "gamma1": g1, "gamma2": g2 })
            );
            Ok(())
        }
        Command::Demo => demo(cli, opts),
    }
}

fn parse_all(paths: &[PathBuf], dx_override: Option<f64>) -> Result<Vec<Scenario>, CliError> {
    let mut scenarios = Vec::new();
    let mut errors = Vec::new();
    for path in paths {
        match parse_scenario(path, dx_override) {
            Ok(s) => scenarios.push(s),
            Err(mut e) => {
                errors.extend(e.drain(..).map(|m| format!("{}: {m}", path.display())));
            }
        }
    }
    if errors.is_empty() {
        Ok(scenarios)
    } else {
        Err(CliError::Config(errors))
    }
}

fn run_many(scenarios: Vec<Scenario>, opts: &RunOptions, jobs: usize) -> Result<(), CliError> {
    if jobs <= 1 || scenarios.len() <= 1 {
        for s in &scenarios {
            run_scenario(s, opts).map_err(CliError::Numeric)?;
        }
        return Ok(());
    }
    let errors = std::sync::Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for chunk in scenarios.chunks(scenarios.len().div_ceil(jobs)) {
            let errors = &errors;
            let opts = RunOptions {
                out_dir: opts.out_dir.clone(),
                seed: opts.seed,
                quiet: opts.quiet,
            };
            scope.spawn(move || {
                for s in chunk {
                    if let Err(e) = run_scenario(s, &opts) {
                        errors.lock().unwrap().push(e);
                    }
                }
            });
        }
    });
    let mut errors = errors.into_inner().unwrap();
    match errors.pop() {
        None => Ok(()),
        Some(e) => Err(CliError::Numeric(e)),
    }
}

struct Fixture {
    name: &'static str,
    toml: &'static str,
    expect: fn(&scenario::VerdictSummary) -> Result<(), String>,
}

const FIXTURES: &[Fixture] = &[
    Fixture {
        name: "burgers-shock",
        toml: r#"
[flux]
kind = "named"
name = "burgers"
[initial]
kind = "riemann"
left = 1.0
right = 0.0
[solver]
scheme = "godunov"
dx = 0.01
cfl = 0.45
t_end = 1.2
window = [-2.0, 2.0]
[[diagnostics]]
kind = "balls"
center = [1.0, 0.5]
radii = [0.2, 0.1, 0.05]
[[diagnostics]]
kind = "kruzkov"
k_min = -0.5
k_max = 1.5
k_count = 21
[[diagnostics]]
kind = "oleinik"
c = 1.0
times = [0.5, 1.0]
"#,
        expect: |s| {
            if s.admissible != Some(true) {
                return Err("expected admissible".into());
            }
            if s.residual_max.unwrap_or(1.0) > 5e-3 {
                return Err(format!("Kruzkov residual too large: {:?}", s.residual_max));
            }
            if s.oleinik_max_violation.unwrap_or(1.0) > 0.0 {
                return Err("Oleinik bound violated".into());
            }
            Ok(())
        },
    },
    Fixture {
        name: "burgers-rarefaction",
        toml: r#"
[flux]
kind = "named"
name = "burgers"
[initial]
kind = "riemann"
left = 0.0
right = 1.0
[solver]
scheme = "hopf_lax"
dx = 0.01
t_end = 1.0
window = [-2.0, 3.0]
[[diagnostics]]
kind = "balls"
center = [1.0, 0.5]
radii = [0.2, 0.1, 0.05]
target = "fan"
[[diagnostics]]
kind = "oleinik"
c = 1.0
times = [0.6, 1.0]
"#,
        expect: |s| {
            if s.admissible != Some(true) {
                return Err("expected admissible".into());
            }
            if s.oleinik_max_violation.unwrap_or(1.0) > 0.0 {
                return Err("Oleinik bound violated".into());
            }
            Ok(())
        },
    },
    Fixture {
        name: "burgers-undercompressive",
        toml: r#"
[flux]
kind = "named"
name = "burgers"
[initial]
kind = "riemann"
left = 0.0
right = 1.0
[solver]
scheme = "undercompressive_fan"
dx = 0.005
t_end = 1.2
window = [-0.5, 1.5]
[[diagnostics]]
kind = "balls"
center = [1.0, 0.5]
radii = [0.2, 0.1, 0.05]
target = "fan"
[[diagnostics]]
kind = "kruzkov"
k_min = 0.5
k_max = 0.5
k_count = 1
"#,
        expect: |s| {
            if s.admissible != Some(false) {
                return Err("expected inadmissible".into());
            }
            let flagged = s
                .measure_verdicts
                .iter()
                .any(|v| matches!(v.verdict, Verdict::PositiveLowerBound(_)));
            if !flagged {
                return Err("expected PositiveLowerBound on the shock".into());
            }
            if s.residual_max.unwrap_or(0.0) < 0.01 {
                return Err(format!("expected flagged residual, got {:?}", s.residual_max));
            }
            Ok(())
        },
    },
    Fixture {
        name: "plateau-composite",
        toml: r#"
[flux]
kind = "named"
name = "plateau"
[initial]
kind = "riemann"
left = -1.0
right = 2.0
[solver]
scheme = "godunov"
dx = 0.01
cfl = 0.45
t_end = 1.0
window = [-2.5, 3.5]
[[diagnostics]]
kind = "balls"
center = [0.8, 0.0]
radii = [0.2, 0.1, 0.05]
target = "fan"
[[diagnostics]]
kind = "balls"
center = [0.8, 0.0]
radii = [0.2, 0.1, 0.05]
target = "grid"
[[diagnostics]]
kind = "kruzkov"
k_min = -1.0
k_max = 2.0
k_count = 13
"#,
        expect: |s| {
            if s.admissible != Some(true) {
                return Err("expected admissible (contacts produce nothing)".into());
            }
            if s.residual_max.unwrap_or(1.0) > 5e-3 {
                return Err(format!("Kruzkov residual too large: {:?}", s.residual_max));
            }
            Ok(())
        },
    },
    Fixture {
        name: "growth-power",
        toml: r#"
[flux]
kind = "named"
name = "power"
alpha = 2.0
[initial]
kind = "riemann"
left = 0.0
right = 1.0
[solver]
scheme = "hopf_lax"
dx = 0.05
t_end = 0.5
window = [-3.0, 3.0]
[[diagnostics]]
kind = "growth"
gamma = 1.5
"#,
        expect: |s| {
            if s.growth_bounded != Some(true) {
                return Err("expected bounded growth constant".into());
            }
            Ok(())
        },
    },
    Fixture {
        name: "growth-exponential",
        toml: r#"
[flux]
kind = "named"
name = "exp_flux"
[initial]
kind = "riemann"
left = 0.0
right = 1.0
[solver]
scheme = "hopf_lax"
dx = 0.05
t_end = 0.5
window = [-3.0, 3.0]
[[diagnostics]]
kind = "growth"
gamma = 3.0
"#,
        expect: |s| {
            if s.growth_bounded != Some(false) {
                return Err("expected unbounded growth constant".into());
            }
            Ok(())
        },
    },
];

fn demo(cli: &Cli, opts: &RunOptions) -> Result<(), CliError> {
    let scenario_dir = opts.out_dir.join("demo-scenarios");
    fs::create_dir_all(&scenario_dir).map_err(|e| CliError::Numeric(e.into()))?;
    let mut all_ok = true;

    for fixture in FIXTURES {
        let path = scenario_dir.join(format!("{}.toml", fixture.name));
        fs::write(&path, fixture.toml.trim_start()).map_err(|e| CliError::Numeric(e.into()))?;
        let scenario = parse_scenario(&path, cli.dx_override).map_err(CliError::Config)?;
        match run_demo_fixture(&scenario, opts, fixture) {
            Ok(()) => println!("PASS {}", fixture.name),
            Err(msg) => {
                println!("FAIL {} — {msg}", fixture.name);
                all_ok = false;
            }
        }
    }

    // Bilinear self-test and the Hölder closed forms round out the fixtures.
    let report = run_selftest(2_000, cli.seed);
    if report.passed() {
        println!("PASS bilinear-selftest");
    } else {
        println!("FAIL bilinear-selftest — {} counterexample(s)", report.failures.len());
        all_ok = false;
    }
    match holder_exponents(1.0, 1.0, 1.0) {
        Ok((g1, g2)) if (g1 - 0.5).abs() < 1e-15 && (g2 - 1.0 / 3.0).abs() < 1e-15 => {
            println!("PASS holder-exponents");
        }
        _ => {
            println!("FAIL holder-exponents");
            all_ok = false;
        }
    }

    if all_ok {
        Ok(())
    } else {
        Err(CliError::Numeric(anyhow::anyhow!("one or more demo fixtures failed")))
    }
}

fn run_demo_fixture(
    scenario: &Scenario,
    opts: &RunOptions,
    fixture: &Fixture,
) -> Result<(), String> {
    let demo_opts = RunOptions {
        out_dir: opts.out_dir.join("demo"),
        seed: opts.seed,
        quiet: true,
    };
    let summary = run_scenario(scenario, &demo_opts).map_err(|e| e.to_string())?;
    (fixture.expect)(&summary)
}
