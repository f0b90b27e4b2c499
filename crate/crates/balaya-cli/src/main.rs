//! Command-line front end: instance I/O, seeded generators, verification
//! drivers and CSV report emission.
//!
//! Exit codes: 0 when every check passes, 1 on any check or numerical
//! failure, 2 on input errors (bad files, malformed JSON, bad flags).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use balaya::continuum::{radial_instance, RadialInstanceConfig};
use balaya::io;
use balaya::semilinear::{p_phi, problem2_search, solve_fixed, Classification, SemilinearProblem};
use balaya::tol::Tolerances;
use balaya::verify::{self, VerificationRecord};

#[derive(Parser)]
#[command(
    name = "balaya",
    about = "Finite balayage spaces and semilinear equations u + K phi(., u) = h",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every verification suite across built-in and seeded instances.
    VerifyAll {
        /// Seed for the instance generators.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Tolerance overrides, e.g. --tol identity_tol=1e-8 (repeatable).
        #[arg(long = "tol", value_name = "NAME=VALUE")]
        tol: Vec<String>,
        /// Seeded instances for the heavy sweeps.
        #[arg(long, default_value_t = 500)]
        instances: usize,
    },
    /// Solve a discrete problem file and print the solve report.
    SolveDiscrete {
        input: PathBuf,
        /// Also write the report to a file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a radial instance file and print the solve report.
    SolveRadial {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the quadrature identity checks (transition densities and Green
    /// functions).
    KernelsCheck {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "tol", value_name = "NAME=VALUE")]
        tol: Vec<String>,
    },
    /// Emit a seeded random discrete instance file.
    Gen {
        /// State count.
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

enum CliError {
    /// Bad input: exit 2.
    Input(String),
    /// Failed check or numerical failure: exit 1.
    Check(String),
}

impl From<balaya::Error> for CliError {
    fn from(e: balaya::Error) -> Self {
        match e {
            balaya::Error::InvalidInput(_) => CliError::Input(e.to_string()),
            _ => CliError::Check(e.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::VerifyAll {
            seed,
            out,
            tol,
            instances,
        } => {
            let tols = parse_tols(&tol)?;
            let mut records = Vec::new();
            records.extend(verify::discrete_oracle_suite(seed, instances, &tols));
            records.extend(verify::hunt_suite(seed, instances, &tols));
            records.extend(verify::domination_suite(seed, instances, &tols));
            let heavy = (instances * 2 / 5).max(1);
            records.extend(verify::solver_contract_suite(seed, heavy, &tols));
            records.extend(verify::identity_suite_driver(seed, heavy, &tols));
            records.extend(verify::nonlocal_h0_suite(&tols));
            records.extend(verify::kernel_identity_suite(&tols));
            records.extend(verify::finiteness_dichotomy_suite(seed));
            records.extend(verify::radial_trend_suite(&tols));
            records.extend(verify::ball_exponent_suite(&tols));
            records.extend(verify::left_translation_suite(&tols));
            emit_records(&records, out.as_deref())?;
            summarize(&records);
            Ok(exit_for(&records))
        }
        Command::SolveDiscrete { input, out } => {
            let text = read_input(&input)?;
            let pj: io::ProblemJson = io::parse_json(&text)?;
            let problem = pj.to_problem()?;
            let report = solve_and_report(&problem)?;
            emit_text(&report, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::SolveRadial { input, out } => {
            let text = read_input(&input)?;
            let rj: io::RadialJson = io::parse_json(&text)?;
            if rj.kind != balaya::continuum::KernelKind::Riesz {
                return Err(CliError::Input(
                    "radial instances use the riesz kind".into(),
                ));
            }
            let cfg = RadialInstanceConfig {
                d: rj.d,
                alpha: rj.alpha,
                gamma: rj.gamma,
                h: rj.h,
            };
            let problem = radial_instance(&cfg, rj.radius, rj.nodes_per_octave)?;
            let report = solve_and_report(&problem)?;
            emit_text(&report, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::KernelsCheck { out, tol } => {
            let tols = parse_tols(&tol)?;
            let records = verify::kernel_identity_suite(&tols);
            emit_records(&records, out.as_deref())?;
            summarize(&records);
            Ok(exit_for(&records))
        }
        Command::Gen { n, seed, out } => {
            if n < 2 {
                return Err(CliError::Input("gen needs --n >= 2".into()));
            }
            let mut rng = balaya::gen::rng_for(seed);
            let pj = balaya::gen::problem_json(&mut rng, n)?;
            let text = serde_json::to_string_pretty(&pj)
                .map_err(|e| CliError::Check(format!("serialization failed: {e}")))?;
            emit_text(&text, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn parse_tols(overrides: &[String]) -> Result<Tolerances, CliError> {
    let mut tols = Tolerances::default();
    for item in overrides {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("expected NAME=VALUE, got `{item}`")))?;
        let value: f64 = value
            .parse()
            .map_err(|e| CliError::Input(format!("bad tolerance value in `{item}`: {e}")))?;
        tols.set(name.trim(), value)?;
    }
    Ok(tols)
}

fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

/// Solves, attaches `P^φh` and the classification, and renders the report
/// as deterministic JSON (sorted keys, no timings).
fn solve_and_report(problem: &SemilinearProblem) -> Result<String, CliError> {
    let rep = solve_fixed(&problem.kp, &problem.phi, &problem.h)?;
    let p = p_phi(problem)?;
    let search = problem2_search(problem)?;
    let classification = match &search.classification {
        Classification::SolvedProblem1 => "solved-problem1".to_string(),
        Classification::SolvedProblem2 { .. } => "solved-problem2".to_string(),
        Classification::NoSolutionEvidence => "no-solution-evidence".to_string(),
    };
    let u: Vec<f64> = rep.u.values().iter().copied().collect();
    let p_vals: Vec<f64> = p.values().iter().copied().collect();
    let g_vals: Option<Vec<f64>> = search
        .g
        .as_ref()
        .map(|g| g.values().iter().copied().collect());
    let value = serde_json::json!({
        "u": u,
        "residual": format!("{:e}", rep.residual),
        "iterations": rep.iterations,
        "converged": rep.converged,
        "p_phi_h": p_vals,
        "classification": classification,
        "level_g": g_vals,
    });
    serde_json::to_string_pretty(&value).map_err(|e| CliError::Check(e.to_string()))
}

fn emit_records(records: &[VerificationRecord], out: Option<&Path>) -> Result<(), CliError> {
    let csv = verify::to_csv(records);
    emit_text(&csv, out)
}

fn emit_text(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{text}") {
                Ok(()) => Ok(()),
                // downstream consumers may close the pipe early
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                Err(e) => Err(CliError::Input(format!("cannot write to stdout: {e}"))),
            }
        }
    }
}

fn summarize(records: &[VerificationRecord]) {
    use std::collections::BTreeMap;
    let mut by_check: BTreeMap<&str, (usize, usize, f64)> = BTreeMap::new();
    for r in records {
        let entry = by_check.entry(&r.check_name).or_insert((0, 0, 0.0));
        entry.0 += 1;
        if r.pass {
            entry.1 += 1;
        }
        if r.residual.is_finite() {
            entry.2 = entry.2.max(r.residual);
        }
    }
    eprintln!("{:<36} {:>6} {:>6}  worst residual", "check", "pass", "total");
    for (name, (total, pass, worst)) in &by_check {
        eprintln!("{name:<36} {pass:>6} {total:>6}  {worst:.3e}");
    }
    let failures = records.iter().filter(|r| !r.pass).count();
    eprintln!("{} records, {} failures", records.len(), failures);
}

fn exit_for(records: &[VerificationRecord]) -> ExitCode {
    if records.iter().all(|r| r.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
