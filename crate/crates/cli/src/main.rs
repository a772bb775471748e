//! `qreadout`: runs the regression experiments and writes CSV tables.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qreadout_core::experiment::{parse_config_text, run, Ansatz, ExperimentConfig};
use qreadout_core::mixture::validate_closed_forms;
use qreadout_core::Error;

#[derive(Parser, Debug)]
#[command(name = "qreadout", version, about = "Trains rank-constrained readout observables and tabulates Fisher bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train and evaluate one experiment, writing a CSV and a `.meta.txt` sidecar.
    Run {
        /// Experiment name (mixture, ising, schwinger, cluster, analytic)
        /// followed by `key=value` overrides.
        #[arg(value_name = "EXPERIMENT|KEY=VALUE")]
        args: Vec<String>,
        /// Flat `key=value` file applied before command-line settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "eval-points")]
        eval_points: Option<usize>,
        /// Number of ancilla qubits for the Naimark-extended readout.
        #[arg(long, value_name = "M_A")]
        naimark: Option<usize>,
    },
    /// Print an ansatz in the circuit text format.
    Circuit {
        /// hea, qcnn, qcnn_ring, hva or identity.
        ansatz: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        layers: usize,
    },
    /// Check the mixture closed forms against dense oracles.
    Selftest,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parse { .. } => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn collect_pairs(
    args: &[String],
    config: Option<&PathBuf>,
    flags: &[(&str, Option<String>)],
) -> Result<Vec<(String, String)>, Failure> {
    let mut pairs = Vec::new();
    if let Some(path) = config {
        let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        pairs.extend(parse_config_text(&text)?);
    }
    for a in args {
        match a.split_once('=') {
            Some((k, v)) => pairs.push((k.trim().to_string(), v.trim().to_string())),
            None => pairs.push(("experiment".to_string(), a.clone())),
        }
    }
    for (k, v) in flags {
        if let Some(v) = v {
            pairs.push((k.to_string(), v.clone()));
        }
    }
    Ok(pairs)
}

fn run_command(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { args, config, seed, restarts, out, eval_points, naimark } => {
            let flags = [
                ("seed", seed.map(|v| v.to_string())),
                ("restarts", restarts.map(|v| v.to_string())),
                ("out", out.map(|p| p.display().to_string())),
                ("eval_points", eval_points.map(|v| v.to_string())),
                ("naimark", naimark.map(|v| v.to_string())),
            ];
            let pairs = collect_pairs(&args, config.as_ref(), &flags)?;
            let cfg = ExperimentConfig::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
            let output = run(&cfg)?;
            let (csv, meta) = output.write()?;
            for r in &output.runs {
                let status = match &r.train {
                    Some(t) if !t.converged => " (not converged)",
                    _ => "",
                };
                println!(
                    "m={}: mean squared error {:.3e}, mean variance {:.4}{status}",
                    r.m,
                    r.mean_sq_error(),
                    r.mean_variance()
                );
            }
            println!("wrote {} and {}", csv.display(), meta.display());
            Ok(())
        }
        Command::Circuit { ansatz, n, layers } => {
            let a = Ansatz::parse(&ansatz)?;
            let text = a.build(n, layers)?.to_string();
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
        Command::Selftest => {
            let report = validate_closed_forms()?;
            println!("{report:#?}");
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Runtime("closed-form self-test failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run_command(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
