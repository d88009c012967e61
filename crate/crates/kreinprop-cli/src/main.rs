use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kreinprop_cli::{load, run, RunOptions, Sink};

#[derive(Parser)]
#[command(name = "kreinprop", version, about = "Klein–Gordon propagators and in/out checks from a scenario config")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write report.json, CSV tables and optional kernel dumps.
    Run {
        config: PathBuf,
        /// Output directory, or `-` to print the report to stdout and write nothing.
        /// Defaults to $KREINPROP_OUT, then ./kreinprop-out.
        #[arg(long)]
        out: Option<String>,
        /// Multiplies every tolerance.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
        /// Dump all kernels regardless of the config.
        #[arg(long)]
        dump_kernels: bool,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run { config, out, tol_scale, dump_kernels, seed } = cli.command;
    if !(tol_scale.is_finite() && tol_scale > 0.0) {
        eprintln!("--tol-scale: must be positive");
        return ExitCode::from(2);
    }
    let cfg = match load(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", config.display());
            return ExitCode::from(2);
        }
    };
    let out = out.or_else(|| std::env::var("KREINPROP_OUT").ok()).unwrap_or_else(|| "kreinprop-out".into());
    let sink = if out == "-" { Sink::Stdout } else { Sink::Dir(PathBuf::from(out)) };
    let report = run(&cfg, &RunOptions { sink: sink.clone(), tol_scale, dump_kernels, seed });
    let json = match serde_json::to_string_pretty(&report) {
        Ok(j) => j,
        Err(e) => {
            eprintln!("report serialization: {e}");
            return ExitCode::from(3);
        }
    };
    match sink {
        Sink::Stdout => println!("{json}"),
        Sink::Dir(dir) => {
            if let Err(e) = std::fs::create_dir_all(&dir).and_then(|_| std::fs::write(dir.join("report.json"), &json)) {
                eprintln!("{}: {e}", dir.display());
                return ExitCode::from(3);
            }
            for c in report.checks.iter().filter(|c| c.failed()) {
                eprintln!("FAIL {} {} value={:e} tol={:e}", c.key, c.label, c.value, c.tol);
            }
            for e in &report.errors {
                eprintln!("ERROR {}: {}", e.output, e.message);
            }
            eprintln!(
                "{} checks, {} failed, {} errors; report at {}",
                report.summary.checks,
                report.summary.failed,
                report.summary.errors,
                dir.join("report.json").display()
            );
        }
    }
    ExitCode::from(report.exit_code() as u8)
}
