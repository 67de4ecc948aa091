use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qbox_cli::config::{default_seed, parse_dims};
use qbox_cli::{emit_report, export_instance, run_suite, CliError, Format, Suite, SuiteConfig};

#[derive(Parser)]
#[command(name = "qbox", version, about = "Numerical checks of hyper-decoherence for quantum boxes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and report every check.
    Verify {
        suite: Suite,
        /// Pair dimensions of a type, comma separated; repeat for several types.
        #[arg(long = "dims", value_parser = parse_dims, default_values = ["2"])]
        dims: Vec<Vec<usize>>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// Defaults to $QBOX_SEED, else 7.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Lift the total-dimension guard.
        #[arg(long)]
        allow_large: bool,
        /// Include wall time in the report (breaks byte-identical output).
        #[arg(long)]
        timings: bool,
        /// Re-verify a saved purification instance instead of searching.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long, hide = true)]
        planted_defect: bool,
    },
    /// Search for the purification instance of dimension `d` and print it as JSON.
    ExportInstance {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_out(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Verify {
            suite,
            dims,
            trials,
            seed,
            tol,
            out,
            format,
            allow_large,
            timings,
            instance,
            planted_defect,
        } => {
            let seed = match seed {
                Some(s) => s,
                None => default_seed()?,
            };
            let cfg = SuiteConfig {
                tol,
                out: out.clone(),
                allow_large,
                timings,
                planted_defect,
                instance,
                ..SuiteConfig::new(suite, dims, trials, seed)
            };
            let report = run_suite(&cfg)?;
            write_out(&out, &emit_report(&report, format))?;
            for c in report.failing() {
                eprintln!("failed: {} ({})", c.name, c.anchor);
            }
            Ok(report.pass())
        }
        Command::ExportInstance { d, seed, out } => {
            let seed = match seed {
                Some(s) => s,
                None => default_seed()?,
            };
            write_out(&out, &export_instance(d, seed)?)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
