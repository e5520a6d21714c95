use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use guarpriv::harness::commands;
use guarpriv::harness::Experiment;
use guarpriv::{Error, Result};

#[derive(Parser)]
#[command(
    name = "guarpriv",
    version,
    about = "Guaranteed-privacy perturbation for distributed optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design perturbation slopes (verbatim LP and slope-floor variant).
    Design(Common),
    /// Privacy gaps of the configured or designed slopes.
    Privacy(Common),
    /// Sample slopes, run the solvers, and compare errors with the bound.
    Sweep(Common),
    /// Run the configured property checks.
    Verify(Common),
    /// Full pipeline on the bundled three-agent example.
    ReproduceExample(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the sampling seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of dgd, gradient_tracking, zeroth_order.
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<String>>,
    /// Overrides the number of sampled slopes.
    #[arg(long)]
    samples: Option<usize>,
    /// Write per-round iterate CSVs for the first sample.
    #[arg(long)]
    trace: bool,
}

impl Common {
    fn experiment(&self, bundled: bool) -> Result<(Experiment, PathBuf)> {
        let mut exp = match (&self.config, bundled) {
            (Some(path), _) => Experiment::load(path)?,
            (None, true) => Experiment::bundled(),
            (None, false) => return Err(Error::Usage("--config is required".into())),
        };
        if let Some(seed) = self.seed {
            exp.config.sampling.seed = seed;
        }
        if let Some(n) = self.samples {
            exp.config.sampling.sample_count = n;
        }
        if let Some(names) = &self.algorithms {
            exp.config.select_algorithms(names)?;
        }
        exp.config.validate()?;
        let out = self.out.clone().unwrap_or_else(|| exp.config.output_dir.clone());
        Ok((exp, out))
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Design(c) => {
            let (exp, out) = c.experiment(false)?;
            print_json(&commands::design(&exp, &out)?)
        }
        Command::Privacy(c) => {
            let (exp, out) = c.experiment(false)?;
            let r = commands::privacy(&exp, &out)?;
            print!("{}", commands::privacy_table(&r));
            Ok(())
        }
        Command::Sweep(c) => {
            let (exp, out) = c.experiment(false)?;
            let s = commands::sweep(&exp, &out, c.trace)?;
            println!("{} rows written to {}", s.rows.len(), out.join("sweep.csv").display());
            Ok(())
        }
        Command::Verify(c) => {
            let (exp, out) = c.experiment(false)?;
            let r = commands::verify(&exp, &out)?;
            for p in &r.properties {
                println!(
                    "{:<22} {} ({} checks)",
                    p.name,
                    if p.passed { "pass" } else { "FAIL" },
                    p.checks
                );
            }
            Ok(())
        }
        Command::ReproduceExample(c) => {
            let (exp, out) = c.experiment(true)?;
            let s = commands::reproduce(&exp, &out, c.trace)?;
            println!("{} rows written to {}", s.rows.len(), out.join("sweep.csv").display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
