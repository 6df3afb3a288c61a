//! `isofield` command-line driver: configuration, orchestration and report
//! emission on top of the `isofield` engine.
//!
//! Exit codes: 0 all checks passed, 1 a check failed, 2 I/O error, 64 usage
//! or configuration error.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use commands::{Outcome, VerifyKind};
pub use config::{ExperimentConfig, Format};
pub use error::{CliError, EXIT_CHECK_FAILED, EXIT_IO, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "isofield", version, about = "Simulate and verify isotropic Hilbert-valued spherical random fields")]
pub struct Cli {
    /// TOML experiment configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed, overriding mc.master_seed.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Monte Carlo replicates, overriding mc.replicates.
    #[arg(long, global = true, value_name = "N")]
    pub replicates: Option<usize>,
    /// Degrees to test, comma-separated, overriding mc.ells.
    #[arg(long, global = true, value_delimiter = ',', value_name = "L,L,..")]
    pub ell: Option<Vec<usize>>,
    /// Output directory, overriding output.directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Output formats, overriding output.formats.
    #[arg(long, global = true, value_delimiter = ',', value_name = "FMT,..")]
    pub format: Option<Vec<Format>>,
    /// Worker threads for the Monte Carlo replicates; outputs do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Deterministic invariants of the harmonic and operator layers.
    Selftest,
    /// Draw one field realization on the quadrature grid.
    Simulate,
    /// Monte Carlo and closed-form checks.
    Verify {
        #[arg(value_enum)]
        which: Which,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Which {
    Ergodicity,
    Clt,
    Schoenberg,
}

impl From<Which> for VerifyKind {
    fn from(w: Which) -> Self {
        match w {
            Which::Ergodicity => VerifyKind::Ergodicity,
            Which::Clt => VerifyKind::Clt,
            Which::Schoenberg => VerifyKind::Schoenberg,
        }
    }
}

impl Cli {
    /// Configuration file (or defaults) with the command-line overrides applied.
    pub fn resolve_config(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.mc.master_seed = seed;
        }
        if let Some(r) = self.replicates {
            cfg.mc.replicates = r;
        }
        if let Some(ells) = &self.ell {
            cfg.mc.ells = ells.clone();
        }
        if let Some(out) = &self.out {
            cfg.output.directory = out.clone();
        }
        if let Some(formats) = &self.format {
            cfg.output.formats = formats.iter().copied().collect();
        }
        Ok(cfg)
    }

    pub fn execute(&self) -> Result<Outcome, CliError> {
        let cfg = self.resolve_config()?;
        let run = || match self.command {
            Command::Selftest => commands::execute(&cfg, "selftest", commands::selftest),
            Command::Simulate => commands::execute(&cfg, "simulate", commands::simulate),
            Command::Verify { which } => {
                let kind = VerifyKind::from(which);
                commands::execute(&cfg, &format!("verify {}", kind.name()), |c| {
                    commands::verify(c, kind)
                })
            }
        };
        match self.threads {
            None => run(),
            Some(0) => Err(CliError::Usage("--threads must be >= 1".into())),
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?
                .install(run),
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match cli.execute() {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
