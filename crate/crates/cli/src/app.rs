use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use phipp::{PhiSpec, PursuitMode, QMode};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::commands::{cmd_realdata, cmd_sim, cmd_test, Output, Simulation};
use crate::config::RunConfig;
use crate::report::write_grid_path;

#[derive(Debug, Parser)]
#[command(name = "phipp", version, about = "Copula goodness-of-fit tests by divergence projection pursuit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test the copula of the numeric columns of a CSV file.
    Test {
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Simulate one of the two reference designs and test it.
    Sim {
        #[arg(value_enum)]
        which: SimArg,
        /// Number of observations.
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the elliptical test on the embedded Renault/Peugeot prices and
    /// write copula grids in the canonical and discovered bases.
    Realdata {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SimArg {
    Sim1,
    Sim2,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Elliptical,
    Independence,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum QModeArg {
    Paper,
    Strict,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON file with a full or partial run configuration; flags override it.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// kl, chi2, hellinger or power:G.
    #[arg(long, value_name = "NAME", value_parser = parse_divergence)]
    pub divergence: Option<PhiSpec>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum)]
    pub q_mode: Option<QModeArg>,
    /// Truncation exponent.
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the copula density grid in the discovered basis.
    #[arg(long)]
    pub grid: bool,
    #[arg(long, value_name = "N")]
    pub grid_res: Option<usize>,
    /// Write the JSON report here; grids go next to it.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Print the JSON report instead of the text summary.
    #[arg(long)]
    pub json: bool,
}

fn parse_divergence(s: &str) -> std::result::Result<PhiSpec, String> {
    s.parse().map_err(|e: phipp::Error| e.to_string())
}

impl CommonArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self, default_mode: PursuitMode, default_divergence: PhiSpec) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => RunConfig { mode: default_mode, divergence: default_divergence, ..RunConfig::default() },
        };
        if let Some(m) = self.mode {
            cfg.mode = match m {
                ModeArg::Elliptical => PursuitMode::Elliptical,
                ModeArg::Independence => PursuitMode::Independence,
            };
        }
        if let Some(d) = self.divergence {
            cfg.divergence = d;
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(q) = self.q_mode {
            cfg.q_alpha_mode = match q {
                QModeArg::Paper => QMode::Paper,
                QModeArg::Strict => QMode::Strict,
            };
        }
        if self.nu.is_some() {
            cfg.nu = self.nu;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.grid_res {
            cfg.grid_resolution = r;
        }
        Ok(cfg)
    }
}

fn grid_path(out: Option<&Path>, name: &str) -> PathBuf {
    match out {
        Some(p) => {
            let stem = p.file_stem().map_or_else(|| "phipp".into(), |s| s.to_string_lossy().into_owned());
            p.with_file_name(format!("{stem}_grid_{name}.csv"))
        }
        None => PathBuf::from(format!("phipp_grid_{name}.csv")),
    }
}

/// Runs a parsed command line, writing human output to `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    let (output, common) = match &cli.command {
        Command::Test { input, common } => {
            let cfg = common.resolve(PursuitMode::Elliptical, PhiSpec::ChiSquare)?;
            (cmd_test(input, &cfg, common.grid)?, common)
        }
        Command::Sim { which, n, common } => {
            let which = match which {
                SimArg::Sim1 => Simulation::Sim1,
                SimArg::Sim2 => Simulation::Sim2,
            };
            let cfg = common.resolve(which.matching_mode(), PhiSpec::ChiSquare)?;
            (cmd_sim(which, *n, &cfg, common.grid)?, common)
        }
        Command::Realdata { common } => {
            let cfg = common.resolve(PursuitMode::Elliptical, PhiSpec::KullbackLeibler)?;
            (cmd_realdata(&cfg)?, common)
        }
    };
    emit(&output, common, stdout)
}

fn emit(output: &Output, common: &CommonArgs, stdout: &mut dyn Write) -> Result<()> {
    let json = output.report.to_json()?;
    if let Some(path) = &common.out {
        std::fs::write(path, &json).with_context(|| format!("cannot write {}", path.display()))?;
    }
    for (name, grid) in &output.grids {
        let path = grid_path(common.out.as_deref(), name);
        write_grid_path(grid, &path)?;
        if !common.json {
            writeln!(stdout, "grid ({name} basis): {}", path.display())?;
        }
    }
    if common.json {
        stdout.write_all(json.as_bytes())?;
    } else {
        stdout.write_all(output.report.summary().as_bytes())?;
    }
    Ok(())
}
