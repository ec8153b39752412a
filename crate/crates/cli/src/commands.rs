use anyhow::{ensure, Result};
use nalgebra::DMatrix;
use phipp::copulas::empirical_copula_density_grid;
use phipp::datasets::{renault_peugeot_log_prices, SimulationDesign, RENAULT_PEUGEOT};
use phipp::gof::{elliptical_copula_test, independence_test};
use phipp::{CopulaGrid, PursuitMode, PursuitOutcome};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::Path;

use crate::config::RunConfig;
use crate::input::read_csv_path;
use crate::report::{Metadata, Report};

const MAX_GRID_CELLS: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Simulation {
    /// Gaussian copula (ρ = 0.5) with Gumbel and exponential margins.
    Sim1,
    /// The same margins, independent.
    Sim2,
}

impl Simulation {
    pub fn name(self) -> &'static str {
        match self {
            Simulation::Sim1 => "sim1",
            Simulation::Sim2 => "sim2",
        }
    }

    pub fn design(self) -> SimulationDesign {
        match self {
            Simulation::Sim1 => SimulationDesign::SIM1,
            Simulation::Sim2 => SimulationDesign::SIM2,
        }
    }

    /// The test each design is meant for.
    pub fn matching_mode(self) -> PursuitMode {
        match self {
            Simulation::Sim1 => PursuitMode::Elliptical,
            Simulation::Sim2 => PursuitMode::Independence,
        }
    }
}

/// A finished command: the report and any copula grids, keyed by a short
/// name used to build file names.
#[derive(Debug, Clone)]
pub struct Output {
    pub report: Report,
    pub grids: Vec<(&'static str, CopulaGrid)>,
}

struct Run<'a> {
    command: &'a str,
    input: Option<String>,
    columns: Vec<String>,
    conventions: BTreeMap<String, String>,
}

fn execute(
    data: &DMatrix<f64>,
    cfg: &RunConfig,
    rng: &mut ChaCha8Rng,
    run: Run<'_>,
) -> Result<(Report, PursuitOutcome)> {
    cfg.validate(data.ncols())?;
    let settings = cfg.test_settings();
    let pursuit = cfg.pursuit_config();
    let (outcome, verdict) = match cfg.mode {
        PursuitMode::Elliptical => elliptical_copula_test(data, cfg.divergence, &settings, &pursuit, rng)?,
        PursuitMode::Independence => independence_test(data, cfg.divergence, &settings, &pursuit, rng)?,
    };
    let factorization = outcome.factorization();
    let report = Report {
        command: run.command.to_owned(),
        config: cfg.clone(),
        steps: outcome.reports.clone(),
        verdict,
        directions: outcome.reports.iter().map(|r| r.direction.clone()).collect(),
        flat_copula: factorization.flat,
        factorization: factorization.blocks,
        metadata: Metadata {
            version: env!("CARGO_PKG_VERSION").to_owned(),
            input: run.input,
            columns: run.columns,
            rows: outcome.original_size,
            rows_after_truncation: outcome.truncated_size,
            q_alpha: settings.q_alpha(),
            conventions: run.conventions,
        },
    };
    Ok((report, outcome))
}

fn check_grid_size(cfg: &RunConfig, dim: usize) -> Result<()> {
    let cells = u32::try_from(dim).ok().and_then(|d| cfg.grid_resolution.checked_pow(d));
    ensure!(
        cells.is_some_and(|c| c <= MAX_GRID_CELLS),
        "a {}^{dim} grid is too large; lower --grid-res",
        cfg.grid_resolution
    );
    Ok(())
}

fn discovered_grid(data: &DMatrix<f64>, outcome: &PursuitOutcome, cfg: &RunConfig) -> Result<CopulaGrid> {
    Ok(empirical_copula_density_grid(data, &outcome.basis_original(), cfg.grid_resolution)?)
}

fn statistic_conventions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("statistic".to_owned(), "P_n M(a,a) / sqrt(Var), accepted when <= q_alpha / sqrt(n)".to_owned()),
        ("p_value".to_owned(), "2 (1 - Phi(|z_score|)), z_score = sqrt(n) * statistic".to_owned()),
        (
            "directions".to_owned(),
            "unit covectors of the input columns, first nonzero whitened component positive".to_owned(),
        ),
    ])
}

/// Runs the configured test on a CSV file.
pub fn cmd_test(input: &Path, cfg: &RunConfig, with_grid: bool) -> Result<Output> {
    let ds = read_csv_path(input)?;
    if with_grid {
        check_grid_size(cfg, ds.data.ncols())?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let run = Run {
        command: "test",
        input: Some(input.display().to_string()),
        columns: ds.columns.clone(),
        conventions: statistic_conventions(),
    };
    let (report, outcome) = execute(&ds.data, cfg, &mut rng, run)?;
    let grids = if with_grid { vec![("discovered", discovered_grid(&ds.data, &outcome, cfg)?)] } else { Vec::new() };
    Ok(Output { report, grids })
}

/// Draws `n` observations of a simulation design and tests them.
pub fn cmd_sim(which: Simulation, n: usize, cfg: &RunConfig, with_grid: bool) -> Result<Output> {
    ensure!(n >= crate::input::MIN_ROWS, "n must be at least {}, got {n}", crate::input::MIN_ROWS);
    if with_grid {
        check_grid_size(cfg, 2)?;
    }
    let design = which.design();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let data = design.sample(n, &mut rng)?;
    let mut conventions = statistic_conventions();
    conventions.insert(
        "margin_1".into(),
        format!("Gumbel for maxima, location {}, scale {}", design.gumbel_location, design.gumbel_scale),
    );
    conventions.insert(
        "margin_2".into(),
        format!("exponential with rate {} (mean {})", design.exponential_rate, 1.0 / design.exponential_rate),
    );
    conventions.insert(
        "copula".into(),
        if design.rho == 0.0 { "independent".into() } else { format!("Gaussian, rho = {}", design.rho) },
    );
    conventions.insert("sample_size".into(), n.to_string());
    let run = Run { command: which.name(), input: None, columns: vec!["x1".into(), "x2".into()], conventions };
    let (report, outcome) = execute(&data, cfg, &mut rng, run)?;
    let grids = if with_grid { vec![("discovered", discovered_grid(&data, &outcome, cfg)?)] } else { Vec::new() };
    Ok(Output { report, grids })
}

/// Runs the elliptical test on the embedded share prices and returns the
/// copula grids in the canonical and the discovered bases.
pub fn cmd_realdata(cfg: &RunConfig) -> Result<Output> {
    let data = renault_peugeot_log_prices();
    check_grid_size(cfg, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut conventions = statistic_conventions();
    conventions
        .insert("data".into(), format!("natural log of {} daily closing prices, table order", RENAULT_PEUGEOT.len()));
    let run =
        Run { command: "realdata", input: None, columns: vec!["ln_renault".into(), "ln_peugeot".into()], conventions };
    let (report, outcome) = execute(&data, cfg, &mut rng, run)?;
    let canonical = empirical_copula_density_grid(&data, &DMatrix::identity(2, 2), cfg.grid_resolution)?;
    let discovered = discovered_grid(&data, &outcome, cfg)?;
    Ok(Output { report, grids: vec![("canonical", canonical), ("discovered", discovered)] })
}
