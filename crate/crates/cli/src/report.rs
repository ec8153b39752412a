use anyhow::{bail, ensure, Context, Result};
use phipp::{CopulaGrid, TestReport};
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::config::RunConfig;

/// The JSON document written by every command.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub config: RunConfig,
    pub steps: Vec<TestReport>,
    /// Acceptance at the last step.
    pub verdict: bool,
    /// Discovered directions as unit covectors of the input columns.
    pub directions: Vec<Vec<f64>>,
    pub flat_copula: bool,
    /// Blocks of 1-based step indices whose copula densities multiply to the
    /// copula density in the discovered basis.
    pub factorization: Vec<Vec<usize>>,
    pub metadata: Metadata,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub version: String,
    pub input: Option<String>,
    pub columns: Vec<String>,
    pub rows: usize,
    pub rows_after_truncation: usize,
    pub q_alpha: f64,
    pub conventions: BTreeMap<String, String>,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// A few lines for a terminal.
    pub fn summary(&self) -> String {
        let mut out =
            format!("{} ({}, {}, n = {})\n", self.command, mode_name(self), self.config.divergence, self.metadata.rows);
        for r in &self.steps {
            let dir: Vec<String> = r.direction.iter().map(|c| format!("{c:+.4}")).collect();
            out.push_str(&format!(
                "  step {}: a = [{}]  estimate {:.6}  statistic {:.6} vs {:.6}  p {:.4}  {}{}\n",
                r.step_index,
                dir.join(", "),
                r.divergence_estimate,
                r.statistic,
                r.threshold,
                r.p_value,
                if r.accepted { "accept H0" } else { "reject H0" },
                if r.degraded { " (search degraded)" } else { "" },
            ));
        }
        out.push_str(&format!("verdict: {}  flat copula: {}\n", self.verdict, self.flat_copula));
        out
    }
}

fn mode_name(r: &Report) -> &'static str {
    match r.config.mode {
        phipp::PursuitMode::Elliptical => "elliptical",
        phipp::PursuitMode::Independence => "independence",
    }
}

/// Writes `u1,…,ud,density` rows. Values use the shortest representation
/// that parses back to the same bits.
pub fn write_grid<W: Write>(grid: &CopulaGrid, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header: Vec<String> = (1..=grid.dim).map(|j| format!("u{j}")).collect();
    header.push("density".into());
    w.write_record(&header)?;
    for (point, value) in grid.rows() {
        let mut rec: Vec<String> = point.iter().map(f64::to_string).collect();
        rec.push(value.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_grid_path(grid: &CopulaGrid, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write_grid(grid, std::io::BufWriter::new(file))
}

/// Reads a grid written by [`write_grid`].
pub fn read_grid<R: Read>(source: R) -> Result<CopulaGrid> {
    let mut r = csv::Reader::from_reader(source);
    let dim = r.headers()?.len().checked_sub(1).filter(|&d| d > 0).context("grid header needs u columns")?;
    let mut first_axis = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        ensure!(rec.len() == dim + 1, "grid row {}: expected {} fields", i + 2, dim + 1);
        let nums: Vec<f64> =
            rec.iter().map(str::parse).collect::<Result<_, _>>().with_context(|| format!("grid row {}", i + 2))?;
        if first_axis.last() != Some(&nums[0]) {
            first_axis.push(nums[0]);
        }
        values.push(nums[dim]);
    }
    let m = first_axis.len();
    if m.checked_pow(dim as u32) != Some(values.len()) {
        bail!("grid has {} values, not a full {m}^{dim} lattice", values.len());
    }
    Ok(CopulaGrid { dim, axis: first_axis, values })
}

pub fn read_grid_path(path: &Path) -> Result<CopulaGrid> {
    let file = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_grid(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_text_round_trips_bit_exactly() {
        let axis = vec![0.125, 0.375, 0.625, 0.875];
        let values: Vec<f64> = (0..16).map(|k| (k as f64 * 0.1).exp() / 3.0).collect();
        let grid = CopulaGrid { dim: 2, axis, values };
        let mut buf = Vec::new();
        write_grid(&grid, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("u1,u2,density\n0.125,0.125,"));
        let back = read_grid(buf.as_slice()).unwrap();
        assert_eq!(back, grid);
    }

    #[test]
    fn incomplete_grid_is_rejected() {
        let text = "u1,u2,density\n0.25,0.25,1\n0.25,0.75,1\n0.75,0.25,1\n";
        assert!(read_grid(text.as_bytes()).is_err());
    }
}
