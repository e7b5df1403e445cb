//! Command-line arguments.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use carson_core::inverse::{Grid, DEFAULT_SEED};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "carson", version, about = "Carson's-equation line constants and inverse parameter recovery")]
pub struct Cli {
    /// Catalog JSON; the bundled catalog is used when absent.
    #[arg(long, global = true, env = "CARSON_CATALOG")]
    pub catalog: Option<PathBuf>,
    /// Seed of the multi-start sampler.
    #[arg(long, global = true, env = "CARSON_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Pseudo-random starts per solve.
    #[arg(long, global = true, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    pub starts: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Impedance, admittance and sequence components of given lines.
    Forward(ForwardArgs),
    /// Ranks candidate combinations for each reference record.
    Recover(RecoverArgs),
    /// Range of each variable that reproduces the references exactly.
    Bounds(StudyArgs),
    /// Variable ranges when the references may deviate by a relative slack.
    Slack(SlackArgs),
    /// Feasibility and slack checks over a grid of generated lines.
    Sweep(SweepArgs),
    /// Screens reference records for fabricated or unexplained values.
    Validate(ReferenceArgs),
}

#[derive(Debug, Args)]
pub struct ForwardArgs {
    /// Line file: `line_id,config,temp` plus optional
    /// `conductor,material,area,radius,tnom,u1,u2,v1,v_ref` columns.
    #[arg(long, conflicts_with_all = ["config", "conductor", "material", "area", "radius", "temp"])]
    pub input: Option<PathBuf>,
    #[arg(long, required_unless_present = "input")]
    pub config: Option<String>,
    /// Catalog conductor code; sets material, radius and insulation.
    #[arg(long, conflicts_with_all = ["material", "area", "radius"])]
    pub conductor: Option<String>,
    #[arg(long, requires = "size")]
    pub material: Option<String>,
    /// Cross-section [mm^2].
    #[arg(long, group = "size")]
    pub area: Option<f64>,
    /// Strand radius [mm].
    #[arg(long, group = "size")]
    pub radius: Option<f64>,
    /// Conductor temperature [degC].
    #[arg(long, required_unless_present = "input", allow_negative_numbers = true)]
    pub temp: Option<f64>,
    /// Insulation thickness [mm]; cables only.
    #[arg(long)]
    pub tnom: Option<f64>,
    #[arg(long)]
    pub u1: Option<f64>,
    #[arg(long)]
    pub u2: Option<f64>,
    #[arg(long)]
    pub v1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub v_ref: Option<f64>,
    #[arg(long, default_value = "line")]
    pub line_id: String,
    /// Skip the shunt admittance chain.
    #[arg(long)]
    pub no_shunt: bool,
    /// Include every intermediate matrix in the report.
    #[arg(long)]
    pub emit_matrices: bool,
}

#[derive(Debug, Args)]
pub struct ReferenceArgs {
    /// Reference file: `line_id,kind,r00,x00,r11,x11[,b00,b11][,temp_known,buried,n_cond]`.
    #[arg(long)]
    pub input: PathBuf,
    /// Ignore shunt susceptance columns.
    #[arg(long)]
    pub no_shunt: bool,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    #[command(flatten)]
    pub reference: ReferenceArgs,
    /// Report only the best `top` candidates per record.
    #[arg(long)]
    pub top: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub reference: ReferenceArgs,
    /// Restrict to these configurations (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub config: Vec<String>,
    /// Restrict to these materials (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub material: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SlackArgs {
    #[command(flatten)]
    pub study: StudyArgs,
    /// Relative slack levels (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "0,0.01,0.03,0.05")]
    pub beta: Vec<f64>,
    /// Variables whose ranges are reported; all free ones by default.
    #[arg(long, value_delimiter = ',')]
    pub vars: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// `oh` or `cable`.
    #[arg(long)]
    pub kind: String,
    /// Configurations of the generated lines (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub forward: Vec<String>,
    /// Materials of the generated lines (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub materials: Vec<String>,
    /// Cross-section grid `start:stop:step` [mm^2].
    #[arg(long, default_value = "15:240:5", value_parser = parse_grid)]
    pub area: Grid,
    /// Cross-section grid of sector-shaped conductors.
    #[arg(long, default_value = "185:300:5", value_parser = parse_grid)]
    pub sector_area: Grid,
    /// Temperature grid [degC].
    #[arg(long, default_value = "20:75:5", value_parser = parse_grid)]
    pub temp: Grid,
    /// Insulation of generated cables [mm].
    #[arg(long, default_value_t = 1.35)]
    pub tnom: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub v_ref: Option<f64>,
    /// Candidate configurations; every one of the kind by default.
    #[arg(long, value_delimiter = ',')]
    pub candidates: Vec<String>,
    /// Candidate materials; every allowed one by default.
    #[arg(long, value_delimiter = ',')]
    pub candidate_materials: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.01,0.03,0.05")]
    pub beta: Vec<f64>,
    /// Skip the z_diff solves and run only the slack checks.
    #[arg(long)]
    pub no_zdiff: bool,
}

/// Parses `start:stop:step` or a single value.
pub fn parse_grid(s: &str) -> Result<Grid> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("`{p}` is not a number")))
        .collect::<Result<_>>()?;
    match parts[..] {
        [v] => Ok(Grid::single(v)),
        [a, b, step] => Ok(Grid::new(a, b, step)),
        _ => bail!("expected `start:stop:step` or a single value, got `{s}`"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("15:240:5").unwrap(), Grid::new(15.0, 240.0, 5.0));
        assert_eq!(parse_grid("20").unwrap(), Grid::single(20.0));
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("a:2:1").is_err());
    }
}
