//! Argument parsing and command dispatch.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use rmm_core::copula::validate_copula;
use rmm_core::measures::{
    compute_cell, kendall_tau, spearman_rho, tail_coefficients, CellSpec, Iterations, MeasureKind,
    MeasureReport, TableBase, TableCell, TableConfig, TAIL_SEQUENCE,
};
use rmm_core::multivariate::validate_ncopula;
use rmm_core::sampling::{sample2, sample3};
use rmm_core::transform::limit_distances;
use rmm_core::SampleBatch;

use crate::error::CliError;
use crate::export::{export_csv, write_meta, write_table_csv};
use crate::spec::{parse_spec, CopulaSpecDoc, Model};

#[derive(Debug, Parser)]
#[command(
    name = "rmm",
    version,
    about = "Construct, analyze and sample RMM and MM shock-model copulas"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print `u,v[,w],C` for each point
    Eval {
        #[command(flatten)]
        spec: SpecArg,
        /// Evaluation point `u,v[,w]` (repeatable)
        #[arg(long = "point", required = true, value_parser = parse_point)]
        points: Vec<Vec<f64>>,
    },
    /// Check the copula axioms on a grid; exit 2 on failure
    Validate {
        #[command(flatten)]
        spec: SpecArg,
        /// Grid points per axis (default 101 for 2-copulas, 10 otherwise)
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Dependence measures as `kind,value,error,method` lines
    Measures {
        #[command(flatten)]
        spec: SpecArg,
        /// rho, tau, lambda_l, lambda_u or all
        #[arg(long, default_value = "all")]
        kind: String,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// Measure table over bases, generator parameters and iteration counts
    Table(TableArgs),
    /// Draw a seeded sample and write it as CSV plus a `.meta` file
    Sample {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sup-distance between the n-th RMM iterate and the limit, per n
    LimitDiff {
        #[command(flatten)]
        spec: SpecArg,
        /// Largest iteration count
        #[arg(long, default_value_t = 40)]
        n: usize,
        #[arg(long, default_value_t = 21)]
        grid: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
}

#[derive(Debug, Args)]
pub struct SpecArg {
    /// Copula expression document (YAML or JSON)
    #[arg(long = "spec")]
    pub path: PathBuf,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// rho or tau
    pub kind: String,
    /// Comma-separated subset of pi, m, w, clayton
    #[arg(long, value_delimiter = ',', default_value = "pi,m,w,clayton")]
    pub bases: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,0.9")]
    pub a: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,0.9")]
    pub b: Vec<f64>,
    /// Iteration counts; `inf` selects the limit copula
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4", value_parser = parse_iterations)]
    pub n: Vec<Iterations>,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Output CSV (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_point(s: &str) -> Result<Vec<f64>, String> {
    let coords = s
        .split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| format!("'{x}' is not a number"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if coords.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(format!("coordinates of '{s}' must lie in [0, 1]"));
    }
    Ok(coords)
}

fn parse_iterations(s: &str) -> Result<Iterations, String> {
    match s.trim() {
        "inf" => Ok(Iterations::Limit),
        t => t
            .parse()
            .map(Iterations::Finite)
            .map_err(|_| format!("'{t}' is neither a count nor 'inf'")),
    }
}

fn load(path: &Path) -> Result<CopulaSpecDoc, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(parse_spec(&text)?)
}

fn io_out(e: std::io::Error) -> CliError {
    CliError::io("<stdout>", e)
}

pub fn cmd_eval(
    doc: &CopulaSpecDoc,
    points: &[Vec<f64>],
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let dim = doc.model.dim();
    for p in points {
        if p.len() != dim {
            return Err(CliError::Usage(format!(
                "point has {} coordinates, the copula has dimension {dim}",
                p.len()
            )));
        }
        let coords: Vec<String> = p.iter().map(f64::to_string).collect();
        writeln!(out, "{},{}", coords.join(","), doc.model.at(p)).map_err(io_out)?;
    }
    Ok(())
}

/// Writes the axiom report and fails with exit code 2 when a check fails.
pub fn cmd_validate(
    doc: &CopulaSpecDoc,
    grid: Option<usize>,
    tol: f64,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let (passed, report) = match &doc.model {
        Model::Bivariate(c) => {
            let r = validate_copula(c, grid.unwrap_or(101).max(2), tol);
            (r.passed(), r.to_string())
        }
        Model::Multivariate(c) => {
            let r = validate_ncopula(c, grid.unwrap_or(10).max(2), tol);
            (r.passed(), r.to_string())
        }
    };
    writeln!(out, "{}\n{report}", doc.model.label()).map_err(io_out)?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "{} is not a copula on this grid",
            doc.model.label()
        )))
    }
}

pub fn cmd_measures(
    doc: &CopulaSpecDoc,
    kind: &str,
    tol: f64,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let Model::Bivariate(c) = &doc.model else {
        return Err(CliError::Usage(String::from(
            "measures need a bivariate copula",
        )));
    };
    let kinds = if kind == "all" {
        vec![
            MeasureKind::Rho,
            MeasureKind::Tau,
            MeasureKind::LambdaL,
            MeasureKind::LambdaU,
        ]
    } else {
        vec![kind.parse::<MeasureKind>()?]
    };
    for k in kinds {
        let report: MeasureReport = match k {
            MeasureKind::Rho => spearman_rho(c, tol),
            MeasureKind::Tau => kendall_tau(c, tol),
            MeasureKind::LambdaL => tail_coefficients(c, &TAIL_SEQUENCE).0,
            MeasureKind::LambdaU => tail_coefficients(c, &TAIL_SEQUENCE).1,
        };
        writeln!(out, "{report}").map_err(io_out)?;
    }
    Ok(())
}

/// Builds the table configuration from command-line overrides.
pub fn table_config(args: &TableArgs) -> Result<TableConfig, CliError> {
    let kind: MeasureKind = args.kind.parse()?;
    if !matches!(kind, MeasureKind::Rho | MeasureKind::Tau) {
        return Err(CliError::Usage(format!(
            "table kind must be rho or tau, got {kind}"
        )));
    }
    let bases = args
        .bases
        .iter()
        .map(|b| b.parse::<TableBase>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TableConfig {
        bases,
        a_values: args.a.clone(),
        b_values: args.b.clone(),
        n_values: args.n.clone(),
        kind,
        tol: args.tol,
    })
}

/// Computes every cell in parallel; rows come back in configuration order.
pub fn table_rows(config: &TableConfig) -> Vec<(CellSpec, rmm_core::Result<TableCell>)> {
    config
        .cells()
        .into_par_iter()
        .map(|cell| {
            let result = compute_cell(&cell, config.tol);
            (cell, result)
        })
        .collect()
}

pub fn cmd_table(
    args: &TableArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let rows = table_rows(&table_config(args)?);
    match &args.out {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
            write_table_csv(&rows, file).map_err(|e| CliError::io(path, e))?;
        }
        None => write_table_csv(&rows, &mut *out).map_err(io_out)?,
    }
    let failed: Vec<_> = rows
        .iter()
        .filter_map(|(s, r)| r.as_ref().err().map(|e| (s, e)))
        .collect();
    for (spec, e) in &failed {
        writeln!(
            err,
            "cell {} a={} b={} n={}: {e}",
            spec.base.label(),
            spec.a,
            spec.b,
            spec.n
        )
        .map_err(io_out)?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "{} of {} cells failed",
            failed.len(),
            rows.len()
        )))
    }
}

pub fn draw(model: &Model, n: usize, seed: u64) -> Result<SampleBatch, CliError> {
    Ok(match model {
        Model::Bivariate(c) => sample2(c, n, seed)?,
        Model::Multivariate(c) if c.dim() == 3 => sample3(c, n, seed)?,
        Model::Multivariate(c) => {
            return Err(CliError::Usage(format!(
                "sampling supports dimensions 2 and 3, got {}",
                c.dim()
            )))
        }
    })
}

pub fn cmd_sample(
    doc: &CopulaSpecDoc,
    n: usize,
    seed: u64,
    out_path: &Path,
) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Usage(String::from("--n must be at least 1")));
    }
    let batch = draw(&doc.model, n, seed)?;
    export_csv(&batch, out_path)?;
    write_meta(out_path, &doc.text, seed, n)
}

pub fn cmd_limit_diff(
    doc: &CopulaSpecDoc,
    n_max: usize,
    grid: usize,
    tol: f64,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let parts = doc.rmm_parts.as_ref().ok_or_else(|| {
        CliError::Usage(String::from(
            "limit-diff needs an unflipped rmm, rmm_iter or rmm_limit root",
        ))
    })?;
    let d = limit_distances(&parts.c_dot, &parts.f, &parts.g, n_max, grid, tol)?;
    writeln!(out, "n,sup_distance").map_err(io_out)?;
    for (n, x) in d.iter().enumerate() {
        writeln!(out, "{n},{x:.6e}").map_err(io_out)?;
    }
    Ok(())
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Eval { spec, points } => cmd_eval(&load(&spec.path)?, &points, out),
        Command::Validate { spec, grid, tol } => cmd_validate(&load(&spec.path)?, grid, tol, out),
        Command::Measures { spec, kind, tol } => cmd_measures(&load(&spec.path)?, &kind, tol, out),
        Command::Table(args) => cmd_table(&args, out, err),
        Command::Sample {
            spec,
            n,
            seed,
            out: path,
        } => cmd_sample(&load(&spec.path)?, n, seed, &path),
        Command::LimitDiff { spec, n, grid, tol } => {
            cmd_limit_diff(&load(&spec.path)?, n, grid, tol, out)
        }
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// code: 0 on success, 1 on usage or runtime errors, 2 on failed validation.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
