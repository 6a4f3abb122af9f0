//! `dist25`: conformal cone and Cartan quartic of (2,3,5) distributions.
//!
//! Exit status: 0 when every verdict passes, 1 on a validation or verdict
//! failure, 2 on malformed input (usage, IO, parse errors).

mod commands;
mod model;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Context, Route, Settings};
use model::ModelFile;
use report::{CorpusEntry, CorpusReport};

#[derive(Debug)]
pub enum CliError {
    Input(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => f.write_str(m),
        }
    }
}

#[derive(Parser)]
#[command(name = "dist25", version, about = "Conformal cone and Cartan quartic of (2,3,5) distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Growth vector and frame reconstruction at each point.
    Check(PointArgs),
    /// The conformal cone at a point.
    Cone {
        #[command(flatten)]
        args: PointArgs,
        #[arg(long, value_enum, default_value = "closed")]
        route: Route,
    },
    /// Cone by both routes with their conformal residual.
    Crosscheck(PointArgs),
    /// The Cartan quartic at a point, or its value on one direction.
    Quartic {
        #[command(flatten)]
        args: PointArgs,
        /// Direction `v1,v2` in the basis (X1, X2).
        #[arg(long, value_parser = parse_direction, allow_hyphen_values = true)]
        direction: Option<[f64; 2]>,
    },
    /// Runs check, crosscheck and quartic on every model file in a directory.
    Corpus {
        dir: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args)]
struct PointArgs {
    #[arg(long)]
    model: PathBuf,
    /// Base point `a,b,c,d,e`; defaults to the points listed in the model.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    point: Option<[f64; 5]>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Clone)]
struct CommonArgs {
    #[arg(long, default_value_t = 32)]
    n_fiber: usize,
    #[arg(long, default_value_t = 12)]
    n_cone: usize,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn settings(&self) -> Settings {
        Settings { n_fiber: self.n_fiber, n_cone: self.n_cone, tol: self.tol, seed: self.seed }
    }
}

fn parse_floats<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err("values must be finite".into());
    }
    <[f64; N]>::try_from(v.as_slice()).map_err(|_| format!("expected {N} comma-separated numbers, got {}", v.len()))
}

fn parse_point(s: &str) -> Result<[f64; 5], String> {
    parse_floats::<5>(s)
}

fn parse_direction(s: &str) -> Result<[f64; 2], String> {
    let v = parse_floats::<2>(s)?;
    if v == [0.0, 0.0] {
        return Err("direction must be nonzero".into());
    }
    Ok(v)
}

fn points_for(args: &PointArgs, model: &ModelFile) -> Result<Vec<[f64; 5]>, CliError> {
    match args.point {
        Some(p) => Ok(vec![p]),
        None => {
            let pts = model.sample_points()?;
            if pts.is_empty() {
                return Err(CliError::Input(format!("model {} lists no points; pass --point", model.name)));
            }
            Ok(pts)
        }
    }
}

fn emit<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_point_command(args: &PointArgs, f: impl FnOnce(&Context, &[[f64; 5]]) -> report::Report) -> Result<bool, CliError> {
    let model = ModelFile::load(&args.model)?;
    let points = points_for(args, &model)?;
    let ctx = Context::new(model, args.common.settings())?;
    let report = f(&ctx, &points);
    emit(&report, args.common.out.as_deref())?;
    Ok(report.pass)
}

fn run_corpus(dir: &Path, common: &CommonArgs) -> Result<bool, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::Input(e.to_string()))?.path();
        if path.extension().is_some_and(|x| x == "json") {
            files.push(path);
        }
    }
    files.sort();
    let mut warnings = Vec::new();
    if files.is_empty() {
        let w = format!("no model files in {}", dir.display());
        eprintln!("warning: {w}");
        warnings.push(w);
    }
    let mut models = Vec::new();
    for path in &files {
        let model = ModelFile::load(path)?;
        let points = model.sample_points()?;
        if points.is_empty() {
            return Err(CliError::Input(format!("{}: model lists no points", path.display())));
        }
        let ctx = Context::new(model, common.settings())?;
        let reports = vec![ctx.check(&points), ctx.cone(&points, Route::Both), ctx.quartic(&points, None)];
        let pass = reports.iter().all(|r| r.pass);
        let file = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        models.push(CorpusEntry { file, reports, pass });
    }
    let pass = models.iter().all(|m| m.pass);
    let report = CorpusReport { command: "corpus".into(), dir: dir.display().to_string(), seed: common.seed, models, warnings, pass };
    emit(&report, common.out.as_deref())?;
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check(args) => run_point_command(args, |c, p| c.check(p)),
        Command::Cone { args, route } => run_point_command(args, |c, p| c.cone(p, *route)),
        Command::Crosscheck(args) => run_point_command(args, |c, p| c.cone(p, Route::Both)),
        Command::Quartic { args, direction } => run_point_command(args, |c, p| c.quartic(p, *direction)),
        Command::Corpus { dir, common } => run_corpus(dir, common),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
