//! Command-line front end: classify tuples, evaluate characteristic
//! functions, check Hardy-space models and dilations, run the battery.

mod report;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use beurling::battery::run_all;
use beurling::charfn::{build_charfn, coincidence_from_unitary, CharFnError};
use beurling::defects::{DefectError, DefectPackage};
use beurling::dilation::{build_dilation, build_dilation_auto, DilationError};
use beurling::hardy::{
    ahern_clark_growth, build_space, quotient_model, structural_checks, symbol_inner_residual, torus_grid,
    HardyError, ModelOptions, WindowMask, INNER_TOL,
};
use beurling::io::{
    complex_to_pair, matrix_serde, parse_matrix, parse_points_file, parse_symbol_file, parse_tuple_file,
    read_file, IoError, TupleFile,
};
use beurling::numerics::{op_norm, Check, Tolerances};
use beurling::random::{disc_point, random_unitary, seeded};
use beurling::tuples::{classify, CTuple, TupleError};
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use thiserror::Error;

use report::{
    write_csv, write_json, CharFnSummary, CoincidenceSummary, DefectSummary, HardySummary, PointValue,
    Provenance, Report, RunConfig, SuiteSummary, Timestamp,
};

const DEFAULT_HARDY_DEGREE: usize = 6;
const COINCIDENCE_POINTS: usize = 20;

#[derive(Parser)]
#[command(name = "beurling", version, about = "Characteristic functions of commuting contraction tuples")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Structural tolerance (other tolerances keep their defaults)
    #[arg(long, global = true, value_parser = parse_tol)]
    tol: Option<f64>,

    /// Truncation degree N for Hardy spaces and dilations
    #[arg(long, global = true)]
    degree: Option<usize>,

    /// Torus grid points per axis
    #[arg(long, global = true, default_value_t = 32, value_parser = parse_grid)]
    grid: usize,

    /// Seed for every random draw
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Window margin; for tuples without a stored mask, enables a box window
    #[arg(long, global = true)]
    window: Option<usize>,

    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Commutativity, purity, Szegő and Beurling flags with witnesses
    Classify { tuple: PathBuf },
    /// Characteristic function at given points and its inner residual
    Charfn {
        tuple: PathBuf,
        points: Option<PathBuf>,
    },
    /// Quotient model of an inner symbol and its structural checks
    Hardy { symbol: PathBuf },
    /// Truncated canonical dilation and its defects
    Dilate { tuple: PathBuf },
    /// Coincidence of characteristic functions under a unitary conjugation
    Coincide {
        tuple: PathBuf,
        /// Unitary matrix file; a seeded random unitary when absent
        unitary: Option<PathBuf>,
    },
    /// Full property battery
    Suite,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn parse_tol(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err("tolerance must be a finite nonnegative number".into())
    }
}

fn parse_grid(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 4 {
        Ok(v)
    } else {
        Err("grid needs at least 4 points per axis".into())
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    NotBeurling(String),
    #[error("{0}")]
    NotInner(String),
    #[error("{0}")]
    NotUnitary(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::NotBeurling(_) => 3,
            CliError::NotInner(_) => 4,
            CliError::NotUnitary(_) => 5,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<TupleError> for CliError {
    fn from(e: TupleError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<DefectError> for CliError {
    fn from(e: DefectError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<DilationError> for CliError {
    fn from(e: DilationError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<CharFnError> for CliError {
    fn from(e: CharFnError) -> Self {
        match e {
            CharFnError::NotBeurling { .. } => CliError::NotBeurling(e.to_string()),
            CharFnError::NotUnitary(_) => CliError::NotUnitary(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<HardyError> for CliError {
    fn from(e: HardyError) -> Self {
        match e {
            HardyError::SymbolNotInner { .. } => CliError::NotInner(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            if let Err(e) = emit(&cli, &report) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            if report.all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn emit(cli: &Cli, report: &Report) -> Result<(), String> {
    let sink: Box<dyn Write> = match &cli.out {
        Some(path) => Box::new(File::create(path).map_err(|e| format!("cannot write {}: {e}", path.display()))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut sink = BufWriter::new(sink);
    match cli.format {
        Format::Json => write_json(report, &mut sink).map_err(|e| e.to_string())?,
        Format::Csv => write_csv(report, &mut sink).map_err(|e| e.to_string())?,
    }
    sink.flush().map_err(|e| e.to_string())
}

fn config(cli: &Cli) -> RunConfig {
    let mut tolerances = Tolerances::default();
    if let Some(t) = cli.tol {
        tolerances.structural = t;
    }
    RunConfig {
        tolerances,
        truncation_degree: cli.degree,
        grid_per_axis: cli.grid,
        seed: cli.seed,
        window_margin: cli.window.unwrap_or(1),
        window: cli.window.is_some(),
        output_path: cli.out.as_ref().map(|p| p.display().to_string()),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Classify { .. } => "classify",
        Command::Charfn { .. } => "charfn",
        Command::Hardy { .. } => "hardy",
        Command::Dilate { .. } => "dilate",
        Command::Coincide { .. } => "coincide",
        Command::Suite => "suite",
    }
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    let cfg = config(cli);
    let started = chrono::Utc::now().to_rfc3339();
    let clock = Instant::now();
    let mut report = Report::new(Provenance {
        command: command_name(&cli.command).into(),
        config: cfg.clone(),
        crate_version: env!("CARGO_PKG_VERSION").into(),
        timestamp: Timestamp {
            started_utc: started,
            wall_seconds: 0.0,
            criterion_seconds: Vec::new(),
        },
    });
    match &cli.command {
        Command::Classify { tuple } => cmd_classify(tuple, &cfg, &mut report)?,
        Command::Charfn { tuple, points } => cmd_charfn(tuple, points.as_ref(), &cfg, &mut report)?,
        Command::Hardy { symbol } => cmd_hardy(symbol, &cfg, &mut report)?,
        Command::Dilate { tuple } => cmd_dilate(tuple, &cfg, &mut report)?,
        Command::Coincide { tuple, unitary } => cmd_coincide(tuple, unitary.as_ref(), &cfg, &mut report)?,
        Command::Suite => cmd_suite(&cfg, &mut report),
    }
    report.finish();
    report.provenance.timestamp.wall_seconds = clock.elapsed().as_secs_f64();
    Ok(report)
}

fn path_str(p: &std::path::Path) -> String {
    p.display().to_string()
}

fn load_tuple(path: &std::path::Path, cfg: &RunConfig) -> Result<(TupleFile, CTuple), CliError> {
    let file = parse_tuple_file(&read_file(&path_str(path))?)?;
    let t = file.to_tuple(cfg.tolerances)?;
    Ok((file, t))
}

/// Mask stored in the file, or with `--window` a box window on a
/// `(m+1)^n`-dimensional tuple keeping degrees up to `m - margin`.
fn resolve_mask(file: &TupleFile, t: &CTuple, cfg: &RunConfig) -> Result<Option<WindowMask>, CliError> {
    if let Some(p) = file.mask_matrix()? {
        if p.shape() != (t.dim(), t.dim()) {
            return Err(CliError::Input(format!(
                "mask is {}x{}, tuple dimension is {}",
                p.nrows(),
                p.ncols(),
                t.dim()
            )));
        }
        return Ok(Some(WindowMask::new(file.mask_degree.unwrap_or(0), p)));
    }
    if !cfg.window {
        return Ok(None);
    }
    let n = t.n() as u32;
    let side = (1..=t.dim()).find(|s| s.pow(n) >= t.dim()).unwrap_or(1);
    if side.pow(n) != t.dim() {
        return Err(CliError::Input(format!(
            "--window needs a stored mask or a tuple of dimension (m+1)^n, got {}",
            t.dim()
        )));
    }
    let m = side - 1;
    let max_degree = m.checked_sub(cfg.window_margin).ok_or_else(|| {
        CliError::Input(format!("window margin {} exceeds the degree {m}", cfg.window_margin))
    })?;
    Ok(Some(WindowMask::tensor_box(t.n(), m, max_degree)))
}

fn cmd_classify(path: &std::path::Path, cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let (file, t) = load_tuple(path, cfg)?;
    let mask = resolve_mask(&file, &t, cfg)?;
    let class = classify(&t, mask.as_ref())?;
    let pkg = DefectPackage::compute(&t)?;
    report.checks.push(Check::at_most(
        "commutator_residual",
        class.commutator_residual,
        cfg.tolerances.structural,
    ));
    report.classification = Some(class);
    report.defect_summary = Some(DefectSummary::from_package(&pkg));
    Ok(())
}

fn cmd_charfn(
    path: &std::path::Path,
    points: Option<&PathBuf>,
    cfg: &RunConfig,
    report: &mut Report,
) -> Result<(), CliError> {
    let (file, t) = load_tuple(path, cfg)?;
    let mask = resolve_mask(&file, &t, cfg)?;
    let pkg = DefectPackage::compute(&t)?;
    let f = build_charfn(&t, &pkg, mask.as_ref())?;
    let request = match points {
        Some(p) => parse_points_file(&read_file(&path_str(p))?)?,
        None => Default::default(),
    };
    let pts = request.points();
    if let Some(bad) = pts.iter().find(|p| p.len() != t.n()) {
        return Err(CliError::Input(format!("point has {} coordinates, expected {}", bad.len(), t.n())));
    }
    let per_axis = request.grid.as_ref().map_or(cfg.grid_per_axis, |g| g.per_axis);
    if per_axis < 4 {
        return Err(CliError::Input("grid needs at least 4 points per axis".into()));
    }
    let grid = torus_grid(t.n(), per_axis);
    let inner = f.inner_residual(&grid)?;
    let values = f.eval_grid(&pts)?;
    let max_norm = values
        .iter()
        .map(op_norm)
        .fold(f.max_norm(&grid)?, f64::max);
    report.checks.push(Check::at_most("inner_residual", inner, INNER_TOL));
    report.checks.push(Check::at_most("contractivity", max_norm, 1.0 + 1e-8));
    report.classification = Some(classify(&t, mask.as_ref())?);
    report.defect_summary = Some(DefectSummary::from_package(&pkg));
    report.charfn_summary = Some(CharFnSummary {
        input_dim: f.input_dim(),
        output_dim: f.output_dim(),
        windowed: mask.is_some(),
        grid_per_axis: per_axis,
        inner_residual: inner,
        max_sampled_norm: max_norm,
        values: pts
            .iter()
            .zip(&values)
            .map(|(p, v)| PointValue {
                point: p.iter().copied().map(complex_to_pair).collect(),
                matrix: matrix_serde::to_rows(v),
            })
            .collect(),
    });
    Ok(())
}

fn cmd_hardy(path: &std::path::Path, cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let (symbol, n) = parse_symbol_file(&read_file(&path_str(path))?)?.resolve();
    symbol.validate()?;
    let degree = cfg.truncation_degree.unwrap_or(DEFAULT_HARDY_DEGREE);
    let space = build_space(n, degree, symbol.output_dim())?;
    let opts = ModelOptions {
        window_margin: cfg.window_margin,
        grid_per_axis: cfg.grid_per_axis,
    };
    let model = quotient_model(&space, &symbol, cfg.tolerances, opts)?;
    let structural = structural_checks(&model)?;
    let growth = ahern_clark_growth(&symbol, n, 1..=degree.max(2), &cfg.tolerances)?;
    let (symbol_residual, _) = symbol_inner_residual(&symbol, n, cfg.grid_per_axis);
    report.checks.extend(structural.checks.iter().cloned());
    report.checks.push(Check::at_most("symbol_inner_residual", symbol_residual, INNER_TOL));
    report.hardy = Some(HardySummary {
        n,
        degree,
        window_degree: model.window.as_ref().map(|w| w.max_degree),
        symbol_inner_residual: symbol_residual,
        structural,
        growth,
    });
    Ok(())
}

fn cmd_dilate(path: &std::path::Path, cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let (_, t) = load_tuple(path, cfg)?;
    let dd = match cfg.truncation_degree {
        Some(n) => build_dilation(&t, n)?,
        None => build_dilation_auto(&t)?,
    };
    let d = dd.defects();
    let limit = d.tail_bound + 1e-10;
    report.checks.push(Check::at_most("isometry", d.isometry, limit));
    report.checks.push(Check::at_most("intertwining", d.intertwining, limit));
    report.checks.push(Check::at_most("minimality", d.minimality, limit));
    report.checks.push(Check::at_most("model_equivalence", d.model_equivalence, limit));
    report.classification = Some(classify(&t, None)?);
    report.dilation_defects = Some(d);
    Ok(())
}

fn cmd_coincide(
    path: &std::path::Path,
    unitary: Option<&PathBuf>,
    cfg: &RunConfig,
    report: &mut Report,
) -> Result<(), CliError> {
    let (file, t) = load_tuple(path, cfg)?;
    let mask = resolve_mask(&file, &t, cfg)?;
    let pkg = DefectPackage::compute(&t)?;
    let f = build_charfn(&t, &pkg, mask.as_ref())?;
    let mut rng = seeded(cfg.seed);
    let (sigma, source) = match unitary {
        Some(p) => (parse_matrix(&read_file(&path_str(p))?)?, path_str(p)),
        None => (random_unitary(&mut rng, t.dim()), format!("random (seed {})", cfg.seed)),
    };
    let pts: Vec<Vec<Complex64>> = (0..COINCIDENCE_POINTS)
        .map(|_| (0..t.n()).map(|_| disc_point(&mut rng, 1.0)).collect())
        .collect();
    let out = coincidence_from_unitary(&f, &sigma, &pts)?;
    let c = out.coincidence;
    report.checks.push(Check::at_most("coincidence_residual", c.residual, 1e-9));
    report.checks.push(Check::at_most("intertwiner_unitarity", c.unitarity_defect, 1e-10));
    report.coincidence = Some(CoincidenceSummary {
        unitary_source: source,
        sample_points: pts.len(),
        residual: c.residual,
        unitarity_defect: c.unitarity_defect,
        tau: matrix_serde::to_rows(&c.tau),
        tau_star: matrix_serde::to_rows(&c.tau_star),
    });
    Ok(())
}

fn cmd_suite(cfg: &RunConfig, report: &mut Report) {
    let results = run_all(&cfg.suite());
    for r in &results {
        for c in &r.report.checks {
            let mut c = c.clone();
            c.name = format!("{}.{}", r.report.id, c.name);
            report.checks.push(c);
        }
    }
    report.provenance.timestamp.criterion_seconds = results.iter().map(|r| r.seconds).collect();
    let criteria: Vec<_> = results.into_iter().map(|r| r.report).collect();
    report.suite = Some(SuiteSummary {
        all_pass: criteria.iter().all(|c| c.pass),
        criteria,
    });
}
