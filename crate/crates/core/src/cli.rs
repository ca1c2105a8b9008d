//! Command-line front end.
//!
//! Every command prints one JSON object `{command, params, value, error,
//! extra}` on standard output. Exit codes: 0 ok, 1 usage, 2 numerical
//! quality failure, 3 solver failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::discrepancy::{expected_l2sq, expected_l2sq_reformulated, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::integral_equation::PolynomialCurve;
use crate::mc_oracle::estimate_sharded;
use crate::regions::{make_half_plane, make_polyline, make_quarter_disk, make_subgraph, Point, Region};
use crate::solver::{
    solve_for_p, sweep, symmetrize, AreaMeasure, Clamp, Collocation, Initialization, SolveOutcome, SolverConfig,
    SymmetrizedCurve,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

/// Rows in a curve file after the header.
pub const CURVE_FILE_INTERVALS: usize = 1000;

#[derive(Debug, Parser)]
#[command(name = "jitterpart", version, about = "Expected L2 discrepancy of two-point jittered sampling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expected squared discrepancy of a partition by quadrature.
    Eval(EvalArgs),
    /// Optimal boundary curve for one area split.
    Solve(SolveArgs),
    /// Solve over a grid of area splits.
    Sweep(SweepArgs),
    /// Monte Carlo estimate checked against the quadrature value.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteArg {
    General,
    Reformulated,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// uniform | halfplane:a,b,c | quarterdisk:r | polyline:x0,y0;x1,y1;... | curvefile:PATH
    pub region: String,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = RouteArg::General)]
    pub route: RouteArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CollocationArg {
    Symmetric,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Arc,
    Line,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AreaArg {
    Symmetrized,
    Raw,
}

#[derive(Debug, Args)]
pub struct SolverFlags {
    #[arg(long, default_value_t = 10)]
    pub degree: usize,
    #[arg(long, default_value_t = 200)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1e3)]
    pub constraint_weight: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub step_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub area_tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub residual_quad_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub disc_tol: f64,
    #[arg(long, default_value_t = 0.1)]
    pub clamp_window: f64,
    /// Largest collocation RMS accepted as converged.
    #[arg(long, default_value_t = 1e-3)]
    pub residual_tol: f64,
    #[arg(long, value_enum, default_value_t = CollocationArg::Symmetric)]
    pub collocation: CollocationArg,
    #[arg(long, value_enum, default_value_t = InitArg::Arc)]
    pub init: InitArg,
    #[arg(long, value_enum, default_value_t = AreaArg::Symmetrized)]
    pub area_measure: AreaArg,
    /// Directory for the curve and table files.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

impl SolverFlags {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            degree: self.degree,
            n_nodes: self.nodes,
            constraint_weight: self.constraint_weight,
            gn_max_iter: self.max_iter,
            gn_step_tol: self.step_tol,
            area_tol: self.area_tol,
            quad_tol_residual: self.residual_quad_tol,
            quad_tol_disc: self.disc_tol,
            clamp_window: self.clamp_window,
            residual_tol: self.residual_tol,
            collocation: match self.collocation {
                CollocationArg::Symmetric => Collocation::SymmetricClosure,
                CollocationArg::Raw => Collocation::Raw,
            },
            init: match self.init {
                InitArg::Arc => Initialization::QuarterArc,
                InitArg::Line => Initialization::Line,
            },
            area_measure: match self.area_measure {
                AreaArg::Symmetrized => AreaMeasure::Symmetrized,
                AreaArg::Raw => AreaMeasure::RawPolynomial,
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub p: f64,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated list of areas.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["p_min", "p_max", "step"])]
    pub p_list: Option<Vec<f64>>,
    #[arg(long, requires_all = ["p_max", "step"])]
    pub p_min: Option<f64>,
    #[arg(long)]
    pub p_max: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Same grammar as `eval`.
    pub region: String,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub shards: usize,
    /// Tolerance of the quadrature reference value.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

fn parse_numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("not a number: {t:?}"))))
        .collect()
}

/// Parse a region descriptor.
pub fn parse_region(spec: &str) -> Result<Region> {
    let spec = spec.trim();
    if spec == "uniform" {
        return Ok(Region::Unpartitioned);
    }
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("unknown region {spec:?}")))?;
    match kind {
        "halfplane" => match parse_numbers(rest)?[..] {
            [a, b, c] => make_half_plane(a, b, c),
            _ => Err(Error::Parse("halfplane needs three numbers a,b,c".into())),
        },
        "quarterdisk" => match parse_numbers(rest)?[..] {
            [r] => make_quarter_disk(r),
            _ => Err(Error::Parse("quarterdisk needs one radius".into())),
        },
        "polyline" => {
            let vertices = rest
                .split(';')
                .map(|pair| match parse_numbers(pair)?[..] {
                    [x, y] => Ok(Point::new(x, y)),
                    _ => Err(Error::Parse(format!("bad vertex {pair:?}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            make_polyline(vertices)
        }
        "curvefile" => make_subgraph(Arc::new(read_curve_file(Path::new(rest))?)),
        _ => Err(Error::Parse(format!("unknown region kind {kind:?}"))),
    }
}

/// Header line of a curve file.
fn curve_header(p: f64, curve: &SymmetrizedCurve) -> String {
    let coeffs: Vec<String> = curve.base.coefficients.iter().map(|c| c.to_string()).collect();
    format!(
        "# p={},alpha={},x0={},x_max={},y_max={},coefficients={}",
        p,
        curve.alpha,
        curve.x0,
        curve.x_max,
        curve.y_max,
        coeffs.join(";")
    )
}

pub fn curve_file_name(p: f64) -> String {
    format!("curve_p{p}.csv")
}

/// Header with the curve parameters, then `x,g_sym(x)` rows on `[0, alpha]`.
pub fn write_curve_file(path: &Path, p: f64, curve: &SymmetrizedCurve) -> Result<()> {
    let mut out = curve_header(p, curve);
    out.push('\n');
    for (x, y) in curve.samples(CURVE_FILE_INTERVALS) {
        out.push_str(&format!("{x},{y}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Rebuild the symmetrized curve recorded in a curve file's header.
pub fn read_curve_file(path: &Path) -> Result<SymmetrizedCurve> {
    let text = fs::read_to_string(path)?;
    let header = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .ok_or_else(|| Error::Parse("curve file has no header".into()))?;
    let mut alpha = None;
    let mut x_max = None;
    let mut y_max = None;
    let mut coefficients = None;
    for field in header.trim().split(',') {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header field {field:?}")))?;
        let num = |v: &str| v.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {v:?}")));
        match key.trim() {
            "alpha" => alpha = Some(num(value)?),
            "x_max" => x_max = Some(num(value)?),
            "y_max" => y_max = Some(num(value)?),
            "coefficients" => coefficients = Some(value.split(';').map(num).collect::<Result<Vec<f64>>>()?),
            _ => {}
        }
    }
    let missing = || Error::Parse("curve header lacks alpha, x_max, y_max or coefficients".into());
    let curve = PolynomialCurve::new(coefficients.ok_or_else(missing)?, alpha.ok_or_else(missing)?)?;
    symmetrize(
        &curve,
        Clamp {
            x_max: x_max.ok_or_else(missing)?,
            y_max: y_max.ok_or_else(missing)?,
        },
    )
}

#[derive(Debug, Serialize)]
struct Record {
    command: &'static str,
    params: Value,
    value: Value,
    error: Value,
    extra: Value,
}

fn provenance() -> Value {
    json!({ "version": env!("CARGO_PKG_VERSION") })
}

fn outcome_json(o: &SolveOutcome) -> Value {
    json!({
        "p_target": o.p_target,
        "p_achieved": o.p_achieved,
        "alpha": o.alpha,
        "residual_rms": o.residual_rms,
        "discrepancy": o.discrepancy,
        "iterations": o.iterations,
        "bisection_steps": o.bisection_steps,
        "converged": o.converged,
        "clamp_applied": o.curve.clamped(),
        "x0": o.curve.x0,
        "x_max": o.curve.x_max,
        "y_max": o.curve.y_max,
        "coefficients": o.curve.base.coefficients,
        "symmetry_error": o.symmetry_error,
        "monotonicity_violation": o.monotonicity_violation,
    })
}

fn emit<W: Write>(out: &mut W, record: &Record) {
    let line = serde_json::to_string(record).unwrap_or_else(|e| format!("{{\"serialization_error\":\"{e}\"}}"));
    let _ = writeln!(out, "{line}");
}

fn failure<W: Write>(out: &mut W, command: &'static str, params: Value, err: &Error, code: i32) -> i32 {
    emit(
        out,
        &Record {
            command,
            params,
            value: Value::Null,
            error: Value::Null,
            extra: json!({ "failure": err.to_string() }),
        },
    );
    code
}

fn cmd_eval<W: Write>(args: &EvalArgs, out: &mut W) -> i32 {
    let params = json!({
        "region": args.region,
        "tol": args.tol,
        "route": args.route,
        "provenance": provenance(),
    });
    let region = match parse_region(&args.region) {
        Ok(r) => r,
        Err(e) => return failure(out, "eval", params, &e, EXIT_USAGE),
    };
    let result = match args.route {
        RouteArg::General => expected_l2sq(&region, args.tol),
        RouteArg::Reformulated => expected_l2sq_reformulated(&region, args.tol),
    };
    match result {
        Ok(r) => {
            emit(
                out,
                &Record {
                    command: "eval",
                    params,
                    value: json!(r.value),
                    error: json!(r.error_estimate),
                    extra: json!({
                        "route": r.route,
                        "converged": r.converged,
                        "evaluations": r.evaluations,
                        "area": region.area(),
                        "kind": region.kind(),
                    }),
                },
            );
            if r.converged {
                EXIT_OK
            } else {
                EXIT_NUMERICAL
            }
        }
        Err(e @ Error::WrongArea { .. }) => failure(out, "eval", params, &e, EXIT_USAGE),
        Err(e) => failure(out, "eval", params, &e, EXIT_NUMERICAL),
    }
}

fn solver_params(cfg: &SolverConfig) -> Value {
    json!({ "config": cfg, "provenance": provenance() })
}

fn cmd_solve<W: Write>(args: &SolveArgs, out: &mut W) -> i32 {
    let cfg = args.solver.config();
    let mut params = solver_params(&cfg);
    params["p"] = json!(args.p);
    let outcome = match solve_for_p(args.p, &cfg) {
        Ok(o) => o,
        Err(e) => return failure(out, "solve", params, &e, EXIT_SOLVER),
    };
    let path = args.solver.out_dir.join(curve_file_name(args.p));
    let written = fs::create_dir_all(&args.solver.out_dir)
        .map_err(Error::from)
        .and_then(|_| write_curve_file(&path, args.p, &outcome.curve));
    let mut extra = outcome_json(&outcome);
    match written {
        Ok(()) => extra["curve_file"] = json!(path.display().to_string()),
        Err(e) => return failure(out, "solve", params, &e, EXIT_SOLVER),
    }
    emit(
        out,
        &Record {
            command: "solve",
            params,
            value: json!(outcome.discrepancy.value),
            error: json!(outcome.discrepancy.error_estimate),
            extra,
        },
    );
    if outcome.converged {
        EXIT_OK
    } else {
        EXIT_SOLVER
    }
}

/// Grid `p_min, p_min + step, ...` up to `p_max`, rounded to 12 decimals
/// so that float drift does not leak into file names.
pub fn p_grid(p_min: f64, p_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(p_max >= p_min) {
        return Err(Error::InvalidParameter("grid needs p_min <= p_max and step > 0".into()));
    }
    let n = ((p_max - p_min) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| ((p_min + step * i as f64) * 1e12).round() / 1e12)
        .collect())
}

fn cmd_sweep<W: Write>(args: &SweepArgs, out: &mut W) -> i32 {
    let cfg = args.solver.config();
    let grid = match (&args.p_list, args.p_min, args.p_max, args.step) {
        (Some(list), ..) => Ok(list.clone()),
        (None, Some(lo), Some(hi), Some(step)) => p_grid(lo, hi, step),
        _ => Err(Error::InvalidParameter("give --p-list or --p-min/--p-max/--step".into())),
    };
    let mut params = solver_params(&cfg);
    let grid = match grid {
        Ok(g) if !g.is_empty() => g,
        Ok(_) => return failure(out, "sweep", params, &Error::InvalidParameter("empty grid".into()), EXIT_USAGE),
        Err(e) => return failure(out, "sweep", params, &e, EXIT_USAGE),
    };
    params["p_values"] = json!(grid);
    let table = sweep(&grid, &cfg);
    let dir = &args.solver.out_dir;
    let mut csv = String::from("p,discrepancy,residual_rms,converged\n");
    for row in &table.rows {
        csv.push_str(&format!("{},{},{},{}\n", row.p, row.discrepancy(), row.residual_rms(), row.converged()));
    }
    let files = fs::create_dir_all(dir).map_err(Error::from).and_then(|_| {
        fs::write(dir.join("sweep.csv"), &csv)?;
        for row in &table.rows {
            if let Some(o) = &row.outcome {
                write_curve_file(&dir.join(curve_file_name(row.p)), row.p, &o.curve)?;
            }
        }
        Ok(())
    });
    if let Err(e) = files {
        return failure(out, "sweep", params, &e, EXIT_SOLVER);
    }
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| {
            json!({
                "p": r.p,
                "discrepancy": r.outcome.as_ref().map(|o| o.discrepancy.value),
                "error_estimate": r.outcome.as_ref().map(|o| o.discrepancy.error_estimate),
                "residual_rms": r.outcome.as_ref().map(|o| o.residual_rms),
                "converged": r.converged(),
                "failure": r.error,
            })
        })
        .collect();
    let best = table.rows.iter().find(|r| Some(r.p) == table.argmin);
    emit(
        out,
        &Record {
            command: "sweep",
            params,
            value: json!(best.map(|r| r.discrepancy())),
            error: json!(best.and_then(|r| r.outcome.as_ref()).map(|o| o.discrepancy.error_estimate)),
            extra: json!({
                "argmin": table.argmin,
                "rows": rows,
                "table_file": dir.join("sweep.csv").display().to_string(),
            }),
        },
    );
    if table.rows.iter().any(|r| r.converged()) {
        EXIT_OK
    } else {
        EXIT_SOLVER
    }
}

/// Agreement verdict for an estimate `z` standard errors away.
pub fn verdict(z: f64) -> &'static str {
    if z <= 3.0 {
        "AGREE"
    } else if z <= 5.0 {
        "MARGINAL"
    } else {
        "DISAGREE"
    }
}

fn cmd_oracle<W: Write>(args: &OracleArgs, out: &mut W) -> i32 {
    let params = json!({
        "region": args.region,
        "samples": args.samples,
        "seed": args.seed,
        "shards": args.shards,
        "tol": args.tol,
        "provenance": provenance(),
    });
    let region = match parse_region(&args.region) {
        Ok(r) => r,
        Err(e) => return failure(out, "oracle", params, &e, EXIT_USAGE),
    };
    let estimate = match estimate_sharded(&region, args.samples, args.seed, args.shards) {
        Ok(m) => m,
        Err(e @ Error::InvalidParameter(_)) => return failure(out, "oracle", params, &e, EXIT_USAGE),
        Err(e) => return failure(out, "oracle", params, &e, EXIT_NUMERICAL),
    };
    let reference = match expected_l2sq(&region, args.tol) {
        Ok(r) => r,
        Err(e) => return failure(out, "oracle", params, &e, EXIT_NUMERICAL),
    };
    let z = (estimate.mean - reference.value).abs() / estimate.std_error;
    let v = verdict(z);
    emit(
        out,
        &Record {
            command: "oracle",
            params,
            value: json!(estimate.mean),
            error: json!(estimate.std_error),
            extra: json!({
                "estimate": estimate,
                "quadrature_value": reference.value,
                "quadrature_error": reference.error_estimate,
                "z_score": z,
                "verdict": v,
            }),
        },
    );
    if v == "DISAGREE" {
        EXIT_NUMERICAL
    } else {
        EXIT_OK
    }
}

/// Parse `args` (program name first) and run, writing the record to `out`.
pub fn run<I, T, W>(args: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match &cli.command {
        Command::Eval(a) => cmd_eval(a, out),
        Command::Solve(a) => cmd_solve(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Oracle(a) => cmd_oracle(a, out),
    }
}
