//! Optimal boundary curve for a given area split.
//!
//! At fixed x-intercept `alpha` a degree-`d` polynomial is fitted by
//! Gauss-Newton so that the optimality residual vanishes at Gauss-Legendre
//! collocation nodes; an outer bisection on `alpha` then matches the target
//! area.

mod curve;

pub use curve::{clamp_monotone, symmetrize, Clamp, SymmetrizedCurve};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrepancy::{expected_l2sq, DiscrepancyResult};
use crate::error::{Error, Result};
use crate::integral_equation::{curve_residual, residual_parts, PolynomialCurve, RawCurve, ResidualCurve};
use crate::poly;
use crate::quadrature::{gauss_legendre, integrate_1d, QuadratureRule};
use crate::regions::{make_subgraph, Profile, Region};

/// Supported range of target areas.
pub const P_RANGE: (f64, f64) = (0.3, 0.8);

/// Which residual the Gauss-Newton iteration drives to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Collocation {
    /// Nodes on `[0, x0]`; every integral is taken over the symmetric
    /// closure of the current polynomial, with one row for `g(0) = alpha`.
    SymmetricClosure,
    /// Nodes on `[0, alpha]`; integrals of the raw polynomial up to
    /// `alpha`, with rows for `g(0) = alpha` and `g(alpha) = 0`.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initialization {
    /// Quarter circle of radius `alpha`.
    QuarterArc,
    /// Straight line from `(0, alpha)` to `(alpha, 0)`.
    Line,
}

/// Curve whose area the outer bisection matches to `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaMeasure {
    Symmetrized,
    RawPolynomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub degree: usize,
    pub n_nodes: usize,
    pub constraint_weight: f64,
    pub gn_max_iter: usize,
    pub gn_step_tol: f64,
    pub area_tol: f64,
    pub quad_tol_residual: f64,
    pub quad_tol_disc: f64,
    pub clamp_window: f64,
    /// Largest collocation RMS for an outcome to count as converged.
    pub residual_tol: f64,
    pub collocation: Collocation,
    pub init: Initialization,
    pub area_measure: AreaMeasure,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            degree: 10,
            n_nodes: 200,
            constraint_weight: 1e3,
            gn_max_iter: 100,
            gn_step_tol: 1e-10,
            area_tol: 1e-6,
            quad_tol_residual: 1e-9,
            quad_tol_disc: 1e-6,
            clamp_window: 0.1,
            residual_tol: 1e-3,
            collocation: Collocation::SymmetricClosure,
            init: Initialization::QuarterArc,
            area_measure: AreaMeasure::Symmetrized,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=poly::MAX_CURVE_DEGREE).contains(&self.degree) {
            return Err(Error::InvalidParameter(format!("degree {} outside [2, 10]", self.degree)));
        }
        if self.n_nodes <= self.degree {
            return Err(Error::InvalidParameter("need more nodes than coefficients".into()));
        }
        let positive = [
            self.constraint_weight,
            self.gn_step_tol,
            self.area_tol,
            self.quad_tol_residual,
            self.quad_tol_disc,
            self.clamp_window,
            self.residual_tol,
        ];
        if !positive.iter().all(|v| *v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter("tolerances and weights must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GnStatus {
    /// Step norm fell below `gn_step_tol`.
    StepConverged,
    /// No step length among the halvings lowered the cost.
    Stalled,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedAlphaSolution {
    /// Shifted-Legendre coefficients on `[0, alpha]`.
    pub legendre: Vec<f64>,
    pub curve: PolynomialCurve,
    pub residual_rms: f64,
    pub initial_rms: f64,
    pub iterations: usize,
    pub status: GnStatus,
}

/// Shifted-Legendre coefficients of the configured starting curve.
pub fn initial_guess(alpha: f64, cfg: &SolverConfig) -> Result<Vec<f64>> {
    match cfg.init {
        Initialization::Line => {
            let mut mono = vec![0.0; cfg.degree + 1];
            mono[0] = alpha;
            mono[1] = -1.0;
            Ok(poly::monomial_to_legendre(&mono, alpha))
        }
        Initialization::QuarterArc => {
            let end = alpha / std::f64::consts::SQRT_2;
            let xs: Vec<f64> = (0..=400).map(|i| end * i as f64 / 400.0).collect();
            let ys: Vec<f64> = xs.iter().map(|x| (alpha * alpha - x * x).sqrt()).collect();
            poly::fit_legendre(&xs, &ys, cfg.degree, alpha)
        }
    }
}

/// Collocation residuals (weighted constraint rows last) for the
/// configured mode, or `None` when the curve has no usable fixed point.
struct Collocator<'a> {
    alpha: f64,
    p: f64,
    cfg: &'a SolverConfig,
    unit_rule: QuadratureRule,
    raw_rule: QuadratureRule,
}

impl<'a> Collocator<'a> {
    fn new(alpha: f64, p: f64, cfg: &'a SolverConfig) -> Result<Self> {
        Ok(Collocator {
            alpha,
            p,
            cfg,
            unit_rule: gauss_legendre(cfg.n_nodes, 0.0, 1.0)?,
            raw_rule: gauss_legendre(cfg.n_nodes, 0.0, alpha)?,
        })
    }

    fn rows(&self) -> usize {
        match self.cfg.collocation {
            Collocation::SymmetricClosure => self.cfg.n_nodes + 1,
            Collocation::Raw => self.cfg.n_nodes + 2,
        }
    }

    fn residuals(&self, legendre: &[f64]) -> Option<Vec<f64>> {
        let mono = poly::legendre_to_monomial(legendre, self.alpha);
        let w = self.cfg.constraint_weight;
        let g0 = poly::eval(&mono, 0.0);
        let mut out = Vec::with_capacity(self.rows());
        match self.cfg.collocation {
            Collocation::SymmetricClosure => {
                let x0 = curve::fixed_point(&mono, 0.0, 1.0).ok()?;
                let clamp = curve::peak(&mono, x0, 512);
                let base = PolynomialCurve {
                    coefficients: mono,
                    alpha: self.alpha,
                };
                let sym = SymmetrizedCurve::assemble(base, x0, clamp);
                for &s in &self.unit_rule.nodes {
                    let x = s * x0;
                    let (g, gp) = poly::eval_with_derivative(&sym.base.coefficients, x);
                    let tail_g = if x >= clamp.x_max {
                        sym.tail_at_image(x)
                    } else {
                        sym.tail_moment(g).ok()?
                    };
                    let tail_x = sym.tail_moment(x).ok()?;
                    let (a, b) = residual_parts(self.p, x, g, tail_g, tail_x);
                    out.push(a + gp * b);
                }
                out.push(w * (g0 - self.alpha));
            }
            Collocation::Raw => {
                let mut raw = RawCurve::new(PolynomialCurve {
                    coefficients: mono,
                    alpha: self.alpha,
                });
                raw.tol = self.cfg.quad_tol_residual;
                for &x in &self.raw_rule.nodes {
                    out.push(curve_residual(&raw, self.p, x).ok()?);
                }
                out.push(w * (g0 - self.alpha));
                out.push(w * raw.value(self.alpha));
            }
        }
        out.iter().all(|v| v.is_finite()).then_some(out)
    }

    fn rms(&self, f: &[f64]) -> f64 {
        let n = self.cfg.n_nodes;
        (f[..n].iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt()
    }
}

fn cost(f: &Option<Vec<f64>>) -> f64 {
    f.as_ref().map_or(f64::INFINITY, |v| v.iter().map(|x| x * x).sum())
}

/// Gauss-Newton fit of the collocation system at fixed `alpha`.
pub fn solve_fixed_alpha(alpha: f64, p: f64, cfg: &SolverConfig, init: Option<&[f64]>) -> Result<FixedAlphaSolution> {
    cfg.validate()?;
    if !(alpha > 0.0 && alpha <= 1.0) || !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha}, p = {p}")));
    }
    let col = Collocator::new(alpha, p, cfg)?;
    let mut a = match init {
        Some(v) => {
            let mut v = v.to_vec();
            v.resize(cfg.degree + 1, 0.0);
            v
        }
        None => initial_guess(alpha, cfg)?,
    };
    let mut f = col.residuals(&a);
    if f.is_none() {
        return Err(Error::InvalidParameter("initial curve has no fixed point".into()));
    }
    let initial_rms = col.rms(f.as_ref().unwrap());
    let mut c = cost(&f);
    let n = a.len();
    let m = col.rows();
    let mut status = GnStatus::MaxIterations;
    let mut iterations = 0;
    for _ in 0..cfg.gn_max_iter {
        let fv = f.as_ref().unwrap();
        let mut jac = DMatrix::zeros(m, n);
        for k in 0..n {
            let h = 1e-7 * a[k].abs().max(1.0);
            let mut trial = a.clone();
            trial[k] += h;
            let Some(ft) = col.residuals(&trial) else {
                continue;
            };
            for i in 0..m {
                jac[(i, k)] = (ft[i] - fv[i]) / h;
            }
        }
        let rhs = -DVector::from_column_slice(fv);
        let svd = jac.svd(true, true);
        let eps = svd.singular_values.max() * 1e-13;
        let step = svd.solve(&rhs, eps).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=20 {
            let trial: Vec<f64> = a.iter().zip(step.iter()).map(|(x, s)| x + t * s).collect();
            let ft = col.residuals(&trial);
            if cost(&ft) < c {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, ft)) = accepted else {
            status = GnStatus::Stalled;
            break;
        };
        iterations += 1;
        a = trial;
        c = cost(&ft);
        f = ft;
        if t * step.norm() <= cfg.gn_step_tol {
            status = GnStatus::StepConverged;
            break;
        }
    }
    let residual_rms = col.rms(f.as_ref().unwrap());
    Ok(FixedAlphaSolution {
        curve: PolynomialCurve::from_legendre(&a, alpha)?,
        legendre: a,
        residual_rms,
        initial_rms,
        iterations,
        status,
    })
}

/// Clamp and symmetrize a polynomial with the configured window.
pub fn symmetrized(curve: &PolynomialCurve, cfg: &SolverConfig) -> Result<SymmetrizedCurve> {
    symmetrize(curve, clamp_monotone(curve, cfg.clamp_window))
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOutcome {
    pub curve: SymmetrizedCurve,
    pub p_target: f64,
    pub p_achieved: f64,
    pub alpha: f64,
    pub residual_rms: f64,
    pub discrepancy: DiscrepancyResult,
    /// Gauss-Newton iterations summed over all bisection steps.
    pub iterations: usize,
    pub bisection_steps: usize,
    pub converged: bool,
    pub symmetry_error: f64,
    pub monotonicity_violation: f64,
}

impl SolveOutcome {
    pub fn region(&self) -> Result<Region> {
        make_subgraph(Arc::new(self.curve.clone()))
    }
}

struct AlphaEval {
    alpha: f64,
    solution: FixedAlphaSolution,
    curve: SymmetrizedCurve,
    area: f64,
}

fn evaluate_alpha(alpha: f64, p: f64, cfg: &SolverConfig, init: Option<&[f64]>) -> Result<AlphaEval> {
    let solution = solve_fixed_alpha(alpha, p, cfg, init)?;
    let curve = symmetrized(&solution.curve, cfg)?;
    let area = match cfg.area_measure {
        AreaMeasure::Symmetrized => curve.area(),
        AreaMeasure::RawPolynomial => {
            let c = &solution.curve.coefficients;
            integrate_1d(|x| poly::eval(c, x), 0.0, alpha, cfg.area_tol * 1e-3)?.value
        }
    };
    Ok(AlphaEval {
        alpha,
        solution,
        curve,
        area,
    })
}

/// Warm start for `alpha` from the closest evaluated curve, rescaled so the
/// shape is preserved: `g(x) = (alpha / a') g'(x a' / alpha)`.
fn warm_start(history: &[(f64, Vec<f64>)], alpha: f64) -> Option<Vec<f64>> {
    let (a, leg) = history
        .iter()
        .min_by(|x, y| (x.0 - alpha).abs().total_cmp(&(y.0 - alpha).abs()))?;
    Some(leg.iter().map(|v| v * alpha / a).collect())
}

/// Solve for the optimal curve enclosing area `p`.
pub fn solve_for_p(p: f64, cfg: &SolverConfig) -> Result<SolveOutcome> {
    cfg.validate()?;
    if !(P_RANGE.0..=P_RANGE.1).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "p = {p} outside the supported range [{}, {}]",
            P_RANGE.0, P_RANGE.1
        )));
    }
    let mut history: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut total_iterations = 0;
    let mut eval = |alpha: f64, history: &mut Vec<(f64, Vec<f64>)>| -> Option<AlphaEval> {
        let init = warm_start(history, alpha);
        let r = evaluate_alpha(alpha, p, cfg, init.as_deref())
            .or_else(|_| evaluate_alpha(alpha, p, cfg, None))
            .ok()?;
        total_iterations += r.solution.iterations;
        history.push((alpha, r.solution.legendre.clone()));
        Some(r)
    };

    let (mut lo, mut hi) = (p.max(0.05), 1.0);
    let mut lo_eval = eval(lo, &mut history);
    let mut hi_eval = eval(hi, &mut history);
    let straddles =
        |l: &Option<AlphaEval>, h: &Option<AlphaEval>| matches!((l, h), (Some(l), Some(h)) if l.area <= p && h.area >= p);
    if !straddles(&lo_eval, &hi_eval) {
        // Scan 16 values above the initial lower end, then 16 below it,
        // each pass warm-starting from its neighbour.
        let start = lo;
        let above = (0..16).map(|i| start + (1.0 - start) * i as f64 / 15.0);
        let below = (0..16).map(|i| 0.05 + (start - 0.05) * i as f64 / 15.0);
        let mut found = false;
        for grid in [above.collect::<Vec<_>>(), below.collect()] {
            let mut prev: Option<AlphaEval> = None;
            for &alpha in &grid {
                let cur = eval(alpha, &mut history);
                if straddles(&prev, &cur) {
                    lo = prev.as_ref().unwrap().alpha;
                    hi = alpha;
                    lo_eval = prev;
                    hi_eval = cur;
                    found = true;
                    break;
                }
                if cur.is_some() {
                    prev = cur;
                }
            }
            if found {
                break;
            }
        }
        if !found {
            return Err(Error::BracketFailure { lo: 0.05, hi: 1.0, target: p });
        }
    }

    let mut best = [lo_eval.unwrap(), hi_eval.unwrap()]
        .into_iter()
        .min_by(|a, b| (a.area - p).abs().total_cmp(&(b.area - p).abs()))
        .unwrap();
    let mut steps = 0;
    while (best.area - p).abs() > 0.1 * cfg.area_tol && hi - lo > 1e-13 && steps < 100 {
        steps += 1;
        let mid = 0.5 * (lo + hi);
        let Some(m) = eval(mid, &mut history) else {
            break;
        };
        if m.area < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if (m.area - p).abs() <= (best.area - p).abs() {
            best = m;
        }
    }

    let region = make_subgraph(Arc::new(best.curve.clone()))?;
    let discrepancy = expected_l2sq(&region, cfg.quad_tol_disc)?;
    let symmetry_error = best.curve.symmetry_error(1000);
    let monotonicity_violation = best.curve.monotonicity_violation(10_000);
    let converged = (best.area - p).abs() <= cfg.area_tol
        && best.solution.residual_rms <= cfg.residual_tol
        && discrepancy.converged
        && symmetry_error <= 1e-6
        && monotonicity_violation <= 1e-9;
    Ok(SolveOutcome {
        p_target: p,
        p_achieved: best.area,
        alpha: best.alpha,
        residual_rms: best.solution.residual_rms,
        discrepancy,
        iterations: total_iterations,
        bisection_steps: steps,
        converged,
        symmetry_error,
        monotonicity_violation,
        curve: best.curve,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub outcome: Option<SolveOutcome>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn converged(&self) -> bool {
        self.outcome.as_ref().is_some_and(|o| o.converged)
    }

    pub fn discrepancy(&self) -> f64 {
        self.outcome.as_ref().map_or(f64::NAN, |o| o.discrepancy.value)
    }

    pub fn residual_rms(&self) -> f64 {
        self.outcome.as_ref().map_or(f64::NAN, |o| o.residual_rms)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// `p` of the converged row with the smallest discrepancy.
    pub argmin: Option<f64>,
}

/// Worker count from `JITTERPART_THREADS`; `None` means run serially.
pub fn thread_override() -> Option<usize> {
    std::env::var("JITTERPART_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 1)
}

/// Solve every `p` independently; failures are recorded per row.
pub fn sweep(p_values: &[f64], cfg: &SolverConfig) -> SweepTable {
    let run = |&p: &f64| match solve_for_p(p, cfg) {
        Ok(o) => SweepRow {
            p,
            outcome: Some(o),
            error: None,
        },
        Err(e) => SweepRow {
            p,
            outcome: None,
            error: Some(e.to_string()),
        },
    };
    let pool = thread_override().and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok());
    let rows: Vec<SweepRow> = match pool {
        Some(pool) => pool.install(|| p_values.par_iter().map(run).collect()),
        None => p_values.iter().map(run).collect(),
    };
    let argmin = rows
        .iter()
        .filter(|r| r.converged())
        .min_by(|a, b| a.discrepancy().total_cmp(&b.discrepancy()))
        .map(|r| r.p);
    SweepTable { rows, argmin }
}

/// Settings for [`stationarity_of`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityConfig {
    pub n_directions: usize,
    pub h: f64,
    /// Quadrature tolerance of each objective evaluation.
    pub tol: f64,
    pub clamp_window: f64,
    pub seed: u64,
}

impl Default for StationarityConfig {
    fn default() -> Self {
        StationarityConfig {
            n_directions: 8,
            h: 1e-4,
            tol: 1e-9,
            clamp_window: 0.1,
            seed: 0,
        }
    }
}

/// Largest `|dJ/dt|` along random unit directions in shifted-Legendre
/// coefficient space, projected so the symmetrized area is preserved to
/// first order. `J` is the expected discrepancy of the symmetrized curve.
pub fn stationarity_of(curve: &PolynomialCurve, sc: &StationarityConfig) -> Result<f64> {
    let alpha = curve.alpha;
    let base = poly::monomial_to_legendre(&curve.coefficients, alpha);
    let build = |leg: &[f64]| -> Result<SymmetrizedCurve> {
        let c = PolynomialCurve::from_legendre(leg, alpha)?;
        symmetrize(&c, clamp_monotone(&c, sc.clamp_window))
    };
    let shifted = |dir: &[f64], t: f64| -> Vec<f64> { base.iter().zip(dir).map(|(b, d)| b + t * d).collect() };
    let n = base.len();
    let mut grad = vec![0.0; n];
    for (k, g) in grad.iter_mut().enumerate() {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        let step = 1e-6;
        *g = (build(&shifted(&e, step))?.area() - build(&shifted(&e, -step))?.area()) / (2.0 * step);
    }
    let gg: f64 = grad.iter().map(|v| v * v).sum();
    let objective = |leg: &[f64]| -> Result<f64> {
        let region = make_subgraph(Arc::new(build(leg)?))?;
        Ok(expected_l2sq(&region, sc.tol)?.value)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..sc.n_directions {
        let mut d: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dot: f64 = d.iter().zip(&grad).map(|(a, b)| a * b).sum();
        if gg > 0.0 {
            for (di, gi) in d.iter_mut().zip(&grad) {
                *di -= dot / gg * gi;
            }
        }
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        d.iter_mut().for_each(|v| *v /= norm);
        let plus = objective(&shifted(&d, sc.h))?;
        let minus = objective(&shifted(&d, -sc.h))?;
        worst = worst.max(((plus - minus) / (2.0 * sc.h)).abs());
    }
    Ok(worst)
}

/// [`stationarity_of`] at a solved curve with default settings.
pub fn stationarity_check(outcome: &SolveOutcome, n_directions: usize, h: f64) -> Result<f64> {
    let sc = StationarityConfig {
        n_directions,
        h,
        ..StationarityConfig::default()
    };
    stationarity_of(&outcome.curve.base, &sc)
}
