//! Expected squared L2 discrepancy of a two-point jittered sample.
//!
//! For a fixed anchor box `[0,x] x [0,y]` the number of sample points inside
//! is `X = B(q1) + B(q2)`, a sum of independent Bernoulli indicators with
//! `q1 = f1 / p` and `q2 = f2 / (1 - p)`. Hence
//!
//! `E |X/2 - xy|^2 = [q1 (1 - q1) + q2 (1 - q2)] / 4 + [(q1 + q2)/2 - xy]^2`,
//!
//! and integrating over the anchor gives the expected discrepancy. The bias
//! term vanishes identically when `p = 1/2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_2d_cells, Rect};
use crate::regions::{Point, Region};

/// Default absolute tolerance for expectation integrals.
pub const DEFAULT_TOL: f64 = 1e-6;

const Q_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    General,
    ReformulatedHalf,
    ClosedFormSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyResult {
    pub value: f64,
    pub error_estimate: f64,
    pub route: Route,
    pub converged: bool,
    pub evaluations: usize,
}

/// Success probabilities of the two box indicators at one anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliPair {
    pub q1: f64,
    pub q2: f64,
}

impl BernoulliPair {
    pub fn new(f1: f64, x: f64, y: f64, p: f64) -> Self {
        let clamp = |q: f64| {
            debug_assert!(q > -1e-6 && q < 1.0 + 1e-6, "indicator probability {q}");
            if q < Q_SLACK {
                q.max(0.0)
            } else {
                q.min(1.0)
            }
        };
        BernoulliPair {
            q1: clamp(f1 / p),
            q2: clamp((x * y - f1) / (1.0 - p)),
        }
    }

    pub fn variance(&self) -> f64 {
        self.q1 * (1.0 - self.q1) + self.q2 * (1.0 - self.q2)
    }

    /// `E[X]/2 - xy`.
    pub fn bias(&self, x: f64, y: f64) -> f64 {
        0.5 * (self.q1 + self.q2) - x * y
    }

    /// `E |X/2 - xy|^2`.
    pub fn mean_square(&self, x: f64, y: f64) -> f64 {
        let b = self.bias(x, y);
        0.25 * self.variance() + b * b
    }
}

/// Pointwise `E |X(x,y)/2 - xy|^2` for `region`.
pub fn pointwise_integrand(region: &Region, x: f64, y: f64) -> f64 {
    match region.area() {
        None => 0.5 * x * y * (1.0 - x * y),
        Some(p) => BernoulliPair::new(region.f1(x, y), x, y, p).mean_square(x, y),
    }
}

/// Expected squared L2 discrepancy by integrating the variance + bias
/// integrand over the unit square.
pub fn expected_l2sq(region: &Region, tol: f64) -> Result<DiscrepancyResult> {
    if let Some(p) = region.area() {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::EmptyRegion { area: p });
        }
    }
    let (xs, ys) = region.breakpoints();
    let r = integrate_2d_cells(|x, y| pointwise_integrand(region, x, y), Rect::UNIT, &xs, &ys, tol)?;
    Ok(DiscrepancyResult {
        value: r.value,
        error_estimate: r.error_estimate,
        route: Route::General,
        converged: r.converged,
        evaluations: r.evaluations,
    })
}

/// `1/72 + 2 ∫ (f1 x y - f1^2)`, valid only for equal-measure partitions.
pub fn expected_l2sq_reformulated(region: &Region, tol: f64) -> Result<DiscrepancyResult> {
    if let Some(p) = region.area() {
        if (p - 0.5).abs() > 1e-9 {
            return Err(Error::WrongArea { area: p });
        }
    }
    let (xs, ys) = region.breakpoints();
    let r = integrate_2d_cells(
        |x, y| {
            let f1 = region.f1(x, y);
            f1 * x * y - f1 * f1
        },
        Rect::UNIT,
        &xs,
        &ys,
        tol / 2.0,
    )?;
    Ok(DiscrepancyResult {
        value: 1.0 / 72.0 + 2.0 * r.value,
        error_estimate: 2.0 * r.error_estimate,
        route: Route::ReformulatedHalf,
        converged: r.converged,
        evaluations: r.evaluations,
    })
}

/// Exact squared L2 discrepancy of the two-point set `{a, b}`.
pub fn l2sq_two_points(a: Point, b: Point) -> f64 {
    let pts = [a, b];
    let single: f64 = pts.iter().map(|p| (1.0 - p.x * p.x) * (1.0 - p.y * p.y)).sum();
    let mut pair = 0.0;
    for p in &pts {
        for q in &pts {
            pair += (1.0 - p.x.max(q.x)) * (1.0 - p.y.max(q.y));
        }
    }
    (1.0 / 9.0 - 0.25 * single + 0.25 * pair).max(0.0)
}

/// Squared L2 discrepancy of an arbitrary point set straight from the
/// defining integral. The square is cut along the point coordinates so the
/// counting function is constant on every cell.
pub fn l2sq_by_quadrature(points: &[Point], tol: f64) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("empty point set".into()));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
    let r = integrate_2d_cells(
        |x, y| {
            let count = points.iter().filter(|p| p.x <= x && p.y <= y).count() as f64;
            let d = count / n - x * y;
            d * d
        },
        Rect::UNIT,
        &xs,
        &ys,
        tol,
    )?;
    Ok(r.value)
}
