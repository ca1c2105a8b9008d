//! Optimality residual for a diagonal-symmetric boundary curve.
//!
//! For a boundary `g` with x-intercept `end`, write
//! `I(a) = ∫_a^end (1 - y) g(y) dy` and
//!
//! `A(x) = (1 - 2p - 4xg)(1 - g) + (4p - 1) x (1 - g^2) - 4 I(g)`,
//! `B(x) = (1 - 2p - 4xg)(1 - x) + (4p - 1) g (1 - x^2) - 4 I(x)`,
//!
//! with `g = g(x)`. An optimal curve satisfies `R(x) = A(x) + g'(x) B(x) = 0`.
//! `A` and `B` are (minus) line integrals of the first variation of the
//! expected discrepancy along the vertical and horizontal rays leaving the
//! boundary point, so `R = 0` is the stationarity condition for moving
//! area along the curve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{self, MAX_CURVE_DEGREE};
use crate::quadrature::{integrate_1d, integrate_2d_cells, QuadratureRule, Rect};
use crate::regions::{Point, Region};

/// Tolerance for the tail integrals of the residual.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Tolerance for the rectangle integrals of the lemma check.
pub const LEMMA_TOL: f64 = 1e-8;
/// How far the region area may sit from 1/2 in the lemma check.
pub const LEMMA_AREA_TOL: f64 = 1e-6;
/// Allowed `|g(g(x)) - x|` for a curve to count as diagonal-symmetric.
pub const SYMMETRY_TOL: f64 = 1e-6;

/// `g(x) = Σ c_i x^i` on `[0, alpha]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialCurve {
    pub coefficients: Vec<f64>,
    pub alpha: f64,
}

impl PolynomialCurve {
    pub fn new(coefficients: Vec<f64>, alpha: f64) -> Result<Self> {
        if coefficients.is_empty() || coefficients.len() > MAX_CURVE_DEGREE + 1 {
            return Err(Error::InvalidParameter(format!(
                "curve degree must be between 0 and {MAX_CURVE_DEGREE}"
            )));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} outside (0, 1]")));
        }
        if !coefficients.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite(coefficients));
        }
        Ok(PolynomialCurve { coefficients, alpha })
    }

    /// Straight line from `(0, alpha)` to `(alpha, 0)`, padded to `degree`.
    pub fn line(alpha: f64, degree: usize) -> Result<Self> {
        let mut c = vec![0.0; degree.max(1) + 1];
        c[0] = alpha;
        c[1] = -1.0;
        Self::new(c, alpha)
    }

    pub fn from_legendre(legendre: &[f64], alpha: f64) -> Result<Self> {
        Self::new(poly::legendre_to_monomial(legendre, alpha), alpha)
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn value(&self, x: f64) -> f64 {
        poly::eval(&self.coefficients, x)
    }

    pub fn slope(&self, x: f64) -> f64 {
        poly::eval_with_derivative(&self.coefficients, x).1
    }
}

/// A candidate curve together with the target area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualContext {
    pub coefficients: Vec<f64>,
    pub alpha: f64,
    pub p: f64,
}

impl ResidualContext {
    pub fn new(coefficients: Vec<f64>, alpha: f64, p: f64) -> Result<Self> {
        PolynomialCurve::new(coefficients.clone(), alpha)?;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!("p = {p} outside (0, 1)")));
        }
        Ok(ResidualContext { coefficients, alpha, p })
    }

    pub fn curve(&self) -> PolynomialCurve {
        PolynomialCurve {
            coefficients: self.coefficients.clone(),
            alpha: self.alpha,
        }
    }
}

/// What the residual needs to know about a curve.
pub trait ResidualCurve {
    fn value(&self, x: f64) -> f64;
    fn slope(&self, x: f64) -> f64;
    /// `∫_a^end (1 - y) g(y) dy`.
    fn tail_moment(&self, a: f64) -> Result<f64>;
}

/// The raw polynomial with `alpha` standing in for its x-intercept. The
/// polynomial is used as-is, even where it dips below zero.
#[derive(Debug, Clone)]
pub struct RawCurve {
    pub curve: PolynomialCurve,
    pub tol: f64,
}

impl RawCurve {
    pub fn new(curve: PolynomialCurve) -> Self {
        RawCurve {
            curve,
            tol: RESIDUAL_TOL,
        }
    }
}

impl ResidualCurve for RawCurve {
    fn value(&self, x: f64) -> f64 {
        self.curve.value(x)
    }

    fn slope(&self, x: f64) -> f64 {
        self.curve.slope(x)
    }

    fn tail_moment(&self, a: f64) -> Result<f64> {
        let c = &self.curve.coefficients;
        Ok(integrate_1d(|y| (1.0 - y) * poly::eval(c, y), a, self.curve.alpha, self.tol)?.value)
    }
}

/// `(A, B)` from already evaluated pieces.
pub fn residual_parts(p: f64, x: f64, g: f64, tail_g: f64, tail_x: f64) -> (f64, f64) {
    let lead = 1.0 - 2.0 * p - 4.0 * x * g;
    let a = lead * (1.0 - g) + (4.0 * p - 1.0) * x * (1.0 - g * g) - 4.0 * tail_g;
    let b = lead * (1.0 - x) + (4.0 * p - 1.0) * g * (1.0 - x * x) - 4.0 * tail_x;
    (a, b)
}

/// `R(x) = A(x) + g'(x) B(x)` for any curve.
pub fn curve_residual<C: ResidualCurve + ?Sized>(curve: &C, p: f64, x: f64) -> Result<f64> {
    let g = curve.value(x);
    let (a, b) = residual_parts(p, x, g, curve.tail_moment(g)?, curve.tail_moment(x)?);
    Ok(a + curve.slope(x) * b)
}

/// Equal-split residual in its line-integral form,
/// `x(g - 1/4) - 3xg^2/4 + I(g) + g' [g(x - 1/4) - 3x^2 g/4 + I(x)]`.
/// At `p = 1/2`, `curve_residual = -4 * half_form_residual`.
pub fn half_form_residual<C: ResidualCurve + ?Sized>(curve: &C, x: f64) -> Result<f64> {
    let g = curve.value(x);
    let first = x * (g - 0.25) - 0.75 * x * g * g + curve.tail_moment(g)?;
    let second = g * (x - 0.25) - 0.75 * x * x * g + curve.tail_moment(x)?;
    Ok(first + curve.slope(x) * second)
}

/// Residual of the raw polynomial in `ctx` at `x`.
pub fn residual(x: f64, ctx: &ResidualContext) -> Result<f64> {
    if !(0.0..=ctx.alpha).contains(&x) {
        return Err(Error::InvalidParameter(format!("x = {x} outside [0, {}]", ctx.alpha)));
    }
    curve_residual(&RawCurve::new(ctx.curve()), ctx.p, x)
}

/// Residual at every node of `nodes`, followed by the two constraint
/// residuals `g(0) - alpha` and `g(alpha)`.
pub fn residual_vector(ctx: &ResidualContext, nodes: &QuadratureRule) -> Result<Vec<f64>> {
    let raw = RawCurve::new(ctx.curve());
    let mut out = Vec::with_capacity(nodes.nodes.len() + 2);
    for &x in &nodes.nodes {
        out.push(curve_residual(&raw, ctx.p, x)?);
    }
    out.push(raw.value(0.0) - ctx.alpha);
    out.push(raw.value(ctx.alpha));
    Ok(out)
}

/// Largest `|g(g(x)) - x|` over a grid of `[0, end]` points whose image
/// stays in `[0, end]`.
pub fn symmetry_error<F: Fn(f64) -> f64>(g: F, end: f64, points: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..=points {
        let x = end * i as f64 / points as f64;
        let y = g(x);
        if (0.0..=end).contains(&y) {
            worst = worst.max((g(y) - x).abs());
        }
    }
    worst
}

/// `R(g(x)) g'(x) - R(x)`, which vanishes identically on a
/// diagonal-symmetric curve.
pub fn symmetry_defect<C: ResidualCurve + ?Sized>(curve: &C, p: f64, x: f64) -> Result<f64> {
    let gx = curve.value(x);
    Ok(curve_residual(curve, p, gx)? * curve.slope(x) - curve_residual(curve, p, x)?)
}

/// [`symmetry_defect`] for the raw polynomial, which must be symmetric.
pub fn residual_symmetry_defect(ctx: &ResidualContext, x: f64) -> Result<f64> {
    let curve = ctx.curve();
    let err = symmetry_error(|t| curve.value(t), ctx.alpha, 1000);
    if err > SYMMETRY_TOL {
        return Err(Error::AsymmetricCurve(err));
    }
    symmetry_defect(&RawCurve::new(curve), ctx.p, x)
}

/// The two rectangle integrals of `2 f1 - x y` attached to a pair of
/// boundary points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaQuadruple {
    pub p1: Point,
    pub p2: Point,
    /// Over `[x1, x2] x [y1, 1]`.
    pub i_q1: f64,
    /// Over `[x2, 1] x [y2, y1]`.
    pub i_q3: f64,
}

impl LemmaQuadruple {
    /// `|I_Q1 - I_Q3| / max(|I_Q1|, 1e-6)`.
    pub fn relative_gap(&self) -> f64 {
        (self.i_q1 - self.i_q3).abs() / self.i_q1.abs().max(1e-6)
    }
}

/// Rectangle integrals for boundary points `p1` (left, higher) and `p2`
/// of an equal-split region.
pub fn lemma_check(region: &Region, p1: Point, p2: Point) -> Result<LemmaQuadruple> {
    let area = region.area().unwrap_or(f64::NAN);
    if !((area - 0.5).abs() <= LEMMA_AREA_TOL) {
        return Err(Error::WrongArea { area });
    }
    if p1.x > p2.x || p1.y < p2.y {
        return Err(Error::PointsNotOrdered { x1: p1.x, x2: p2.x });
    }
    let kernel = |x: f64, y: f64| 2.0 * region.f1(x, y) - x * y;
    let (xs, ys) = region.breakpoints();
    let rect_integral = |r: Rect| -> Result<f64> {
        if r.x1 - r.x0 <= 0.0 || r.y1 - r.y0 <= 0.0 {
            return Ok(0.0);
        }
        Ok(integrate_2d_cells(kernel, r, &xs, &ys, LEMMA_TOL)?.value)
    };
    Ok(LemmaQuadruple {
        p1,
        p2,
        i_q1: rect_integral(Rect::new(p1.x, p2.x, p1.y, 1.0))?,
        i_q3: rect_integral(Rect::new(p2.x, 1.0, p2.y, p1.y))?,
    })
}
