//! Monotone, diagonal-symmetric boundary built from a polynomial.
//!
//! Given `g` on `[0, alpha]`, the symmetrized curve is
//!
//! * `y_max` on `[0, x_max]` (plateau replacing a rising start),
//! * `g` on `[x_max, x0]`, where `g(x0) = x0`,
//! * `g^{-1}` on `(x0, y_max)`, then `0`.
//!
//! All integrals the rest of the crate needs have closed forms in terms of
//! polynomial antiderivatives and one inverse evaluation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integral_equation::{PolynomialCurve, ResidualCurve};
use crate::poly;
use crate::regions::Profile;

const CLAMP_GRID: usize = 10_000;
const MONOTONE_GRID: usize = 10_000;
const MONOTONE_SLACK: f64 = 1e-9;
const ROOT_TOL: f64 = 1e-13;

/// Plateau parameters; `x_max = 0` when no clamp is needed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Clamp {
    pub x_max: f64,
    pub y_max: f64,
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        if hi - lo <= 1e-15 {
            break;
        }
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        }
    }
    0.5 * (lo + hi)
}

/// Maximizer of `g` over `[0, window]` from a grid of `grid + 1` points
/// refined by golden-section search.
pub(crate) fn peak(c: &[f64], window: f64, grid: usize) -> Clamp {
    let step = window / grid as f64;
    let mut best = (0usize, poly::eval(c, 0.0));
    for i in 1..=grid {
        let v = poly::eval(c, step * i as f64);
        if v > best.1 {
            best = (i, v);
        }
    }
    let rising = poly::eval_with_derivative(c, 0.0).1 > 0.0;
    if best.0 == 0 && !rising {
        return Clamp {
            x_max: 0.0,
            y_max: best.1,
        };
    }
    let lo = step * best.0.saturating_sub(1) as f64;
    let hi = (step * (best.0 + 1) as f64).min(window);
    let x = golden_max(|t| poly::eval(c, t), lo, hi);
    Clamp {
        x_max: x,
        y_max: poly::eval(c, x),
    }
}

/// Locate the plateau that makes `g` nonincreasing near zero. The scan
/// covers `[0, clamp_window]` and is widened to `[0, alpha]` only when `g` is
/// still rising at the window edge.
pub fn clamp_monotone(curve: &PolynomialCurve, clamp_window: f64) -> Clamp {
    let window = clamp_window.min(curve.alpha).max(0.0);
    if window == 0.0 {
        return Clamp {
            x_max: 0.0,
            y_max: curve.value(0.0),
        };
    }
    let c = &curve.coefficients;
    let clamp = peak(c, window, CLAMP_GRID);
    // Still rising at the edge: the true maximizer lies further out.
    if clamp.x_max >= window * (1.0 - 1e-9) && window < curve.alpha && poly::eval_with_derivative(c, window).1 > 0.0 {
        return peak(c, curve.alpha, CLAMP_GRID);
    }
    clamp
}

/// Root of a decreasing `h` on `[lo, hi]` with `h(lo) > 0 >= h(hi)`:
/// bisection followed by guarded Newton polishing.
fn decreasing_root<F: Fn(f64) -> (f64, f64)>(h: F, mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if h(mid).0 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let (v, d) = h(x);
        if d == 0.0 {
            break;
        }
        let next = x - v / d;
        if !(next >= lo - ROOT_TOL && next <= hi + ROOT_TOL) {
            break;
        }
        x = next;
    }
    x
}

/// First downward crossing of `g(x) = x` on `[lo, hi]`.
pub(crate) fn fixed_point(c: &[f64], lo: f64, hi: f64) -> Result<f64> {
    const SCAN: usize = 400;
    let h = |x: f64| {
        let (v, d) = poly::eval_with_derivative(c, x);
        (v - x, d - 1.0)
    };
    if !(h(lo).0 > 0.0) {
        return Err(Error::NoFixedPoint { lo, hi });
    }
    let step = (hi - lo) / SCAN as f64;
    let mut a = lo;
    for i in 1..=SCAN {
        let b = if i == SCAN { hi } else { lo + step * i as f64 };
        if h(b).0 <= 0.0 {
            return Ok(decreasing_root(h, a, b));
        }
        a = b;
    }
    Err(Error::NoFixedPoint { lo, hi })
}

/// See the module docs.
#[derive(Debug, Clone, Serialize)]
pub struct SymmetrizedCurve {
    pub base: PolynomialCurve,
    pub x0: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub alpha: f64,
    #[serde(skip)]
    cache: Cache,
}

#[derive(Debug, Clone, Default)]
struct Cache {
    /// `∫ g`
    p: Vec<f64>,
    /// `∫ (1 - y) g(y) dy`
    h: Vec<f64>,
    /// `∫ (1 - g(u)) u (-g'(u)) du`, the inverse-branch moment after `y = g(u)`.
    k: Vec<f64>,
    g_area_head: f64,
    m_x_max: f64,
    m_x0: f64,
    m_total: f64,
    total_area: f64,
    /// Area inside the unit square.
    clipped_area: f64,
}

impl SymmetrizedCurve {
    /// Assemble without validation; used for intermediate Gauss-Newton
    /// iterates, which may be slightly non-monotone.
    pub(crate) fn assemble(base: PolynomialCurve, x0: f64, clamp: Clamp) -> Self {
        let c = &base.coefficients;
        let d = poly::derivative(c);
        let p = poly::antiderivative(c);
        let h = poly::antiderivative(&poly::multiply(&[1.0, -1.0], c));
        let one_minus_g: Vec<f64> = c.iter().enumerate().map(|(i, &v)| if i == 0 { 1.0 - v } else { -v }).collect();
        let neg_d: Vec<f64> = d.iter().map(|v| -v).collect();
        let k = poly::antiderivative(&poly::multiply(&poly::multiply(&one_minus_g, &[0.0, 1.0]), &neg_d));
        let Clamp { x_max, y_max } = clamp;
        let head = y_max * x_max + poly::eval(&p, x0) - poly::eval(&p, x_max);
        let m_x_max = y_max * (x_max - 0.5 * x_max * x_max);
        let m_x0 = m_x_max + poly::eval(&h, x0) - poly::eval(&h, x_max);
        let m_total = m_x0 + poly::eval(&k, x0) - poly::eval(&k, x_max);
        let alpha = base.alpha;
        let mut curve = SymmetrizedCurve {
            base,
            x0,
            x_max,
            y_max,
            alpha,
            cache: Cache {
                p,
                h,
                k,
                g_area_head: head,
                m_x_max,
                m_x0,
                m_total,
                total_area: 2.0 * head - x0 * x0,
                clipped_area: 0.0,
            },
        };
        // Above y = 1 and right of x = 1 the curve sheds two mirror-image
        // slivers of equal area.
        curve.cache.clipped_area = if y_max > 1.0 {
            let u1 = curve.inverse(1.0);
            curve.cache.total_area - 2.0 * (curve.primitive(u1) - u1)
        } else {
            curve.cache.total_area
        };
        curve
    }

    /// `g_sym(t)`.
    pub fn value(&self, t: f64) -> f64 {
        if t <= self.x_max {
            self.y_max
        } else if t <= self.x0 {
            self.base.value(t)
        } else if t < self.y_max {
            self.inverse(t)
        } else {
            0.0
        }
    }

    pub fn clamped(&self) -> bool {
        self.x_max > 0.0
    }

    /// `u in [x_max, x0]` with `g(u) = t`, for `t` in `[x0, y_max]`.
    pub fn inverse(&self, t: f64) -> f64 {
        let c = &self.base.coefficients;
        if t >= self.y_max {
            return self.x_max;
        }
        if t <= self.x0 {
            return self.x0;
        }
        decreasing_root(
            |u| {
                let (v, d) = poly::eval_with_derivative(c, u);
                (v - t, d)
            },
            self.x_max,
            self.x0,
        )
    }

    /// `∫_0^t g_sym`.
    pub fn primitive(&self, t: f64) -> f64 {
        let pp = &self.cache.p;
        if t <= 0.0 {
            0.0
        } else if t <= self.x_max {
            self.y_max * t
        } else if t <= self.x0 {
            self.y_max * self.x_max + poly::eval(pp, t) - poly::eval(pp, self.x_max)
        } else if t < self.y_max {
            let u = self.inverse(t);
            self.cache.g_area_head + t * u - self.x0 * self.x0 + poly::eval(pp, self.x0) - poly::eval(pp, u)
        } else {
            self.cache.total_area
        }
    }

    /// `∫_0^t (1 - y) g_sym(y) dy`.
    fn moment(&self, t: f64) -> f64 {
        let cache = &self.cache;
        if t <= 0.0 {
            0.0
        } else if t <= self.x_max {
            self.y_max * (t - 0.5 * t * t)
        } else if t <= self.x0 {
            cache.m_x_max + poly::eval(&cache.h, t) - poly::eval(&cache.h, self.x_max)
        } else if t < self.y_max {
            let u = self.inverse(t);
            cache.m_x0 + poly::eval(&cache.k, self.x0) - poly::eval(&cache.k, u)
        } else {
            cache.m_total
        }
    }

    /// `∫_{g(x)}^{y_max} (1 - y) g_sym(y) dy` for `x` on the polynomial
    /// branch, where the inverse of `g(x)` is `x` itself.
    pub(crate) fn tail_at_image(&self, x: f64) -> f64 {
        poly::eval(&self.cache.k, x) - poly::eval(&self.cache.k, self.x_max)
    }

    /// Largest `|g_sym(g_sym(x)) - x|` on a uniform grid of `(x_max, y_max]`.
    /// Plateau points are skipped: their mirror images form the vertical
    /// drop at `x = y_max`, which is part of the graph.
    pub fn symmetry_error(&self, points: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 1..=points {
            let x = self.x_max + (self.y_max - self.x_max) * i as f64 / points as f64;
            worst = worst.max((self.value(self.value(x)) - x).abs());
        }
        worst
    }

    /// Largest increase between consecutive points of a uniform grid.
    pub fn monotonicity_violation(&self, points: usize) -> f64 {
        let end = self.y_max;
        let mut worst: f64 = 0.0;
        let mut prev = self.value(0.0);
        for i in 1..=points {
            let v = self.value(end * i as f64 / points as f64);
            worst = worst.max(v - prev);
            prev = v;
        }
        worst
    }

    /// `(x, g_sym(x))` at `n + 1` uniform points from 0 to the x-intercept
    /// `y_max`.
    pub fn samples(&self, n: usize) -> Vec<(f64, f64)> {
        (0..=n)
            .map(|i| {
                let x = self.y_max * i as f64 / n as f64;
                (x, self.value(x))
            })
            .collect()
    }
}

/// Build the symmetrized curve for `curve` with plateau `clamp`.
pub fn symmetrize(curve: &PolynomialCurve, clamp: Clamp) -> Result<SymmetrizedCurve> {
    let x0 = fixed_point(&curve.coefficients, clamp.x_max, curve.alpha)?;
    let sym = SymmetrizedCurve::assemble(curve.clone(), x0, clamp);
    let c = &curve.coefficients;
    let mut prev = poly::eval(c, clamp.x_max);
    for i in 1..=MONOTONE_GRID {
        let x = clamp.x_max + (x0 - clamp.x_max) * i as f64 / MONOTONE_GRID as f64;
        let v = poly::eval(c, x);
        if v > prev + MONOTONE_SLACK {
            return Err(Error::InvalidProfile(format!("curve increases near x = {x}")));
        }
        prev = v;
    }
    Ok(sym)
}

impl Profile for SymmetrizedCurve {
    fn value(&self, t: f64) -> f64 {
        SymmetrizedCurve::value(self, t).min(1.0)
    }

    fn x_end(&self) -> f64 {
        self.y_max
    }

    fn kinks(&self) -> Vec<f64> {
        let mut k = vec![self.x_max, self.x0];
        if self.y_max > 1.0 {
            // The clipped profile leaves the square where g reaches 1.
            k.push(self.inverse(1.0));
        }
        k
    }

    fn crossing(&self, y: f64) -> f64 {
        if y >= self.y_max {
            0.0
        } else {
            self.value(y.max(0.0))
        }
    }

    fn min_integral(&self, x: f64, y: f64) -> f64 {
        if x <= 0.0 || y <= 0.0 {
            return 0.0;
        }
        let m = x.min(self.crossing(y));
        y * m + self.primitive(x) - self.primitive(m)
    }

    fn area(&self) -> f64 {
        self.cache.clipped_area
    }
}

impl ResidualCurve for SymmetrizedCurve {
    fn value(&self, x: f64) -> f64 {
        SymmetrizedCurve::value(self, x)
    }

    fn slope(&self, x: f64) -> f64 {
        if x < self.x_max {
            0.0
        } else if x <= self.x0 {
            self.base.slope(x)
        } else if x < self.y_max {
            1.0 / self.base.slope(self.inverse(x))
        } else {
            0.0
        }
    }

    fn tail_moment(&self, a: f64) -> Result<f64> {
        Ok(self.cache.m_total - self.moment(a))
    }
}
