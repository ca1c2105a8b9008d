//! Two-region partitions of the unit square and their corner-box measure.
//!
//! Every partition is described by the lower region `Omega`; the second
//! sample lives on the complement. The central quantity is
//! `f1(x, y) = |Omega ∩ [0,x] x [0,y]|`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::integrate_1d;

/// Absolute tolerance for quadrature-based corner-box measures.
pub const F1_TOL: f64 = 1e-10;
/// Absolute tolerance for quadrature-based region areas.
pub const AREA_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// A nonincreasing, nonnegative boundary `g` on `[0, x_end]`; `g` is zero
/// past `x_end`.
///
/// `Omega = {(x, y) : y <= g(x)}`. Implementors only need `value` and
/// `x_end`; the remaining methods have quadrature/bisection defaults that
/// exact profiles override.
pub trait Profile: fmt::Debug + Send + Sync {
    fn value(&self, t: f64) -> f64;

    fn x_end(&self) -> f64;

    /// `inf { t in [0, x_end] : g(t) <= y }`, or `x_end` when `g` stays above `y`.
    fn crossing(&self, y: f64) -> f64 {
        let end = self.x_end();
        if self.value(0.0) <= y {
            return 0.0;
        }
        if self.value(end) > y {
            return end;
        }
        let (mut lo, mut hi) = (0.0, end);
        while hi - lo > 1e-14 {
            let mid = 0.5 * (lo + hi);
            if self.value(mid) <= y {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `∫_0^x min(g(t), y) dt`, with the breakpoint `g(t*) = y` used as a
    /// panel boundary so the quadrature never sees the kink.
    fn min_integral(&self, x: f64, y: f64) -> f64 {
        if x <= 0.0 || y <= 0.0 {
            return 0.0;
        }
        let t_star = self.crossing(y);
        let flat = x.min(t_star);
        let upper = x.min(self.x_end());
        let mut total = y * flat;
        if upper > flat {
            if let Ok(r) = integrate_1d(|t| self.value(t), flat, upper, F1_TOL) {
                total += r.value;
            }
        }
        total
    }

    /// Interior abscissae where `g` or its slope jumps. Quadrature over the
    /// anchor square is cut along these lines and their images.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }

    /// `∫_0^{x_end} g`, clipped to the unit square.
    fn area(&self) -> f64 {
        let upper = self.x_end().min(1.0);
        integrate_1d(|t| self.value(t).min(1.0), 0.0, upper, AREA_TOL)
            .map(|r| r.value)
            .unwrap_or(f64::NAN)
    }
}

/// A profile given by a closure.
pub struct FnProfile<F> {
    x_end: f64,
    f: F,
}

impl<F: Fn(f64) -> f64 + Send + Sync> FnProfile<F> {
    pub fn new(x_end: f64, f: F) -> Self {
        FnProfile { x_end, f }
    }
}

impl<F> fmt::Debug for FnProfile<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnProfile").field("x_end", &self.x_end).finish()
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> Profile for FnProfile<F> {
    fn value(&self, t: f64) -> f64 {
        if t > self.x_end {
            0.0
        } else {
            (self.f)(t)
        }
    }

    fn x_end(&self) -> f64 {
        self.x_end
    }
}

/// Mirror image of a profile across the diagonal.
#[derive(Debug, Clone)]
pub struct Reflected(pub Arc<dyn Profile>);

impl Profile for Reflected {
    fn value(&self, t: f64) -> f64 {
        if t > self.x_end() {
            0.0
        } else {
            self.0.crossing(t)
        }
    }

    fn x_end(&self) -> f64 {
        self.0.value(0.0).min(1.0)
    }

    fn kinks(&self) -> Vec<f64> {
        self.0.kinks().into_iter().map(|t| self.0.value(t)).collect()
    }

    fn area(&self) -> f64 {
        self.0.area()
    }
}

/// `Omega = {(x, y) in [0,1]^2 : a x + b y <= c}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HalfPlane {
    fn contains(&self, x: f64, y: f64) -> bool {
        self.a * x + self.b * y <= self.c
    }

    /// Exact area of the half plane clipped to `[0,x] x [0,y]`.
    fn clipped_box_area(&self, x: f64, y: f64) -> f64 {
        if x <= 0.0 || y <= 0.0 {
            return 0.0;
        }
        let square = [(0.0, 0.0), (x, 0.0), (x, y), (0.0, y)];
        let side = |p: (f64, f64)| self.c - self.a * p.0 - self.b * p.1;
        let mut poly: Vec<(f64, f64)> = Vec::with_capacity(5);
        for i in 0..4 {
            let p = square[i];
            let q = square[(i + 1) % 4];
            let (sp, sq) = (side(p), side(q));
            if sp >= 0.0 {
                poly.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                let t = sp / (sp - sq);
                poly.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
            }
        }
        shoelace(&poly)
    }
}

fn shoelace(poly: &[(f64, f64)]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let n = poly.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (x0, y0) = poly[i];
            let (x1, y1) = poly[(i + 1) % n];
            x0 * y1 - x1 * y0
        })
        .sum();
    0.5 * twice.abs()
}

/// `Omega = {x^2 + y^2 <= r^2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarterDisk {
    pub r: f64,
}

impl Profile for QuarterDisk {
    fn value(&self, t: f64) -> f64 {
        if t >= self.r {
            0.0
        } else {
            (self.r * self.r - t * t).max(0.0).sqrt()
        }
    }

    fn x_end(&self) -> f64 {
        self.r
    }

    fn area(&self) -> f64 {
        std::f64::consts::PI * self.r * self.r / 4.0
    }
}

/// Piecewise-linear nonincreasing profile through the given vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    vertices: Vec<Point>,
}

impl Polyline {
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }
}

fn lerp(p: Point, q: Point, t: f64) -> f64 {
    if q.x == p.x {
        return p.y;
    }
    p.y + (q.y - p.y) * (t - p.x) / (q.x - p.x)
}

impl Profile for Polyline {
    fn value(&self, t: f64) -> f64 {
        // First segment containing t: with nonincreasing y this is the
        // upper end of any vertical drop, which makes the subgraph closed.
        for (p, q) in self.segments() {
            if p.x <= t && t <= q.x {
                return lerp(p, q, t);
            }
        }
        0.0
    }

    fn x_end(&self) -> f64 {
        self.vertices.last().map_or(0.0, |p| p.x)
    }

    fn kinks(&self) -> Vec<f64> {
        self.vertices.iter().map(|p| p.x).collect()
    }

    fn min_integral(&self, x: f64, y: f64) -> f64 {
        let mut total = 0.0;
        for (p, q) in self.segments() {
            if q.x <= p.x || p.x >= x {
                continue;
            }
            let u0 = p.x;
            let u1 = q.x.min(x);
            let v0 = lerp(p, q, u0);
            let v1 = lerp(p, q, u1);
            let w = u1 - u0;
            total += if v0 <= y && v1 <= y {
                0.5 * (v0 + v1) * w
            } else if v0 >= y && v1 >= y {
                y * w
            } else {
                // Decreasing segment crossing level y at tc.
                let tc = u0 + (v0 - y) / (v0 - v1) * w;
                y * (tc - u0) + 0.5 * (y + v1) * (u1 - tc)
            };
        }
        total
    }

    fn area(&self) -> f64 {
        self.segments()
            .map(|(p, q)| 0.5 * (p.y + q.y) * (q.x - p.x))
            .sum()
    }
}

/// Subgraph of an arbitrary profile with its area cached.
#[derive(Debug, Clone)]
pub struct Subgraph {
    profile: Arc<dyn Profile>,
    area: f64,
}

impl Subgraph {
    pub fn profile(&self) -> &Arc<dyn Profile> {
        &self.profile
    }
}

/// A two-region partition of the unit square, or the unpartitioned
/// Monte Carlo baseline.
#[derive(Debug, Clone)]
pub enum Region {
    /// Both points uniform on the whole square.
    Unpartitioned,
    HalfPlane(HalfPlane, f64),
    QuarterDisk(QuarterDisk),
    Polyline(Polyline, f64),
    Subgraph(Subgraph),
}

fn check_area(area: f64) -> Result<f64> {
    if area > 0.0 && area < 1.0 {
        Ok(area)
    } else {
        Err(Error::EmptyRegion { area })
    }
}

/// `Omega = {a x + b y <= c}`; the area comes from clipping the unit square.
pub fn make_half_plane(a: f64, b: f64, c: f64) -> Result<Region> {
    if ![a, b, c].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter("half-plane coefficients must be finite".into()));
    }
    let hp = HalfPlane { a, b, c };
    let area = check_area(hp.clipped_box_area(1.0, 1.0))?;
    Ok(Region::HalfPlane(hp, area))
}

pub fn make_quarter_disk(r: f64) -> Result<Region> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::RadiusOutOfRange(r));
    }
    Ok(Region::QuarterDisk(QuarterDisk { r }))
}

/// Subgraph of the piecewise-linear profile through `vertices`, which must
/// run from the y-axis to the x-axis with x nondecreasing and y
/// nonincreasing.
pub fn make_polyline(vertices: Vec<Point>) -> Result<Region> {
    let ok = vertices.len() >= 2
        && vertices[0].x == 0.0
        && vertices.last().is_some_and(|p| p.y == 0.0)
        && vertices.iter().all(|p| (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y))
        && vertices.windows(2).all(|w| w[0].x <= w[1].x && w[0].y >= w[1].y);
    if !ok {
        return Err(Error::NonMonotoneVertices);
    }
    let line = Polyline { vertices };
    let area = check_area(line.area())?;
    Ok(Region::Polyline(line, area))
}

/// Subgraph of `profile`. The profile must be nonincreasing, start
/// positive, and reach zero at `x_end` unless it leaves through `x = 1`.
pub fn make_subgraph(profile: Arc<dyn Profile>) -> Result<Region> {
    let end = profile.x_end();
    if !(end > 0.0) || !end.is_finite() {
        return Err(Error::InvalidProfile(format!("x_end = {end}")));
    }
    if end < 1.0 && profile.value(end).abs() > 1e-9 {
        return Err(Error::InvalidProfile(format!(
            "g(x_end) = {} is not zero",
            profile.value(end)
        )));
    }
    const GRID: usize = 1000;
    let mut prev = profile.value(0.0);
    if !(prev > 0.0) {
        return Err(Error::InvalidProfile("g(0) must be positive".into()));
    }
    for i in 1..=GRID {
        let v = profile.value(end * i as f64 / GRID as f64);
        if !v.is_finite() || v < -1e-9 || v > prev + 1e-9 {
            return Err(Error::InvalidProfile("profile is not nonincreasing".into()));
        }
        prev = v;
    }
    let area = check_area(profile.area())?;
    Ok(Region::Subgraph(Subgraph { profile, area }))
}

impl Region {
    /// Measure of `Omega`; `None` for the unpartitioned baseline.
    pub fn area(&self) -> Option<f64> {
        match self {
            Region::Unpartitioned => None,
            Region::HalfPlane(_, a) | Region::Polyline(_, a) => Some(*a),
            Region::QuarterDisk(q) => Some(q.area()),
            Region::Subgraph(s) => Some(s.area),
        }
    }

    /// Axis-parallel lines `x = const` and `y = const` across which `f1`
    /// may fail to be smooth, restricted to the open unit interval, sorted.
    ///
    /// Adaptive quadrature cannot see a straight kink lying closer to a
    /// panel edge than the outermost node, so integrals over the anchor
    /// square are cut along these lines first.
    pub fn breakpoints(&self) -> (Vec<f64>, Vec<f64>) {
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        match self {
            Region::Unpartitioned => {}
            Region::HalfPlane(hp, _) => {
                // Where the line meets the sides of the unit square.
                if hp.a != 0.0 {
                    xs.extend([hp.c / hp.a, (hp.c - hp.b) / hp.a]);
                }
                if hp.b != 0.0 {
                    ys.extend([hp.c / hp.b, (hp.c - hp.a) / hp.b]);
                }
            }
            Region::QuarterDisk(q) => {
                xs.push(q.r);
                ys.push(q.r);
            }
            Region::Polyline(line, _) => {
                xs.extend(line.vertices.iter().map(|p| p.x));
                ys.extend(line.vertices.iter().map(|p| p.y));
            }
            Region::Subgraph(s) => {
                let g = &s.profile;
                let kinks = g.kinks();
                xs.push(g.x_end());
                xs.extend(&kinks);
                ys.push(g.value(0.0));
                ys.extend(kinks.iter().map(|&t| g.value(t)));
            }
        }
        let tidy = |mut v: Vec<f64>| {
            v.retain(|t| t.is_finite() && *t > 0.0 && *t < 1.0);
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        (tidy(xs), tidy(ys))
    }

    /// Short name of the partition family.
    pub fn kind(&self) -> &'static str {
        match self {
            Region::Unpartitioned => "unpartitioned",
            Region::HalfPlane(..) => "half_plane",
            Region::QuarterDisk(_) => "quarter_disk",
            Region::Polyline(..) => "polyline",
            Region::Subgraph(_) => "subgraph",
        }
    }

    /// `|Omega ∩ [0,x] x [0,y]|`.
    ///
    /// For `Unpartitioned` this returns `x y / 2`: with both points uniform on
    /// the square, each indicator fires with probability `x y`, which is what
    /// the two-Bernoulli formulas produce from `f1 = x y / 2` at `p = 1/2`.
    pub fn f1(&self, x: f64, y: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let y = y.clamp(0.0, 1.0);
        let raw = match self {
            Region::Unpartitioned => return 0.5 * x * y,
            Region::HalfPlane(hp, _) => hp.clipped_box_area(x, y),
            Region::QuarterDisk(q) => q.min_integral(x, y),
            Region::Polyline(line, _) => line.min_integral(x, y),
            Region::Subgraph(s) => s.profile.min_integral(x, y),
        };
        // Quadrature noise must not push the measure outside its bounds.
        let cap = (x * y).min(self.area().unwrap_or(1.0));
        raw.clamp(0.0, cap)
    }

    /// `f2 = x y - f1`, the complement's share of the corner box.
    pub fn f2(&self, x: f64, y: f64) -> f64 {
        x * y - self.f1(x, y)
    }

    /// Closed-subgraph membership `y <= g(x)`.
    pub fn contains(&self, pt: Point) -> bool {
        match self {
            Region::Unpartitioned => true,
            Region::HalfPlane(hp, _) => hp.contains(pt.x, pt.y),
            Region::QuarterDisk(q) => pt.x * pt.x + pt.y * pt.y <= q.r * q.r,
            Region::Polyline(line, _) => pt.x <= line.x_end() && pt.y <= line.value(pt.x),
            Region::Subgraph(s) => pt.x <= s.profile.x_end() && pt.y <= s.profile.value(pt.x),
        }
    }

    /// Mirror image across the diagonal `y = x`.
    pub fn reflect(&self) -> Region {
        match self {
            Region::Unpartitioned => Region::Unpartitioned,
            Region::HalfPlane(hp, a) => Region::HalfPlane(
                HalfPlane {
                    a: hp.b,
                    b: hp.a,
                    c: hp.c,
                },
                *a,
            ),
            Region::QuarterDisk(q) => Region::QuarterDisk(*q),
            Region::Polyline(line, a) => {
                let vertices = line.vertices.iter().rev().map(|p| Point::new(p.y, p.x)).collect();
                Region::Polyline(Polyline { vertices }, *a)
            }
            Region::Subgraph(s) => Region::Subgraph(Subgraph {
                profile: Arc::new(Reflected(s.profile.clone())),
                area: s.area,
            }),
        }
    }
}
