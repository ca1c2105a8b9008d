//! Gauss-Legendre rules and globally adaptive 1D/2D integration.
//!
//! Both integrators keep a heap of panels ordered by their local error
//! estimate and split the worst panel until the summed estimate drops
//! below the requested absolute tolerance. A panel's estimate is the
//! difference between its own Gauss value and the sum over its children,
//! doubled, and the children sum is what gets reported. The estimate is a
//! heuristic: a feature thinner than the node spacing that no node of
//! either level touches (for example a sliver of compact support cut off a
//! panel corner) is invisible to it. The integrands in this crate are
//! continuous with full support, where the estimate holds up.
//! Everything is deterministic: ties in the heap are broken by creation
//! order and the final sum runs in a fixed panel order.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Largest rule order `gauss_legendre` will build.
pub const MAX_RULE_ORDER: usize = 1024;

/// Depth cap for 1D panel bisection.
pub const MAX_DEPTH_1D: u32 = 30;
/// Depth cap for 2D panel quartering.
pub const MAX_DEPTH_2D: u32 = 25;

const ORDER_1D: usize = 10;
const ORDER_2D: usize = 6;
/// The 2D domain starts as a grid of this many panels per side, so a
/// large panel cannot pass on an accidental coarse/fine agreement.
const INITIAL_SPLIT_2D: usize = 4;
const MAX_PANELS_1D: usize = 1 << 16;
const MAX_PANELS_2D: usize = 1 << 17;
/// Multiplier on `|coarse - fine|`. Near kinks the refined value is only
/// about twice as accurate as the coarse one and the two can agree by
/// accident, so the raw difference underestimates the error.
const ERROR_SAFETY: f64 = 2.0;

/// A Gauss-Legendre rule mapped to `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
    pub a: f64,
    pub b: f64,
}

impl QuadratureRule {
    pub fn apply<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    /// False when the depth or panel cap stopped refinement before the
    /// error estimate reached the tolerance.
    pub converged: bool,
}

/// Nodes and weights on [-1, 1], ascending.
#[derive(Debug)]
struct StandardRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn compute_standard(n: usize) -> StandardRule {
    if n == 1 {
        return StandardRule {
            nodes: vec![0.0],
            weights: vec![2.0],
        };
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi's initial guess for the i-th largest root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    StandardRule { nodes, weights }
}

fn standard_rule(n: usize) -> Arc<StandardRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<StandardRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(compute_standard(n)))
        .clone()
}

/// Builds the `n`-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<QuadratureRule> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInterval { a, b });
    }
    if n == 0 {
        return Err(Error::InvalidParameter("rule order must be at least 1".into()));
    }
    if n > MAX_RULE_ORDER {
        return Err(Error::DegreeTooLarge {
            requested: n,
            max: MAX_RULE_ORDER,
        });
    }
    let std = standard_rule(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    Ok(QuadratureRule {
        nodes: std.nodes.iter().map(|&t| mid + half * t).collect(),
        weights: std.weights.iter().map(|&w| half * w).collect(),
        order: n,
        a,
        b,
    })
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidTolerance(tol))
    }
}

/// Panel bookkeeping shared by the 1D and 2D integrators.
#[derive(Debug, Clone, Copy)]
struct Panel<const D: usize> {
    lo: [f64; D],
    hi: [f64; D],
    /// Gauss value of each child, in child order.
    children: [f64; 4],
    value: f64,
    error: f64,
    depth: u32,
    id: u64,
}

impl<const D: usize> PartialEq for Panel<D> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<const D: usize> Eq for Panel<D> {}
impl<const D: usize> PartialOrd for Panel<D> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const D: usize> Ord for Panel<D> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct Rule1d<'a, F> {
    f: F,
    rule: &'a StandardRule,
    evaluations: usize,
}

impl<F: FnMut(f64) -> f64> Rule1d<'_, F> {
    fn gauss(&mut self, a: f64, b: f64) -> Result<f64> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        for (&t, &w) in self.rule.nodes.iter().zip(&self.rule.weights) {
            let x = mid + half * t;
            let v = (self.f)(x);
            if !v.is_finite() {
                return Err(Error::NonFinite(vec![x]));
            }
            sum += w * v;
        }
        self.evaluations += self.rule.nodes.len();
        Ok(half * sum)
    }

    fn panel(&mut self, a: f64, b: f64, coarse: f64, depth: u32, id: u64) -> Result<Panel<1>> {
        let m = 0.5 * (a + b);
        let left = self.gauss(a, m)?;
        let right = self.gauss(m, b)?;
        let value = left + right;
        Ok(Panel {
            lo: [a],
            hi: [b],
            children: [left, right, 0.0, 0.0],
            value,
            error: ERROR_SAFETY * (coarse - value).abs(),
            depth,
            id,
        })
    }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// A reversed interval gives the negated integral; `a == b` gives zero.
/// Hitting the depth or panel cap is not an error: the best value comes
/// back with `converged == false` and its honest error estimate.
pub fn integrate_1d<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<IntegrationResult> {
    check_tol(tol)?;
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInterval { a, b });
    }
    if a == b {
        return Ok(IntegrationResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
            converged: true,
        });
    }
    if a > b {
        let r = integrate_1d(f, b, a, tol)?;
        return Ok(IntegrationResult { value: -r.value, ..r });
    }

    let rule = standard_rule(ORDER_1D);
    let mut q = Rule1d {
        f,
        rule: &rule,
        evaluations: 0,
    };
    let mut next_id = 0u64;
    let coarse = q.gauss(a, b)?;
    let root = q.panel(a, b, coarse, 0, next_id)?;
    next_id += 1;

    let mut total_err = root.error;
    let mut heap = BinaryHeap::new();
    heap.push(root);
    let mut frozen: Vec<Panel<1>> = Vec::new();
    let mut converged = true;

    while total_err > tol {
        let Some(worst) = heap.pop() else {
            converged = false;
            break;
        };
        if worst.depth >= MAX_DEPTH_1D || heap.len() + frozen.len() + 2 > MAX_PANELS_1D {
            frozen.push(worst);
            continue;
        }
        total_err -= worst.error;
        let m = 0.5 * (worst.lo[0] + worst.hi[0]);
        let l = q.panel(worst.lo[0], m, worst.children[0], worst.depth + 1, next_id)?;
        let r = q.panel(m, worst.hi[0], worst.children[1], worst.depth + 1, next_id + 1)?;
        next_id += 2;
        total_err += l.error + r.error;
        heap.push(l);
        heap.push(r);
    }

    let mut panels: Vec<Panel<1>> = heap.into_vec();
    panels.extend(frozen);
    panels.sort_by(|x, y| x.lo[0].total_cmp(&y.lo[0]));
    let value = panels.iter().map(|p| p.value).sum();
    let error_estimate: f64 = panels.iter().map(|p| p.error).sum();
    Ok(IntegrationResult {
        value,
        error_estimate,
        evaluations: q.evaluations,
        converged: converged && error_estimate <= tol,
    })
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect {
        x0: 0.0,
        x1: 1.0,
        y0: 0.0,
        y1: 1.0,
    };

    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

struct Rule2d<'a, F> {
    f: F,
    rule: &'a StandardRule,
    evaluations: usize,
}

impl<F: FnMut(f64, f64) -> f64> Rule2d<'_, F> {
    fn gauss(&mut self, lo: [f64; 2], hi: [f64; 2]) -> Result<f64> {
        let hx = 0.5 * (hi[0] - lo[0]);
        let mx = 0.5 * (hi[0] + lo[0]);
        let hy = 0.5 * (hi[1] - lo[1]);
        let my = 0.5 * (hi[1] + lo[1]);
        let mut sum = 0.0;
        for (&tx, &wx) in self.rule.nodes.iter().zip(&self.rule.weights) {
            let x = mx + hx * tx;
            let mut inner = 0.0;
            for (&ty, &wy) in self.rule.nodes.iter().zip(&self.rule.weights) {
                let y = my + hy * ty;
                let v = (self.f)(x, y);
                if !v.is_finite() {
                    return Err(Error::NonFinite(vec![x, y]));
                }
                inner += wy * v;
            }
            sum += wx * inner;
        }
        let n = self.rule.nodes.len();
        self.evaluations += n * n;
        Ok(hx * hy * sum)
    }

    fn quadrants(lo: [f64; 2], hi: [f64; 2]) -> [([f64; 2], [f64; 2]); 4] {
        let mx = 0.5 * (lo[0] + hi[0]);
        let my = 0.5 * (lo[1] + hi[1]);
        [
            ([lo[0], lo[1]], [mx, my]),
            ([mx, lo[1]], [hi[0], my]),
            ([lo[0], my], [mx, hi[1]]),
            ([mx, my], [hi[0], hi[1]]),
        ]
    }

    fn panel(&mut self, lo: [f64; 2], hi: [f64; 2], coarse: f64, depth: u32, id: u64) -> Result<Panel<2>> {
        let mut children = [0.0; 4];
        for (slot, (clo, chi)) in children.iter_mut().zip(Self::quadrants(lo, hi)) {
            *slot = self.gauss(clo, chi)?;
        }
        let value = children.iter().sum::<f64>();
        Ok(Panel {
            lo,
            hi,
            children,
            value,
            error: ERROR_SAFETY * (coarse - value).abs(),
            depth,
            id,
        })
    }
}

/// Integrates `f` over `rect` to absolute tolerance `tol`.
///
/// The worst panel is split into quadrants, so refinement follows
/// curved kinks in both directions.
pub fn integrate_2d<F: FnMut(f64, f64) -> f64>(f: F, rect: Rect, tol: f64) -> Result<IntegrationResult> {
    check_tol(tol)?;
    let Rect { x0, x1, y0, y1 } = rect;
    if !(x0 < x1) || !(y0 < y1) || ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInterval { a: x0.min(y0), b: x1.max(y1) });
    }

    let rule = standard_rule(ORDER_2D);
    let mut q = Rule2d {
        f,
        rule: &rule,
        evaluations: 0,
    };
    let mut next_id = 0u64;
    let mut total_err = 0.0;
    let mut heap = BinaryHeap::new();
    let (dx, dy) = ((x1 - x0) / INITIAL_SPLIT_2D as f64, (y1 - y0) / INITIAL_SPLIT_2D as f64);
    for i in 0..INITIAL_SPLIT_2D {
        for j in 0..INITIAL_SPLIT_2D {
            let lo = [x0 + dx * i as f64, y0 + dy * j as f64];
            let hi = [
                if i + 1 == INITIAL_SPLIT_2D { x1 } else { x0 + dx * (i + 1) as f64 },
                if j + 1 == INITIAL_SPLIT_2D { y1 } else { y0 + dy * (j + 1) as f64 },
            ];
            let coarse = q.gauss(lo, hi)?;
            let root = q.panel(lo, hi, coarse, 0, next_id)?;
            next_id += 1;
            total_err += root.error;
            heap.push(root);
        }
    }
    let mut frozen: Vec<Panel<2>> = Vec::new();
    let mut converged = true;

    while total_err > tol {
        let Some(worst) = heap.pop() else {
            converged = false;
            break;
        };
        if worst.depth >= MAX_DEPTH_2D || heap.len() + frozen.len() + 4 > MAX_PANELS_2D {
            frozen.push(worst);
            continue;
        }
        total_err -= worst.error;
        for (k, (clo, chi)) in Rule2d::<F>::quadrants(worst.lo, worst.hi).into_iter().enumerate() {
            let child = q.panel(clo, chi, worst.children[k], worst.depth + 1, next_id)?;
            next_id += 1;
            total_err += child.error;
            heap.push(child);
        }
    }

    let mut panels: Vec<Panel<2>> = heap.into_vec();
    panels.extend(frozen);
    panels.sort_by(|a, b| a.lo[0].total_cmp(&b.lo[0]).then(a.lo[1].total_cmp(&b.lo[1])));
    let value = panels.iter().map(|p| p.value).sum();
    let error_estimate: f64 = panels.iter().map(|p| p.error).sum();
    Ok(IntegrationResult {
        value,
        error_estimate,
        evaluations: q.evaluations,
        converged: converged && error_estimate <= tol,
    })
}

/// [`integrate_2d`] over the grid of cells that `xs` and `ys` cut out of
/// `rect`. Cut coordinates outside the open rectangle are ignored; the
/// tolerance is shared among cells in proportion to their area.
pub fn integrate_2d_cells<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    rect: Rect,
    xs: &[f64],
    ys: &[f64],
    tol: f64,
) -> Result<IntegrationResult> {
    check_tol(tol)?;
    let cuts = |lo: f64, hi: f64, inner: &[f64]| {
        let mut v: Vec<f64> = inner.iter().copied().filter(|t| *t > lo && *t < hi).collect();
        v.extend([lo, hi]);
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let gx = cuts(rect.x0, rect.x1, xs);
    let gy = cuts(rect.y0, rect.y1, ys);
    let total_area = rect.area();
    let mut out = IntegrationResult {
        value: 0.0,
        error_estimate: 0.0,
        evaluations: 0,
        converged: true,
    };
    for wx in gx.windows(2) {
        for wy in gy.windows(2) {
            let cell = Rect::new(wx[0], wx[1], wy[0], wy[1]);
            let r = integrate_2d(&mut f, cell, tol * cell.area() / total_area)?;
            out.value += r.value;
            out.error_estimate += r.error_estimate;
            out.evaluations += r.evaluations;
            out.converged &= r.converged;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn one_point_rule_is_midpoint() {
        let r = gauss_legendre(1, -1.0, 1.0).unwrap();
        assert_eq!(r.nodes, vec![0.0]);
        assert_eq!(r.weights, vec![2.0]);
    }

    #[test]
    fn two_point_rule_matches_classical_values() {
        let r = gauss_legendre(2, -1.0, 1.0).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert_relative_eq!(r.nodes[0], -s, epsilon = 1e-15);
        assert_relative_eq!(r.nodes[1], s, epsilon = 1e-15);
        assert_relative_eq!(r.weights[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(r.weights[1], 1.0, epsilon = 1e-15);
        let on_unit = gauss_legendre(2, 0.0, 1.0).unwrap();
        assert_relative_eq!(on_unit.apply(|x| x * x * x), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn large_rules_are_valid() {
        for n in [200, 256, 1024] {
            let r = gauss_legendre(n, 0.0, 0.8).unwrap();
            let wsum: f64 = r.weights.iter().sum();
            assert_relative_eq!(wsum, 0.8, max_relative = 1e-14);
            assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
            assert!(r.nodes[0] > 0.0 && r.nodes[n - 1] < 0.8);
            assert!(r.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn rule_errors() {
        assert!(matches!(gauss_legendre(4, 1.0, 1.0), Err(Error::InvalidInterval { .. })));
        assert!(matches!(gauss_legendre(4, 2.0, 1.0), Err(Error::InvalidInterval { .. })));
        assert!(matches!(gauss_legendre(MAX_RULE_ORDER + 1, 0.0, 1.0), Err(Error::DegreeTooLarge { .. })));
    }

    #[test]
    fn adaptive_1d_fixtures() {
        let r = integrate_1d(|x| x * x, 0.0, 1.0, 1e-9).unwrap();
        assert!(r.converged);
        assert!((r.value - 1.0 / 3.0).abs() <= 1e-9);
        let r = integrate_1d(|y| (1.0 - y) * (1.0 - y), 0.0, 1.0, 1e-9).unwrap();
        assert!((r.value - 1.0 / 3.0).abs() <= 1e-9);
        // (1-y)^3/3 antiderivative on [1/2, 1]
        let r = integrate_1d(|y| (1.0 - y) * (1.0 - y), 0.5, 1.0, 1e-9).unwrap();
        assert!((r.value - 1.0 / 24.0).abs() <= 1e-9);
    }

    #[test]
    fn adaptive_1d_handles_kinks_and_orientation() {
        let r = integrate_1d(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-10).unwrap();
        assert!(r.converged);
        assert!((r.value - (0.09 + 0.49) / 2.0).abs() <= 1e-10);
        let fwd = integrate_1d(|x: f64| x.exp(), 0.0, 2.0, 1e-12).unwrap();
        let rev = integrate_1d(|x: f64| x.exp(), 2.0, 0.0, 1e-12).unwrap();
        assert_eq!(fwd.value, -rev.value);
        assert!((fwd.value - (2f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn adaptive_1d_reports_depth_exhaustion() {
        // A jump cannot be resolved below the depth cap at this tolerance.
        let r = integrate_1d(|x| if x < 1.0 / 3.0 { 0.0 } else { 1.0 }, 0.0, 1.0, 1e-14).unwrap();
        assert!(!r.converged);
        assert!(r.error_estimate > 1e-14);
        assert!((r.value - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        assert!(matches!(integrate_1d(|_| f64::NAN, 0.0, 1.0, 1e-6), Err(Error::NonFinite(_))));
        assert!(matches!(integrate_1d(|x| x, 0.0, 1.0, 0.0), Err(Error::InvalidTolerance(_))));
    }

    #[test]
    fn adaptive_2d_fixtures() {
        let r = integrate_2d(|x, y| x * y, Rect::UNIT, 1e-8).unwrap();
        assert!((r.value - 0.25).abs() <= 1e-8);
        let r = integrate_2d(|x, y| x * x * y * y, Rect::UNIT, 1e-8).unwrap();
        assert!((r.value - 1.0 / 9.0).abs() <= 1e-8);
        let r = integrate_2d(|x, y| 2.0 * x * y * (1.0 - x * y) / 4.0, Rect::UNIT, 1e-8).unwrap();
        assert!((r.value - 5.0 / 72.0).abs() <= 1e-8);
    }

    #[test]
    fn adaptive_2d_resolves_curved_kink() {
        // Area of the quarter disk of radius 0.8 via max(0, r^2 - x^2 - y^2) moments:
        // the integral of the positive part is pi r^4 / 8.
        let r2 = 0.64;
        let res = integrate_2d(|x, y| (r2 - x * x - y * y).max(0.0), Rect::UNIT, 1e-8).unwrap();
        assert!(res.converged);
        let exact = std::f64::consts::PI * r2 * r2 / 8.0;
        assert!((res.value - exact).abs() <= 1e-8, "{} vs {}", res.value, exact);
    }

    #[test]
    fn integrators_are_deterministic() {
        let f = |x: f64, y: f64| (x - y).abs().sqrt();
        let a = integrate_2d(f, Rect::UNIT, 1e-6).unwrap();
        let b = integrate_2d(f, Rect::UNIT, 1e-6).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.evaluations, b.evaluations);
    }
}
