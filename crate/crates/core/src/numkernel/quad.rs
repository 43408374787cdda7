//! One-dimensional double-exponential quadrature.
//!
//! Finite intervals use the tanh-sinh substitution, the half line uses
//! exp-sinh (`x = exp(pi/2 sinh s)`). Both reduce the problem to a trapezoid
//! sum over `s` which is refined by halving the step; the difference between
//! consecutive levels is the error estimate. Tolerances are relative to the
//! magnitude of the integral.
//!
//! Each sweep walks outward from `s = 0` and stops once terms have fallen
//! below `1e-18` of the largest term seen. A sweep that hits the end of the
//! representable range while terms are still large flags the integral as
//! divergent, as does any non-finite term.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub converged: bool,
    /// Set by the divergence heuristic; implies `!converged`.
    pub divergent: bool,
    pub evaluations: usize,
}

impl QuadResult {
    /// A value known without quadrature, such as an empty interval.
    pub fn exact(value: f64) -> Self {
        Self { value, abs_error_estimate: 0.0, converged: true, divergent: false, evaluations: 0 }
    }
}

const MIN_LEVEL: usize = 3;
const MAX_LEVEL: usize = 10;
const NEGLIGIBLE: f64 = 1e-18;
/// Relative size of the outermost term above which the tail is treated as
/// divergent rather than merely unresolved.
const DIVERGENT_EDGE: f64 = 1e-3;

trait DeTransform {
    /// Abscissa and weight at trapezoid coordinate `s`, or `None` when `s`
    /// maps outside the representable range.
    fn node(&self, s: f64) -> Option<(f64, f64)>;
}

struct TanhSinh {
    a: f64,
    b: f64,
    half_width: f64,
}

impl DeTransform for TanhSinh {
    fn node(&self, s: f64) -> Option<(f64, f64)> {
        let y = FRAC_PI_2 * s.abs().sinh();
        if y > 350.0 {
            return None;
        }
        let e = (2.0 * y).exp();
        // distance to the nearer endpoint, computed without cancellation
        let delta = 2.0 * self.half_width / (1.0 + e);
        if delta == 0.0 {
            return None;
        }
        // A node that rounds onto an endpoint moves to the nearest interior
        // float; its weight is still exact.
        let x =
            if s >= 0.0 { (self.b - delta).min(self.b.next_down()) } else { (self.a + delta).max(self.a.next_up()) };
        if x <= self.a || x >= self.b {
            return None;
        }
        let sech = 2.0 / (y.exp() + (-y).exp());
        let w = self.half_width * FRAC_PI_2 * s.cosh() * sech * sech;
        Some((x, w))
    }
}

struct ExpSinh;

impl DeTransform for ExpSinh {
    fn node(&self, s: f64) -> Option<(f64, f64)> {
        let y = FRAC_PI_2 * s.sinh();
        if y.abs() > 700.0 {
            return None;
        }
        let x = y.exp();
        if x == 0.0 || !x.is_finite() {
            return None;
        }
        Some((x, x * FRAC_PI_2 * s.cosh()))
    }
}

#[derive(Default)]
struct Sweep {
    sum: f64,
    evaluations: usize,
    non_finite: bool,
    /// Largest ratio |outermost term| / max term over the directions that ran
    /// into the end of the representable range.
    edge_ratio: f64,
}

/// Where the coarse sweep stopped in each direction: `Some(s)` once terms
/// became negligible, `None` when it ran into the end of the range.
type Extent = [Option<f64>; 2];

fn sweep<F: Fn(f64) -> f64>(
    f: &F,
    tr: &impl DeTransform,
    level: usize,
    max_term: &mut f64,
    extent: &mut Extent,
) -> Sweep {
    let mut out = Sweep::default();
    let (start, step) = if level == 0 {
        (1.0, 1.0)
    } else {
        let h = 0.5f64.powi(level as i32);
        (h, 2.0 * h)
    };
    if level == 0 {
        if let Some((x, w)) = tr.node(0.0) {
            let t = f(x) * w;
            out.evaluations += 1;
            if !t.is_finite() {
                out.non_finite = true;
                return out;
            }
            out.sum += t;
            *max_term = max_term.max(t.abs());
        }
    }
    for (side, dir) in [1.0, -1.0].into_iter().enumerate() {
        let mut prev = f64::INFINITY;
        let mut j = 0usize;
        loop {
            let reach = start + j as f64 * step;
            j += 1;
            if level > 0 {
                if let Some(limit) = extent[side] {
                    if reach > limit {
                        break;
                    }
                }
            }
            let Some((x, w)) = tr.node(dir * reach) else {
                if level == 0 {
                    extent[side] = None;
                }
                if *max_term > 0.0 && prev.is_finite() {
                    out.edge_ratio = out.edge_ratio.max(prev / *max_term);
                }
                break;
            };
            let t = f(x) * w;
            out.evaluations += 1;
            if !t.is_finite() {
                out.non_finite = true;
                return out;
            }
            out.sum += t;
            let mag = t.abs();
            *max_term = max_term.max(mag);
            if level == 0 && mag <= NEGLIGIBLE * *max_term && mag <= prev {
                extent[side] = Some(reach);
                break;
            }
            prev = mag;
        }
    }
    out
}

fn de_integrate<F: Fn(f64) -> f64>(f: &F, tr: &impl DeTransform, tol: f64) -> QuadResult {
    let mut max_term = 0.0;
    let mut extent: Extent = [None, None];
    let mut raw_sum = 0.0;
    let mut evaluations = 0;
    let mut prev: Option<f64> = None;
    let mut estimate = 0.0;
    let mut err = f64::INFINITY;
    let mut edge_ratio = 0.0;
    for level in 0..=MAX_LEVEL {
        let s = sweep(f, tr, level, &mut max_term, &mut extent);
        evaluations += s.evaluations;
        if s.non_finite {
            return QuadResult {
                value: f64::NAN,
                abs_error_estimate: f64::INFINITY,
                converged: false,
                divergent: true,
                evaluations,
            };
        }
        raw_sum += s.sum;
        // only the finest sweep says anything about the truncated ends
        edge_ratio = s.edge_ratio;
        let h = 0.5f64.powi(level as i32);
        estimate = raw_sum * h;
        if let Some(p) = prev {
            err = (estimate - p).abs();
            if level >= MIN_LEVEL && err <= tol * estimate.abs() && edge_ratio <= tol {
                return QuadResult {
                    value: estimate,
                    abs_error_estimate: err,
                    converged: true,
                    divergent: false,
                    evaluations,
                };
            }
        }
        prev = Some(estimate);
    }
    QuadResult {
        value: estimate,
        abs_error_estimate: err,
        converged: false,
        divergent: edge_ratio > DIVERGENT_EDGE,
        evaluations,
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("quadrature tolerance must lie in (0, 1), got {tol}")))
    }
}

/// Integral of `f` over `(0, inf)`.
pub fn integrate_halfline<F: Fn(f64) -> f64>(f: F, tol: f64) -> Result<QuadResult> {
    check_tol(tol)?;
    Ok(de_integrate(&f, &ExpSinh, tol))
}

/// Integral of `f` over `(a, b)`; `f` is never evaluated at the endpoints.
pub fn integrate_interval<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult> {
    check_tol(tol)?;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::invalid(format!("interval endpoints must be finite with a < b, got ({a}, {b})")));
    }
    let tr = TanhSinh { a, b, half_width: 0.5 * (b - a) };
    Ok(de_integrate(&f, &tr, tol))
}

/// Integral of `f` over the whole real line, folded onto the half line.
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, tol: f64) -> Result<QuadResult> {
    integrate_halfline(|t| f(t) + f(-t), tol)
}

/// Outcome of the nested-truncation divergence heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailVerdict {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailProbe {
    /// Integral of `f` over `(1, 10^k)` for `k = 1..=6`.
    pub partials: Vec<f64>,
    pub verdict: TailVerdict,
}

/// Growth ratio between the last two truncation levels above which the tail
/// is declared divergent.
pub const DIVERGENCE_GROWTH: f64 = 1.5;
/// Relative change between the last two truncation levels below which the
/// tail is declared convergent.
pub const CONVERGENCE_STALL: f64 = 1e-9;
/// Quadrature tolerance for the pieces of a tail probe.
pub const DEFAULT_PROBE_TOL: f64 = 1e-10;

/// Heuristic for whether `int_1^inf f` is finite: compares the integrals over
/// nested truncations `(1, 10^k)`, `k = 1..=6`. Growth by more than
/// [`DIVERGENCE_GROWTH`] between the last two levels means divergent, a
/// relative change below [`CONVERGENCE_STALL`] means convergent, anything in
/// between is inconclusive. `f` must be nonnegative.
pub fn probe_tail<F: Fn(f64) -> f64>(f: F, tol: f64) -> Result<TailProbe> {
    check_tol(tol)?;
    let g = |u: f64| {
        let x = u.exp();
        f(x) * x
    };
    let mut partials = Vec::with_capacity(6);
    let mut acc = 0.0;
    let mut lo = 0.0;
    for k in 1..=6 {
        let hi = k as f64 * std::f64::consts::LN_10;
        let piece = integrate_interval(g, lo, hi, tol)?;
        if piece.divergent || !piece.value.is_finite() {
            return Ok(TailProbe { partials, verdict: TailVerdict::Divergent });
        }
        acc += piece.value;
        partials.push(acc);
        lo = hi;
    }
    let last = partials[5];
    let before = partials[4];
    let verdict = if before > 0.0 && last / before > DIVERGENCE_GROWTH {
        TailVerdict::Divergent
    } else if (last - before).abs() <= CONVERGENCE_STALL * last.abs().max(f64::MIN_POSITIVE) {
        TailVerdict::Convergent
    } else {
        TailVerdict::Inconclusive
    };
    Ok(TailProbe { partials, verdict })
}
