//! Inverse-cdf sampling.
//!
//! The bulk of the distribution is covered by bins in the chart coordinate.
//! Each bin holds a Chebyshev expansion of the antiderivative of the
//! integrand, so locating a quantile inside a bin is a bisection on a
//! polynomial. Bins are split until the expansion has converged and its total
//! agrees with adaptive quadrature over the bin. Draws landing in the far
//! tails, beyond the table, bisect on the quadrature cdf instead.

use crate::error::{Error, Result};
use crate::numkernel::{quad, UniformRng};

use super::NormalizedFamily;

const INITIAL_BINS: usize = 256;
const CHEB_ORDER: usize = 32;
const MAX_SPLIT_DEPTH: usize = 10;
/// Table edges are placed where the scaled integrand drops below this.
const EDGE_LEVEL: f64 = 1e-18;
const EDGE_REACH: f64 = 2000.0;
const BIN_QUAD_TOL: f64 = 1e-13;
/// Trailing Chebyshev coefficients must be below this fraction of the
/// largest one.
const CHEB_TAIL: f64 = 1e-14;
/// Bisection stops at this width in the chart coordinate.
pub const QUANTILE_WIDTH: f64 = 1e-12;

#[derive(Debug, Clone)]
struct Bin {
    lo: f64,
    hi: f64,
    /// Chebyshev coefficients of the antiderivative, zero at `lo`.
    antideriv: Vec<f64>,
    mass: f64,
}

impl Bin {
    fn eval(&self, u: f64) -> f64 {
        let y = (2.0 * u - self.lo - self.hi) / (self.hi - self.lo);
        let y2 = 2.0 * y;
        let (mut d, mut dd) = (0.0, 0.0);
        for &c in self.antideriv[1..].iter().rev() {
            let sv = d;
            d = y2 * d - dd + c;
            dd = sv;
        }
        y * d - dd + 0.5 * self.antideriv[0]
    }
}

/// Chebyshev coefficients of `f` on `[lo, hi]` from values at the first-kind
/// nodes.
fn cheb_fit(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> Vec<f64> {
    let n = CHEB_ORDER;
    let (mid, half) = (0.5 * (hi + lo), 0.5 * (hi - lo));
    let pi = std::f64::consts::PI;
    let vals: Vec<f64> = (0..n).map(|k| f(mid + half * (pi * (k as f64 + 0.5) / n as f64).cos())).collect();
    (0..n)
        .map(|j| {
            let s: f64 =
                vals.iter().enumerate().map(|(k, v)| v * (pi * j as f64 * (k as f64 + 0.5) / n as f64).cos()).sum();
            2.0 * s / n as f64
        })
        .collect()
}

/// Coefficients of the antiderivative that vanishes at the left endpoint.
fn cheb_integral(c: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let n = c.len();
    let con = 0.25 * (hi - lo);
    let mut out = vec![0.0; n];
    let (mut sum, mut fac) = (0.0, 1.0);
    for j in 1..n - 1 {
        out[j] = con * (c[j - 1] - c[j + 1]) / j as f64;
        sum += fac * out[j];
        fac = -fac;
    }
    out[n - 1] = con * c[n - 2] / (n - 1) as f64;
    sum += fac * out[n - 1];
    out[0] = 2.0 * sum;
    out
}

/// Bisection for the root of a nondecreasing `g` in `[lo, hi]`, stopping at
/// width [`QUANTILE_WIDTH`] or when the midpoint stops moving.
fn bisect(g: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= QUANTILE_WIDTH || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if g(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::RootFinding(format!("bisection did not narrow [{lo}, {hi}]")))
}

pub struct InverseCdfTable<'a> {
    fam: &'a NormalizedFamily,
    bins: Vec<Bin>,
    /// Scaled mass below each bin's left edge; one extra entry for the end.
    cum: Vec<f64>,
}

impl<'a> InverseCdfTable<'a> {
    pub(super) fn build(fam: &'a NormalizedFamily) -> Result<Self> {
        let p = &fam.profile;
        let h = |u: f64| p.h(u);
        let (range_lo, range_hi) = p.fam.carrier.coordinate_range();
        let edge = |dir: f64, limit: f64| {
            if limit.is_finite() {
                return limit;
            }
            let mut d = 0.25;
            while d < EDGE_REACH {
                let v = h(p.mode + dir * d);
                if !(v > EDGE_LEVEL) {
                    break;
                }
                d *= 1.25;
            }
            p.mode + dir * d.min(EDGE_REACH)
        };
        let (u_lo, u_hi) = (edge(-1.0, range_lo), edge(1.0, range_hi));
        let lower_mass = p.below(u_lo, fam.tol)?.value;

        let mut bins = Vec::with_capacity(INITIAL_BINS);
        let width = (u_hi - u_lo) / INITIAL_BINS as f64;
        for i in 0..INITIAL_BINS {
            let lo = u_lo + width * i as f64;
            let hi = if i + 1 == INITIAL_BINS { u_hi } else { lo + width };
            Self::fill(&h, lo, hi, 0, &mut bins)?;
        }
        let mut cum = Vec::with_capacity(bins.len() + 1);
        let mut acc = lower_mass;
        cum.push(acc);
        for b in &bins {
            acc += b.mass;
            cum.push(acc);
        }
        Ok(Self { fam, bins, cum })
    }

    fn fill(h: &impl Fn(f64) -> f64, lo: f64, hi: f64, depth: usize, out: &mut Vec<Bin>) -> Result<()> {
        let c = cheb_fit(h, lo, hi);
        let cmax = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let tail = c[CHEB_ORDER - 1].abs().max(c[CHEB_ORDER - 2].abs());
        let antideriv = cheb_integral(&c, lo, hi);
        let mut bin = Bin { lo, hi, antideriv, mass: 0.0 };
        bin.mass = bin.eval(hi);
        let resolved = if tail <= CHEB_TAIL * cmax + f64::MIN_POSITIVE {
            let q = quad::integrate_interval(h, lo, hi, BIN_QUAD_TOL)?;
            (q.value - bin.mass).abs() <= 1e-12 * q.value.abs() + 1e-300
        } else {
            false
        };
        if resolved || depth >= MAX_SPLIT_DEPTH {
            if !resolved && cmax > 1e-300 {
                return Err(Error::Quadrature(format!("cdf table could not resolve the bin [{lo}, {hi}]")));
            }
            out.push(bin);
            return Ok(());
        }
        let mid = 0.5 * (lo + hi);
        Self::fill(h, lo, mid, depth + 1, out)?;
        Self::fill(h, mid, hi, depth + 1, out)
    }

    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    /// Chart-coordinate quantile for probability `q` in (0, 1).
    pub fn quantile_coordinate(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::invalid(format!("probability {q} outside (0, 1)")));
        }
        let p = &self.fam.profile;
        let total = self.fam.total;
        let m = q * total;
        let first = self.cum[0];
        let last = *self.cum.last().expect("nonempty");
        let tol = self.fam.tol;
        if m < first {
            let hi = self.bins[0].lo;
            let mut d = 1.0;
            let mut lo = hi - d;
            while p.below(lo, tol)?.value >= m {
                d *= 2.0;
                lo = hi - d;
                if d > 1e300 {
                    return Err(Error::RootFinding(format!("no lower bracket for probability {q}")));
                }
            }
            return bisect(|u| Ok(p.below(u, tol)?.value - m), lo, hi);
        }
        if m > last {
            let lo = self.bins.last().expect("nonempty").hi;
            let rest = total - m;
            let mut d = 1.0;
            let mut hi = lo + d;
            while p.above(hi, tol)?.value >= rest {
                d *= 2.0;
                hi = lo + d;
                if d > 1e300 {
                    return Err(Error::RootFinding(format!("no upper bracket for probability {q}")));
                }
            }
            return bisect(|u| Ok(rest - p.above(u, tol)?.value), lo, hi);
        }
        let i = self.cum.partition_point(|&c| c <= m).saturating_sub(1).min(self.bins.len() - 1);
        let bin = &self.bins[i];
        let target = m - self.cum[i];
        bisect(|u| Ok(bin.eval(u) - target), bin.lo, bin.hi)
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        let u = self.quantile_coordinate(q)?;
        Ok(self.fam.profile.fam.carrier.chart.from_coordinate(u))
    }

    /// Quantiles of `n` uniform draws from the stream seeded by `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        let mut rng = UniformRng::seeded(seed);
        (0..n).map(|_| self.quantile(rng.next_open01())).collect()
    }
}

/// Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("no samples"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x)?;
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_antiderivative_of_exp() {
        let c = cheb_fit(&f64::exp, -1.0, 2.0);
        let bin = Bin { lo: -1.0, hi: 2.0, antideriv: cheb_integral(&c, -1.0, 2.0), mass: 0.0 };
        for u in [-1.0f64, 0.0, 0.7, 2.0] {
            let want = u.exp() - (-1f64).exp();
            assert!((bin.eval(u) - want).abs() < 1e-14, "{u}");
        }
    }

    #[test]
    fn bisection_on_a_line() {
        let r = bisect(|u| Ok(u - 0.3), 0.0, 1.0).unwrap();
        assert!((r - 0.3).abs() <= QUANTILE_WIDTH);
    }

    #[test]
    fn ks_of_exact_quantiles() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let d = ks_statistic(&xs, Ok).unwrap();
        assert!((d - 0.005).abs() < 1e-15);
    }
}
