//! The exponential family generated by a pair on a one-dimensional carrier:
//! unnormalized density, membership of the natural parameter space, the
//! log-normalizer, pdf, cdf and inverse-cdf sampling.
//!
//! Only `H = {e}` is realized, so the carrier is the group chart itself.
//! Integrals are taken in the additive chart coordinate `u`, split at the
//! mode of the integrand and evaluated on each half-line.

mod sampler;

use serde::Serialize;

pub use sampler::{ks_statistic, InverseCdfTable};

use crate::diagnostics::{well_definedness_check, PairSpec, Witness};
use crate::equivalence::default_grid;
use crate::error::{Error, Result};
use crate::group::{CharacterBasis, ChartKind, GroupChart, RepTemplate};
use crate::numkernel::quad::{self, QuadResult, TailVerdict};
use crate::numkernel::{Matrix, Vector};
use crate::special::{classify_gig, explain_gig_rejection};

pub const DEFAULT_QUAD_TOL: f64 = 1e-10;
pub const REPLAY_TOL: f64 = 1e-10;
pub const REPLAY_GRID_POINTS: usize = 32;
/// Half-width, in the chart coordinate, of the scan that locates the mode.
const MODE_SCAN_REACH: f64 = 40.0;
const MODE_SCAN_STEP: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseMeasure {
    /// `dx / x` on the positive reals, `dx` elsewhere.
    Haar,
    Lebesgue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CarrierSpec {
    pub chart: GroupChart,
    pub base: BaseMeasure,
}

impl CarrierSpec {
    pub fn haar(chart: GroupChart) -> Self {
        Self { chart, base: BaseMeasure::Haar }
    }

    pub fn lebesgue(chart: GroupChart) -> Self {
        Self { chart, base: BaseMeasure::Lebesgue }
    }

    /// `log w(x)`.
    pub fn log_weight(&self, x: f64) -> Result<f64> {
        self.chart.check(x)?;
        Ok(match (self.base, self.chart.kind) {
            (BaseMeasure::Haar, ChartKind::PositiveReals) => -x.ln(),
            _ => 0.0,
        })
    }

    /// `log w(x(u)) + log |dx/du|`, the base measure as a density in `u`.
    fn log_weight_coordinate(&self, u: f64) -> f64 {
        match (self.base, self.chart.kind) {
            (BaseMeasure::Lebesgue, ChartKind::PositiveReals) => u,
            _ => 0.0,
        }
    }

    /// Interval of the carrier in the chart coordinate.
    pub fn coordinate_range(&self) -> (f64, f64) {
        match self.chart.kind {
            ChartKind::Circle => (-std::f64::consts::PI, std::f64::consts::PI),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn is_compact(&self) -> bool {
        self.chart.kind == ChartKind::Circle
    }
}

/// `theta = (xi, chi)` with `chi` given by its coefficients on the character
/// basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaParam {
    pub xi: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl ThetaParam {
    pub fn new(xi: Vec<f64>, lambda: Vec<f64>) -> Result<Self> {
        if xi.iter().chain(&lambda).any(|x| !x.is_finite()) {
            return Err(Error::invalid("theta has non-finite entries"));
        }
        Ok(Self { xi, lambda })
    }

    pub fn zeros(dim: usize, basis_size: usize) -> Self {
        Self { xi: vec![0.0; dim], lambda: vec![0.0; basis_size] }
    }

    /// `self + t * other`, coordinatewise.
    pub fn shifted(&self, other: &ThetaParam, t: f64) -> Self {
        Self {
            xi: self.xi.iter().zip(&other.xi).map(|(a, b)| a + t * b).collect(),
            lambda: self.lambda.iter().zip(&other.lambda).map(|(a, b)| a + t * b).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FamilySpec {
    pub pair: PairSpec,
    pub carrier: CarrierSpec,
}

/// `sum_ij xi_i m_ij v_j`, skipping terms with a zero coefficient so that an
/// overflowed entry multiplied by an exact zero contributes nothing.
fn pairing(xi: &[f64], m: &Matrix, v: &Vector) -> f64 {
    let mut acc = 0.0;
    for (i, &x) in xi.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &vj) in v.iter().enumerate() {
            if vj != 0.0 {
                let e = m[(i, j)];
                if e != 0.0 {
                    acc += x * e * vj;
                }
            }
        }
    }
    acc
}

impl FamilySpec {
    pub fn new(pair: PairSpec, carrier: CarrierSpec) -> Result<Self> {
        if pair.chart().kind != carrier.chart.kind {
            return Err(Error::invalid(format!(
                "carrier chart {} differs from group chart {}",
                carrier.chart.name(),
                pair.chart().name()
            )));
        }
        if !pair.h.is_trivial() {
            return Err(Error::Unsupported("families are realized for trivial H only".into()));
        }
        well_definedness_check(&pair, 0)?;
        Ok(Self { pair, carrier })
    }

    fn check_theta(&self, theta: &ThetaParam) -> Result<()> {
        if theta.xi.len() != self.pair.dim() || theta.lambda.len() != self.pair.characters.size() {
            return Err(Error::invalid(format!(
                "theta has shape ({}, {}), family expects ({}, {})",
                theta.xi.len(),
                theta.lambda.len(),
                self.pair.dim(),
                self.pair.characters.size()
            )));
        }
        Ok(())
    }

    /// `-<xi, x v0> + sum_j lambda_j log chi_j(x) + log w(x)`.
    pub fn log_unnormalized(&self, theta: &ThetaParam, x: f64) -> Result<f64> {
        self.check_theta(theta)?;
        let m = self.pair.rep.eval(x)?;
        let stat = pairing(&theta.xi, &m, &self.pair.v0);
        let chi = self.pair.characters.log_character(&theta.lambda, x);
        Ok(-stat + chi + self.carrier.log_weight(x)?)
    }

    /// Log of the integrand in the chart coordinate; NaN where it cannot be
    /// evaluated.
    fn log_integrand(&self, theta: &ThetaParam, u: f64) -> f64 {
        let Ok(m) = self.pair.rep.eval_coordinate(u) else {
            return f64::NAN;
        };
        let stat = pairing(&theta.xi, &m, &self.pair.v0);
        let chi: f64 = self
            .pair
            .characters
            .log_values_at_coordinate(self.pair.chart(), u)
            .iter()
            .zip(&theta.lambda)
            .filter(|(_, &l)| l != 0.0)
            .map(|(v, l)| v * l)
            .sum();
        -stat + chi + self.carrier.log_weight_coordinate(u)
    }

    /// `(a, b, lambda)` when the family is the generalized inverse Gaussian
    /// construction: weights `[1, -1]` on the positive reals, power
    /// characters, Haar carrier. With `v0 = (r, s)`, `a = 2 r xi_1` and
    /// `b = 2 s xi_2`.
    pub fn gig_parameters(&self, theta: &ThetaParam) -> Option<(f64, f64, f64)> {
        let recognized = self.pair.chart().kind == ChartKind::PositiveReals
            && self.carrier.base == BaseMeasure::Haar
            && self.pair.characters == CharacterBasis::Power
            && self.pair.rep.template() == Some(&RepTemplate::DiagonalWeights(vec![1.0, -1.0]));
        if !recognized || self.check_theta(theta).is_err() {
            return None;
        }
        let (r, s) = (self.pair.v0[0], self.pair.v0[1]);
        Some((2.0 * r * theta.xi[0], 2.0 * s * theta.xi[1], theta.lambda[0]))
    }
}

/// The family of weights `[1, -1]` on the positive reals with `v0 = (r, s)`,
/// power characters and the Haar carrier.
pub fn gig_family(r: f64, s: f64) -> Result<FamilySpec> {
    let chart = GroupChart::positive_reals();
    let rep = crate::group::RepSpec::new(RepTemplate::DiagonalWeights(vec![1.0, -1.0]), chart)?.shared();
    let pair = PairSpec::new(
        rep,
        Vector::from_column_slice(&[r, s]),
        crate::group::SubgroupSpec::Trivial,
        CharacterBasis::Power,
    )?;
    FamilySpec::new(pair, CarrierSpec::haar(chart))
}

/// Natural parameter of [`gig_family`]`(r, s)` giving the density
/// `x^{lambda-1} e^{-(a x + b / x) / 2}`. A zero `r` or `s` leaves the
/// matching coordinate of `xi` at zero, where it has no effect.
pub fn gig_theta(a: f64, b: f64, lambda: f64, r: f64, s: f64) -> Result<ThetaParam> {
    let coord = |ab: f64, v: f64| if v == 0.0 { 0.0 } else { ab / (2.0 * v) };
    ThetaParam::new(vec![coord(a, r), coord(b, s)], vec![lambda])
}

pub fn unnormalized_density(fam: &FamilySpec, theta: &ThetaParam, x: f64) -> Result<f64> {
    Ok(fam.log_unnormalized(theta, x)?.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Inside,
    Outside,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "path", rename_all = "snake_case")]
pub enum MembershipPath {
    /// Closed-form case analysis of the generalized inverse Gaussian family.
    Analytic { a: f64, b: f64, lambda: f64, case: Option<String> },
    /// Continuous density on a compact carrier.
    Compact,
    /// Growth of partial integrals over `(1, 10^k)` in each tail.
    TailProbe { lower: TailVerdict, upper: TailVerdict },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipReport {
    pub verdict: Membership,
    #[serde(flatten)]
    pub path: MembershipPath,
    pub explanation: String,
}

pub fn theta_membership(fam: &FamilySpec, theta: &ThetaParam) -> Result<MembershipReport> {
    fam.check_theta(theta)?;
    if let Some((a, b, lambda)) = fam.gig_parameters(theta) {
        let case = classify_gig(a, b, lambda);
        let (verdict, explanation) = match case {
            Some(c) => (Membership::Inside, format!("case {}", c.label())),
            None => (Membership::Outside, explain_gig_rejection(a, b, lambda)),
        };
        return Ok(MembershipReport {
            verdict,
            path: MembershipPath::Analytic { a, b, lambda, case: case.map(|c| c.label().to_string()) },
            explanation,
        });
    }
    if fam.carrier.is_compact() {
        return Ok(MembershipReport {
            verdict: Membership::Inside,
            path: MembershipPath::Compact,
            explanation: "continuous density on a compact carrier".into(),
        });
    }
    let density = |x: f64| fam.log_unnormalized(theta, x).map(f64::exp).unwrap_or(f64::NAN);
    let (lower, upper) = match fam.carrier.chart.kind {
        ChartKind::PositiveReals => (
            quad::probe_tail(|y| density(1.0 / y) / (y * y), quad::DEFAULT_PROBE_TOL)?,
            quad::probe_tail(density, quad::DEFAULT_PROBE_TOL)?,
        ),
        _ => (
            quad::probe_tail(|y| density(-y), quad::DEFAULT_PROBE_TOL)?,
            quad::probe_tail(density, quad::DEFAULT_PROBE_TOL)?,
        ),
    };
    use TailVerdict::*;
    let verdict = match (lower.verdict, upper.verdict) {
        (Convergent, Convergent) => Membership::Inside,
        (Divergent, _) | (_, Divergent) => Membership::Outside,
        _ => Membership::Inconclusive,
    };
    Ok(MembershipReport {
        verdict,
        path: MembershipPath::TailProbe { lower: lower.verdict, upper: upper.verdict },
        explanation: format!(
            "heuristic: lower tail {:?}, upper tail {:?} (partial integrals over (1, 10^k))",
            lower.verdict, upper.verdict
        ),
    })
}

/// The integrand in the chart coordinate, rescaled so its peak is about 1.
#[derive(Debug, Clone)]
struct Profile {
    fam: FamilySpec,
    theta: ThetaParam,
    mode: f64,
    top: f64,
}

impl Profile {
    fn new(fam: &FamilySpec, theta: &ThetaParam) -> Result<Self> {
        let (lo, hi) = match fam.carrier.coordinate_range() {
            (a, b) if a.is_finite() => (a, b),
            _ => (-MODE_SCAN_REACH, MODE_SCAN_REACH),
        };
        let steps = ((hi - lo) / MODE_SCAN_STEP).ceil() as usize;
        let mut best: Option<(f64, f64)> = None;
        for i in 0..=steps {
            let u = lo + (hi - lo) * i as f64 / steps as f64;
            let v = fam.log_integrand(theta, u);
            if v.is_finite() && best.is_none_or(|(_, b)| v > b) {
                best = Some((u, v));
            }
        }
        let (u0, _) = best.ok_or_else(|| Error::Quadrature("density is not finite anywhere on the scan".into()))?;
        // golden-section refinement inside the neighbouring scan cells
        let f = |u: f64| {
            let v = fam.log_integrand(theta, u);
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        };
        let (mut a, mut b) = ((u0 - MODE_SCAN_STEP).max(lo), (u0 + MODE_SCAN_STEP).min(hi));
        let r = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let c = b - r * (b - a);
            let d = a + r * (b - a);
            if f(c) >= f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let cand = 0.5 * (a + b);
        let (mode, top) = if f(cand) >= f(u0) { (cand, f(cand)) } else { (u0, f(u0)) };
        Ok(Self { fam: fam.clone(), theta: theta.clone(), mode, top })
    }

    fn h(&self, u: f64) -> f64 {
        (self.fam.log_integrand(&self.theta, u) - self.top).exp()
    }

    /// Scaled mass of `(-inf, v]` (or `(-pi, v]` on the circle).
    fn below(&self, v: f64, tol: f64) -> Result<QuadResult> {
        let (lo, _) = self.fam.carrier.coordinate_range();
        if lo.is_finite() {
            if v <= lo {
                return Ok(QuadResult::exact(0.0));
            }
            return quad::integrate_interval(|u| self.h(u), lo, v, tol);
        }
        quad::integrate_halfline(|t| self.h(v - t), tol)
    }

    /// Scaled mass of `[v, inf)` (or `[v, pi]` on the circle).
    fn above(&self, v: f64, tol: f64) -> Result<QuadResult> {
        let (_, hi) = self.fam.carrier.coordinate_range();
        if hi.is_finite() {
            if v >= hi {
                return Ok(QuadResult::exact(0.0));
            }
            return quad::integrate_interval(|u| self.h(u), v, hi, tol);
        }
        quad::integrate_halfline(|t| self.h(v + t), tol)
    }
}

/// A family at a fixed parameter with its log-normalizer computed.
#[derive(Debug, Clone)]
pub struct NormalizedFamily {
    profile: Profile,
    /// Scaled total mass; `phi = top + ln(total)`.
    total: f64,
    pub phi: f64,
    pub tol: f64,
    pub membership: MembershipReport,
    pub abs_error_estimate: f64,
}

impl NormalizedFamily {
    /// Fails with `OutsideTheta` when the parameter is outside the natural
    /// parameter space, or when the membership test is inconclusive and the
    /// quadrature diverges. Divergence after an `Inside` verdict is reported
    /// as a quadrature error.
    pub fn new(fam: &FamilySpec, theta: &ThetaParam, tol: f64) -> Result<Self> {
        let membership = theta_membership(fam, theta)?;
        if membership.verdict == Membership::Outside {
            return Err(Error::OutsideTheta(membership.explanation));
        }
        let profile = Profile::new(fam, theta)?;
        let lower = profile.below(profile.mode, tol)?;
        let upper = profile.above(profile.mode, tol)?;
        for part in [&lower, &upper] {
            if part.divergent || !part.value.is_finite() {
                let msg = format!("normalizing integral diverges ({})", membership.explanation);
                return Err(match membership.verdict {
                    Membership::Inside => Error::Quadrature(format!("membership contradiction: {msg}")),
                    _ => Error::OutsideTheta(msg),
                });
            }
            if !part.converged {
                return Err(Error::Quadrature(format!(
                    "normalizing integral did not reach tolerance {tol:e} (estimate {}, error {:e})",
                    part.value, part.abs_error_estimate
                )));
            }
        }
        let total = lower.value + upper.value;
        if !(total > 0.0) {
            return Err(Error::Quadrature("normalizing integral vanished".into()));
        }
        let phi = profile.top + total.ln();
        let abs_error_estimate = (lower.abs_error_estimate + upper.abs_error_estimate) / total;
        Ok(Self { profile, total, phi, tol, membership, abs_error_estimate })
    }

    pub fn family(&self) -> &FamilySpec {
        &self.profile.fam
    }

    pub fn theta(&self) -> &ThetaParam {
        &self.profile.theta
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        Ok((self.profile.fam.log_unnormalized(&self.profile.theta, x)? - self.phi).exp())
    }

    /// Probability of the carrier below `x`, by quadrature from the nearer tail.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.profile.fam.carrier.chart.check(x)?;
        self.cdf_coordinate(self.profile.fam.carrier.chart.coordinate(x))
    }

    fn cdf_coordinate(&self, u: f64) -> Result<f64> {
        let p = if u <= self.profile.mode {
            self.profile.below(u, self.tol)?.value / self.total
        } else {
            1.0 - self.profile.above(u, self.tol)?.value / self.total
        };
        Ok(p.clamp(0.0, 1.0))
    }

    pub fn sampler(&self) -> Result<InverseCdfTable<'_>> {
        InverseCdfTable::build(self)
    }

    /// `n` draws, inverse-cdf on a uniform stream seeded by `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        self.sampler()?.sample(n, seed)
    }
}

pub fn log_normalizer(fam: &FamilySpec, theta: &ThetaParam, tol: f64) -> Result<f64> {
    Ok(NormalizedFamily::new(fam, theta, tol)?.phi)
}

pub fn pdf(fam: &FamilySpec, theta: &ThetaParam, x: f64) -> Result<f64> {
    NormalizedFamily::new(fam, theta, DEFAULT_QUAD_TOL)?.pdf(x)
}

pub fn cdf(fam: &FamilySpec, theta: &ThetaParam, x: f64, tol: f64) -> Result<f64> {
    NormalizedFamily::new(fam, theta, tol)?.cdf(x)
}

pub fn sample(fam: &FamilySpec, theta: &ThetaParam, n: usize, seed: u64) -> Result<Vec<f64>> {
    NormalizedFamily::new(fam, theta, DEFAULT_QUAD_TOL)?.sample(n, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReplay {
    pub theta2: ThetaParam,
    /// `e^{-c}`.
    pub expected_factor: f64,
    /// Worst `|log p2(x) - log p1(x) + c|` on the grid.
    pub max_log_defect: f64,
    pub densities_proportional: bool,
    /// Worst relative pdf difference; absent when `theta1` is outside the
    /// natural parameter space.
    pub pdf_max_rel_diff: Option<f64>,
    pub pdfs_equal: Option<bool>,
    pub grid_points: usize,
    pub note: String,
}

/// Shifts `theta1` by a witness `(xi, lambda, c)` and checks that the
/// unnormalized densities differ by the constant factor `e^{-c}` and, when
/// normalizable, that the pdfs coincide.
pub fn proof_witness_replay(fam: &FamilySpec, theta1: &ThetaParam, witness: &Witness) -> Result<WitnessReplay> {
    if witness.xi.iter().all(|&x| x == 0.0) {
        return Err(Error::invalid("witness has xi = 0"));
    }
    let shift = ThetaParam::new(witness.xi.clone(), witness.lambda.clone())?;
    fam.check_theta(&shift)?;
    let theta2 = theta1.shifted(&shift, 1.0);
    let grid = default_grid(&fam.carrier.chart, REPLAY_GRID_POINTS);
    let mut defect = 0.0f64;
    for &x in &grid {
        let l1 = fam.log_unnormalized(theta1, x)?;
        let l2 = fam.log_unnormalized(&theta2, x)?;
        defect = defect.max((l2 - l1 + witness.c).abs());
    }
    let (pdf_diff, note) = match NormalizedFamily::new(fam, theta1, DEFAULT_QUAD_TOL) {
        Ok(n1) => {
            let n2 = NormalizedFamily::new(fam, &theta2, DEFAULT_QUAD_TOL)?;
            let mut worst = 0.0f64;
            for &x in &grid {
                let (p1, p2) = (n1.pdf(x)?, n2.pdf(x)?);
                worst = worst.max((p1 - p2).abs() / p1.abs().max(f64::MIN_POSITIVE));
            }
            (Some(worst), "pdfs compared at both parameters".to_string())
        }
        Err(Error::OutsideTheta(why)) => (None, format!("pdf comparison skipped: theta1 not normalizable ({why})")),
        Err(e) => return Err(e),
    };
    Ok(WitnessReplay {
        theta2,
        expected_factor: (-witness.c).exp(),
        max_log_defect: defect,
        densities_proportional: defect <= REPLAY_TOL,
        pdf_max_rel_diff: pdf_diff,
        pdfs_equal: pdf_diff.map(|d| d <= REPLAY_TOL),
        grid_points: grid.len(),
        note,
    })
}
