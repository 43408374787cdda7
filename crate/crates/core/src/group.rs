//! One-dimensional group charts, finite subgroups, representation templates
//! and the character space.
//!
//! Every chart carries an additive coordinate `u`: `ln g` on the positive
//! reals, `g` itself on the real line and the angle on the circle. The
//! templates are written in that coordinate, so `diagonal_weights([w])` is
//! `g^w` on the positive reals and `e^{w g}` on the real line.
//!
//! Universal statements over the group are checked on finitely many sampled
//! elements. The catalog templates are analytic in `u`, so an identity that
//! is linear in finitely many of those functions and holds at more generic
//! samples than there are functions holds everywhere.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::linalg::{self, Matrix, Vector};
use crate::numkernel::UniformRng;

/// Seed for the construction-time checks of templates.
const VALIDATION_SEED: u64 = 0x005e_ed0f_7e4d;
const VALIDATION_SAMPLES: usize = 8;
const IDENTITY_TOL: f64 = 1e-12;
const HOMOMORPHISM_TOL: f64 = 1e-10;
const CHARACTER_TOL: f64 = 1e-10;
/// Pairs drawn for the character additivity check.
pub const CHARACTER_PAIRS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartKind {
    PositiveReals,
    RealLine,
    Circle,
}

impl ChartKind {
    pub fn name(self) -> &'static str {
        match self {
            ChartKind::PositiveReals => "positive_reals",
            ChartKind::RealLine => "real_line",
            ChartKind::Circle => "circle",
        }
    }
}

/// A one-dimensional group chart with its sampling window, given in the
/// additive coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupChart {
    pub kind: ChartKind,
    pub window: (f64, f64),
}

impl GroupChart {
    pub fn new(kind: ChartKind) -> Self {
        let window = match kind {
            ChartKind::PositiveReals => (-2.0, 2.0),
            ChartKind::RealLine => (-3.0, 3.0),
            ChartKind::Circle => (-PI, PI),
        };
        Self { kind, window }
    }

    pub fn positive_reals() -> Self {
        Self::new(ChartKind::PositiveReals)
    }

    pub fn real_line() -> Self {
        Self::new(ChartKind::RealLine)
    }

    pub fn circle() -> Self {
        Self::new(ChartKind::Circle)
    }

    pub fn with_window(kind: ChartKind, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!("sampling window ({lo}, {hi}) must be finite and increasing")));
        }
        if kind == ChartKind::Circle && (lo < -PI || hi > PI) {
            return Err(Error::invalid("circle window must lie within [-pi, pi]"));
        }
        Ok(Self { kind, window: (lo, hi) })
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn identity(&self) -> f64 {
        match self.kind {
            ChartKind::PositiveReals => 1.0,
            ChartKind::RealLine | ChartKind::Circle => 0.0,
        }
    }

    pub fn contains(&self, g: f64) -> bool {
        match self.kind {
            ChartKind::PositiveReals => g > 0.0 && g.is_finite(),
            ChartKind::RealLine => g.is_finite(),
            ChartKind::Circle => g > -PI && g <= PI,
        }
    }

    pub fn check(&self, g: f64) -> Result<()> {
        if self.contains(g) {
            Ok(())
        } else {
            Err(Error::Domain { chart: self.name(), value: g })
        }
    }

    /// Group law in chart parameters.
    pub fn compose(&self, g: f64, h: f64) -> f64 {
        match self.kind {
            ChartKind::PositiveReals => g * h,
            ChartKind::RealLine => g + h,
            ChartKind::Circle => wrap_angle(g + h),
        }
    }

    pub fn inverse(&self, g: f64) -> f64 {
        match self.kind {
            ChartKind::PositiveReals => 1.0 / g,
            ChartKind::RealLine => -g,
            ChartKind::Circle => wrap_angle(-g),
        }
    }

    /// Additive coordinate of `g`.
    pub fn coordinate(&self, g: f64) -> f64 {
        match self.kind {
            ChartKind::PositiveReals => g.ln(),
            ChartKind::RealLine | ChartKind::Circle => g,
        }
    }

    pub fn from_coordinate(&self, u: f64) -> f64 {
        match self.kind {
            ChartKind::PositiveReals => u.exp(),
            ChartKind::RealLine => u,
            ChartKind::Circle => wrap_angle(u),
        }
    }
}

/// Reduce an angle to `(-pi, pi]`.
pub fn wrap_angle(t: f64) -> f64 {
    let r = (t + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// `n` pairwise distinct chart parameters; element 0 is the identity, the
/// rest are uniform in the chart's window (log-uniform on the positive reals).
pub fn sample_group(chart: &GroupChart, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = UniformRng::seeded(seed);
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    out.push(chart.identity());
    while out.len() < n {
        let g = chart.from_coordinate(rng.next_in(chart.window.0, chart.window.1));
        if chart.contains(g) && !out.contains(&g) {
            out.push(g);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(tag = "kind", content = "elements", rename_all = "snake_case")]
pub enum SubgroupSpec {
    #[default]
    Trivial,
    FiniteList(Vec<f64>),
}

impl SubgroupSpec {
    /// Listed elements; the identity is implicit and not returned.
    pub fn elements(&self) -> &[f64] {
        match self {
            SubgroupSpec::Trivial => &[],
            SubgroupSpec::FiniteList(v) => v,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.elements().is_empty()
    }

    pub fn validate(&self, chart: &GroupChart) -> Result<()> {
        for &h in self.elements() {
            chart.check(h)?;
        }
        Ok(())
    }
}

/// Representation templates, written in the chart's additive coordinate `u`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RepTemplate {
    /// `diag(e^{w_1 u}, ..., e^{w_n u})`.
    DiagonalWeights(Vec<f64>),
    /// One 2x2 rotation block by `f_k u` per frequency.
    Rotation(Vec<f64>),
    /// `[[1, -u], [0, 1]]`.
    LogUnipotent,
    DirectSum(Vec<RepTemplate>),
}

impl RepTemplate {
    pub fn dim(&self) -> usize {
        match self {
            RepTemplate::DiagonalWeights(w) => w.len(),
            RepTemplate::Rotation(f) => 2 * f.len(),
            RepTemplate::LogUnipotent => 2,
            RepTemplate::DirectSum(parts) => parts.iter().map(RepTemplate::dim).sum(),
        }
    }

    fn check_params(&self) -> Result<()> {
        match self {
            RepTemplate::DiagonalWeights(w) | RepTemplate::Rotation(w) => {
                if w.is_empty() {
                    return Err(Error::InvalidRepresentation("template needs at least one parameter".into()));
                }
                if w.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidRepresentation("template parameters must be finite".into()));
                }
                Ok(())
            }
            RepTemplate::LogUnipotent => Ok(()),
            RepTemplate::DirectSum(parts) => {
                if parts.is_empty() {
                    return Err(Error::InvalidRepresentation("direct sum needs at least one summand".into()));
                }
                parts.iter().try_for_each(RepTemplate::check_params)
            }
        }
    }

    /// Matrix at additive coordinate `u`.
    pub fn eval_coordinate(&self, u: f64) -> Matrix {
        match self {
            RepTemplate::DiagonalWeights(w) => {
                Matrix::from_diagonal(&Vector::from_iterator(w.len(), w.iter().map(|wi| (wi * u).exp())))
            }
            RepTemplate::Rotation(freqs) => {
                let mut m = Matrix::zeros(2 * freqs.len(), 2 * freqs.len());
                for (k, f) in freqs.iter().enumerate() {
                    let (s, c) = (f * u).sin_cos();
                    let i = 2 * k;
                    m[(i, i)] = c;
                    m[(i, i + 1)] = -s;
                    m[(i + 1, i)] = s;
                    m[(i + 1, i + 1)] = c;
                }
                m
            }
            RepTemplate::LogUnipotent => Matrix::from_row_slice(2, 2, &[1.0, -u, 0.0, 1.0]),
            RepTemplate::DirectSum(parts) => {
                let n = self.dim();
                let mut m = Matrix::zeros(n, n);
                let mut at = 0;
                for p in parts {
                    let block = p.eval_coordinate(u);
                    let d = block.nrows();
                    m.view_mut((at, at), (d, d)).copy_from(&block);
                    at += d;
                }
                m
            }
        }
    }
}

/// A finite-dimensional real representation of a one-dimensional group.
///
/// Anything that can evaluate `rho(g)` can serve as a representation; the
/// contragredient defaults to the inverse transpose.
pub trait Representation: fmt::Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn chart(&self) -> &GroupChart;
    fn eval(&self, g: f64) -> Result<Matrix>;

    fn dual_eval(&self, g: f64) -> Result<Matrix> {
        let m = self.eval(g)?;
        let inv = linalg::checked_inverse(&m, linalg::DEFAULT_RANK_REL_TOL)?;
        Ok(inv.transpose())
    }

    /// `rho` at additive coordinate `u`. Templates evaluate this directly, so
    /// it stays defined where `g` itself over- or underflows.
    fn eval_coordinate(&self, u: f64) -> Result<Matrix> {
        self.eval(self.chart().from_coordinate(u))
    }

    /// The catalog template behind this representation, if any.
    fn template(&self) -> Option<&RepTemplate> {
        None
    }
}

pub type SharedRep = Arc<dyn Representation>;

/// A catalog template bound to a chart, validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RepSpec {
    template: RepTemplate,
    chart: GroupChart,
}

impl RepSpec {
    /// Checks that the template is a homomorphism on sampled elements:
    /// invertibility, `rho(e) = I`, and `rho(g) rho(g') = rho(g g')` on all
    /// pairs of eight sampled elements.
    pub fn new(template: RepTemplate, chart: GroupChart) -> Result<Self> {
        template.check_params()?;
        let rep = Self { template, chart };
        let dim = rep.template.dim();
        let id = rep.eval(chart.identity())?;
        let id_err = (&id - Matrix::identity(dim, dim)).amax();
        if id_err > IDENTITY_TOL {
            return Err(Error::InvalidRepresentation(format!("rho(e) differs from I by {id_err:e}")));
        }
        let samples = sample_group(&chart, VALIDATION_SAMPLES, VALIDATION_SEED);
        let mats: Vec<Matrix> = samples.iter().map(|&g| rep.eval(g)).collect::<Result<_>>()?;
        for (g, m) in samples.iter().zip(&mats) {
            let r = linalg::rank(m, linalg::DEFAULT_RANK_REL_TOL)?;
            if r.rank < dim {
                return Err(Error::InvalidRepresentation(format!("rho({g}) is singular")));
            }
        }
        for i in 0..samples.len() {
            for j in 0..samples.len() {
                let gh = chart.compose(samples[i], samples[j]);
                let direct = rep.eval(gh)?;
                let err = homomorphism_defect(&(&mats[i] * &mats[j]), &direct);
                if err > HOMOMORPHISM_TOL {
                    return Err(Error::InvalidRepresentation(format!(
                        "rho(g) rho(g') != rho(g g') at g={}, g'={} (relative defect {err:e})",
                        samples[i], samples[j]
                    )));
                }
            }
        }
        Ok(rep)
    }

    pub fn template_ref(&self) -> &RepTemplate {
        &self.template
    }

    pub fn shared(self) -> SharedRep {
        Arc::new(self)
    }
}

/// Max-entry difference scaled by `max(1, max |entry|)`.
pub fn homomorphism_defect(product: &Matrix, direct: &Matrix) -> f64 {
    (product - direct).amax() / direct.amax().max(1.0)
}

impl Representation for RepSpec {
    fn dim(&self) -> usize {
        self.template.dim()
    }

    fn chart(&self) -> &GroupChart {
        &self.chart
    }

    fn eval(&self, g: f64) -> Result<Matrix> {
        self.chart.check(g)?;
        Ok(self.template.eval_coordinate(self.chart.coordinate(g)))
    }

    /// `rho(g^{-1})^T`, exact for a homomorphism.
    fn dual_eval(&self, g: f64) -> Result<Matrix> {
        self.chart.check(g)?;
        Ok(self.template.eval_coordinate(-self.chart.coordinate(g)).transpose())
    }

    fn eval_coordinate(&self, u: f64) -> Result<Matrix> {
        if !u.is_finite() {
            return Err(Error::Domain { chart: self.chart.name(), value: u });
        }
        Ok(self.template.eval_coordinate(u))
    }

    fn template(&self) -> Option<&RepTemplate> {
        Some(&self.template)
    }
}

pub fn rep_eval(rep: &dyn Representation, g: f64) -> Result<Matrix> {
    rep.eval(g)
}

pub fn dual_rep_eval(rep: &dyn Representation, g: f64) -> Result<Matrix> {
    rep.dual_eval(g)
}

/// A declared basis of `log Omega_0(G, H)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CharacterBasis {
    /// `log chi(g) = ln g`.
    Power,
    /// `log chi(g) = g`.
    Linear,
    /// Empty basis, `Omega_0 = {1}`.
    #[default]
    Trivial,
}

impl CharacterBasis {
    pub fn size(self) -> usize {
        match self {
            CharacterBasis::Power | CharacterBasis::Linear => 1,
            CharacterBasis::Trivial => 0,
        }
    }

    /// Values of the basis log-characters at `g`.
    pub fn log_values(self, g: f64) -> Vec<f64> {
        match self {
            CharacterBasis::Power => vec![g.ln()],
            CharacterBasis::Linear => vec![g],
            CharacterBasis::Trivial => Vec::new(),
        }
    }

    /// Basis log-characters at additive coordinate `u`.
    pub fn log_values_at_coordinate(self, chart: &GroupChart, u: f64) -> Vec<f64> {
        match (self, chart.kind) {
            (CharacterBasis::Power, ChartKind::PositiveReals) => vec![u],
            _ => self.log_values(chart.from_coordinate(u)),
        }
    }

    /// `sum_j coeffs_j log chi_j(g)`.
    pub fn log_character(self, coeffs: &[f64], g: f64) -> f64 {
        self.log_values(g).iter().zip(coeffs).map(|(v, c)| v * c).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisValidation {
    pub basis: CharacterBasis,
    /// Largest `|log chi(h)|` over the listed subgroup elements.
    pub vanishing_residual: f64,
    /// Largest `|log chi(g g') - log chi(g) - log chi(g')|` over sampled pairs.
    pub additivity_residual: f64,
    pub pairs_checked: usize,
    /// Continuity is only implied by the parametric form of the basis.
    pub note: String,
}

/// Checks that each basis log-character vanishes on `h` and is additive on
/// 32 sampled pairs (both within 1e-10 relative to the values involved).
pub fn validate_character_basis(
    basis: CharacterBasis,
    chart: &GroupChart,
    h: &SubgroupSpec,
    seed: u64,
) -> Result<BasisValidation> {
    let mut vanishing = 0.0f64;
    for &el in h.elements() {
        for v in basis.log_values(el) {
            let r = v.abs();
            if !(r <= CHARACTER_TOL) {
                return Err(Error::BasisRejected(format!(
                    "{basis:?} character does not vanish on subgroup element {el} (log chi = {v})"
                )));
            }
            vanishing = vanishing.max(r);
        }
    }
    let g = sample_group(chart, 2 * CHARACTER_PAIRS + 1, seed);
    let mut additivity = 0.0f64;
    for k in 0..CHARACTER_PAIRS {
        let (a, b) = (g[2 * k + 1], g[2 * k + 2]);
        let ab = chart.compose(a, b);
        let (fa, fb, fab) = (basis.log_values(a), basis.log_values(b), basis.log_values(ab));
        for j in 0..basis.size() {
            let scale = fa[j].abs().max(fb[j].abs()).max(fab[j].abs()).max(1.0);
            let r = (fab[j] - fa[j] - fb[j]).abs() / scale;
            if !(r <= CHARACTER_TOL) {
                return Err(Error::BasisRejected(format!(
                    "{basis:?} character is not additive at g={a}, g'={b}: {} vs {} + {}",
                    fab[j], fa[j], fb[j]
                )));
            }
            additivity = additivity.max(r);
        }
    }
    Ok(BasisValidation {
        basis,
        vanishing_residual: vanishing,
        additivity_residual: additivity,
        pairs_checked: CHARACTER_PAIRS,
        note: "continuity assumed from the parametric form; not checked".into(),
    })
}
