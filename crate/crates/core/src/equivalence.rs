//! The map `eta: V_dual -> C(G)`, the correspondence between cyclic pairs and
//! finite-dimensional left-invariant function spaces, intertwiner search and
//! the same-family test.
//!
//! Function spaces are held as evaluation matrices on a finite grid, together
//! with the functions themselves so that translates can be evaluated.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::diagnostics::{cyclic_check, cyclic_check_tol, PairSpec, Tolerances, DEFAULT_SAMPLES};
use crate::error::{Error, Result};
use crate::group::{sample_group, CharacterBasis, ChartKind, GroupChart, Representation, SubgroupSpec};
use crate::numkernel::linalg::{self, Matrix, Vector, DEFAULT_RANK_REL_TOL};

pub const INVARIANCE_TOL: f64 = 1e-8;
pub const RIGHT_FIXED_TOL: f64 = 1e-10;
pub const DEFAULT_GRID_POINTS: usize = 16;
const CYCLIC_SEED: u64 = 0x0e7a_c1c1;

pub type BasisFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// Evenly spaced points in the chart coordinate over the sampling window:
/// log-spaced on the positive reals. On the circle the points are cell
/// midpoints so that `-pi` and `pi` are not both used.
pub fn default_grid(chart: &GroupChart, n: usize) -> Vec<f64> {
    let (lo, hi) = chart.window;
    match chart.kind {
        ChartKind::Circle => {
            (0..n).map(|i| chart.from_coordinate(lo + (i as f64 + 0.5) * (hi - lo) / n as f64)).collect()
        }
        _ => (0..n).map(|i| chart.from_coordinate(lo + i as f64 * (hi - lo) / (n.max(2) - 1) as f64)).collect(),
    }
}

/// `k` functions on the group sampled on an `m`-point grid.
#[derive(Clone)]
pub struct FunctionSpaceSample {
    pub chart: GroupChart,
    pub grid: Vec<f64>,
    /// `m x k`, column j holds basis function j on the grid.
    pub basis_matrix: Matrix,
    functions: Vec<BasisFn>,
}

impl fmt::Debug for FunctionSpaceSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionSpaceSample")
            .field("chart", &self.chart)
            .field("grid", &self.grid)
            .field("basis_matrix", &self.basis_matrix)
            .finish_non_exhaustive()
    }
}

impl FunctionSpaceSample {
    /// Requires `m >= 2k` grid points and a rank-`k` evaluation matrix.
    pub fn new(chart: GroupChart, grid: Vec<f64>, functions: Vec<BasisFn>) -> Result<Self> {
        let k = functions.len();
        if k == 0 {
            return Err(Error::invalid("function space needs at least one basis function"));
        }
        if grid.len() < 2 * k {
            return Err(Error::GridTooSmall { rank: 0, needed: 2 * k });
        }
        for &g in &grid {
            chart.check(g)?;
        }
        let mut m = Matrix::zeros(grid.len(), k);
        for (i, &g) in grid.iter().enumerate() {
            for (j, f) in functions.iter().enumerate() {
                m[(i, j)] = f(g)?;
            }
        }
        let r = linalg::rank(&m, DEFAULT_RANK_REL_TOL)?;
        if r.rank < k {
            return Err(Error::GridTooSmall { rank: r.rank, needed: k });
        }
        Ok(Self { chart, grid, basis_matrix: m, functions })
    }

    pub fn dim(&self) -> usize {
        self.functions.len()
    }

    /// Basis functions evaluated at `g`.
    pub fn values(&self, g: f64) -> Result<Vector> {
        self.chart.check(g)?;
        let vals: Vec<f64> = self.functions.iter().map(|f| f(g)).collect::<Result<_>>()?;
        Ok(Vector::from_vec(vals))
    }

    /// Matrix of the left translate `(L_a f)(x) = f(a^{-1} x)` in this basis,
    /// recovered by least squares on the grid, with its worst residual.
    pub fn left_translate(&self, a: f64) -> Result<(Matrix, f64)> {
        self.chart.check(a)?;
        let a_inv = self.chart.inverse(a);
        let k = self.dim();
        let mut t = Matrix::zeros(k, k);
        let mut worst = 0.0f64;
        for (j, f) in self.functions.iter().enumerate() {
            let shifted: Vec<f64> =
                self.grid.iter().map(|&x| f(self.chart.compose(a_inv, x))).collect::<Result<_>>()?;
            let rhs = Vector::from_vec(shifted);
            let (coef, res) = linalg::lstsq(&self.basis_matrix, &rhs, DEFAULT_RANK_REL_TOL)?;
            worst = worst.max(res / rhs.norm().max(1.0));
            t.set_column(j, &coef);
        }
        Ok((t, worst))
    }
}

/// `<xi, rho(g) v0>`.
pub fn eta_eval(pair: &PairSpec, xi: &Vector, g: f64) -> Result<f64> {
    if xi.len() != pair.dim() {
        return Err(Error::invalid(format!("xi has {} entries, expected {}", xi.len(), pair.dim())));
    }
    Ok(xi.dot(&pair.orbit_point(g)?))
}

/// `eta(V_dual)` sampled on `grid`, one column per standard dual basis vector.
/// The pair must be cyclic, otherwise `eta` is not injective.
pub fn phi_map(pair: &PairSpec, grid: &[f64]) -> Result<FunctionSpaceSample> {
    let cyc = cyclic_check(pair, DEFAULT_SAMPLES.max(4 * (pair.dim() + 1)), CYCLIC_SEED)?;
    if !cyc.holds {
        return Err(Error::NotCyclic { rank: cyc.rank.rank, dim: pair.dim() });
    }
    let functions: Vec<BasisFn> = (0..pair.dim())
        .map(|j| {
            let p = pair.clone();
            Arc::new(move |g: f64| Ok(p.orbit_point(g)?[j])) as BasisFn
        })
        .collect();
    FunctionSpaceSample::new(*pair.chart(), grid.to_vec(), functions)
}

/// The contragredient of left translation on a sampled function space.
///
/// `eval(g)` is the action on `W_dual`, `T_g^{-T}`; `dual_eval(g)` is `T_g`
/// itself. Both fail with `NotInvariant` when a translate leaves the span.
#[derive(Debug, Clone)]
pub struct TranslationDual {
    space: FunctionSpaceSample,
}

impl TranslationDual {
    fn translate_checked(&self, g: f64) -> Result<Matrix> {
        let (t, residual) = self.space.left_translate(g)?;
        if !(residual <= INVARIANCE_TOL) {
            return Err(Error::NotInvariant { g, residual });
        }
        Ok(t)
    }
}

impl Representation for TranslationDual {
    fn dim(&self) -> usize {
        self.space.dim()
    }

    fn chart(&self) -> &GroupChart {
        &self.space.chart
    }

    fn eval(&self, g: f64) -> Result<Matrix> {
        let t = self.translate_checked(g)?;
        Ok(linalg::checked_inverse(&t, DEFAULT_RANK_REL_TOL)?.transpose())
    }

    fn dual_eval(&self, g: f64) -> Result<Matrix> {
        self.translate_checked(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionSample {
    pub g: f64,
    /// `L_g` on `W`.
    #[serde(serialize_with = "linalg::serialize_rows")]
    pub translate: Matrix,
    /// `L_g` on `W_dual`.
    #[serde(serialize_with = "linalg::serialize_rows")]
    pub dual_action: Matrix,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct PsiPair {
    /// `(W_dual, ev_e)`; H trivial and no characters.
    pub pair: PairSpec,
    pub actions: Vec<ActionSample>,
    pub max_residual: f64,
}

/// `W -> (W_dual, ev_e)`. The action on `W_dual` is recovered at each of
/// `action_samples`; a translate leaving the span is reported as
/// `NotInvariant`.
pub fn psi_map(w: &FunctionSpaceSample, action_samples: &[f64]) -> Result<PsiPair> {
    let rep = TranslationDual { space: w.clone() };
    let mut actions = Vec::with_capacity(action_samples.len());
    let mut worst = 0.0f64;
    for &g in action_samples {
        let (t, residual) = w.left_translate(g)?;
        if !(residual <= INVARIANCE_TOL) {
            return Err(Error::NotInvariant { g, residual });
        }
        let dual = linalg::checked_inverse(&t, DEFAULT_RANK_REL_TOL)?.transpose();
        worst = worst.max(residual);
        actions.push(ActionSample { g, translate: t, dual_action: dual, residual });
    }
    let ev_e = w.values(w.chart.identity())?;
    let pair = PairSpec::unchecked(Arc::new(rep), ev_e, SubgroupSpec::Trivial, CharacterBasis::Trivial)?;
    Ok(PsiPair { pair, actions, max_residual: worst })
}

/// `psi: V -> V'` with `psi rho(g) = rho'(g) psi` and `psi v0 = v0'`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Intertwiner {
    #[serde(serialize_with = "linalg::serialize_rows")]
    pub psi: Matrix,
    /// Worst `|psi rho(g) - rho'(g) psi|` on the validation samples, relative
    /// to `max(1, |rho'(g)|)`.
    pub residual: f64,
    pub constraint_residual: f64,
    /// Dimension of the space of intertwiners found on the samples.
    pub intertwiner_space_dim: usize,
}

impl Intertwiner {
    pub fn inverse(&self) -> Result<Self> {
        Ok(Self { psi: linalg::checked_inverse(&self.psi, DEFAULT_RANK_REL_TOL)?, ..self.clone() })
    }

    /// `other . self`.
    pub fn then(&self, other: &Self) -> Self {
        Self {
            psi: &other.psi * &self.psi,
            residual: self.residual.max(other.residual),
            constraint_residual: self.constraint_residual.max(other.constraint_residual),
            intertwiner_space_dim: self.intertwiner_space_dim.max(other.intertwiner_space_dim),
        }
    }

    /// `psi^{-T} xi`, so that `<xi', rho'(g) v0'> = <xi, rho(g) v0>`.
    pub fn transport_xi(&self, xi: &Vector) -> Result<Vector> {
        Ok(linalg::checked_inverse(&self.psi, DEFAULT_RANK_REL_TOL)?.transpose() * xi)
    }
}

fn intertwining_residual(psi: &Matrix, p1: &PairSpec, p2: &PairSpec, samples: &[f64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &g in samples {
        let a = p1.rep.eval(g)?;
        let b = p2.rep.eval(g)?;
        let d = psi * &a - &b * psi;
        worst = worst.max(d.amax() / b.amax().max(a.amax()).max(1.0));
    }
    Ok(worst)
}

/// Searches for an invertible intertwiner sending `v0` to `v0'`.
///
/// Solves `psi rho(g_i) = rho'(g_i) psi` on the samples for the space of
/// intertwiners, then picks the minimum Frobenius norm element satisfying
/// `psi v0 = v0'`. The candidate is checked on a fresh sample set. `None`
/// when dimensions differ, no candidate satisfies the constraint, or the
/// candidate is singular.
pub fn find_equivalence(p1: &PairSpec, p2: &PairSpec, n_samples: usize, seed: u64) -> Result<Option<Intertwiner>> {
    find_equivalence_tol(p1, p2, n_samples, seed, &Tolerances::default())
}

pub fn find_equivalence_tol(
    p1: &PairSpec,
    p2: &PairSpec,
    n_samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<Option<Intertwiner>> {
    if p1.chart() != p2.chart() {
        return Err(Error::invalid("pairs live on different group charts"));
    }
    for p in [p1, p2] {
        let c = cyclic_check_tol(p, n_samples, seed, tol)?;
        if !c.holds {
            return Err(Error::NotCyclic { rank: c.rank.rank, dim: p.dim() });
        }
    }
    let (d1, d2) = (p1.dim(), p2.dim());
    if d1 != d2 {
        return Ok(None);
    }
    let unknowns = d2 * d1;
    let samples = sample_group(p1.chart(), n_samples, seed);
    let mut rows = Matrix::zeros(samples.len() * unknowns, unknowns);
    for (s, &g) in samples.iter().enumerate() {
        let a = p1.rep.eval(g)?;
        let b = p2.rep.eval(g)?;
        // row (i, j) of psi a - b psi, psi stored row-major
        for i in 0..d2 {
            for j in 0..d1 {
                let r = s * unknowns + i * d1 + j;
                for k in 0..d1 {
                    rows[(r, i * d1 + k)] += a[(k, j)];
                }
                for k in 0..d2 {
                    rows[(r, k * d1 + j)] -= b[(i, k)];
                }
            }
        }
    }
    let null = linalg::nullspace(&rows, tol.rank_rel)?;
    if null.is_empty() {
        return Ok(None);
    }
    let as_matrix = |v: &Vector| Matrix::from_row_slice(d2, d1, v.as_slice());
    let constraint = Matrix::from_columns(&null.iter().map(|v| as_matrix(v) * &p1.v0).collect::<Vec<_>>());
    let (coef, _) = linalg::lstsq(&constraint, &p2.v0, tol.rank_rel)?;
    let mut psi = Matrix::zeros(d2, d1);
    for (c, v) in coef.iter().zip(&null) {
        psi += as_matrix(v) * *c;
    }
    let constraint_residual = (&psi * &p1.v0 - &p2.v0).amax();
    if !(constraint_residual <= tol.residual) {
        return Ok(None);
    }
    if linalg::rank(&psi, tol.rank_rel)?.rank < d1 {
        return Ok(None);
    }
    let fresh = sample_group(p1.chart(), n_samples, seed.wrapping_add(0x0051_a5e0));
    let residual = intertwining_residual(&psi, p1, p2, &fresh)?;
    if !(residual <= tol.residual) {
        return Ok(None);
    }
    Ok(Some(Intertwiner { psi, residual, constraint_residual, intertwiner_space_dim: null.len() }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SameFamily {
    pub same: bool,
    /// Residual of projecting the first span onto the second.
    pub residual_forward: f64,
    pub residual_backward: f64,
}

/// Whether `eta(V_dual)` and `eta'(V'_dual)` coincide on `grid`.
pub fn same_family_check(p1: &PairSpec, p2: &PairSpec, grid: &[f64]) -> Result<SameFamily> {
    same_family_check_tol(p1, p2, grid, &Tolerances::default())
}

pub fn same_family_check_tol(p1: &PairSpec, p2: &PairSpec, grid: &[f64], tol: &Tolerances) -> Result<SameFamily> {
    if p1.chart() != p2.chart() || p1.h != p2.h {
        return Err(Error::invalid("same-family test needs pairs over the same chart and subgroup"));
    }
    let w1 = phi_map(p1, grid)?;
    let w2 = phi_map(p2, grid)?;
    let forward = linalg::column_space_residual(&w2.basis_matrix, &w1.basis_matrix, tol.rank_rel)?;
    let backward = linalg::column_space_residual(&w1.basis_matrix, &w2.basis_matrix, tol.rank_rel)?;
    Ok(SameFamily {
        same: forward <= tol.residual && backward <= tol.residual,
        residual_forward: forward,
        residual_backward: backward,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RightFixed {
    pub fixed: bool,
    pub max_residual: f64,
}

/// Whether every basis function satisfies `f(g h) = f(g)` on the grid for
/// each listed `h`.
pub fn rh_fixed_check(w: &FunctionSpaceSample, h: &SubgroupSpec) -> Result<RightFixed> {
    h.validate(&w.chart)?;
    let mut worst = 0.0f64;
    for &g in &w.grid {
        let base = w.values(g)?;
        for &el in h.elements() {
            let moved = w.values(w.chart.compose(g, el))?;
            worst = worst.max((&moved - &base).amax() / base.amax().max(1.0));
        }
    }
    Ok(RightFixed { fixed: worst <= RIGHT_FIXED_TOL, max_residual: worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{RepSpec, RepTemplate};

    fn pr() -> GroupChart {
        GroupChart::positive_reals()
    }

    fn diag_pair(weights: &[f64], v0: &[f64]) -> PairSpec {
        let rep = RepSpec::new(RepTemplate::DiagonalWeights(weights.to_vec()), pr()).unwrap().shared();
        PairSpec::new(rep, Vector::from_column_slice(v0), SubgroupSpec::Trivial, CharacterBasis::Power).unwrap()
    }

    fn space(chart: GroupChart, fs: Vec<fn(f64) -> f64>) -> FunctionSpaceSample {
        let functions = fs.into_iter().map(|f| Arc::new(move |g: f64| Ok(f(g))) as BasisFn).collect();
        FunctionSpaceSample::new(chart, default_grid(&chart, DEFAULT_GRID_POINTS), functions).unwrap()
    }

    #[test]
    fn eta_examples() {
        let p = diag_pair(&[1.0, -1.0], &[0.5, 0.5]);
        let e1 = Vector::from_column_slice(&[1.0, 0.0]);
        assert_eq!(eta_eval(&p, &e1, 2.0).unwrap(), 1.0);
        assert_eq!(eta_eval(&p, &Vector::zeros(2), 3.7).unwrap(), 0.0);
        let xi = Vector::from_column_slice(&[0.3, -2.0]);
        assert_eq!(eta_eval(&p, &xi, 1.0).unwrap(), xi.dot(&p.v0));
    }

    #[test]
    fn phi_examples() {
        let p = diag_pair(&[1.0, -1.0], &[0.5, 0.5]);
        let w = phi_map(&p, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        for (i, g) in [1.0, 2.0, 3.0, 4.0].iter().enumerate() {
            assert!((w.basis_matrix[(i, 0)] - g / 2.0).abs() < 1e-15);
            assert!((w.basis_matrix[(i, 1)] - 1.0 / (2.0 * g)).abs() < 1e-15);
        }
        let case1 = diag_pair(&[1.0, -1.0], &[1.0, 0.0]);
        assert!(matches!(phi_map(&case1, &[1.0, 2.0, 3.0, 4.0]), Err(Error::NotCyclic { rank: 1, dim: 2 })));
        let triv = diag_pair(&[0.0], &[1.0]);
        let w = phi_map(&triv, &[1.0, 2.0]).unwrap();
        assert_eq!(w.basis_matrix, Matrix::from_element(2, 1, 1.0));
        assert!(matches!(phi_map(&p, &[1.0, 2.0, 3.0]), Err(Error::GridTooSmall { .. })));
    }

    #[test]
    fn psi_examples() {
        let a = 1.9;
        let w = space(pr(), vec![|g| g, |g| 1.0 / g]);
        let out = psi_map(&w, &[a]).unwrap();
        let t = &out.actions[0].translate;
        assert!((t - Matrix::from_diagonal(&Vector::from_column_slice(&[1.0 / a, a]))).amax() < 1e-12);
        assert_eq!(out.pair.v0, Vector::from_column_slice(&[1.0, 1.0]));

        let w = space(pr(), vec![|_| 1.0]);
        let out = psi_map(&w, &[a]).unwrap();
        assert!((out.actions[0].translate[(0, 0)] - 1.0).abs() < 1e-14);
        assert_eq!(out.pair.v0[0], 1.0);

        let w = space(pr(), vec![|_| 1.0, f64::ln]);
        let out = psi_map(&w, &[a]).unwrap();
        let want = Matrix::from_row_slice(2, 2, &[1.0, -a.ln(), 0.0, 1.0]);
        assert!((&out.actions[0].translate - want).amax() < 1e-12);
    }

    #[test]
    fn psi_rejects_non_invariant_space() {
        let w = space(pr(), vec![|g| g + 1.0]);
        assert!(matches!(psi_map(&w, &[2.0]), Err(Error::NotInvariant { .. })));
    }

    #[test]
    fn equivalence_examples() {
        let gig = diag_pair(&[1.0, -1.0], &[0.5, 0.5]);
        let other = diag_pair(&[1.0, -1.0], &[3.0, -1.0]);
        let psi = find_equivalence(&gig, &other, 64, 9).unwrap().unwrap();
        let want = Matrix::from_diagonal(&Vector::from_column_slice(&[6.0, -2.0]));
        assert!((&psi.psi - want).amax() < 1e-10);
        assert!(find_equivalence(&gig, &diag_pair(&[1.0, 2.0], &[1.0, 1.0]), 64, 9).unwrap().is_none());
        let id = find_equivalence(&gig, &gig, 64, 9).unwrap().unwrap();
        assert!((&id.psi - Matrix::identity(2, 2)).amax() < 1e-10);
        let case1 = diag_pair(&[1.0, -1.0], &[1.0, 0.0]);
        assert!(matches!(find_equivalence(&gig, &case1, 64, 9), Err(Error::NotCyclic { .. })));
    }

    #[test]
    fn transported_parameters_give_the_same_statistic() {
        let gig = diag_pair(&[1.0, -1.0], &[0.5, 0.5]);
        let other = diag_pair(&[1.0, -1.0], &[3.0, -1.0]);
        let psi = find_equivalence(&gig, &other, 64, 9).unwrap().unwrap();
        let xi = Vector::from_column_slice(&[2.0, 0.7]);
        let xi2 = psi.transport_xi(&xi).unwrap();
        for g in [0.2, 1.0, 5.0] {
            let a = eta_eval(&gig, &xi, g).unwrap();
            let b = eta_eval(&other, &xi2, g).unwrap();
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn same_family_examples() {
        let grid = default_grid(&pr(), DEFAULT_GRID_POINTS);
        let gig = diag_pair(&[1.0, -1.0], &[0.5, 0.5]);
        assert!(same_family_check(&gig, &diag_pair(&[-1.0, 1.0], &[0.5, 0.5]), &grid).unwrap().same);
        assert!(!same_family_check(&gig, &diag_pair(&[1.0, 2.0], &[1.0, 1.0]), &grid).unwrap().same);
        assert!(same_family_check(&gig, &gig, &grid).unwrap().same);
    }

    #[test]
    fn right_fixed_examples() {
        let w = space(pr(), vec![|g| g, |g| 1.0 / g]);
        assert!(rh_fixed_check(&w, &SubgroupSpec::Trivial).unwrap().fixed);
        assert!(!rh_fixed_check(&w, &SubgroupSpec::FiniteList(vec![2.0])).unwrap().fixed);
        let c = space(pr(), vec![|_| 1.0]);
        assert!(rh_fixed_check(&c, &SubgroupSpec::FiniteList(vec![2.0, 0.3])).unwrap().fixed);
    }

    #[test]
    fn grids() {
        let g = default_grid(&pr(), 16);
        assert_eq!(g.len(), 16);
        assert!((g[0] - (-2f64).exp()).abs() < 1e-15 && (g[15] - 2f64.exp()).abs() < 1e-13);
        let c = default_grid(&GroupChart::circle(), 16);
        assert!(c.iter().all(|&t| t > -std::f64::consts::PI && t <= std::f64::consts::PI));
    }
}
