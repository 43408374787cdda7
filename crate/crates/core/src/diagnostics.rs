//! Criteria on a pair `(V, v0)`: the H-fixed subspace, cyclicity, the affine
//! span condition and its two-part split, and the injectivity test for the
//! parametrization `theta -> p_theta` with an explicit witness when it fails.
//!
//! "For all g" is replaced by a set of sampled elements. Every function of `g`
//! that enters these systems is analytic in the chart coordinate, so a linear
//! relation among finitely many of them that holds on generic samples
//! outnumbering the functions holds identically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{sample_group, validate_character_basis, CharacterBasis, GroupChart, SharedRep, SubgroupSpec};
use crate::numkernel::linalg::{self, Matrix, RankReport, Vector, DEFAULT_RANK_REL_TOL};

pub const DEFAULT_SAMPLES: usize = 64;
/// Samples must outnumber the unknowns of a sampled system by this factor.
pub const SAMPLE_FACTOR: usize = 4;
/// Nullspace vectors whose xi-block is at most this fraction of their norm
/// count as having xi = 0.
pub const XI_ZERO_TOL: f64 = 1e-7;
pub const WITNESS_TOL: f64 = 1e-8;
pub const FIXED_TOL: f64 = 1e-10;
/// Stacked difference matrices whose entries are all below this are treated
/// as exactly zero; the relative rank threshold is meaningless for them.
const ZERO_MATRIX_TOL: f64 = 1e-12;
const BASIS_SEED: u64 = 0xc4a2_0001;

/// Tolerances that reports record and spec files may override.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative singular-value threshold for rank decisions.
    pub rank_rel: f64,
    /// Relative quadrature tolerance.
    pub quad_tol: f64,
    /// Residual bound for identities checked on samples.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rank_rel: DEFAULT_RANK_REL_TOL, quad_tol: 1e-10, residual: 1e-8 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rank_rel", self.rank_rel), ("quad_tol", self.quad_tol), ("residual", self.residual)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::invalid(format!("tolerance {name} must lie in (0, 1), got {v}")));
            }
        }
        Ok(())
    }
}

fn fresh_seed(seed: u64) -> u64 {
    seed.wrapping_add(0x9e37_79b9_7f4a_7c15)
}

/// A representation with a vector `v0` fixed by `H` and a declared basis of
/// log-characters.
#[derive(Debug, Clone)]
pub struct PairSpec {
    pub rep: SharedRep,
    pub v0: Vector,
    pub h: SubgroupSpec,
    pub characters: CharacterBasis,
}

impl PairSpec {
    /// Validated construction: `v0` has the right length, is finite, nonzero
    /// and fixed by `H`; the character basis passes its sampled checks.
    pub fn new(rep: SharedRep, v0: Vector, h: SubgroupSpec, characters: CharacterBasis) -> Result<Self> {
        let pair = Self::unchecked(rep, v0, h, characters)?;
        if pair.v0.iter().all(|&x| x == 0.0) {
            return Err(Error::invalid("v0 must be nonzero"));
        }
        well_definedness_check(&pair, BASIS_SEED)?;
        validate_character_basis(pair.characters, pair.chart(), &pair.h, BASIS_SEED)?;
        Ok(pair)
    }

    /// Only shape and domain checks. Lets negative tests build pairs with
    /// `v0 = 0` or `v0` outside `V^H`.
    pub fn unchecked(rep: SharedRep, v0: Vector, h: SubgroupSpec, characters: CharacterBasis) -> Result<Self> {
        if v0.len() != rep.dim() {
            return Err(Error::invalid(format!(
                "v0 has {} entries but the representation has dimension {}",
                v0.len(),
                rep.dim()
            )));
        }
        if v0.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("v0 has non-finite entries"));
        }
        h.validate(rep.chart())?;
        Ok(Self { rep, v0, h, characters })
    }

    pub fn dim(&self) -> usize {
        self.rep.dim()
    }

    pub fn chart(&self) -> &GroupChart {
        self.rep.chart()
    }

    /// `rho(g) v0`.
    pub fn orbit_point(&self, g: f64) -> Result<Vector> {
        Ok(self.rep.eval(g)? * &self.v0)
    }
}

fn require_samples(n: usize, unknowns: usize) -> Result<()> {
    let needed = SAMPLE_FACTOR * unknowns;
    if n < needed {
        return Err(Error::InsufficientSamples { needed, got: n });
    }
    Ok(())
}

/// Rank report and kernel of a stacked matrix whose exact-zero case matters.
fn kernel(m: &Matrix, rel: f64) -> Result<(Vec<Vector>, RankReport)> {
    if m.amax() <= ZERO_MATRIX_TOL {
        let n = m.ncols();
        let basis = (0..n).map(|i| Vector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 })).collect();
        let report =
            RankReport { rank: 0, singular_values: vec![0.0; m.nrows().min(n)], tolerance_used: ZERO_MATRIX_TOL };
        return Ok((basis, report));
    }
    linalg::nullspace_with_report(m, rel)
}

fn rank_of_columns(cols: &[Vector], rel: f64) -> Result<RankReport> {
    let m = linalg::from_columns(cols);
    if m.amax() <= ZERO_MATRIX_TOL {
        return Ok(RankReport {
            rank: 0,
            singular_values: vec![0.0; m.nrows().min(m.ncols())],
            tolerance_used: ZERO_MATRIX_TOL,
        });
    }
    linalg::rank(&m, rel)
}

/// Orthonormal basis of `V^H`, the common kernel of `rho(h) - I` over `H`.
pub fn h_fixed_subspace(rep: &SharedRep, h: &SubgroupSpec) -> Result<Vec<Vector>> {
    let d = rep.dim();
    if h.is_trivial() {
        return Ok((0..d).map(|i| Vector::from_fn(d, |r, _| if r == i { 1.0 } else { 0.0 })).collect());
    }
    let blocks: Vec<Matrix> =
        h.elements().iter().map(|&el| Ok(rep.eval(el)? - Matrix::identity(d, d))).collect::<Result<_>>()?;
    Ok(kernel(&linalg::vstack(&blocks), DEFAULT_RANK_REL_TOL)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankVerdict {
    pub holds: bool,
    pub rank: RankReport,
    pub dim: usize,
    pub n_samples: usize,
    pub seed: u64,
}

/// Whether the sampled orbit `{rho(g_i) v0}` spans `V`.
pub fn cyclic_check(pair: &PairSpec, n_samples: usize, seed: u64) -> Result<RankVerdict> {
    cyclic_check_tol(pair, n_samples, seed, &Tolerances::default())
}

pub fn cyclic_check_tol(pair: &PairSpec, n_samples: usize, seed: u64, tol: &Tolerances) -> Result<RankVerdict> {
    require_samples(n_samples, pair.dim() + 1)?;
    let cols: Vec<Vector> =
        sample_group(pair.chart(), n_samples, seed).into_iter().map(|g| pair.orbit_point(g)).collect::<Result<_>>()?;
    let rank = rank_of_columns(&cols, tol.rank_rel)?;
    Ok(RankVerdict { holds: rank.rank == pair.dim(), rank, dim: pair.dim(), n_samples, seed })
}

/// Orthonormal basis of the vectors fixed by every sampled `rho_dual(g)`.
pub fn dual_fixed_vectors(rep: &SharedRep, n_samples: usize, seed: u64) -> Result<Vec<Vector>> {
    dual_fixed_with_report(rep, n_samples, seed, &Tolerances::default()).map(|(b, _)| b)
}

pub fn dual_fixed_with_report(
    rep: &SharedRep,
    n_samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<(Vec<Vector>, RankReport)> {
    let d = rep.dim();
    require_samples(n_samples, d + 1)?;
    let blocks: Vec<Matrix> = sample_group(rep.chart(), n_samples, seed)
        .into_iter()
        .map(|g| Ok(rep.dual_eval(g)? - Matrix::identity(d, d)))
        .collect::<Result<_>>()?;
    kernel(&linalg::vstack(&blocks), tol.rank_rel)
}

/// Whether the orbit is contained in no proper affine subspace: the
/// differences `rho(g_i) v0 - v0` span `V`.
pub fn condition_a(pair: &PairSpec, n_samples: usize, seed: u64) -> Result<RankVerdict> {
    condition_a_tol(pair, n_samples, seed, &Tolerances::default())
}

pub fn condition_a_tol(pair: &PairSpec, n_samples: usize, seed: u64, tol: &Tolerances) -> Result<RankVerdict> {
    require_samples(n_samples, pair.dim() + 1)?;
    let cols: Vec<Vector> = sample_group(pair.chart(), n_samples, seed)
        .into_iter()
        .map(|g| Ok(pair.orbit_point(g)? - &pair.v0))
        .collect::<Result<_>>()?;
    let rank = rank_of_columns(&cols, tol.rank_rel)?;
    Ok(RankVerdict { holds: rank.rank == pair.dim(), rank, dim: pair.dim(), n_samples, seed })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionB {
    /// `v0` is cyclic.
    pub b1: bool,
    /// The dual representation has no nonzero fixed vector.
    pub b2: bool,
    pub cyclic_rank: RankReport,
    pub dual_fixed_dim: usize,
    pub dual_fixed_rank: RankReport,
}

pub fn condition_b(pair: &PairSpec, n_samples: usize, seed: u64) -> Result<ConditionB> {
    condition_b_tol(pair, n_samples, seed, &Tolerances::default())
}

pub fn condition_b_tol(pair: &PairSpec, n_samples: usize, seed: u64, tol: &Tolerances) -> Result<ConditionB> {
    let cyc = cyclic_check_tol(pair, n_samples, seed, tol)?;
    let (fixed, report) = dual_fixed_with_report(&pair.rep, n_samples, seed, tol)?;
    Ok(ConditionB {
        b1: cyc.holds,
        b2: fixed.is_empty(),
        cyclic_rank: cyc.rank,
        dual_fixed_dim: fixed.len(),
        dual_fixed_rank: report,
    })
}

/// A triple with `<xi, rho(g) v0> = sum_j lambda_j log chi_j(g) + c` for all g.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub xi: Vec<f64>,
    pub lambda: Vec<f64>,
    pub c: f64,
}

impl Witness {
    /// Largest defect of the defining identity over `samples`.
    pub fn residual(&self, pair: &PairSpec, samples: &[f64]) -> Result<f64> {
        let xi = Vector::from_column_slice(&self.xi);
        let mut worst = 0.0f64;
        for &g in samples {
            let lhs = xi.dot(&pair.orbit_point(g)?);
            let rhs = pair.characters.log_character(&self.lambda, g) + self.c;
            worst = worst.max((lhs - rhs).abs());
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InjectivityVerdict {
    pub injective: bool,
    pub witness: Option<Witness>,
    /// Residual of the witness identity on a sample set independent of the
    /// one that produced it.
    pub witness_residual: Option<f64>,
    pub rank_details: RankReport,
    /// Largest relative xi-block norm over the nullspace basis, 0 when the
    /// nullspace is empty. Compared against `XI_ZERO_TOL`.
    pub xi_margin: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub assumption: String,
}

/// Decides injectivity of `theta -> p_theta` via the sampled linear system in
/// `(xi, lambda, c)`: one row `[ (rho(g) v0)^T, -log chi(g), -1 ]` per g.
pub fn injectivity_check(pair: &PairSpec, n_samples: usize, seed: u64) -> Result<InjectivityVerdict> {
    injectivity_check_tol(pair, n_samples, seed, &Tolerances::default())
}

pub fn injectivity_check_tol(
    pair: &PairSpec,
    n_samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<InjectivityVerdict> {
    let d = pair.dim();
    let k = pair.characters.size();
    let unknowns = d + k + 1;
    require_samples(n_samples, unknowns)?;
    let samples = sample_group(pair.chart(), n_samples, seed);
    let mut m = Matrix::zeros(n_samples, unknowns);
    for (i, &g) in samples.iter().enumerate() {
        let orbit = pair.orbit_point(g)?;
        for r in 0..d {
            m[(i, r)] = orbit[r];
        }
        for (j, v) in pair.characters.log_values(g).into_iter().enumerate() {
            m[(i, d + j)] = -v;
        }
        m[(i, d + k)] = -1.0;
    }
    let (null, report) = linalg::nullspace_with_report(&m, tol.rank_rel)?;
    let xi_margin = null.iter().map(|v| v.rows(0, d).norm() / v.norm()).fold(0.0, f64::max);
    let assumption = format!(
        "verdict is relative to the declared character basis ({:?}, {} function(s)); characters outside it are not considered",
        pair.characters, k
    );
    if xi_margin <= XI_ZERO_TOL {
        return Ok(InjectivityVerdict {
            injective: true,
            witness: None,
            witness_residual: None,
            rank_details: report,
            xi_margin,
            n_samples,
            seed,
            assumption,
        });
    }
    // Combination of nullspace vectors with the largest xi-block.
    let n = linalg::from_columns(&null);
    let xi_block = n.rows(0, d).into_owned();
    let svd = xi_block.svd(false, true);
    let top = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nonempty nullspace");
    let coeffs: Vector = svd.v_t.expect("v_t requested").row(top).transpose();
    let mut w = &n * coeffs;
    let xi_norm = w.rows(0, d).norm();
    w /= xi_norm;
    let scale = w.rows(0, d).amax();
    if let Some(first) = w.rows(0, d).iter().copied().find(|x| x.abs() > 1e-12 * scale) {
        if first < 0.0 {
            w.neg_mut();
        }
    }
    let witness = Witness {
        xi: w.rows(0, d).iter().copied().collect(),
        lambda: w.rows(d, k).iter().copied().collect(),
        c: w[d + k],
    };
    let fresh = sample_group(pair.chart(), n_samples, fresh_seed(seed));
    let residual = witness.residual(pair, &fresh)?;
    Ok(InjectivityVerdict {
        injective: false,
        witness: Some(witness),
        witness_residual: Some(residual),
        rank_details: report,
        xi_margin,
        n_samples,
        seed,
        assumption,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WellDefinedness {
    pub max_residual: f64,
    pub pairs_checked: usize,
}

/// Checks `rho(g h) v0 = rho(g) v0` for sampled g and every listed h, within
/// 1e-10 relative to `max(1, |rho(g) v0|)`. A violation means `v0` is not
/// fixed by H and is returned as `NotHFixed` with the offending pair.
pub fn well_definedness_check(pair: &PairSpec, seed: u64) -> Result<WellDefinedness> {
    if pair.h.is_trivial() {
        return Ok(WellDefinedness { max_residual: 0.0, pairs_checked: 0 });
    }
    let chart = *pair.chart();
    let samples = sample_group(&chart, DEFAULT_SAMPLES, seed);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for &g in &samples {
        let base = pair.orbit_point(g)?;
        let scale = base.amax().max(1.0);
        for &h in pair.h.elements() {
            let moved = pair.orbit_point(chart.compose(g, h))?;
            let residual = (&moved - &base).amax() / scale;
            if !(residual <= FIXED_TOL) {
                return Err(Error::NotHFixed { g, h, residual });
            }
            worst = worst.max(residual);
            checked += 1;
        }
    }
    Ok(WellDefinedness { max_residual: worst, pairs_checked: checked })
}
