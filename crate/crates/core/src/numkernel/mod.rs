//! Numerical kernel: SVD-backed rank and nullspace, double-exponential
//! quadrature, and a seeded uniform generator. Everything here is a pure
//! function of its arguments.

pub mod linalg;
pub mod quad;
pub mod rng;

pub use linalg::{nullspace, nullspace_with_report, rank, Matrix, RankReport, Vector, DEFAULT_RANK_REL_TOL};
pub use quad::{
    integrate_halfline, integrate_interval, integrate_real_line, probe_tail, QuadResult, TailProbe, TailVerdict,
};
pub use rng::{rng_uniform, UniformRng};
