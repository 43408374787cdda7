//! The generalized inverse Gaussian check: quadrature normalizers of the
//! constructed family against the closed forms, plus the injectivity and
//! equivalence verdicts for the same pair.

use std::fmt::Write as _;

use serde::Serialize;

use crate::diagnostics::{injectivity_check, Tolerances, DEFAULT_SAMPLES};
use crate::equivalence::find_equivalence;
use crate::family::{gig_family, gig_theta, log_normalizer, DEFAULT_QUAD_TOL};
use crate::numkernel::UniformRng;
use crate::special::{bessel_k, gig_norm_const_with, GigParams};
use crate::Result;

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const NORMALIZER_TOL: f64 = 1e-8;
pub const PSI_TOL: f64 = 1e-8;

pub const FIXED_CASES: [(f64, f64, f64); 9] = [
    (2.0, 2.0, 0.5),
    (2.0, 2.0, 1.0),
    (1.0, 3.0, -0.7),
    (0.5, 4.0, 2.0),
    (2.0, 0.0, 1.0),
    (2.0, 0.0, 3.0),
    (3.0, 0.0, 0.5),
    (0.0, 2.0, -3.0),
    (0.0, 1.0, -0.5),
];

/// One random valid triple per admissible region.
pub fn random_cases(seed: u64) -> [(f64, f64, f64); 3] {
    let mut rng = UniformRng::seeded(seed);
    let mut r = |lo, hi| rng.next_in(lo, hi);
    [(r(0.5, 4.0), r(0.5, 4.0), r(-3.0, 3.0)), (r(0.5, 4.0), 0.0, r(0.2, 4.0)), (0.0, r(0.5, 4.0), r(-4.0, -0.2))]
}

pub fn all_cases(seed: u64) -> Vec<(f64, f64, f64)> {
    FIXED_CASES.iter().copied().chain(random_cases(seed)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseRow {
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub case: &'static str,
    /// `exp(phi)` by quadrature.
    pub integral: f64,
    /// `1 / c` from the closed form.
    pub closed_form: f64,
    pub rel_err: f64,
    pub pass: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifySummary {
    pub seed: u64,
    pub tolerances: Tolerances,
    pub normalizer_tol: f64,
    pub rows: Vec<CaseRow>,
    pub injective: bool,
    /// Smallest singular value of the sampled injectivity system over the largest.
    pub injectivity_margin: f64,
    /// Largest entrywise distance of the recovered intertwiner from diag(6, -2).
    pub psi_error: f64,
    pub equivalence_pass: bool,
    pub perturbed: bool,
}

fn case_row(a: f64, b: f64, lambda: f64, perturb: Option<f64>) -> CaseRow {
    let mut row = CaseRow {
        a,
        b,
        lambda,
        case: "invalid",
        integral: f64::NAN,
        closed_form: f64::NAN,
        rel_err: f64::INFINITY,
        pass: false,
        error: None,
    };
    let res: Result<()> = (|| {
        let p = GigParams::new(a, b, lambda)?;
        row.case = p.case().label();
        let factor = perturb.unwrap_or(1.0);
        let c = gig_norm_const_with(&p, |l, x| Ok(bessel_k(l, x)? * factor))?;
        let fam = gig_family(0.5, 0.5)?;
        let phi = log_normalizer(&fam, &gig_theta(a, b, lambda, 0.5, 0.5)?, DEFAULT_QUAD_TOL)?;
        row.integral = phi.exp();
        row.closed_form = 1.0 / c;
        row.rel_err = (phi.exp() * c - 1.0).abs();
        row.pass = row.rel_err <= NORMALIZER_TOL;
        Ok(())
    })();
    if let Err(e) = res {
        row.error = Some(e.to_string());
    }
    row
}

pub fn verify_gig(seed: u64, perturb_bessel: Option<f64>) -> VerifySummary {
    let rows = all_cases(seed).into_iter().map(|(a, b, l)| case_row(a, b, l, perturb_bessel)).collect();
    let (injective, injectivity_margin) = gig_family(0.5, 0.5)
        .and_then(|f| injectivity_check(&f.pair, DEFAULT_SAMPLES, seed))
        .map(|v| {
            let sv = &v.rank_details.singular_values;
            let top = sv.iter().copied().fold(0.0f64, f64::max);
            (v.injective, sv.iter().copied().fold(f64::INFINITY, f64::min) / top)
        })
        .unwrap_or((false, f64::NAN));
    let psi_error = (|| -> Result<f64> {
        let p1 = gig_family(0.5, 0.5)?.pair;
        let p2 = gig_family(3.0, -1.0)?.pair;
        let Some(psi) = find_equivalence(&p1, &p2, DEFAULT_SAMPLES, seed)? else {
            return Ok(f64::INFINITY);
        };
        let want = [[6.0, 0.0], [0.0, -2.0]];
        let mut err = 0.0f64;
        for (i, row) in want.iter().enumerate() {
            for (j, w) in row.iter().enumerate() {
                err = err.max((psi.psi[(i, j)] - w).abs());
            }
        }
        Ok(err)
    })()
    .unwrap_or(f64::INFINITY);
    VerifySummary {
        seed,
        tolerances: Tolerances::default(),
        normalizer_tol: NORMALIZER_TOL,
        rows,
        injective,
        injectivity_margin,
        psi_error,
        equivalence_pass: psi_error <= PSI_TOL,
        perturbed: perturb_bessel.is_some(),
    }
}

impl VerifySummary {
    pub fn passed(&self) -> usize {
        self.rows.iter().filter(|r| r.pass).count()
    }

    pub fn all_pass(&self) -> bool {
        self.passed() == self.rows.len() && self.injective && self.equivalence_pass
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let t = &self.tolerances;
        let _ = writeln!(
            s,
            "{} {} verify-gig seed={} rank_rel={:e} quad_tol={:e} residual={:e} normalizer_tol={:e}",
            env!("CARGO_PKG_NAME"),
            env!("CARGO_PKG_VERSION"),
            self.seed,
            t.rank_rel,
            DEFAULT_QUAD_TOL,
            t.residual,
            self.normalizer_tol
        );
        let _ = writeln!(
            s,
            "{:>10} {:>10} {:>10}  {:<26} {:>16} {:>16} {:>10}  status",
            "a", "b", "lambda", "case", "integral", "closed_form", "rel_err"
        );
        for r in &self.rows {
            let _ = write!(
                s,
                "{:>10.6} {:>10.6} {:>10.6}  {:<26} {:>16.10e} {:>16.10e} {:>10.2e}  {}",
                r.a,
                r.b,
                r.lambda,
                r.case,
                r.integral,
                r.closed_form,
                r.rel_err,
                if r.pass { "pass" } else { "FAIL" }
            );
            if let Some(e) = &r.error {
                let _ = write!(s, " ({e})");
            }
            s.push('\n');
        }
        let _ = writeln!(s, "{}/{} cases pass", self.passed(), self.rows.len());
        let _ = writeln!(
            s,
            "injectivity: {} (relative smallest singular value {:.3e})",
            if self.injective { "pass" } else { "FAIL" },
            self.injectivity_margin
        );
        let _ = writeln!(
            s,
            "equivalence (0.5,0.5) -> (3,-1): {} (max |psi - diag(6,-2)| = {:.3e})",
            if self.equivalence_pass { "pass" } else { "FAIL" },
            self.psi_error
        );
        if !self.all_pass() {
            let failed: Vec<String> =
                self.rows.iter().filter(|r| !r.pass).map(|r| format!("({}, {}, {})", r.a, r.b, r.lambda)).collect();
            let _ = writeln!(s, "failures: {}", if failed.is_empty() { "-".to_string() } else { failed.join(" ") });
        }
        s
    }
}
