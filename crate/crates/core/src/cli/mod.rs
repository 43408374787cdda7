//! Command-line front end: `check`, `equiv`, `family` and `verify-gig`.
//!
//! Exit codes: 0 positive verdict, 1 verification or numerical failure,
//! 2 input error, 3 negative verdict, 4 parameter outside the natural
//! parameter space.

pub mod spec;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::diagnostics::{
    condition_a_tol, condition_b_tol, cyclic_check_tol, h_fixed_subspace, injectivity_check_tol,
    well_definedness_check, ConditionB, InjectivityVerdict, RankVerdict, Tolerances, WellDefinedness,
};
use crate::equivalence::{
    default_grid, find_equivalence_tol, same_family_check_tol, Intertwiner, SameFamily, DEFAULT_GRID_POINTS,
};
use crate::error::Error;
use crate::family::{NormalizedFamily, ThetaParam};

pub use spec::SpecFile;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NEGATIVE: i32 = 3;
pub const EXIT_OUTSIDE_THETA: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "repfam", version, about = "Exponential families generated by group representations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cyclicity, affine-span and injectivity diagnostics for one pair.
    Check { spec: PathBuf },
    /// Search for an equivalence between two pairs and compare their families.
    Equiv { spec_a: PathBuf, spec_b: PathBuf },
    /// Evaluate the pdf on a grid or draw samples.
    Family {
        spec: PathBuf,
        /// Natural parameter: the xi coordinates followed by the character
        /// coefficients, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        theta: String,
        /// `lo:hi:n`, n evenly spaced points including both ends.
        #[arg(long, conflicts_with = "sample", required_unless_present = "sample")]
        grid: Option<String>,
        /// Number of draws.
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Closed-form check of the generalized inverse Gaussian construction.
    VerifyGig {
        #[arg(long, default_value_t = verify::DEFAULT_SEED)]
        seed: u64,
        /// Multiply every Bessel evaluation by this factor.
        #[arg(long, hide = true)]
        perturb_bessel: Option<f64>,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub n_samples: usize,
    pub tolerances: Tolerances,
}

impl Provenance {
    fn new(seed: u64, n_samples: usize, tolerances: Tolerances) -> Self {
        Self { tool: env!("CARGO_PKG_NAME"), version: env!("CARGO_PKG_VERSION"), seed, n_samples, tolerances }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub command: &'static str,
    pub provenance: Provenance,
    pub dim: usize,
    pub basis_size: usize,
    pub h_fixed_dim: usize,
    pub well_definedness: WellDefinedness,
    pub cyclic: RankVerdict,
    #[serde(rename = "condition_A")]
    pub condition_a: RankVerdict,
    #[serde(rename = "condition_B")]
    pub condition_b: ConditionB,
    /// `condition_A == (b1 && b2)`.
    pub prop1_consistent: bool,
    pub injective: bool,
    pub injectivity: InjectivityVerdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivReport {
    pub command: &'static str,
    pub provenance: Provenance,
    pub equivalent: bool,
    pub intertwiner: Option<Intertwiner>,
    pub same_family: SameFamily,
    pub grid_points: usize,
    pub note: String,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::OutsideTheta(_) => EXIT_OUTSIDE_THETA,
        Error::Quadrature(_) | Error::RootFinding(_) | Error::NotInvariant { .. } => EXIT_VERIFY_FAILED,
        _ => EXIT_INPUT,
    }
}

fn fail(err: &mut dyn Write, e: &Error) -> i32 {
    let _ = writeln!(err, "error: {e}");
    exit_code(e)
}

fn emit_json(out: &mut dyn Write, value: &impl Serialize) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    writeln!(out, "{text}")
}

pub fn cmd_check(spec: &SpecFile) -> crate::Result<CheckReport> {
    let pair = spec.pair()?;
    let (n, seed, tol) = (spec.samples.count, spec.samples.seed, spec.tolerances);
    let well_definedness = well_definedness_check(&pair, seed)?;
    let h_fixed_dim = h_fixed_subspace(&pair.rep, &pair.h)?.len();
    let cyclic = cyclic_check_tol(&pair, n, seed, &tol)?;
    let condition_a = condition_a_tol(&pair, n, seed, &tol)?;
    let condition_b = condition_b_tol(&pair, n, seed, &tol)?;
    let injectivity = injectivity_check_tol(&pair, n, seed, &tol)?;
    Ok(CheckReport {
        command: "check",
        provenance: Provenance::new(seed, n, tol),
        dim: pair.dim(),
        basis_size: pair.characters.size(),
        h_fixed_dim,
        well_definedness,
        prop1_consistent: condition_a.holds == (condition_b.b1 && condition_b.b2),
        cyclic,
        condition_a,
        condition_b,
        injective: injectivity.injective,
        injectivity,
    })
}

pub fn cmd_equiv(a: &SpecFile, b: &SpecFile) -> crate::Result<EquivReport> {
    let (p1, p2) = (a.pair()?, b.pair()?);
    let (n, seed, tol) = (a.samples.count, a.samples.seed, a.tolerances);
    let intertwiner = find_equivalence_tol(&p1, &p2, n, seed, &tol).map_err(|e| match e {
        Error::NotCyclic { rank, dim } => {
            Error::invalid(format!("equivalence defined on cyclic pairs (orbit rank {rank} < dim {dim})"))
        }
        other => other,
    })?;
    let grid = default_grid(p1.chart(), DEFAULT_GRID_POINTS);
    let same_family = same_family_check_tol(&p1, &p2, &grid, &tol)?;
    let note = match (&intertwiner, same_family.same) {
        (Some(_), _) => "equivalent pairs".to_string(),
        (None, true) => "same family, equivalence not found".to_string(),
        (None, false) => "no equivalence; the families differ".to_string(),
    };
    Ok(EquivReport {
        command: "equiv",
        provenance: Provenance::new(seed, n, tol),
        equivalent: intertwiner.is_some(),
        intertwiner,
        same_family,
        grid_points: grid.len(),
        note,
    })
}

fn parse_list(text: &str) -> crate::Result<Vec<f64>> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::invalid(format!("'{t}' is not a number"))))
        .collect()
}

fn parse_grid(text: &str) -> crate::Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::invalid(format!("grid '{text}' must be lo:hi:n"));
    let [lo, hi, n] = parts.as_slice() else {
        return Err(bad());
    };
    let (lo, hi): (f64, f64) = (lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?);
    let n: usize = n.parse().map_err(|_| bad())?;
    if n == 0 || !(lo.is_finite() && hi.is_finite()) || (n > 1 && !(lo < hi)) {
        return Err(bad());
    }
    Ok((0..n).map(|i| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect())
}

fn run_family(
    spec: &SpecFile,
    theta: &str,
    grid: Option<&str>,
    sample: Option<usize>,
    seed: u64,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> crate::Result<()> {
    let fam = spec.family()?;
    let values = parse_list(theta)?;
    let (d, k) = (fam.pair.dim(), fam.pair.characters.size());
    if values.len() != d + k {
        return Err(Error::invalid(format!(
            "--theta needs {} values ({d} xi, {k} character), got {}",
            d + k,
            values.len()
        )));
    }
    let theta = ThetaParam::new(values[..d].to_vec(), values[d..].to_vec())?;
    let points = grid.map(parse_grid).transpose()?;
    let norm = NormalizedFamily::new(&fam, &theta, spec.tolerances.quad_tol)?;
    let _ = writeln!(err, "phi={} membership={}", norm.phi, norm.membership.explanation);
    let io = |e: std::io::Error| Error::invalid(format!("write failed: {e}"));
    if let Some(points) = points {
        writeln!(out, "x,pdf").map_err(io)?;
        for x in points {
            writeln!(out, "{x},{}", norm.pdf(x)?).map_err(io)?;
        }
    } else if let Some(n) = sample {
        for x in norm.sample(n, seed)? {
            writeln!(out, "{x}").map_err(io)?;
        }
    }
    Ok(())
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_INPUT;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    match cli.command {
        Command::Check { spec } => {
            let report = SpecFile::load(&spec).and_then(|s| cmd_check(&s));
            match report {
                Ok(r) => {
                    let _ = emit_json(out, &r);
                    if r.injective {
                        EXIT_OK
                    } else {
                        EXIT_NEGATIVE
                    }
                }
                Err(e) => fail(err, &e),
            }
        }
        Command::Equiv { spec_a, spec_b } => {
            let report = SpecFile::load(&spec_a)
                .and_then(|a| Ok((a, SpecFile::load(&spec_b)?)))
                .and_then(|(a, b)| cmd_equiv(&a, &b));
            match report {
                Ok(r) => {
                    let _ = emit_json(out, &r);
                    if r.equivalent {
                        EXIT_OK
                    } else {
                        EXIT_NEGATIVE
                    }
                }
                Err(e) => fail(err, &e),
            }
        }
        Command::Family { spec, theta, grid, sample, seed } => {
            let res =
                SpecFile::load(&spec).and_then(|s| run_family(&s, &theta, grid.as_deref(), sample, seed, out, err));
            match res {
                Ok(()) => EXIT_OK,
                Err(e) => fail(err, &e),
            }
        }
        Command::VerifyGig { seed, perturb_bessel } => {
            let summary = verify::verify_gig(seed, perturb_bessel);
            let _ = write!(out, "{}", summary.render());
            if summary.all_pass() {
                EXIT_OK
            } else {
                EXIT_VERIFY_FAILED
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = parse_grid("0.1:5:5").unwrap();
        for (x, want) in g.iter().zip([0.1, 1.325, 2.55, 3.775, 5.0]) {
            assert!((x - want).abs() < 1e-15);
        }
        assert_eq!((g.len(), g[4]), (5, 5.0));
        assert_eq!(parse_grid("2:2:1").unwrap(), vec![2.0]);
        for bad in ["1:2", "a:2:3", "2:1:3", "1:2:0", "1:2:3:4"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn theta_parsing() {
        assert_eq!(parse_list("1,0,-1").unwrap(), vec![1.0, 0.0, -1.0]);
        assert!(parse_list("1,,2").is_err());
    }
}
