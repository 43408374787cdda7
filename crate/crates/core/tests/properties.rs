use proptest::prelude::*;

use repfam::diagnostics::PairSpec;
use repfam::family::{gig_family, gig_theta, FamilySpec, NormalizedFamily, ThetaParam, DEFAULT_QUAD_TOL};
use repfam::group::{dual_rep_eval, rep_eval, CharacterBasis, GroupChart, RepSpec, RepTemplate, SubgroupSpec};
use repfam::numkernel::{Matrix, Vector};

fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 1..4)
}

fn coord() -> impl Strategy<Value = f64> {
    -2.0f64..2.0
}

fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn diagonal_reps_are_homomorphisms(w in weights(), u in coord(), v in coord()) {
        let chart = GroupChart::positive_reals();
        let rep = RepSpec::new(RepTemplate::DiagonalWeights(w), chart).unwrap();
        let (g, h) = (u.exp(), v.exp());
        let prod = rep_eval(&rep, g).unwrap() * rep_eval(&rep, h).unwrap();
        let direct = rep_eval(&rep, chart.compose(g, h)).unwrap();
        prop_assert!(max_abs(&(prod - &direct)) <= 1e-12 * max_abs(&direct).max(1.0));
    }

    #[test]
    fn rotations_are_homomorphisms(f in prop::collection::vec(0u8..4, 1..3), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let chart = GroupChart::circle();
        let rep = RepSpec::new(RepTemplate::Rotation(f.into_iter().map(f64::from).collect()), chart).unwrap();
        let prod = rep_eval(&rep, a).unwrap() * rep_eval(&rep, b).unwrap();
        let direct = rep_eval(&rep, chart.compose(a, b)).unwrap();
        prop_assert!(max_abs(&(prod - direct)) <= 1e-12);
    }

    #[test]
    fn dual_pairing_is_invariant(w in weights(), u in coord(), seed in 0u64..1000) {
        let rep = RepSpec::new(RepTemplate::DirectSum(vec![RepTemplate::DiagonalWeights(w), RepTemplate::LogUnipotent]), GroupChart::positive_reals()).unwrap();
        let d = rep_eval(&rep, 1.0).unwrap().nrows();
        let xi = Vector::from_fn(d, |i, _| ((seed as f64 + 1.0) * (i as f64 + 0.3)).sin());
        let v = Vector::from_fn(d, |i, _| ((seed as f64 + 2.0) * (i as f64 + 0.7)).cos());
        let g = u.exp();
        let lhs = (dual_rep_eval(&rep, g).unwrap() * &xi).dot(&(rep_eval(&rep, g).unwrap() * &v));
        prop_assert!((lhs - xi.dot(&v)).abs() <= 1e-10 * (1.0 + xi.norm() * v.norm()));
    }

    #[test]
    fn direct_sums_are_block_diagonal(w in weights(), f in 0u8..3, t in -3.0f64..3.0) {
        let chart = GroupChart::circle();
        let zero = vec![0.0; w.len()];
        let rot = RepTemplate::Rotation(vec![f64::from(f)]);
        let sum = RepSpec::new(RepTemplate::DirectSum(vec![rot.clone(), RepTemplate::DiagonalWeights(zero.clone())]), chart).unwrap();
        let m = rep_eval(&sum, t).unwrap();
        let a = rep_eval(&RepSpec::new(rot, chart).unwrap(), t).unwrap();
        let b = rep_eval(&RepSpec::new(RepTemplate::DiagonalWeights(zero), chart).unwrap(), t).unwrap();
        prop_assert_eq!(m.view((0, 0), (2, 2)).into_owned(), a);
        prop_assert_eq!(m.view((2, 2), (w.len(), w.len())).into_owned(), b);
        prop_assert!(max_abs(&m.view((0, 2), (2, w.len())).into_owned()) == 0.0);
        prop_assert!(max_abs(&m.view((2, 0), (w.len(), 2)).into_owned()) == 0.0);
    }

    #[test]
    fn eta_is_equivariant(u in coord(), v in coord(), x1 in -1.0f64..1.0, x2 in -1.0f64..1.0) {
        let pair: PairSpec = gig_family(0.5, 0.5).unwrap().pair;
        let chart = *pair.chart();
        let (g, h) = (u.exp(), v.exp());
        let xi = Vector::from_column_slice(&[x1, x2]);
        let lhs = (dual_rep_eval(pair.rep.as_ref(), h).unwrap() * &xi).dot(&pair.orbit_point(g).unwrap());
        let rhs = xi.dot(&pair.orbit_point(chart.compose(chart.inverse(h), g)).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn log_density_is_affine_in_theta(
        a in prop::collection::vec(-2.0f64..2.0, 3),
        b in prop::collection::vec(-2.0f64..2.0, 3),
        t in -2.0f64..2.0,
        x in 0.05f64..20.0,
    ) {
        let fam: FamilySpec = gig_family(0.5, 0.5).unwrap();
        let ta = ThetaParam::new(a[..2].to_vec(), a[2..].to_vec()).unwrap();
        let tb = ThetaParam::new(b[..2].to_vec(), b[2..].to_vec()).unwrap();
        let mix = ta.shifted(&tb, t);
        let z = ThetaParam::zeros(2, 1);
        let l = |th: &ThetaParam| fam.log_unnormalized(th, x).unwrap();
        let want = l(&ta) + t * (l(&tb) - l(&z));
        prop_assert!((l(&mix) - want).abs() <= 1e-10 * (1.0 + want.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn cdf_is_monotone(a in 0.3f64..4.0, b in 0.3f64..4.0, lambda in -3.0f64..3.0) {
        let fam = gig_family(0.5, 0.5).unwrap();
        let n = NormalizedFamily::new(&fam, &gig_theta(a, b, lambda, 0.5, 0.5).unwrap(), DEFAULT_QUAD_TOL).unwrap();
        let mut prev = 0.0;
        for i in 0..40 {
            let c = n.cdf((-4.0 + 0.2 * i as f64).exp()).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&c));
            prop_assert!(c >= prev - 1e-14, "cdf fell from {} to {}", prev, c);
            prev = c;
        }
    }
}

#[test]
fn pairs_with_unfixed_v0_are_rejected() {
    let rep =
        RepSpec::new(RepTemplate::DiagonalWeights(vec![1.0, 0.0]), GroupChart::positive_reals()).unwrap().shared();
    let r = PairSpec::new(
        rep,
        Vector::from_column_slice(&[1.0, 1.0]),
        SubgroupSpec::FiniteList(vec![2.0]),
        CharacterBasis::Trivial,
    );
    assert!(r.is_err());
}
