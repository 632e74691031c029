use gibbs_core::asymptotics::{
    analyticity_probe, check_closure_under_composition, diagnose_subexponential, coefficient_ratio_experiment,
};
use gibbs_core::gibbs::GibbsModel;
use gibbs_core::rational::{self, int, Rational};
use gibbs_core::species::{builtin, dsl};
use gibbs_core::{Error, TruncatedSeries};
use num_bigint::BigInt;
use num_traits::One;
use proptest::prelude::*;

/// `g_n = n^{-k}` for `1 ≤ n ≤ N`.
fn power_law(k: u32, n: usize) -> TruncatedSeries {
    let mut c = vec![Rational::from_integer(0.into())];
    c.extend((1..=n).map(|m| Rational::new(BigInt::one(), BigInt::from(m).pow(k))));
    TruncatedSeries::new(c)
}

/// `g_n = n^{-3} 2^{-n}`.
fn tilted_power_law(n: usize) -> TruncatedSeries {
    let mut c = vec![Rational::from_integer(0.into())];
    c.extend((1..=n).map(|m| Rational::new(BigInt::one(), BigInt::from(m).pow(3) * (BigInt::one() << m))));
    TruncatedSeries::new(c)
}

#[test]
fn convolution_deviation_shrinks_with_truncation() {
    let short = diagnose_subexponential(&power_law(2, 200)).unwrap();
    let long = diagnose_subexponential(&power_law(2, 800)).unwrap();
    let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
    assert!((long.g_at_rho.unwrap().value - zeta2).abs() < 1e-3);
    let dev = |r: &gibbs_core::asymptotics::SubexpReport| r.convolution.as_ref().unwrap().last.as_ref().unwrap().mean;
    assert!(dev(&long) < dev(&short), "{} vs {}", dev(&long), dev(&short));
    assert!((long.rho.rho - 1.0).abs() < 1e-3);
}

#[test]
fn geometric_series_has_no_finite_convolution_target() {
    let r = diagnose_subexponential(&TruncatedSeries::geometric(200)).unwrap();
    assert!(r.ratio_track.iter().all(|p| p.1 == 1.0));
    assert!(r.convolution.is_none());
    assert!(r.verdict_hint.contains("not finite"));
}

#[test]
fn too_few_coefficients() {
    assert!(matches!(diagnose_subexponential(&TruncatedSeries::geometric(10)), Err(Error::InsufficientData(_))));
}

#[test]
fn polya_trees_diagnostics() {
    let m = GibbsModel::new(&builtin::forests(), 800).unwrap();
    let r = diagnose_subexponential(&m.inner_series(1).unwrap()).unwrap();
    let ratio = r.ratio.last.as_ref().unwrap().mean;
    let conv = r.convolution.as_ref().unwrap().last.as_ref().unwrap().mean;
    println!("trees N=800: ratio deviation {ratio:.3e}, convolution deviation {conv:.3e}");
    assert!(ratio < 0.05 && conv < 0.05);
    // T(ρ) = 1.
    assert!((r.g_at_rho.unwrap().value - 1.0).abs() < 1e-6);
}

#[test]
fn tilted_power_law_radius_and_trends() {
    let r = diagnose_subexponential(&tilted_power_law(800)).unwrap();
    assert!((r.rho.rho - 2.0).abs() < 1e-3, "{}", r.rho.rho);
    assert!(r.ratio.shrinks(), "{:?}", r.ratio);
    assert!(r.convolution.as_ref().unwrap().shrinks());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]
    #[test]
    fn radius_recovered_for_exact_power_laws(p in 1i64..5, q in 1i64..5, beta in 2u32..5) {
        prop_assume!(p != q);
        let rho0 = rational::ratio(p, q);
        // g_n = ρ0^{-n} n^{-β}
        let mut c = vec![int(0)];
        for m in 1..=800usize {
            let mut x = rational::pow(&(Rational::one() / &rho0), m as u32);
            x /= Rational::from_integer(BigInt::from(m).pow(beta));
            c.push(x);
        }
        let g = TruncatedSeries::new(c);
        let est = g.radius_estimate().unwrap();
        prop_assert!((est.rho - rational::to_f64(&rho0)).abs() < 1e-3);
    }
}

#[test]
fn closure_examples() {
    let m = GibbsModel::new(&builtin::forests(), 300).unwrap();
    let trees = m.inner_series(1).unwrap();
    let id = TruncatedSeries::monomial(int(1), 1, 300);
    let r = check_closure_under_composition(&id, &trees).unwrap();
    assert!(r.ratio_track.iter().all(|p| (p.1 - 1.0).abs() < 1e-12));
    assert_eq!(r.target, 1.0);

    let square = TruncatedSeries::monomial(int(1), 2, 300);
    let r = check_closure_under_composition(&square, &trees).unwrap();
    assert!((r.target - 2.0 * r.g_at_rho).abs() < 1e-12);
    assert!(r.trend.shrinks());
    // Oracle: the exact square of the tree series.
    let exact = trees.mul(&trees);
    for (n, x) in r.ratio_track.iter().filter(|p| p.0 % 50 == 0) {
        let want = rational::to_f64(&(exact.coeff(*n) / trees.coeff(*n)));
        assert!((x - want).abs() < 1e-9 * want);
    }

    let g = power_law(3, 800);
    let exp = TruncatedSeries::new(
        (0..=800u32).map(|k| Rational::new(BigInt::one(), rational::factorial(k))).collect(),
    );
    let r = check_closure_under_composition(&exp, &g).unwrap();
    let zeta3: f64 = 1.2020569031595942;
    assert!((r.target - zeta3.exp()).abs() < 1e-3 * r.target);
    let dev = r.trend.last.unwrap().mean;
    println!("exp(n^-3) N=800: deviation {dev:.3e}");
    assert!(dev < 0.05);
}

#[test]
fn ratio_experiment_guards_polynomial_inner() {
    let m = GibbsModel::new(&dsl::parse("MODEL := COMPOSE(SET, ATOM)").unwrap(), 50).unwrap();
    assert!(matches!(coefficient_ratio_experiment(&m), Err(Error::InnerNotSubexponential)));
}

#[test]
fn ratio_experiment_for_weighted_sequences() {
    // SEQ with outer weight 1/2: C = c / (1 − c T(ρ))² = 2 since T(ρ) = 1.
    let src = "T := ATOM * SET(T)\nMODEL := COMPOSE(WEIGHTED(SEQ, ATOM_MULT(1/2)), T)";
    let m = GibbsModel::new(&dsl::parse(src).unwrap(), 400).unwrap();
    let r = coefficient_ratio_experiment(&m).unwrap();
    assert!((r.constant - 2.0).abs() < 1e-6, "{}", r.constant);
    assert!((r.constant_from_derived_series - r.constant).abs() < 1e-4 * r.constant);
    assert!(r.trend.shrinks());
    assert_eq!(r.constant_from_composite, None);
}

#[test]
fn probe_examples() {
    let m = GibbsModel::new(&builtin::forests(), 200).unwrap();
    for row in analyticity_probe(&m, &[1e-3, 1e-2]).unwrap() {
        assert!(row.value.is_finite() && row.residual < 1e-6 && !row.divergence_flag, "{row:?}");
    }
    let seq = "T := ATOM * SET(T)\nMODEL := COMPOSE(SEQ, T)";
    let m = GibbsModel::new(&dsl::parse(seq).unwrap(), 200).unwrap();
    for row in analyticity_probe(&m, &[1e-3, 1e-2]).unwrap() {
        assert!(row.divergence_flag, "{row:?}");
    }
    let weighted = "T := ATOM * SET(T)\nMODEL := COMPOSE(WEIGHTED(SEQ, ATOM_MULT(1/2)), T)";
    let m = GibbsModel::new(&dsl::parse(weighted).unwrap(), 200).unwrap();
    assert!(!analyticity_probe(&m, &[1e-2]).unwrap()[0].divergence_flag);
}

#[test]
fn reports_are_deterministic() {
    let m = GibbsModel::new(&builtin::forests(), 200).unwrap();
    assert_eq!(coefficient_ratio_experiment(&m).unwrap(), coefficient_ratio_experiment(&m).unwrap());
}
