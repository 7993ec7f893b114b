use num_complex::Complex64;
use proptest::prelude::*;

use pellclass::arith::{divisor_dz, factorize, gcd, is_discriminant, kronecker, sieve};
use pellclass::asymptotics::i_integrals;
use pellclass::charsum::{b_m, b_m_direct, c_mau, d_au, BConvention, CMode};
use pellclass::classno::{class_number_analytic, class_number_cycles, DEFAULT_L_TOL};
use pellclass::model::{euler_expectation, h_m, site_probabilities, EulerProductConfig, ModelVariant};
use pellclass::pell::{enumerate_family, family_bounds, fundamental_unit_bounded, fundamental_unit_cf, unit_within_bound, PellPoint};

fn discriminant() -> impl Strategy<Value = u64> {
    (5u64..200_000).prop_filter("discriminant", |&d| is_discriminant(d))
}

fn prime_below(limit: u32) -> impl Strategy<Value = u64> {
    let primes: Vec<u64> = sieve().primes_up_to(limit as u64).iter().map(|&p| p as u64).collect();
    proptest::sample::select(primes)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kronecker_multiplicative_in_m(d in discriminant(), m in 1u64..5000, n in 1u64..5000) {
        prop_assert_eq!(kronecker(d as i64, m * n), kronecker(d as i64, m) * kronecker(d as i64, n));
    }

    #[test]
    fn kronecker_periodic_mod_d(d in discriminant(), m in 1u64..100_000) {
        prop_assert_eq!(kronecker(d as i64, m), kronecker(d as i64, m + d));
    }

    #[test]
    fn kronecker_vanishes_exactly_on_common_factors(d in discriminant(), m in 1u64..100_000) {
        prop_assert_eq!(kronecker(d as i64, m) == 0, gcd(d, m) > 1);
    }

    #[test]
    fn divisor_function_multiplicative(a in 1u64..3000, b in 1u64..3000, re in -3.0f64..3.0, im in -2.0f64..2.0) {
        prop_assume!(gcd(a, b) == 1);
        let z = Complex64::new(re, im);
        let lhs = divisor_dz(z, a * b);
        let rhs = divisor_dz(z, a) * divisor_dz(z, b);
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
    }

    #[test]
    fn unit_solves_norm_equation(d in discriminant()) {
        let (t, u) = fundamental_unit_cf(d).unwrap();
        let lhs = &t * &t;
        let rhs = num_bigint::BigUint::from(d) * &u * &u + 4u32;
        prop_assert_eq!(lhs, rhs);
        if let Some((tb, ub)) = fundamental_unit_bounded(d, u64::MAX as u128).unwrap() {
            prop_assert_eq!(num_bigint::BigUint::from(tb), t);
            prop_assert_eq!(num_bigint::BigUint::from(ub), u);
        }
    }

    #[test]
    fn dual_class_numbers(d in 5u64..20_000) {
        prop_assume!(is_discriminant(d));
        if let Some((t, u)) = fundamental_unit_bounded(d, 1u128 << 60).unwrap() {
            let p = PellPoint::new(t as u64, u as u64, d);
            prop_assert_eq!(class_number_cycles(d).unwrap(), class_number_analytic(&p, DEFAULT_L_TOL).unwrap());
        }
    }

    #[test]
    fn site_probabilities_normalized(p in prime_below(100_000), s in 0.5001f64..40.0) {
        for v in [ModelVariant::Standard, ModelVariant::Generalized(s), ModelVariant::Infinity, ModelVariant::Hooley] {
            let sp = site_probabilities(p, v).unwrap();
            prop_assert!((sp.a + sp.b + sp.c - 1.0).abs() <= 1e-15);
            prop_assert!(sp.a >= 0.0 && sp.b >= 0.0 && sp.c >= 0.0);
        }
    }

    #[test]
    fn generalized_exponent_above_half(s in -5.0f64..0.5) {
        prop_assert!(site_probabilities(3, ModelVariant::Generalized(s)).is_err());
    }

    #[test]
    fn expectation_conjugate_symmetric(re in -1.0f64..3.0, im in -3.0f64..3.0) {
        let cfg = EulerProductConfig::new(2000);
        let z = Complex64::new(re, im);
        let a = euler_expectation(z, ModelVariant::Standard, &cfg).unwrap().value;
        let b = euler_expectation(z.conj(), ModelVariant::Standard, &cfg).unwrap().value;
        prop_assert!((a - b.conj()).norm() <= 1e-13 * a.norm().max(1.0));
    }

    #[test]
    fn h_bounded_by_reciprocal_m0(m in 1u64..100_000, s in 0.6f64..4.0) {
        let f = factorize(m);
        prop_assert!(h_m(m, s).abs() <= 1.0 / f.m0 as f64 + 1e-15);
    }

    #[test]
    fn i_integrals_conjugate(re in -3.0f64..6.0, im in -3.0f64..3.0, alpha in 0.01f64..0.49) {
        let z = Complex64::new(re, im);
        let (a0, a1) = i_integrals(z, alpha);
        let (b0, b1) = i_integrals(z.conj(), alpha);
        prop_assert!((a0 - b0.conj()).norm() <= 1e-12 * a0.norm().max(1.0));
        prop_assert!((a1 - b1.conj()).norm() <= 1e-12 * a1.norm().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn c_modes_agree(u in 1u64..26, m in 1u64..61, k in 0u64..10_000) {
        let valid: Vec<u64> = (3..=4 * u * u + 2).filter(|&a| d_au(a, u).is_some()).collect();
        prop_assume!(!valid.is_empty());
        let a = valid[(k as usize) % valid.len()];
        prop_assert_eq!(c_mau(m, a, u, CMode::Direct).unwrap(), c_mau(m, a, u, CMode::Closed).unwrap());
    }

    #[test]
    fn b_direct_agrees(u in 1u64..65, m in 1u64..61) {
        prop_assert_eq!(b_m_direct(m, u), b_m(m, u, BConvention::Standard));
    }

    #[test]
    fn family_monotone(x in 100.0f64..20_000.0, a in 0.02f64..0.45, dx in 0.0f64..5000.0, da in 0.0f64..0.04) {
        let small = enumerate_family(&family_bounds(x, a).unwrap()).unwrap();
        let big = enumerate_family(&family_bounds(x + dx, (a + da).min(0.49)).unwrap()).unwrap();
        let set: std::collections::HashSet<u64> = big.iter().map(|p| p.d).collect();
        prop_assert!(small.iter().all(|p| set.contains(&p.d)));
        prop_assert!(small.iter().all(|p| unit_within_bound(p.d, p.t, p.u, a)));
    }
}
