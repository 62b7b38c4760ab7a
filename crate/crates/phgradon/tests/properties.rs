use num_complex::Complex64;
use proptest::prelude::*;

use phgradon::asymptotics::{fit_expansion, ExpansionModel, GeometricGrid};
use phgradon::index_calculus::{generate, radon_index, Index, IndexSet};
use phgradon::special_fn::{beta, digamma, gamma_value, mellin_functional, SampledFunction01};

fn index_set() -> impl Strategy<Value = IndexSet> {
    prop::collection::vec((0i32..12, 0u32..3, -2i32..3), 1..4)
        .prop_map(|v| generate(&v.into_iter().map(|(q, k, im)| Index::new(Complex64::new(q as f64 * 0.25, im as f64 * 0.5), k)).collect::<Vec<_>>()))
}

fn off_integer() -> impl Strategy<Value = Complex64> {
    (-3.5f64..3.5, 0.05f64..2.0, any::<bool>()).prop_map(|(re, im, neg)| Complex64::new(re, if neg { -im } else { im }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closure_is_idempotent(e in index_set()) {
        prop_assert_eq!(generate(e.generators()), e);
    }

    #[test]
    fn unions_commute(e in index_set(), f in index_set()) {
        prop_assert_eq!(e.union(&f), f.union(&e));
        prop_assert_eq!(e.extended_union(&f), f.extended_union(&e));
        prop_assert!(e.union(&f).is_subset_of(&e.extended_union(&f)));
    }

    #[test]
    fn radon_index_is_monotone(e in index_set(), f in index_set(), n in 2u32..4) {
        let big = e.union(&f);
        prop_assert!(radon_index(&e, n).unwrap().is_subset_of(&radon_index(&big, n).unwrap()));
    }

    #[test]
    fn gamma_reflection_and_recurrence(z in off_integer()) {
        let pi = std::f64::consts::PI;
        let refl = gamma_value(z) * gamma_value(1.0 - z) * (z * pi).sin();
        prop_assert!((refl - pi).norm() < 1e-11 * pi, "{}", refl);
        let g = gamma_value(z);
        prop_assert!((gamma_value(z + 1.0) - z * g).norm() < 1e-12 * (z * g).norm());
        prop_assert!((digamma(z + 1.0) - digamma(z) - 1.0 / z).norm() < 1e-12 * (1.0 + digamma(z).norm()));
    }

    #[test]
    fn beta_is_a_gamma_quotient(a in off_integer(), b in off_integer()) {
        let v = beta(a, b);
        prop_assume!(!v.pole_flag);
        let q = gamma_value(a) * gamma_value(b) / gamma_value(a + b);
        prop_assume!(q.norm() < 1e12);
        prop_assert!((v.value - q).norm() < 1e-10 * q.norm().max(1.0), "{} {}", v.value, q);
        prop_assert!((beta(b, a).value - v.value).norm() <= 1e-12 * v.value.norm().max(1.0));
    }

    #[test]
    fn mellin_of_polynomials(coef in prop::collection::vec(-2.0f64..2.0, 1..5), z in off_integer()) {
        prop_assume!(z.re > -3.0);
        let cf = coef.clone();
        let f = SampledFunction01::new(move |x| Complex64::new(cf.iter().rev().fold(0.0, |acc, a| acc * x + a), 0.0), 4);
        let want: Complex64 = coef.iter().enumerate().map(|(q, a)| *a / (z + q as f64)).sum();
        let got = mellin_functional(&f, z, 4).unwrap().value;
        prop_assert!((got - want).norm() < 1e-9 * want.norm().max(1.0), "{} {}", got, want);
    }

    #[test]
    fn synthetic_expansions_are_recovered(c0 in -3.0f64..3.0, c1 in -3.0f64..3.0, c2 in -3.0f64..3.0, c3 in -3.0f64..3.0) {
        let model = ExpansionModel::real(&[(0.5, 0), (1.0, 1), (1.5, 0), (2.0, 0)]);
        let rho = GeometricGrid::default().points();
        let vals: Vec<Complex64> = rho
            .iter()
            .map(|&r| Complex64::new(c0 * r.sqrt() + c1 * r * r.ln() + c2 * r.powf(1.5) + c3 * r * r, 0.0))
            .collect();
        let fit = fit_expansion(&rho, &vals, &model).unwrap();
        for (got, want) in fit.coefficients.iter().zip([c0, c1, c2, c3]) {
            prop_assert!((got.re - want).abs() < 1e-8 * (1.0 + want.abs()), "{} {}", got, want);
        }
    }
}
