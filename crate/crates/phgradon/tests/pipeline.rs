//! Symbolic predictions checked against fits of numerically transformed components.

use num_complex::Complex64;
use phgradon::asymptotics::{detect_presence, fit_expansion, fit_leading_exponent, ExpansionModel, GeometricGrid, PresenceThresholds};
use phgradon::cli::{backprojection_profile, radon_profile};
use phgradon::coefficients::{leading_backprojection_coefficient, radon_coefficient, BoundaryWeight, FUNCTION_NORMALIZATION};
use phgradon::index_calculus::{backprojection_index, radon_index, Index, IndexSet, generate};
use phgradon::transforms::{CutoffSpec, PhgComponentBall, PhgComponentCyl};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[test]
fn radon_exponent_and_coefficient_n3() {
    let a = BoundaryWeight::from_name("quadratic:11", 3).unwrap();
    let theta = [0.48, 0.64, 0.6];
    let u = PhgComponentBall::new(a.clone(), c(0.5), 1, Some(CutoffSpec::default())).unwrap();
    let prof = radon_profile(&u, &theta, 1, &GeometricGrid::default(), 1e-13).unwrap();
    let predicted = radon_index(&generate(&[Index::real(0.5, 1)]), 3).unwrap();
    assert_eq!(predicted, generate(&[Index::real(1.5, 1)]));
    let family = |x: f64| {
        let mut t = Vec::new();
        for m in 0..5 {
            for k in 0..=1 {
                t.push((c(x + m as f64), k));
            }
        }
        ExpansionModel::new(t)
    };
    let ef = fit_leading_exponent(&prof.rho, &prof.values, family, 1.4, 0.45).unwrap();
    assert!((ef.exponent - 1.5).abs() < 1e-6, "{}", ef.exponent);
    let fit = fit_expansion(&prof.rho, &prof.values, &family(1.5)).unwrap();
    let want = radon_coefficient(0, 1, c(0.5), 1, 3, &a, &theta, 1).unwrap();
    let got = fit.coefficient((c(1.5), 1)).unwrap();
    assert!((got - want).norm() < 1e-8 * want.norm(), "{got} {want}");
}

fn cyl(gamma: f64, ell: u32) -> PhgComponentCyl {
    PhgComponentCyl { a: BoundaryWeight::constant(2), gamma: c(gamma), ell, side: 1, cutoff: Some(CutoffSpec::default()) }
}

#[test]
fn generic_case_leading_coefficient() {
    let u = cyl(0.25, 0);
    let xhat = [0.6, 0.8];
    let prof = backprojection_profile(&u, &xhat, &GeometricGrid::default(), 1e-13).unwrap();
    let set: IndexSet = backprojection_index(c(0.25), 0, 2);
    let model = ExpansionModel::from_index_set(&set, 4.0);
    let fit = fit_expansion(&prof.rho, &prof.values, &model).unwrap();
    let (p, b) = leading_backprojection_coefficient(c(0.25), 0, 2, &u.a, &xhat, 1);
    assert_eq!(p, 0);
    let got = fit.coefficient((c(0.75), 0)).unwrap();
    let want = b * FUNCTION_NORMALIZATION;
    assert!((got - want).norm() < 1e-6 * want.norm(), "{got} {want}");
}

#[test]
fn cancellation_removes_the_half_power() {
    let u = cyl(0.0, 0);
    let prof = backprojection_profile(&u, &[0.6, 0.8], &GeometricGrid::default(), 1e-13).unwrap();
    let base = ExpansionModel::from_index_set(&backprojection_index(c(0.0), 0, 2), 4.0);
    let p = detect_presence(&prof.rho, &prof.values, &base, (c(0.5), 0), PresenceThresholds::default()).unwrap();
    assert!(!p.present);
    assert!(p.coefficient.norm() < 1e-6, "{}", p.coefficient);
}

#[test]
fn creation_adds_a_log() {
    let u = cyl(-0.5, 0);
    let prof = backprojection_profile(&u, &[0.6, 0.8], &GeometricGrid::default(), 1e-13).unwrap();
    let set = backprojection_index(c(-0.5), 0, 2);
    assert_eq!(set.max_log_at(c(0.0)), Some(1));
    let base = ExpansionModel::from_index_set(&set, 4.0).without((c(0.0), 1));
    let p = detect_presence(&prof.rho, &prof.values, &base, (c(0.0), 1), PresenceThresholds::default()).unwrap();
    assert!(p.present, "improvement {}", p.improvement);
}
