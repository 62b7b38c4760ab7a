//! Values computed independently (mpmath, 30 digits, or by hand) and frozen here.

use std::f64::consts::PI;

use num_complex::Complex64;
use phgradon::coefficients::BoundaryWeight;
use phgradon::special_fn::{beta, digamma, gamma_fn, gamma_value, polygamma, rgamma, SampledFunction01, mellin_functional};
use phgradon::transforms::{backproject, normal, radon, FnCyl, PhgComponentBall};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rel(got: Complex64, want: Complex64) -> f64 {
    (got - want).norm() / want.norm()
}

#[test]
fn gamma_family() {
    let g = gamma_value(c(0.5, 1.0));
    assert!(rel(g, c(0.300694617260655816, -0.424967879433123813)) < 1e-14, "{g}");
    let d = digamma(c(0.3, -0.7));
    assert!(rel(d, c(-0.447207920299561174, -1.89181085521852667)) < 1e-14, "{d}");
    let t = polygamma(1, c(2.5, 0.5));
    assert!(rel(t, c(0.463802495540993774, -0.111892198603484614)) < 1e-13, "{t}");
    let p3 = polygamma(3, c(1.5, 0.0));
    assert!(rel(p3, c(1.40909103400243724, 0.0)) < 1e-12, "{p3}");
    // pole of Gamma at -2: residue 1/2, and 1/Gamma vanishes there
    let pole = gamma_fn(c(-2.0, 0.0));
    assert!(pole.pole_flag && (pole.value - 0.5).norm() < 1e-14);
    assert!(rgamma(c(-2.0, 0.0)).norm() < 1e-14);
}

#[test]
fn beta_values() {
    let b = beta(c(0.3, 0.0), c(0.4, 0.0)).value;
    assert!(rel(b, c(5.11209124445735163, 0.0)) < 1e-13, "{b}");
    let b = beta(c(-0.3, 0.2), c(1.7, 0.0)).value;
    assert!(rel(b, c(-3.32900777170194260, -1.26516284212661277)) < 1e-13, "{b}");
}

#[test]
fn mellin_of_exponential_left_of_the_axis() {
    // int_0^1 x^{z-1} e^x dx = sum_q 1 / (q! (z + q))
    let f = SampledFunction01::new(|x| c(x.exp(), 0.0), 8);
    let z = c(-2.3, 0.9);
    let mut want = c(0.0, 0.0);
    let mut fact = 1.0;
    for q in 0..40 {
        if q > 0 {
            fact *= q as f64;
        }
        want += 1.0 / (fact * (z + q as f64));
    }
    let got = mellin_functional(&f, z, 4).unwrap().value;
    assert!(rel(got, want) < 1e-10, "{got} {want}");
}

#[test]
fn radon_closed_forms() {
    let one2 = PhgComponentBall::new(BoundaryWeight::constant(2), c(0.0, 0.0), 0, None).unwrap();
    let one3 = PhgComponentBall::new(BoundaryWeight::constant(3), c(0.0, 0.0), 0, None).unwrap();
    for s in [0.0, 0.3, -0.7, 0.99] {
        let sigma: f64 = 1.0 - s * s;
        let r2 = radon(&one2, s, &[0.6, 0.8], 1e-13).unwrap();
        assert!((r2.re - 2.0 * sigma.sqrt()).abs() < 1e-12, "chord length at s = {s}");
        let r3 = radon(&one3, s, &[0.0, 0.6, 0.8], 1e-13).unwrap();
        assert!((r3.re - PI * sigma).abs() < 1e-12, "disc area at s = {s}");
    }
    // R|x|^2 = 2 s^2 sqrt(sigma) + (2/3) sigma^{3/2}
    let s = 0.4;
    let sigma: f64 = 1.0 - s * s;
    let sq = phgradon::transforms::radon_fn(&|x: &[f64]| c(x[0] * x[0] + x[1] * x[1], 0.0), s, &[1.0, 0.0], 1e-13).unwrap();
    assert!((sq.re - (2.0 * s * s * sigma.sqrt() + 2.0 / 3.0 * sigma.powf(1.5))).abs() < 1e-12);
}

#[test]
fn backprojection_and_normal_operator() {
    let one = FnCyl(|_: f64, _: &[f64]| c(1.0, 0.0));
    assert!((backproject(&one, &[0.2, -0.1], 1e-13).unwrap().re - 2.0 * PI).abs() < 1e-12);
    assert!((backproject(&one, &[0.2, -0.1, 0.3], 1e-13).unwrap().re - 4.0 * PI).abs() < 1e-11);
    // n = 2: R*R 1 (x) = 8 E(m = |x|^2); mpmath ellipe(0.25)
    let u2 = PhgComponentBall::new(BoundaryWeight::constant(2), c(0.0, 0.0), 0, None).unwrap();
    let v = normal(&u2, &[0.3, 0.4], 1e-13).unwrap();
    assert!((v.re - 11.7396976747154172).abs() < 1e-10, "{v}");
    // n = 3: R*R 1 (x) = pi (4 pi - 4 pi |x|^2 / 3)
    let u3 = PhgComponentBall::new(BoundaryWeight::constant(3), c(0.0, 0.0), 0, None).unwrap();
    let v = normal(&u3, &[0.3, 0.0, 0.4], 1e-13).unwrap();
    assert!((v.re - 36.1885494706609816).abs() < 1e-9, "{v}");
}
