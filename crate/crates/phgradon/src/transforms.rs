//! Numerical Radon transform, backprojection and normal operators on the unit
//! disk and ball, for simple polyhomogeneous components.
//!
//! Hyperplanes are `{x : x . theta = s}`; `sigma = 1 - s^2` and `rho = 1 - |x|^2`.

use std::cell::Cell;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::asymptotics::GeometricGrid;
use crate::coefficients::{perp_basis, BoundaryWeight, CoeffError};
use crate::quad::{adaptive_limited, adaptive_panels, periodic_trapezoid, tanh_sinh, QuadResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("quadrature did not reach the requested tolerance (achieved {achieved:e})")]
    NoConvergence { achieved: f64 },
    #[error("invalid input: {0}")]
    Domain(String),
    #[error(transparent)]
    Coefficient(#[from] CoeffError),
}

/// Smooth cutoff: 1 on `[0, plateau_end]`, 0 on `[support_end, inf)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffSpec {
    pub plateau_end: f64,
    pub support_end: f64,
}

impl Default for CutoffSpec {
    fn default() -> Self {
        CutoffSpec { plateau_end: 0.25, support_end: 0.75 }
    }
}

fn flat(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

impl CutoffSpec {
    pub fn new(plateau_end: f64, support_end: f64) -> Result<Self, TransformError> {
        if !(0.0 < plateau_end && plateau_end < support_end && support_end < 1.0) {
            return Err(TransformError::Domain(format!(
                "cutoff needs 0 < plateau_end < support_end < 1, got {plateau_end}, {support_end}"
            )));
        }
        Ok(CutoffSpec { plateau_end, support_end })
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.plateau_end {
            1.0
        } else if t >= self.support_end {
            0.0
        } else {
            let w = self.support_end - self.plateau_end;
            let a = flat((self.support_end - t) / w);
            let b = flat((t - self.plateau_end) / w);
            a / (a + b)
        }
    }
}

fn chi(c: &Option<CutoffSpec>, t: f64) -> f64 {
    c.as_ref().map_or(1.0, |c| c.eval(t))
}

fn cut_breaks(c: &Option<CutoffSpec>) -> Vec<f64> {
    c.as_ref().map_or(vec![], |c| vec![c.plateau_end, c.support_end])
}

/// `rho^gamma log^ell(rho)` from `ln rho`.
fn power_log(gamma: Complex64, ell: u32, ln: f64) -> Complex64 {
    (gamma * ln).exp() * ln.powi(ell as i32)
}

/// `u(x) = a(x/|x|) rho^gamma log^ell(rho) chi(rho)` on the ball.
#[derive(Clone, Debug)]
pub struct PhgComponentBall {
    pub a: BoundaryWeight,
    pub gamma: Complex64,
    pub ell: u32,
    pub cutoff: Option<CutoffSpec>,
}

impl PhgComponentBall {
    pub fn new(a: BoundaryWeight, gamma: Complex64, ell: u32, cutoff: Option<CutoffSpec>) -> Result<Self, TransformError> {
        if gamma.re <= -1.0 {
            return Err(TransformError::Domain("Re gamma must exceed -1".into()));
        }
        Ok(PhgComponentBall { a, gamma, ell, cutoff })
    }

    pub fn n(&self) -> u32 {
        self.a.n
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let rho = 1.0 - r2;
        let ch = chi(&self.cutoff, rho);
        if ch == 0.0 || rho <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.a.eval(x) * power_log(self.gamma, self.ell, rho.ln()) * ch
    }

    fn shifted(&self, dg: Complex64) -> Self {
        PhgComponentBall { gamma: self.gamma + dg, ..self.clone() }
    }
}

/// `v(s, theta) = a(theta) sigma^gamma log^ell(sigma) chi(1 - side * s)`.
#[derive(Clone, Debug)]
pub struct PhgComponentCyl {
    pub a: BoundaryWeight,
    pub gamma: Complex64,
    pub ell: u32,
    pub side: i32,
    pub cutoff: Option<CutoffSpec>,
}

/// A point of the cylinder with `sigma`, `1 - s` and `1 + s` carried at full relative accuracy.
#[derive(Clone, Copy, Debug)]
pub struct CylPoint<'a> {
    pub s: f64,
    pub sigma: f64,
    pub one_minus_s: f64,
    pub one_plus_s: f64,
    pub theta: &'a [f64],
}

impl<'a> CylPoint<'a> {
    pub fn new(s: f64, theta: &'a [f64]) -> Self {
        CylPoint { s, sigma: (1.0 - s) * (1.0 + s), one_minus_s: 1.0 - s, one_plus_s: 1.0 + s, theta }
    }
}

/// A function on `(-1, 1) x S^{n-1}`.
pub trait CylinderFunction: Sync {
    fn eval_cyl(&self, p: &CylPoint) -> Result<Complex64, TransformError>;

    /// Values of `s` where the function is not analytic.
    fn s_breaks(&self) -> Vec<f64> {
        vec![]
    }
}

impl CylinderFunction for PhgComponentCyl {
    fn eval_cyl(&self, p: &CylPoint) -> Result<Complex64, TransformError> {
        let d = if self.side >= 0 { p.one_minus_s } else { p.one_plus_s };
        let ch = chi(&self.cutoff, d);
        if ch == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(self.a.eval(p.theta) * power_log(self.gamma, self.ell, p.sigma.ln()) * ch)
    }

    fn s_breaks(&self) -> Vec<f64> {
        let sg = if self.side >= 0 { 1.0 } else { -1.0 };
        cut_breaks(&self.cutoff).iter().map(|t| sg * (1.0 - t)).collect()
    }
}

/// Adapter for plain closures `(s, theta) -> value`.
pub struct FnCyl<F>(pub F);

impl<F: Fn(f64, &[f64]) -> Complex64 + Sync> CylinderFunction for FnCyl<F> {
    fn eval_cyl(&self, p: &CylPoint) -> Result<Complex64, TransformError> {
        Ok((self.0)(p.s, p.theta))
    }
}

fn add(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * y).collect()
}

/// `Ru(s, theta) / sigma^{(n-1)/2 + gamma}`, given `s` and `sigma = 1 - s^2` separately.
pub fn radon_reduced(u: &PhgComponentBall, s: f64, sigma: f64, theta: &[f64], tol: f64) -> QuadResult {
    let n = u.n();
    let ln_sig = sigma.ln();
    let st: Vec<f64> = theta.iter().map(|t| s * t).collect();
    let basis = perp_basis(theta);
    let sqs = sigma.sqrt();
    // integral of a over the fiber sphere at radius sqrt(sigma (1 - xi))
    let fiber = |one_minus_xi: f64| -> Complex64 {
        let r = sqs * one_minus_xi.max(0.0).sqrt();
        if n == 2 {
            u.a.eval(&add(&st, &basis[0], r)) + u.a.eval(&add(&st, &basis[0], -r))
        } else {
            let at = |psi: f64| {
                let dir: Vec<f64> = (0..3).map(|i| psi.cos() * basis[0][i] + psi.sin() * basis[1][i]).collect();
                u.a.eval(&add(&st, &dir, r))
            };
            periodic_trapezoid(at, 8, 1024, 1e-15)
        }
    };
    let mut breaks = vec![0.0];
    for t in cut_breaks(&u.cutoff) {
        let xi = t / sigma;
        if xi > 0.0 && xi < 1.0 {
            breaks.push(xi);
        }
    }
    breaks.push(1.0);
    let half_pow = (n as f64 - 3.0) / 2.0;
    let mut total = QuadResult { value: Complex64::new(0.0, 0.0), error: 0.0 };
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if let Some(c) = &u.cutoff {
            if lo * sigma >= c.support_end {
                continue;
            }
        }
        let r = tanh_sinh(
            |x, da, db| {
                let xi = if lo == 0.0 { da } else { x };
                let om = if hi == 1.0 { db } else { 1.0 - x };
                let ch = chi(&u.cutoff, sigma * xi);
                if ch == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let rad = (u.gamma * xi.ln()).exp() * (ln_sig + xi.ln()).powi(u.ell as i32);
                rad * ch * om.powf(half_pow) * fiber(om) * 0.5
            },
            lo,
            hi,
            tol * 0.1,
        );
        total.value += r.value;
        total.error += r.error;
    }
    total
}

fn check(r: QuadResult, tol: f64) -> Result<Complex64, TransformError> {
    if r.error <= tol * r.value.norm().max(1.0) && r.value.norm().is_finite() {
        Ok(r.value)
    } else {
        Err(TransformError::NoConvergence { achieved: r.error })
    }
}

/// `Ru(s, theta)`: the integral of `u` over `{x . theta = s}` against Lebesgue measure.
pub fn radon(u: &PhgComponentBall, s: f64, theta: &[f64], tol: f64) -> Result<Complex64, TransformError> {
    if s.abs() >= 1.0 {
        return Err(TransformError::Domain("|s| must be below 1".into()));
    }
    let p = CylPoint::new(s, theta);
    let e = u.gamma + (u.n() as f64 - 1.0) / 2.0;
    let r = radon_reduced(u, s, p.sigma, theta, tol);
    Ok(check(r, tol)? * (e * p.sigma.ln()).exp())
}

/// Radon transform of an arbitrary integrand, by adaptive quadrature over the fiber.
pub fn radon_fn<F: Fn(&[f64]) -> Complex64>(u: &F, s: f64, theta: &[f64], tol: f64) -> Result<Complex64, TransformError> {
    let sigma = (1.0 - s) * (1.0 + s);
    if sigma <= 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let h = sigma.sqrt();
    let st: Vec<f64> = theta.iter().map(|t| s * t).collect();
    let basis = perp_basis(theta);
    let r = if theta.len() == 2 {
        adaptive_limited(&|t: f64| u(&add(&st, &basis[0], t)), -h, h, tol, tol, 4000)
    } else {
        let ring = |r: f64| {
            let inner = periodic_trapezoid(
                |psi| {
                    let d: Vec<f64> = (0..3).map(|i| psi.cos() * basis[0][i] + psi.sin() * basis[1][i]).collect();
                    u(&add(&st, &d, r))
                },
                16,
                2048,
                tol * 0.1,
            );
            inner * r
        };
        adaptive_limited(&ring, 0.0, h, tol, tol, 4000)
    };
    check(r, tol)
}

/// Backprojection evaluated at `x = sqrt(1 - rho) xhat`.
pub fn backproject_polar(
    v: &dyn CylinderFunction,
    xhat: &[f64],
    rho: f64,
    tol: f64,
) -> Result<QuadResult, TransformError> {
    let n = xhat.len();
    let r = (1.0 - rho).max(0.0).sqrt();
    let basis = perp_basis(xhat);
    let sq = rho.sqrt();
    let mut br = vec![0.0, PI];
    let mut t = sq;
    while t < PI / 2.0 {
        br.push(t);
        br.push(PI - t);
        t *= 2.0;
    }
    for sb in v.s_breaks() {
        if r > 0.0 && sb.abs() < r {
            br.push((sb / r).acos());
        }
    }
    if n == 2 {
        let neg: Vec<f64> = br.iter().map(|b| -b).collect();
        br.extend(neg);
    }
    br.sort_by(f64::total_cmp);
    br.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let fail: Cell<Option<TransformError>> = Cell::new(None);
    let eval = |theta: &[f64], c: f64, half_s2: f64, half_c2: f64, sin2: f64| -> Complex64 {
        let p = CylPoint {
            s: r * c,
            sigma: rho + r * r * sin2,
            one_minus_s: rho / (1.0 + r) + 2.0 * r * half_s2,
            one_plus_s: rho / (1.0 + r) + 2.0 * r * half_c2,
            theta,
        };
        match v.eval_cyl(&p) {
            Ok(z) => z,
            Err(e) => {
                fail.set(Some(e));
                Complex64::new(0.0, 0.0)
            }
        }
    };
    let integrand = |phi: f64| -> Complex64 {
        let (sn, c) = phi.sin_cos();
        let hs = (phi / 2.0).sin().powi(2);
        let hc = (phi / 2.0).cos().powi(2);
        if n == 2 {
            let theta = add(&xhat.iter().map(|x| x * c).collect::<Vec<_>>(), &basis[0], sn);
            eval(&theta, c, hs, hc, sn * sn)
        } else {
            let ring = periodic_trapezoid(
                |psi| {
                    let theta: Vec<f64> = (0..3)
                        .map(|i| c * xhat[i] + sn * (psi.cos() * basis[0][i] + psi.sin() * basis[1][i]))
                        .collect();
                    eval(&theta, c, hs, hc, sn * sn)
                },
                8,
                1024,
                1e-14,
            );
            ring * sn
        }
    };
    let res = adaptive_panels(&integrand, &br, tol, tol);
    if let Some(e) = fail.take() {
        return Err(e);
    }
    Ok(res)
}

fn polar_of(x: &[f64]) -> (Vec<f64>, f64) {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let xhat = if r > 0.0 {
        x.iter().map(|v| v / r).collect()
    } else {
        let mut e = vec![0.0; x.len()];
        e[0] = 1.0;
        e
    };
    (xhat, (1.0 - r) * (1.0 + r))
}

/// `R*v(x)`: the integral of `v(x . theta, theta)` over the unit sphere.
pub fn backproject(v: &dyn CylinderFunction, x: &[f64], tol: f64) -> Result<Complex64, TransformError> {
    let (xhat, rho) = polar_of(x);
    if rho <= 0.0 {
        return Err(TransformError::Domain("|x| must be below 1".into()));
    }
    check(backproject_polar(v, &xhat, rho, tol)?, tol)
}

/// `sigma^power * Ru`, with `Ru` evaluated as `sigma^{(n-1)/2+gamma}` times its reduced integral.
struct RadonOf<'a> {
    u: &'a PhgComponentBall,
    power: Complex64,
    tol: f64,
}

impl CylinderFunction for RadonOf<'_> {
    fn eval_cyl(&self, p: &CylPoint) -> Result<Complex64, TransformError> {
        let r = radon_reduced(self.u, p.s, p.sigma, p.theta, self.tol);
        Ok(check(r, self.tol)? * (self.power * p.sigma.ln()).exp())
    }
}

pub fn normal_polar(u: &PhgComponentBall, xhat: &[f64], rho: f64, tol: f64) -> Result<QuadResult, TransformError> {
    let power = u.gamma + (u.n() as f64 - 1.0) / 2.0;
    backproject_polar(&RadonOf { u, power, tol: tol / 10.0 }, xhat, rho, tol)
}

/// `R*R u (x)`.
pub fn normal(u: &PhgComponentBall, x: &[f64], tol: f64) -> Result<Complex64, TransformError> {
    let (xhat, rho) = polar_of(x);
    check(normal_polar(u, &xhat, rho, tol)?, tol)
}

pub fn weighted_normal_polar(
    u: &PhgComponentBall,
    gamma_w: Complex64,
    xhat: &[f64],
    rho: f64,
    tol: f64,
) -> Result<QuadResult, TransformError> {
    if gamma_w.re < 0.0 {
        return Err(TransformError::Domain("Re gamma_w must be non-negative".into()));
    }
    // sigma^{-(n-1)/2-gw} R(rho^gw u) = sigma^gamma * reduced integral of rho^{gamma+gw}
    let uw = u.shifted(gamma_w);
    backproject_polar(&RadonOf { u: &uw, power: u.gamma, tol: tol / 10.0 }, xhat, rho, tol)
}

/// `R* sigma^{-(n-1)/2 - gamma_w} R rho^{gamma_w} u (x)`.
pub fn weighted_normal(u: &PhgComponentBall, gamma_w: Complex64, x: &[f64], tol: f64) -> Result<Complex64, TransformError> {
    let (xhat, rho) = polar_of(x);
    check(weighted_normal_polar(u, gamma_w, &xhat, rho, tol)?, tol)
}

/// Samples of a function along the ray `rho -> sqrt(1 - rho) theta_hat`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileSamples {
    pub rho: Vec<f64>,
    pub values: Vec<Complex64>,
    pub est_error: Vec<f64>,
}

impl ProfileSamples {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rho,re_value,im_value,est_error\n");
        for i in 0..self.rho.len() {
            let _ = writeln!(
                out,
                "{:.17e},{:.17e},{:.17e},{:.3e}",
                self.rho[i], self.values[i].re, self.values[i].im, self.est_error[i]
            );
        }
        out
    }
}

/// Sample `f` at `sqrt(1 - rho_j) theta_hat`.
pub fn boundary_profile<F: Fn(&[f64]) -> Complex64 + Sync>(f: &F, theta_hat: &[f64], grid: &GeometricGrid) -> ProfileSamples {
    let rho = grid.points();
    let values: Vec<Complex64> = rho
        .par_iter()
        .map(|&r| {
            let x: Vec<f64> = theta_hat.iter().map(|t| t * (1.0 - r).sqrt()).collect();
            f(&x)
        })
        .collect();
    ProfileSamples { est_error: vec![0.0; rho.len()], rho, values }
}

/// Sample an operator given in polar form `rho -> value` over the grid, in parallel.
pub fn polar_profile<F>(f: &F, grid: &GeometricGrid) -> Result<ProfileSamples, TransformError>
where
    F: Fn(f64) -> Result<QuadResult, TransformError> + Sync,
{
    let rho = grid.points();
    let out: Result<Vec<QuadResult>, TransformError> = rho.par_iter().map(|&r| f(r)).collect();
    let out = out?;
    Ok(ProfileSamples {
        values: out.iter().map(|q| q.value).collect(),
        est_error: out.iter().map(|q| q.error).collect(),
        rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn cutoff_shape() {
        let k = CutoffSpec::default();
        assert_eq!(k.eval(0.1), 1.0);
        assert_eq!(k.eval(0.8), 0.0);
        assert!((k.eval(0.5) - 0.5).abs() < 1e-15);
        assert!(CutoffSpec::new(0.5, 0.4).is_err());
    }

    #[test]
    fn radon_closed_forms() {
        let one = PhgComponentBall::new(BoundaryWeight::constant(2), c(0.0), 0, None).unwrap();
        let v = radon(&one, 0.6, &[1.0, 0.0], 1e-12).unwrap();
        assert!((v - 1.6).norm() < 1e-13);
        let rho = PhgComponentBall::new(BoundaryWeight::constant(2), c(1.0), 0, None).unwrap();
        let s: f64 = -0.3;
        let v = radon(&rho, s, &[0.0, 1.0], 1e-12).unwrap();
        assert!((v - 4.0 / 3.0 * (1.0 - s * s).powf(1.5)).norm() < 1e-13);
        let one3 = PhgComponentBall::new(BoundaryWeight::constant(3), c(0.0), 0, None).unwrap();
        let v = radon(&one3, 0.0, &[0.0, 0.0, 1.0], 1e-12).unwrap();
        assert!((v - PI).norm() < 1e-12);
    }

    #[test]
    fn backprojection_closed_forms() {
        let one = FnCyl(|_s: f64, _t: &[f64]| c(1.0));
        assert!((backproject(&one, &[0.3, -0.2], 1e-12).unwrap() - 2.0 * PI).norm() < 1e-12);
        let odd = FnCyl(|s: f64, _t: &[f64]| c(s));
        assert!(backproject(&odd, &[0.3, 0.5, 0.1], 1e-12).unwrap().norm() < 1e-12);
        let sq = FnCyl(|s: f64, _t: &[f64]| c(s * s));
        let x = [0.5, -0.4];
        assert!((backproject(&sq, &x, 1e-12).unwrap() - PI * 0.41).norm() < 1e-12);
    }

    #[test]
    fn normal_constants() {
        let one2 = PhgComponentBall::new(BoundaryWeight::constant(2), c(0.0), 0, None).unwrap();
        assert!((normal(&one2, &[0.0, 0.0], 1e-11).unwrap() - 4.0 * PI).norm() < 1e-10);
        assert!((weighted_normal(&one2, c(0.5), &[0.2, 0.7], 1e-11).unwrap() - PI * PI).norm() < 1e-10);
        let one3 = PhgComponentBall::new(BoundaryWeight::constant(3), c(0.0), 0, None).unwrap();
        assert!((normal(&one3, &[0.0, 0.0, 0.0], 1e-11).unwrap() - 4.0 * PI * PI).norm() < 1e-9);
        // R*R 1 = 8 E(k = |x|), complete elliptic integral of the second kind
        let v = normal(&one2, &[0.6, 0.0], 1e-11).unwrap();
        assert!((v - 8.0 * 1.418_083_394_448_72).norm() < 1e-9, "{v}");
    }
}
