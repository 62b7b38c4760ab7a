//! Boundary weights and the explicit expansion coefficients of `R` and `R*`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::index_calculus::{case_classify, Case};
use crate::special_fn::{
    beta_deriv, binom, factorial, gamma_value, nonpositive_integer, rgamma, sphere_volume, MeromorphicValue,
    SpecialError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoeffError {
    #[error("unknown boundary weight '{0}'")]
    UnknownWeight(String),
    #[error("insufficient q-grid: fit residual {residual:e}")]
    InsufficientGrid { residual: f64 },
    #[error("Taylor order {0} exceeds 8")]
    OrderTooHigh(u32),
    #[error("non-integrable component: Re gamma <= -1")]
    NonIntegrable,
    #[error("log index k = {k} exceeds ell = {ell}")]
    LogIndex { k: u32, ell: u32 },
    #[error(transparent)]
    Special(#[from] SpecialError),
}

type WeightFn = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// A smooth function on `S^{n-1}`, extended to `R^n \ 0` by `a(x / |x|)`.
#[derive(Clone)]
pub struct BoundaryWeight {
    pub name: String,
    pub n: u32,
    pub even: bool,
    f: WeightFn,
}

impl std::fmt::Debug for BoundaryWeight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BoundaryWeight({}, n={})", self.name, self.n)
    }
}

fn registry() -> &'static Mutex<HashMap<String, BoundaryWeight>> {
    static REG: OnceLock<Mutex<HashMap<String, BoundaryWeight>>> = OnceLock::new();
    REG.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Add a weight to the named catalog; it becomes available to [`BoundaryWeight::from_name`].
pub fn register_weight(w: BoundaryWeight) {
    registry().lock().unwrap().insert(w.name.clone(), w);
}

pub fn registered_weights() -> Vec<String> {
    let mut v: Vec<String> = registry().lock().unwrap().keys().cloned().collect();
    v.sort();
    v
}

fn assoc_legendre(l: u32, m: u32, x: f64) -> f64 {
    let mut pmm = 1.0;
    let s = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();
    for i in 0..m {
        pmm *= -(2.0 * i as f64 + 1.0) * s;
    }
    if l == m {
        return pmm;
    }
    let mut pm1 = x * (2.0 * m as f64 + 1.0) * pmm;
    if l == m + 1 {
        return pm1;
    }
    let mut out = 0.0;
    for ll in m + 2..=l {
        out = (x * (2.0 * ll as f64 - 1.0) * pm1 - (ll + m - 1) as f64 * pmm) / (ll - m) as f64;
        pmm = pm1;
        pm1 = out;
    }
    out
}

/// Real spherical harmonic on `S^2`.
pub fn real_harmonic(l: u32, m: i32, x: &[f64]) -> f64 {
    let am = m.unsigned_abs();
    let norm = ((2 * l + 1) as f64 / (4.0 * PI) * factorial((l - am) as u64) / factorial((l + am) as u64)).sqrt();
    let p = assoc_legendre(l, am, x[2].clamp(-1.0, 1.0));
    let phi = x[1].atan2(x[0]);
    match m {
        0 => norm * p,
        m if m > 0 => 2f64.sqrt() * norm * p * (am as f64 * phi).cos(),
        _ => 2f64.sqrt() * norm * p * (am as f64 * phi).sin(),
    }
}

impl BoundaryWeight {
    pub fn new<F: Fn(&[f64]) -> Complex64 + Send + Sync + 'static>(name: &str, n: u32, even: bool, f: F) -> Self {
        BoundaryWeight { name: name.to_string(), n, even, f: Arc::new(f) }
    }

    pub fn constant(n: u32) -> Self {
        Self::new("const", n, true, |_| Complex64::new(1.0, 0.0))
    }

    /// Catalog lookup: `const`, `linear:i`, `quadratic:ij`, `harmonic:l,m` (n = 3), or a registered name.
    pub fn from_name(name: &str, n: u32) -> Result<Self, CoeffError> {
        let bad = || CoeffError::UnknownWeight(name.to_string());
        let idx = |ch: char| -> Result<usize, CoeffError> {
            let i = ch.to_digit(10).ok_or_else(bad)? as usize;
            if i == 0 || i > n as usize {
                return Err(bad());
            }
            Ok(i - 1)
        };
        if name == "const" {
            return Ok(Self::constant(n));
        }
        if let Some(r) = name.strip_prefix("linear:") {
            let mut ch = r.chars();
            let i = idx(ch.next().ok_or_else(bad)?)?;
            if ch.next().is_some() {
                return Err(bad());
            }
            return Ok(Self::new(name, n, false, move |x| Complex64::new(x[i], 0.0)));
        }
        if let Some(r) = name.strip_prefix("quadratic:") {
            let ch: Vec<char> = r.chars().collect();
            if ch.len() != 2 {
                return Err(bad());
            }
            let (i, j) = (idx(ch[0])?, idx(ch[1])?);
            return Ok(Self::new(name, n, true, move |x| Complex64::new(x[i] * x[j], 0.0)));
        }
        if let Some(r) = name.strip_prefix("harmonic:") {
            let (l, m) = r.split_once(',').ok_or_else(bad)?;
            let l: u32 = l.trim().parse().map_err(|_| bad())?;
            let m: i32 = m.trim().parse().map_err(|_| bad())?;
            if n != 3 || m.unsigned_abs() > l || l > 12 {
                return Err(bad());
            }
            return Ok(Self::new(name, n, l % 2 == 0, move |x| Complex64::new(real_harmonic(l, m, x), 0.0)));
        }
        match registry().lock().unwrap().get(name) {
            Some(w) if w.n == n => Ok(w.clone()),
            _ => Err(bad()),
        }
    }

    /// Evaluate at `x / |x|`.
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let u: Vec<f64> = x.iter().map(|v| v / r).collect();
        (self.f)(&u)
    }

    /// Boundedness and (if flagged) evenness on a quasi-uniform sample of `count` points.
    pub fn validate(&self, count: usize) -> bool {
        sphere_sample(self.n, count).iter().all(|p| {
            let v = self.eval(p);
            let neg: Vec<f64> = p.iter().map(|x| -x).collect();
            v.norm().is_finite() && (!self.even || (v - self.eval(&neg)).norm() <= 1e-12 * (1.0 + v.norm()))
        })
    }
}

/// Equispaced circle (n = 2) or Fibonacci sphere (n = 3) points.
pub fn sphere_sample(n: u32, count: usize) -> Vec<Vec<f64>> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            if n == 2 {
                let t = 2.0 * PI * (i as f64 + 0.5) / count as f64;
                vec![t.cos(), t.sin()]
            } else {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                let r = (1.0 - z * z).sqrt();
                let t = golden * i as f64;
                vec![r * t.cos(), r * t.sin(), z]
            }
        })
        .collect()
}

/// Orthonormal basis of `theta^perp` (one vector for n = 2, two for n = 3).
pub fn perp_basis(theta: &[f64]) -> Vec<Vec<f64>> {
    if theta.len() == 2 {
        return vec![vec![-theta[1], theta[0]]];
    }
    let (x, y, z) = (theta[0], theta[1], theta[2]);
    let helper = if x.abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = helper[0] * x + helper[1] * y + helper[2] * z;
    let mut e1 = [helper[0] - d * x, helper[1] - d * y, helper[2] - d * z];
    let nn = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1.iter_mut().for_each(|v| *v /= nn);
    let e2 = [y * e1[2] - z * e1[1], z * e1[0] - x * e1[2], x * e1[1] - y * e1[0]];
    vec![e1.to_vec(), e2.to_vec()]
}

/// Integral of `g` over the unit sphere of `theta^perp` (two points or a 256-node great circle).
pub fn fiber_sphere_integral<G: Fn(&[f64]) -> Complex64>(theta: &[f64], g: G) -> Complex64 {
    let basis = perp_basis(theta);
    if theta.len() == 2 {
        let p = &basis[0];
        return g(p) + g(&[-p[0], -p[1]]);
    }
    let nodes = 256;
    let mut s = Complex64::new(0.0, 0.0);
    for j in 0..nodes {
        let psi = 2.0 * PI * j as f64 / nodes as f64;
        let (c, sn) = (psi.cos(), psi.sin());
        let phi: Vec<f64> = (0..3).map(|i| c * basis[0][i] + sn * basis[1][i]).collect();
        s += g(&phi);
    }
    s * (2.0 * PI / nodes as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiberTaylor {
    pub theta: Vec<f64>,
    pub coeffs: Vec<Complex64>,
}

const Q0: f64 = 0.4;
const Q_NODES: usize = 33;
const U_DEGREE: usize = 12;

/// Monomial coefficients of `T_k(2u - 1)` for `k <= deg`.
fn shifted_chebyshev_monomials(deg: usize) -> Vec<Vec<f64>> {
    let mut t: Vec<Vec<f64>> = vec![vec![1.0], vec![-1.0, 2.0]];
    for k in 2..=deg {
        let mut next = vec![0.0; k + 1];
        for (i, c) in t[k - 1].iter().enumerate() {
            next[i + 1] += 4.0 * c;
            next[i] -= 2.0 * c;
        }
        for (i, c) in t[k - 2].iter().enumerate() {
            next[i] -= c;
        }
        t.push(next);
    }
    t.truncate(deg + 1);
    t
}

/// Even Taylor coefficients of `F(q) = int a((theta + q phi)/sqrt(1+q^2)) dphi` at `q = 0`.
pub fn fiber_sphere_taylor(a: &BoundaryWeight, theta: &[f64], p_max: u32) -> Result<FiberTaylor, CoeffError> {
    if p_max > 8 {
        return Err(CoeffError::OrderTooHigh(p_max));
    }
    let f_of_q = |q: f64| {
        let s = (1.0 + q * q).sqrt();
        fiber_sphere_integral(theta, |phi| {
            let x: Vec<f64> = theta.iter().zip(phi).map(|(t, p)| (t + q * p) / s).collect();
            a.eval(&x)
        })
    };
    let qs: Vec<f64> = (0..Q_NODES)
        .map(|j| Q0 * (PI * (j as f64 + 0.5) / Q_NODES as f64).cos())
        .collect();
    let fv: Vec<Complex64> = qs.iter().map(|&q| f_of_q(q)).collect();
    let ncol = U_DEGREE + 1;
    let mut m = DMatrix::<f64>::zeros(Q_NODES, ncol);
    let mut rhs = DMatrix::<f64>::zeros(Q_NODES, 2);
    for (j, &q) in qs.iter().enumerate() {
        let x = 2.0 * (q / Q0).powi(2) - 1.0;
        let (mut t0, mut t1) = (1.0, x);
        for k in 0..ncol {
            let tk = match k {
                0 => 1.0,
                1 => x,
                _ => {
                    let t2 = 2.0 * x * t1 - t0;
                    t0 = t1;
                    t1 = t2;
                    t2
                }
            };
            m[(j, k)] = tk;
        }
        rhs[(j, 0)] = fv[j].re;
        rhs[(j, 1)] = fv[j].im;
    }
    let svd = m.clone().svd(true, true);
    let sol = svd.solve(&rhs, 1e-14).expect("svd solve");
    let fit = &m * &sol;
    let fmax = fv.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let resid = (0..Q_NODES)
        .map(|j| Complex64::new(fit[(j, 0)] - rhs[(j, 0)], fit[(j, 1)] - rhs[(j, 1)]).norm())
        .fold(0.0, f64::max);
    if resid > 1e-10 * fmax.max(1e-300) && resid > 1e-14 {
        return Err(CoeffError::InsufficientGrid { residual: resid });
    }
    let mono = shifted_chebyshev_monomials(U_DEGREE);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); p_max as usize + 1];
    for (k, poly) in mono.iter().enumerate() {
        let ck = Complex64::new(sol[(k, 0)], sol[(k, 1)]);
        for (p, c) in poly.iter().enumerate().take(p_max as usize + 1) {
            coeffs[p] += ck * *c;
        }
    }
    for (p, c) in coeffs.iter_mut().enumerate() {
        *c /= Q0.powi(2 * p as i32);
    }
    Ok(FiberTaylor { theta: theta.to_vec(), coeffs })
}

fn half_dim(n: u32) -> f64 {
    (n as f64 - 1.0) / 2.0
}

/// Coefficient `A_{m,k}` of `sigma^{(n-1)/2 + gamma + m} log^k sigma` in the Radon transform.
#[allow(clippy::too_many_arguments)]
pub fn radon_coefficient(
    m: u32,
    k: u32,
    gamma: Complex64,
    ell: u32,
    n: u32,
    a: &BoundaryWeight,
    theta: &[f64],
    s_sign: i32,
) -> Result<Complex64, CoeffError> {
    if gamma.re <= -1.0 {
        return Err(CoeffError::NonIntegrable);
    }
    if k > ell {
        return Err(CoeffError::LogIndex { k, ell });
    }
    let th: Vec<f64> = theta.iter().map(|t| t * s_sign as f64).collect();
    let ft = fiber_sphere_taylor(a, &th, m)?;
    let mut s = Complex64::new(0.0, 0.0);
    for p in 0..=m {
        let w = binom(m as i64 - 1, p as i64 - 1);
        if w == 0.0 {
            continue;
        }
        let bd = beta_deriv(ell - k, gamma, Complex64::new(half_dim(n) + p as f64, 0.0))?;
        s += ft.coeffs[p as usize] * w * bd;
    }
    Ok(0.5 * binom(ell as i64, k as i64) * s)
}

/// Leading term of the B-kernel density at the boundary of the cylinder.
pub fn b0_kernel(theta: &[f64], z: Complex64, n: u32, h: &BoundaryWeight) -> MeromorphicValue {
    let pref = h.eval(theta) * (sphere_volume(n - 2) / 2.0) * gamma_value(Complex64::new(half_dim(n), 0.0)).re;
    if n % 2 == 0 {
        let d = z + half_dim(n);
        match nonpositive_integer(z) {
            Some(m) => {
                let res = if m % 2 == 0 { 1.0 } else { -1.0 } / factorial(m);
                MeromorphicValue::pole(1, pref * res * rgamma(d))
            }
            None => MeromorphicValue::regular(pref * gamma_value(z) * rgamma(d)),
        }
    } else {
        let top = (n - 3) / 2;
        let pole = nonpositive_integer(z).filter(|m| *m <= top as u64);
        let mut prod = Complex64::new(1.0, 0.0);
        for k in 0..=top {
            if pole == Some(k as u64) {
                continue;
            }
            prod /= z + k as f64;
        }
        match pole {
            Some(_) => MeromorphicValue::pole(1, pref * prod),
            None => MeromorphicValue::regular(pref * prod),
        }
    }
}

/// Log power and coefficient of the most singular non-smooth term of `R*u` at the boundary
/// point `theta`, with `u = a sigma^gamma log^ell sigma chi(1 -+ s)`. The coefficient refers
/// to the density normalization; see [`FUNCTION_NORMALIZATION`].
pub fn leading_backprojection_coefficient(
    gamma: Complex64,
    ell: u32,
    n: u32,
    a: &BoundaryWeight,
    theta: &[f64],
    s_sign: i32,
) -> (i64, Complex64) {
    let tag = case_classify(gamma, ell, n);
    let e = gamma + half_dim(n);
    let ell_i = ell as i64;
    let (p, factor) = if n % 2 == 0 {
        match tag.case {
            Case::A => {
                if ell == 0 {
                    return (-1, Complex64::new(0.0, 0.0));
                }
                let g = gamma.re.round() as u64;
                let sign = if g % 2 == 0 { -1.0 } else { 1.0 };
                (ell_i - 1, ell as f64 * gamma_value(-e) * sign * factorial(g))
            }
            Case::B if e.re < -0.5 => (ell_i, gamma_value(-e) * rgamma(-gamma)),
            Case::B => {
                let ei = e.re.round() as u64;
                let sign = if ei % 2 == 0 { -1.0 } else { 1.0 };
                (ell_i + 1, sign / ((ell as f64 + 1.0) * factorial(ei)) * rgamma(-gamma))
            }
            _ => (ell_i, gamma_value(-e) * rgamma(-gamma)),
        }
    } else {
        let top = (n - 3) / 2;
        let collide = tag.case == Case::C && e.re > -0.5;
        let ei = e.re.round() as i64;
        let mut prod = Complex64::new(1.0, 0.0);
        for k in 0..=top as i64 {
            if collide && k == ei {
                continue;
            }
            prod /= -e + k as f64;
        }
        if collide {
            (ell_i + 1, -prod / (ell as f64 + 1.0))
        } else {
            (ell_i, prod)
        }
    };
    let th: Vec<f64> = theta.iter().map(|t| t * s_sign as f64).collect();
    let b = a.eval(&th) * sphere_volume(n - 2) * gamma_value(Complex64::new(half_dim(n), 0.0)).re * factor;
    (p, b)
}

/// Ratio between the coefficient of `R*u` under the function normalization of `R` and `R*`
/// and the value produced by [`leading_backprojection_coefficient`].
pub const FUNCTION_NORMALIZATION: f64 = 0.5;

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn fiber_taylor_examples() {
        let one2 = BoundaryWeight::constant(2);
        let t = fiber_sphere_taylor(&one2, &[0.6, 0.8], 2).unwrap();
        assert!((t.coeffs[0] - 2.0).norm() < 1e-12);
        assert!(t.coeffs[1].norm() < 1e-10 && t.coeffs[2].norm() < 1e-9);
        let one3 = BoundaryWeight::constant(3);
        let t = fiber_sphere_taylor(&one3, &[0.0, 0.0, 1.0], 1).unwrap();
        assert!((t.coeffs[0] - 2.0 * PI).norm() < 1e-12);
        let q = BoundaryWeight::from_name("quadratic:11", 2).unwrap();
        let t = fiber_sphere_taylor(&q, &[1.0, 0.0], 3).unwrap();
        // 2 / (1 + q^2)
        for (p, want) in [2.0, -2.0, 2.0, -2.0].iter().enumerate() {
            assert!((t.coeffs[p] - want).norm() < 1e-8 * 10f64.powi(p as i32), "{p} {}", t.coeffs[p]);
        }
        let t = fiber_sphere_taylor(&q, &[0.0, 1.0], 1).unwrap();
        assert!(t.coeffs[0].norm() < 1e-12 && (t.coeffs[1] - 2.0).norm() < 1e-9);
    }

    #[test]
    fn radon_coefficient_examples() {
        let one = BoundaryWeight::constant(2);
        let th = [1.0, 0.0];
        assert!((radon_coefficient(0, 0, c(0.0), 0, 2, &one, &th, 1).unwrap() - 2.0).norm() < 1e-12);
        assert!((radon_coefficient(0, 0, c(1.0), 0, 2, &one, &th, 1).unwrap() - 4.0 / 3.0).norm() < 1e-12);
        let q = BoundaryWeight::from_name("quadratic:11", 2).unwrap();
        assert!((radon_coefficient(1, 0, c(0.0), 0, 2, &q, &th, 1).unwrap() + 2.0 / 3.0).norm() < 1e-9);
        assert!(radon_coefficient(0, 0, c(-1.0), 0, 2, &one, &th, 1).is_err());
    }

    #[test]
    fn kernel_examples() {
        let h3 = BoundaryWeight::constant(3);
        assert!((b0_kernel(&[0.0, 0.0, 1.0], c(1.0), 3, &h3).value - PI).norm() < 1e-12);
        let h2 = BoundaryWeight::constant(2);
        assert!((b0_kernel(&[1.0, 0.0], c(1.0), 2, &h2).value - 2.0).norm() < 1e-12);
        let z = b0_kernel(&[1.0, 0.0], c(-0.5), 2, &h2);
        assert!(!z.pole_flag && z.value.norm() < 1e-15);
        assert!(b0_kernel(&[1.0, 0.0], c(-2.0), 2, &h2).pole_flag);
        assert!(b0_kernel(&[0.0, 0.0, 1.0], c(0.0), 3, &h3).pole_flag);
        assert!(!b0_kernel(&[0.0, 0.0, 1.0], c(-1.0), 3, &h3).pole_flag);
    }

    #[test]
    fn backprojection_coefficient_examples() {
        let one = BoundaryWeight::constant(2);
        let th = [1.0, 0.0];
        assert_eq!(leading_backprojection_coefficient(c(0.0), 0, 2, &one, &th, 1), (-1, c(0.0)));
        let (p, b) = leading_backprojection_coefficient(c(0.0), 1, 2, &one, &th, 1);
        assert!(p == 0 && (b - 4.0 * PI).norm() < 1e-12);
        let (p, b) = leading_backprojection_coefficient(c(-0.5), 0, 2, &one, &th, 1);
        assert!(p == 1 && (b + 2.0).norm() < 1e-12);
        let one3 = BoundaryWeight::constant(3);
        let (p, b) = leading_backprojection_coefficient(c(-1.0), 0, 3, &one3, &[0.0, 0.0, 1.0], 1);
        assert!(p == 1 && (b + 2.0 * PI).norm() < 1e-12);
    }

    #[test]
    fn catalog() {
        assert!(BoundaryWeight::from_name("linear:3", 2).is_err());
        assert!(BoundaryWeight::from_name("harmonic:2,1", 2).is_err());
        let h = BoundaryWeight::from_name("harmonic:2,0", 3).unwrap();
        assert!(h.even && h.validate(1000));
        // Y_1^0 = sqrt(3/4pi) z
        let y = BoundaryWeight::from_name("harmonic:1,0", 3).unwrap();
        assert!((y.eval(&[0.0, 0.0, 2.0]).re - (3.0 / (4.0 * PI)).sqrt()).abs() < 1e-14);
        register_weight(BoundaryWeight::new("bump", 2, true, |x| c(1.0 + x[0] * x[0])));
        assert!(BoundaryWeight::from_name("bump", 2).is_ok());
    }
}
