//! Complex Gamma-family functions and the Beta / Mellin functionals.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::{gauss_legendre, tanh_sinh};

/// Distance to a non-positive integer below which the argument is treated as a pole.
pub const POLE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialError {
    #[error("derivative at pole")]
    DerivativeAtPole,
    #[error("precondition violated: function is not symmetric under t -> 1-t")]
    Asymmetric,
    #[error("insufficient smoothness: depth {depth} exceeds declared order {order}")]
    InsufficientSmoothness { depth: u32, order: u32 },
    #[error("Re z = {re} lies outside the continuation region Re z > -{depth}")]
    OutsideContinuation { re: f64, depth: u32 },
}

/// A value of a meromorphic function; at a pole `value` holds the leading Laurent coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeromorphicValue {
    pub value: Complex64,
    pub pole_flag: bool,
    pub pole_order: u32,
}

impl MeromorphicValue {
    pub fn regular(value: Complex64) -> Self {
        MeromorphicValue { value, pole_flag: false, pole_order: 0 }
    }

    pub fn pole(order: u32, leading: Complex64) -> Self {
        MeromorphicValue { value: leading, pole_flag: true, pole_order: order }
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_746,
    -0.491_913_816_097_620_2,
    0.339_946_499_848_118_9e-4,
    0.465_236_289_270_485_8e-4,
    -0.983_744_753_048_795_6e-4,
    0.158_088_703_224_912_5e-3,
    -0.210_264_441_724_104_9e-3,
    0.217_439_618_115_212_6e-3,
    -0.164_318_106_536_763_9e-3,
    0.844_182_239_838_527_4e-4,
    -0.261_908_384_015_814_1e-4,
    0.368_991_826_595_316_2e-5,
];

/// If `z` sits on `-m`, `m` in N0, return `m`.
pub fn nonpositive_integer(z: Complex64) -> Option<u64> {
    let r = z.re.round();
    if z.im.abs() <= POLE_TOL && r <= 0.0 && (z.re - r).abs() <= POLE_TOL {
        Some((-r) as u64)
    } else {
        None
    }
}

fn ln_gamma_right(z: Complex64) -> Complex64 {
    // Re z >= 1/2
    let w = z - 1.0;
    let mut a = c(LANCZOS[0]);
    for (k, ck) in LANCZOS.iter().enumerate().skip(1) {
        a += *ck / (w + k as f64);
    }
    let t = w + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (w + 0.5) * t.ln() - t + a.ln()
}

/// `sin(pi z)` with the integer part removed first.
fn sin_pi(z: Complex64) -> Complex64 {
    let m = z.re.round();
    let f = z - m;
    let s = (f * PI).sin();
    if (m as i64) % 2 == 0 {
        s
    } else {
        -s
    }
}

/// Gamma away from poles (infinite at poles).
pub fn gamma_value(z: Complex64) -> Complex64 {
    if nonpositive_integer(z).is_some() {
        return c(f64::INFINITY);
    }
    if z.re >= 0.5 {
        ln_gamma_right(z).exp()
    } else {
        c(PI) / (sin_pi(z) * ln_gamma_right(1.0 - z).exp())
    }
}

/// `1/Gamma(z)`, entire.
pub fn rgamma(z: Complex64) -> Complex64 {
    if nonpositive_integer(z).is_some() {
        return c(0.0);
    }
    if z.re >= 0.5 {
        (-ln_gamma_right(z)).exp()
    } else {
        sin_pi(z) * ln_gamma_right(1.0 - z).exp() / PI
    }
}

pub fn ln_gamma_real(x: f64) -> f64 {
    assert!(x > 0.0);
    ln_gamma_right(c(x)).re
}

pub fn gamma_fn(z: Complex64) -> MeromorphicValue {
    match nonpositive_integer(z) {
        Some(m) => MeromorphicValue::pole(1, c(gamma_residue(m).to_f64())),
        None => MeromorphicValue::regular(gamma_value(z)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub num: i128,
    pub den: u128,
}

impl Rational {
    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// `Res(Gamma; -m) = (-1)^m / m!` (exact up to m = 33).
pub fn gamma_residue(m: u64) -> Rational {
    let den: u128 = (1..=m as u128).product();
    Rational { num: if m % 2 == 0 { 1 } else { -1 }, den }
}

pub fn factorial(m: u64) -> f64 {
    (1..=m).fold(1.0, |a, k| a * k as f64)
}

/// Binomial with the convention `C(m, -1) = [m == -1]`.
pub fn binom(n: i64, k: i64) -> f64 {
    if k == -1 {
        return if n == -1 { 1.0 } else { 0.0 };
    }
    if k < 0 || n < 0 || k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |a, j| a * (n - j) as f64 / (j + 1) as f64)
}

const BERNOULLI_2K: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

pub fn digamma(z: Complex64) -> Complex64 {
    polygamma(0, z)
}

/// `psi^(m)(z)`: upward recurrence to `Re z >= 20`, then the Stirling series.
pub fn polygamma(m: u32, z: Complex64) -> Complex64 {
    if nonpositive_integer(z).is_some() {
        return c(f64::INFINITY);
    }
    let mf = factorial(m as u64);
    let sign_m = if m % 2 == 0 { 1.0 } else { -1.0 };
    let mut acc = c(0.0);
    let mut w = z;
    while w.re < 20.0 {
        acc -= sign_m * mf / w.powu(m + 1);
        w += 1.0;
    }
    let inv = 1.0 / w;
    let inv2 = inv * inv;
    let tail = if m == 0 {
        let mut s = w.ln() - 0.5 * inv;
        let mut p = inv2;
        for (k, b) in BERNOULLI_2K.iter().enumerate() {
            s -= *b / (2.0 * (k + 1) as f64) * p;
            p *= inv2;
        }
        s
    } else {
        let mut s = factorial(m as u64 - 1) * inv.powu(m) + 0.5 * mf * inv.powu(m + 1);
        let mut p = inv.powu(m + 2);
        for (k, b) in BERNOULLI_2K.iter().enumerate() {
            let k2 = 2 * (k as u64 + 1);
            s += *b * factorial(k2 + m as u64 - 1) / factorial(k2) * p;
            p *= inv2;
        }
        s * if m % 2 == 1 { 1.0 } else { -1.0 }
    };
    acc + tail
}

/// `B(alpha, beta)`; when poles meet, the limit is taken along `(alpha + e, beta + e)`.
pub fn beta(a: Complex64, b: Complex64) -> MeromorphicValue {
    let part = |x: Complex64, scale: f64| -> (bool, Complex64) {
        match nonpositive_integer(x) {
            Some(m) => (true, c(gamma_residue(m).to_f64() / scale)),
            None => (false, gamma_value(x)),
        }
    };
    let (pa, ga) = part(a, 1.0);
    let (pb, gb) = part(b, 1.0);
    let (pab, gab) = part(a + b, 2.0);
    let order = pa as i32 + pb as i32 - pab as i32;
    let lead = if pab { ga * gb / gab } else { ga * gb * rgamma(a + b) };
    match order {
        o if o > 0 => MeromorphicValue::pole(o as u32, lead),
        0 => MeromorphicValue::regular(lead),
        _ => MeromorphicValue::regular(c(0.0)),
    }
}

/// `d^j/d eta^j B(eta + 1, b)` via `D_{k+1} = sum_i C(k,i) L^(i+1) D_{k-i}`.
pub fn beta_deriv(j: u32, eta: Complex64, b: Complex64) -> Result<Complex64, SpecialError> {
    let a = eta + 1.0;
    if [a, b, a + b].iter().any(|x| nonpositive_integer(*x).is_some()) {
        return Err(SpecialError::DerivativeAtPole);
    }
    let b0 = gamma_value(a) * gamma_value(b) * rgamma(a + b);
    // L^(i) for i >= 1
    let l: Vec<Complex64> = (0..j)
        .map(|i| polygamma(i, a) - polygamma(i, a + b))
        .collect();
    let mut d = vec![b0];
    for k in 0..j as usize {
        let mut s = c(0.0);
        for i in 0..=k {
            s += binom(k as i64, i as i64) * l[i] * d[k - i];
        }
        d.push(s);
    }
    Ok(d[j as usize])
}

/// A function on [0, 1] with a declared smoothness order.
#[derive(Clone)]
pub struct SampledFunction01 {
    f: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
    pub smoothness: u32,
}

impl std::fmt::Debug for SampledFunction01 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SampledFunction01(k={})", self.smoothness)
    }
}

impl SampledFunction01 {
    pub fn new<F: Fn(f64) -> Complex64 + Send + Sync + 'static>(f: F, smoothness: u32) -> Self {
        SampledFunction01 { f: Arc::new(f), smoothness }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        (self.f)(t)
    }

    pub fn is_symmetric(&self) -> bool {
        [0.0, 0.03, 0.11, 0.27, 0.38, 0.49].iter().all(|&t| {
            let (a, b) = (self.eval(t), self.eval(1.0 - t));
            (a - b).norm() <= 1e-10 * (1.0 + a.norm())
        })
    }
}

/// Chebyshev series `sum c_k T_k(2t - 1)` on [0, 1].
#[derive(Clone, Debug)]
pub(crate) struct Cheb01 {
    c: Vec<Complex64>,
}

impl Cheb01 {
    pub fn fit<F: Fn(f64) -> Complex64>(f: F) -> Self {
        let mut n = 32;
        loop {
            let vals: Vec<Complex64> = (0..n)
                .map(|j| {
                    let x = (PI * (j as f64 + 0.5) / n as f64).cos();
                    f(0.5 * (x + 1.0))
                })
                .collect();
            let mut coef = vec![c(0.0); n];
            for (k, ck) in coef.iter_mut().enumerate() {
                let mut s = c(0.0);
                for (j, v) in vals.iter().enumerate() {
                    s += v * (PI * k as f64 * (j as f64 + 0.5) / n as f64).cos();
                }
                *ck = s * (2.0 / n as f64);
            }
            coef[0] *= 0.5;
            let scale = coef.iter().map(|x| x.norm()).fold(0.0, f64::max);
            let tail = coef[n - 4..].iter().map(|x| x.norm()).fold(0.0, f64::max);
            if tail <= 1e-14 * scale.max(1e-300) || n >= 256 {
                let mut last = n;
                while last > 1 && coef[last - 1].norm() <= 1e-15 * scale {
                    last -= 1;
                }
                coef.truncate(last);
                return Cheb01 { c: coef };
            }
            n *= 2;
        }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let x = 2.0 * t - 1.0;
        let (mut b1, mut b2) = (c(0.0), c(0.0));
        for ck in self.c.iter().skip(1).rev() {
            let b0 = ck + b1 * (2.0 * x) - b2;
            b2 = b1;
            b1 = b0;
        }
        self.c[0] + b1 * x - b2
    }

    /// `x d/dx` in the variable `x = 2t - 1`, which equals `(t - 1/2) d/dt`.
    pub fn x_dx(&self) -> Self {
        let n = self.c.len();
        if n < 2 {
            return Cheb01 { c: vec![c(0.0)] };
        }
        let mut d = vec![c(0.0); n + 1];
        for k in (1..n).rev() {
            d[k - 1] = d[k + 1] + self.c[k] * (2.0 * k as f64);
        }
        d[0] *= 0.5;
        d.truncate(n - 1);
        let mut out = vec![c(0.0); n];
        for (k, dk) in d.iter().enumerate() {
            if k == 0 {
                out[1] += dk;
            } else {
                out[k + 1] += dk * 0.5;
                out[k - 1] += dk * 0.5;
            }
        }
        Cheb01 { c: out }
    }
}

/// `int_0^1 f t^{w-1} (1-t)^{w-1} dt` for `Re w > 0`.
fn beta_direct<F: Fn(f64) -> Complex64>(f: F, w: Complex64) -> Complex64 {
    tanh_sinh(
        |t, da, db| {
            let _ = t;
            let ft = if da < 0.5 { f(da) } else { f(1.0 - db) };
            ft * ((w - 1.0) * (da.ln() + db.ln())).exp()
        },
        0.0,
        1.0,
        1e-15,
    )
    .value
}

/// Continuation of `beta[f](z)` through the functional relation, down to `Re z > -depth`.
pub fn beta_functional(f: &SampledFunction01, z: Complex64, depth: u32) -> Result<MeromorphicValue, SpecialError> {
    if !f.is_symmetric() {
        return Err(SpecialError::Asymmetric);
    }
    if depth > f.smoothness {
        return Err(SpecialError::InsufficientSmoothness { depth, order: f.smoothness });
    }
    let mut steps = if z.re > 0.0 { 0 } else { (-z.re).floor() as u32 + 1 };
    if steps > depth {
        return Err(SpecialError::OutsideContinuation { re: z.re, depth });
    }
    // starting just right of the imaginary axis makes the direct integral nearly divergent
    if z.re + (steps as f64) < 0.5 && steps < depth {
        steps += 1;
    }
    if steps == 0 {
        return Ok(MeromorphicValue::regular(beta_direct(|t| f.eval(t), z)));
    }
    // series[i] = ((t - 1/2) d/dt)^i f
    let mut series = vec![Cheb01::fit(|t| f.eval(t))];
    for i in 0..steps as usize {
        let next = series[i].x_dx();
        series.push(next);
    }
    let top = z + steps as f64;
    let mut vals: Vec<Complex64> = (0..=steps as usize)
        .map(|i| {
            if i == 0 {
                beta_direct(|t| f.eval(t), top)
            } else {
                beta_direct(|t| series[i].eval(t), top)
            }
        })
        .collect();
    let mut pole = false;
    for s in (0..steps).rev() {
        let w = z + s as f64;
        let at_zero = w.norm() <= POLE_TOL;
        let mut next = Vec::with_capacity(vals.len() - 1);
        for i in 0..vals.len() - 1 {
            let v = if at_zero {
                2.0 * (vals[i] + vals[i + 1])
            } else {
                (2.0 / w) * ((2.0 * w + 1.0) * vals[i] + vals[i + 1])
            };
            next.push(v);
        }
        pole |= at_zero;
        vals = next;
    }
    Ok(if pole {
        MeromorphicValue::pole(1, vals[0])
    } else {
        MeromorphicValue::regular(vals[0])
    })
}

/// Shifted Legendre coefficients `b_k` with `f = sum b_k P_k(2x - 1)` on [0, 1].
fn legendre01(f: &SampledFunction01) -> Vec<Complex64> {
    let n = 96;
    let r = gauss_legendre(n);
    let xs: Vec<f64> = r.nodes.iter().map(|x| 0.5 * (x + 1.0)).collect();
    let fx: Vec<Complex64> = xs.iter().map(|&x| f.eval(x)).collect();
    let kmax = n - 8;
    let mut b = vec![c(0.0); kmax];
    for (j, &t) in r.nodes.iter().enumerate() {
        // P_k(t) by recurrence
        let (mut p0, mut p1) = (1.0, t);
        for (k, bk) in b.iter_mut().enumerate() {
            let pk = if k == 0 {
                1.0
            } else if k == 1 {
                t
            } else {
                let p2 = ((2.0 * k as f64 - 1.0) * t * p1 - (k as f64 - 1.0) * p0) / k as f64;
                p0 = p1;
                p1 = p2;
                p2
            };
            *bk += fx[j] * (r.weights[j] * pk * 0.5);
        }
    }
    for (k, bk) in b.iter_mut().enumerate() {
        *bk *= 2.0 * k as f64 + 1.0;
    }
    let scale = b.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let mut last = b.len();
    while last > 1 && b[last - 1].norm() <= 2.0 * (2 * last - 1) as f64 * f64::EPSILON * scale {
        last -= 1;
    }
    b.truncate(last);
    b
}

/// `int_0^1 x^{z-1} P_k(2x-1) dx = prod_{j=1..k}(z-j) / prod_{j=0..k}(z+j)`, for all k at once.
fn legendre_mellin(b: &[Complex64], z: Complex64) -> Complex64 {
    let mut t = 1.0 / z;
    let mut s = b[0] * t;
    for (k, bk) in b.iter().enumerate().skip(1) {
        t *= (z - k as f64) / (z + k as f64);
        s += bk * t;
    }
    s
}

fn legendre_mellin_residue(b: &[Complex64], q: u64) -> Complex64 {
    let mut s = c(0.0);
    for (k, bk) in b.iter().enumerate().skip(q as usize) {
        let k = k as u64;
        // (-1)^(k+q) (k+q)! / (q! q! (k-q)!)
        let mut r = 1.0;
        for j in 1..=k {
            r *= (q + j) as f64;
        }
        for j in 1..=(k - q) {
            r /= j as f64;
        }
        for j in 1..=q {
            r /= j as f64;
        }
        if (k + q) % 2 == 1 {
            r = -r;
        }
        s += bk * r;
    }
    s
}

/// Taylor coefficients `f^(q)(0)/q!`, `q < count`, read off as residues of `M[f]`.
pub fn taylor_at_zero(f: &SampledFunction01, count: u32) -> Vec<Complex64> {
    let b = legendre01(f);
    (0..count as u64).map(|q| legendre_mellin_residue(&b, q)).collect()
}

/// Continuation of `M[f](z) = int_0^1 f x^{z-1} dx` to `Re z > -depth`.
///
/// Left of the line of convergence the value is the explicit pole part
/// `f^(q)(0) / (q! (z+q))` plus the regular remainder, both read from a
/// shifted Legendre expansion whose Mellin transforms are rational in `z`.
pub fn mellin_functional(f: &SampledFunction01, z: Complex64, depth: u32) -> Result<MeromorphicValue, SpecialError> {
    if depth > f.smoothness {
        return Err(SpecialError::InsufficientSmoothness { depth, order: f.smoothness });
    }
    if z.re <= -(depth as f64) {
        return Err(SpecialError::OutsideContinuation { re: z.re, depth });
    }
    if z.re > 0.5 {
        let v = tanh_sinh(
            |x, da, _| {
                let _ = x;
                f.eval(da) * ((z - 1.0) * da.ln()).exp()
            },
            0.0,
            1.0,
            1e-15,
        );
        return Ok(MeromorphicValue::regular(v.value));
    }
    let b = legendre01(f);
    if let Some(q) = nonpositive_integer(z) {
        return Ok(MeromorphicValue::pole(1, legendre_mellin_residue(&b, q)));
    }
    Ok(MeromorphicValue::regular(legendre_mellin(&b, z)))
}

/// Right-hand side of `(2t-1)^{2l} = sum_q C(l,q) (-4)^q ((1-t)t)^q`.
pub fn interval_identity_rhs(ell: u32, t: f64) -> f64 {
    (0..=ell)
        .map(|q| binom(ell as i64, q as i64) * (-4.0f64).powi(q as i32) * ((1.0 - t) * t).powi(q as i32))
        .sum()
}

/// Volume of the unit sphere `S^k`.
pub fn sphere_volume(k: u32) -> f64 {
    let h = (k as f64 + 1.0) / 2.0;
    2.0 * PI.powf(h) / gamma_value(c(h)).re
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: f64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn gamma_known_values() {
        assert!(close(gamma_fn(c(0.5)).value, PI.sqrt(), 1e-14));
        assert!(close(gamma_value(c(5.0)), 24.0, 1e-14));
        assert!(close(gamma_value(c(-0.5)), -2.0 * PI.sqrt(), 1e-14));
        assert!(close(gamma_value(c(-1.5)), 4.0 * PI.sqrt() / 3.0, 1e-14));
        let p = gamma_fn(c(-1.0));
        assert!(p.pole_flag && p.pole_order == 1 && close(p.value, -1.0, 0.0));
        // |Gamma(i)|^2 = pi / sinh(pi)
        let g = gamma_value(Complex64::new(0.0, 1.0));
        assert!((g.norm_sqr() - PI / PI.sinh()).abs() < 1e-14);
    }

    #[test]
    fn residues() {
        assert_eq!(gamma_residue(0), Rational { num: 1, den: 1 });
        assert_eq!(gamma_residue(1).to_f64(), -1.0);
        assert_eq!(gamma_residue(3), Rational { num: -1, den: 6 });
    }

    #[test]
    fn digamma_values() {
        let eg = 0.577_215_664_901_532_9;
        assert!(close(digamma(c(1.0)), -eg, 1e-15));
        assert!(close(digamma(c(0.5)), -eg - 2.0 * 2f64.ln(), 1e-14));
        assert!(close(polygamma(1, c(1.0)), PI * PI / 6.0, 1e-14));
        // psi''(1) = -2 zeta(3)
        assert!(close(polygamma(2, c(1.0)), -2.0 * 1.202_056_903_159_594_2, 1e-14));
        assert!(close(digamma(c(-0.5)), 2.0 - eg - 2.0 * 2f64.ln(), 1e-13));
    }

    #[test]
    fn beta_values() {
        assert!(close(beta(c(1.0), c(1.0)).value, 1.0, 1e-14));
        assert!(close(beta(c(1.0), c(0.5)).value, 2.0, 1e-14));
        assert!(close(beta(c(0.5), c(0.5)).value, PI, 1e-14));
        // Gamma(-1/2)^2 / Gamma(-1) = 0
        let z = beta(c(-0.5), c(-0.5));
        assert!(!z.pole_flag && z.value.norm() == 0.0);
        let p = beta(c(0.0), c(0.0));
        assert!(p.pole_flag && close(p.value, 2.0, 1e-14));
    }

    #[test]
    fn beta_derivatives() {
        assert!(close(beta_deriv(0, c(0.0), c(0.5)).unwrap(), 2.0, 1e-14));
        assert!(close(beta_deriv(1, c(0.0), c(1.0)).unwrap(), -1.0, 1e-14));
        assert!(close(beta_deriv(1, c(0.0), c(0.5)).unwrap(), 4.0 * 2f64.ln() - 4.0, 1e-14));
        // d^2/deta^2 1/(eta+1) = 2/(eta+1)^3
        assert!(close(beta_deriv(2, c(1.0), c(1.0)).unwrap(), 0.25, 1e-13));
        assert_eq!(beta_deriv(1, c(-1.0), c(1.0)), Err(SpecialError::DerivativeAtPole));
    }

    #[test]
    fn beta_functional_examples() {
        let one = SampledFunction01::new(|_| c(1.0), 8);
        assert!(close(beta_functional(&one, c(1.0), 0).unwrap().value, 1.0, 1e-13));
        assert!(close(beta_functional(&one, c(0.5), 0).unwrap().value, PI, 1e-12));
        let v = beta_functional(&one, c(-0.5), 1).unwrap();
        assert!(!v.pole_flag && v.value.norm() < 1e-12);
        // B(z,z) at z = -0.3 against the Gamma quotient
        let z = c(-0.3);
        let want = gamma_value(z) * gamma_value(z) * rgamma(2.0 * z);
        let got = beta_functional(&one, z, 1).unwrap().value;
        assert!((got - want).norm() < 1e-11 * want.norm(), "{got} {want}");
        let p = beta_functional(&one, c(-1.0), 2).unwrap();
        assert!(p.pole_flag && close(p.value, 4.0, 1e-10));
        let asym = SampledFunction01::new(|t| c(t), 8);
        assert_eq!(beta_functional(&asym, c(1.0), 0), Err(SpecialError::Asymmetric));
        let rough = SampledFunction01::new(|_| c(1.0), 0);
        assert!(beta_functional(&rough, c(-0.5), 1).is_err());
    }

    #[test]
    fn mellin_functional_examples() {
        let one = SampledFunction01::new(|_| c(1.0), 4);
        assert!(close(mellin_functional(&one, c(2.0), 0).unwrap().value, 0.5, 1e-14));
        let p = mellin_functional(&one, c(0.0), 1).unwrap();
        assert!(p.pole_flag && close(p.value, 1.0, 1e-14));
        let lin = SampledFunction01::new(|x| c(x), 4);
        assert!(close(mellin_functional(&lin, c(-0.5), 1).unwrap().value, 2.0, 1e-13));
        assert!(mellin_functional(&lin, c(-1.5), 1).is_err());
        // residues of exp: 1/q!
        let e = SampledFunction01::new(|x| c(x.exp()), 8);
        for q in 0..5u64 {
            let r = mellin_functional(&e, c(-(q as f64)), 6).unwrap();
            assert!(r.pole_flag && close(r.value, 1.0 / factorial(q), 1e-9), "{q} {}", r.value);
        }
        // continuation agrees with direct integration across Re z = 1/2
        let z = Complex64::new(0.45, 0.3);
        let a = mellin_functional(&e, z, 2).unwrap().value;
        let b = mellin_functional(&e, z + 0.1, 2).unwrap().value;
        let d = tanh_sinh(|_, x, _| x.exp() * ((z + 0.1 - 1.0) * x.ln()).exp(), 0.0, 1.0, 1e-15).value;
        assert!((b - d).norm() < 1e-13);
        assert!(a.norm().is_finite());
    }

    #[test]
    fn interval_identity() {
        for l in 0..=6 {
            for i in 0..=20 {
                let t = i as f64 / 20.0;
                assert!(((2.0 * t - 1.0).powi(2 * l as i32) - interval_identity_rhs(l, t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sphere_volumes() {
        assert!((sphere_volume(0) - 2.0).abs() < 1e-14);
        assert!((sphere_volume(1) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_volume(2) - 4.0 * PI).abs() < 1e-13);
    }
}
