//! Quadrature rules shared by the numerical modules.

use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

#[derive(Clone, Debug)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss-Legendre on [-1, 1], cached per order.
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Rule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&n) {
        return r.clone();
    }
    let rule = Arc::new(legendre_newton(n));
    cache.lock().unwrap().insert(n, rule.clone());
    rule
}

fn legendre_newton(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_pd(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_pd(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

fn legendre_pd(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
}

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208626368816,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

fn gk21<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[10];
    let mut g = Complex64::new(0.0, 0.0);
    let mut abs_sum = fc.norm() * WGK[10];
    let mut vals = [Complex64::new(0.0, 0.0); 21];
    vals[10] = fc;
    for j in 0..10 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        vals[j] = f1;
        vals[20 - j] = f2;
        k += (f1 + f2) * WGK[j];
        abs_sum += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            g += (f1 + f2) * WG[j / 2];
        }
    }
    let mean = k * 0.5;
    let mut asc = WGK[10] * (fc - mean).norm();
    for j in 0..10 {
        asc += WGK[j] * ((vals[j] - mean).norm() + (vals[20 - j] - mean).norm());
    }
    let asc = asc * h.abs();
    let mut err = ((k - g) * h).norm();
    if asc != 0.0 && err != 0.0 {
        err = asc * (1.0f64).min((200.0 * err / asc).powf(1.5));
    }
    // round-off floor
    let absint = abs_sum * h.abs();
    err = err.max(4.0 * f64::EPSILON * absint);
    (k * h, err, absint)
}

struct Seg {
    a: f64,
    b: f64,
    val: Complex64,
    err: f64,
    abs: f64,
}

impl PartialEq for Seg {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Seg {}
impl PartialOrd for Seg {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Seg {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive Gauss-Kronrod 21 on [a, b] with a panel budget.
pub fn adaptive_limited<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segs: usize,
) -> QuadResult {
    if a == b {
        return QuadResult { value: Complex64::new(0.0, 0.0), error: 0.0 };
    }
    let (v, e, ab) = gk21(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Seg { a, b, val: v, err: e, abs: ab });
    let mut total = v;
    let mut err = e;
    let mut total_abs = ab;
    let rel_tol = rel_tol.max(8.0 * f64::EPSILON);
    while err > abs_tol.max(rel_tol * total.norm()).max(64.0 * f64::EPSILON * total_abs)
        && heap.len() < max_segs
    {
        let s = heap.pop().unwrap();
        let m = 0.5 * (s.a + s.b);
        if m <= s.a || m >= s.b {
            heap.push(s);
            break;
        }
        let (v1, e1, a1) = gk21(f, s.a, m);
        let (v2, e2, a2) = gk21(f, m, s.b);
        total += v1 + v2 - s.val;
        err += e1 + e2 - s.err;
        total_abs += a1 + a2 - s.abs;
        heap.push(Seg { a: s.a, b: m, val: v1, err: e1, abs: a1 });
        heap.push(Seg { a: m, b: s.b, val: v2, err: e2, abs: a2 });
    }
    // re-sum in interval order so the result does not depend on heap history
    let mut segs: Vec<Seg> = heap.into_vec();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = segs.iter().fold(Complex64::new(0.0, 0.0), |acc, s| acc + s.val);
    let error = segs.iter().map(|s| s.err).sum();
    QuadResult { value, error }
}

/// Adaptive quadrature over consecutive panels `breaks[i]..breaks[i+1]`.
pub fn adaptive_panels<F: Fn(f64) -> Complex64>(f: &F, breaks: &[f64], abs_tol: f64, rel_tol: f64) -> QuadResult {
    let np = breaks.len().saturating_sub(1).max(1);
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    for w in breaks.windows(2) {
        let r = adaptive_limited(f, w[0], w[1], abs_tol / np as f64, rel_tol, 2000);
        value += r.value;
        error += r.error;
    }
    QuadResult { value, error }
}

/// Tanh-sinh on [a, b]. The integrand receives `(x, x - a, b - x)` so that
/// endpoint distances are exact even when they underflow relative to `x`.
pub fn tanh_sinh<F: Fn(f64, f64, f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> QuadResult {
    let half = 0.5 * (b - a);
    let tmax = 6.5;
    let eval = |t: f64| -> Complex64 {
        let u = 0.5 * PI * t.sinh();
        let ch = t.cosh();
        // distance to the nearer endpoint, in units of the half-width
        let e = (-2.0 * u.abs()).exp();
        let d = 2.0 * e / (1.0 + e); // 1 - tanh|u|
        let w = 0.5 * PI * ch / (u.cosh() * u.cosh());
        if d * half <= 0.0 || !w.is_finite() {
            return Complex64::new(0.0, 0.0);
        }
        let (x, da, db) = if u < 0.0 {
            (a + d * half, d * half, (2.0 - d) * half)
        } else {
            (b - d * half, (2.0 - d) * half, d * half)
        };
        if da <= 0.0 || db <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        f(x, da, db) * (w * half)
    };
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * h <= tmax {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut prev = sum * h;
    let mut err = f64::INFINITY;
    for _level in 0..9 {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= tmax {
            let t = k as f64 * h;
            sum += eval(t) + eval(-t);
            k += 2;
        }
        let cur = sum * h;
        let last = err;
        err = (cur - prev).norm();
        prev = cur;
        if err <= tol * cur.norm().max(1e-300) || err <= 1e-300 {
            break;
        }
        // round-off reached: refinement no longer shrinks the difference
        if err <= 1e-14 * cur.norm() && err >= 0.5 * last {
            break;
        }
    }
    QuadResult { value: prev, error: err }
}

/// Periodic trapezoid on [0, 2 pi), doubling until the estimate settles.
pub fn periodic_trapezoid<F: Fn(f64) -> Complex64>(f: F, start: usize, max: usize, tol: f64) -> Complex64 {
    let mut n = start.max(2);
    let step = |n: usize, odd_only: bool| -> Complex64 {
        let h = 2.0 * PI / n as f64;
        let mut s = Complex64::new(0.0, 0.0);
        let mut i = if odd_only { 1 } else { 0 };
        let inc = if odd_only { 2 } else { 1 };
        while i < n {
            s += f(i as f64 * h);
            i += inc;
        }
        s
    };
    let mut sum = step(n, false);
    let mut est = sum * (2.0 * PI / n as f64);
    while n < max {
        n *= 2;
        sum += step(n, true);
        let next = sum * (2.0 * PI / n as f64);
        let diff = (next - est).norm();
        est = next;
        if diff <= tol * est.norm().max(1e-300) {
            break;
        }
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let r = gauss_legendre(10);
        let s: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_log_singularity() {
        let r = adaptive_limited(&|x: f64| Complex64::new(x.ln(), 0.0), 0.0, 1.0, 1e-13, 1e-13, 4000);
        assert!((r.value.re + 1.0).abs() < 1e-12);
    }

    #[test]
    fn tanh_sinh_endpoint_power() {
        let r = tanh_sinh(|_, da, _| Complex64::new(da.powf(-0.9), 0.0), 0.0, 1.0, 1e-14);
        assert!((r.value.re - 10.0).abs() < 1e-10, "{}", r.value.re);
    }
}
