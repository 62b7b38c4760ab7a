//! Expansion fitting on sampled boundary profiles and numerical Mellin probes.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

use crate::coefficients::{fiber_sphere_integral, fiber_sphere_taylor, BoundaryWeight, CoeffError};
use crate::index_calculus::{Index, IndexSet};
use crate::quad::{gauss_legendre, tanh_sinh};
use crate::special_fn::{
    beta, beta_functional, binom, factorial, mellin_functional, nonpositive_integer, MeromorphicValue,
    SampledFunction01, SpecialError,
};
use crate::transforms::{CutoffSpec, PhgComponentCyl, TransformError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsymError {
    #[error("ill-conditioned model (condition {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("probe inconclusive (ring residual {residual:e})")]
    Inconclusive { residual: f64 },
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error(transparent)]
    Coefficient(#[from] CoeffError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `rho_j = rho0 * ratio^j`, `j < count`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometricGrid {
    pub rho0: f64,
    pub ratio: f64,
    pub count: usize,
}

impl Default for GeometricGrid {
    fn default() -> Self {
        GeometricGrid { rho0: 1e-2, ratio: 0.8, count: 40 }
    }
}

impl GeometricGrid {
    pub fn new(rho0: f64, ratio: f64, count: usize) -> Result<Self, AsymError> {
        if !(rho0 > 0.0 && rho0 <= 0.5) || !(ratio > 0.0 && ratio < 1.0) || count < 2 {
            return Err(AsymError::Grid(format!("rho0={rho0} ratio={ratio} count={count}")));
        }
        Ok(GeometricGrid { rho0, ratio, count })
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.rho0 * self.ratio.powi(j as i32)).collect()
    }
}

/// Terms `rho^e log^k rho`, sorted by `(Re e, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionModel {
    pub terms: Vec<(Complex64, u32)>,
}

impl ExpansionModel {
    pub fn new(mut terms: Vec<(Complex64, u32)>) -> Self {
        terms.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)).then(a.1.cmp(&b.1)));
        terms.dedup_by(|a, b| (a.0 - b.0).norm() < 1e-9 && a.1 == b.1);
        ExpansionModel { terms }
    }

    pub fn real(terms: &[(f64, u32)]) -> Self {
        Self::new(terms.iter().map(|&(e, k)| (c(e), k)).collect())
    }

    /// Members of `set` with `Re e < t_max`.
    pub fn from_index_set(set: &IndexSet, t_max: f64) -> Self {
        Self::new(set.members_below(t_max).into_iter().map(|i| (i.gamma, i.k)).collect())
    }

    pub fn with(&self, term: (Complex64, u32)) -> Self {
        let mut t = self.terms.clone();
        t.push(term);
        Self::new(t)
    }

    pub fn without(&self, term: (Complex64, u32)) -> Self {
        Self::new(
            self.terms
                .iter()
                .copied()
                .filter(|t| !((t.0 - term.0).norm() < 1e-9 && t.1 == term.1))
                .collect(),
        )
    }

    pub fn contains(&self, term: (Complex64, u32)) -> bool {
        self.terms.iter().any(|t| (t.0 - term.0).norm() < 1e-9 && t.1 == term.1)
    }

    pub fn index_of(&self, term: (Complex64, u32)) -> Option<usize> {
        self.terms.iter().position(|t| (t.0 - term.0).norm() < 1e-9 && t.1 == term.1)
    }

    pub fn as_index_set(&self) -> IndexSet {
        crate::index_calculus::generate(&self.terms.iter().map(|t| Index::new(t.0, t.1)).collect::<Vec<_>>())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionFit {
    pub model: ExpansionModel,
    pub coefficients: Vec<Complex64>,
    /// One-sigma scale of each coefficient from the residual and the normal equations.
    pub coefficient_sigma: Vec<f64>,
    pub residual_order: f64,
    /// RMS of the row-weighted residual; rows carry the weight `rho^-p`, `p` the empirical leading exponent.
    pub residual_rms: f64,
    pub condition: f64,
    /// The residual sits at round-off level, so its slope carries no information.
    pub noise_limited: bool,
    pub unreliable: bool,
}

impl ExpansionFit {
    pub fn coefficient(&self, term: (Complex64, u32)) -> Option<Complex64> {
        self.model.index_of(term).map(|i| self.coefficients[i])
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "model": self.model.terms.iter().map(|t| json!([t.0.re, t.0.im, t.1])).collect::<Vec<_>>(),
            "coefficients": self.coefficients.iter().map(|z| json!([z.re, z.im])).collect::<Vec<_>>(),
            "residual_order": self.residual_order,
            "condition": self.condition,
        })
    }
}

pub const MAX_CONDITION: f64 = 1e10;

/// Residuals below this fraction of the data scale are treated as equal when counting log powers.
pub const LOG_POWER_FLOOR: f64 = 1e-10;

fn row_weights(rho: &[f64], values: &[Complex64]) -> Vec<f64> {
    let p = log_slope_guess(rho, values);
    let p = if p.is_finite() { p.clamp(0.0, 8.0) } else { 0.0 };
    let rmin = rho.iter().cloned().fold(f64::INFINITY, f64::min);
    rho.iter().map(|r| (r / rmin).powf(-p)).collect()
}

/// RMS of the row-weighted data, the scale against which `residual_rms` is read.
pub fn weighted_scale(rho: &[f64], values: &[Complex64]) -> f64 {
    let w = row_weights(rho, values);
    (values.iter().zip(&w).map(|(v, w)| (v * w).norm_sqr()).sum::<f64>() / values.len().max(1) as f64).sqrt()
}

/// Linear least squares of `values` against `rho^e log^k rho` with sup-norm column scaling.
pub fn fit_expansion(rho: &[f64], values: &[Complex64], model: &ExpansionModel) -> Result<ExpansionFit, AsymError> {
    let nrow = rho.len();
    let ncol = model.terms.len();
    if ncol == 0 || nrow < 2 * ncol {
        return Err(AsymError::Grid(format!("{nrow} samples for {ncol} terms")));
    }
    // rows are weighted by rho^-p, p the empirical leading exponent, so that the fit
    // measures relative error near the boundary whatever the model
    let p = log_slope_guess(rho, values);
    let p = if p.is_finite() { p.clamp(0.0, 8.0) } else { 0.0 };
    let wts = row_weights(rho, values);
    let mut a = DMatrix::<Complex64>::zeros(nrow, ncol);
    for (j, &r) in rho.iter().enumerate() {
        let l = r.ln();
        for (i, &(e, k)) in model.terms.iter().enumerate() {
            a[(j, i)] = (e * l).exp() * l.powi(k as i32) * wts[j];
        }
    }
    let scales: Vec<f64> = (0..ncol)
        .map(|i| a.column(i).iter().map(|z| z.norm()).fold(0.0, f64::max))
        .collect();
    for (i, s) in scales.iter().enumerate() {
        a.column_mut(i).unscale_mut(*s);
    }
    let b = DVector::from_iterator(nrow, values.iter().zip(&wts).map(|(v, w)| v * w));
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = smax / smin;
    if !(condition <= MAX_CONDITION) {
        return Err(AsymError::IllConditioned { condition });
    }
    let x = svd.solve(&b, 0.0).map_err(|e| AsymError::Precondition(e.to_string()))?;
    let wres: Vec<f64> = (&b - &a * &x).iter().map(|z| z.norm()).collect();
    let resid: Vec<f64> = wres.iter().zip(&wts).map(|(r, w)| r / w).collect();
    let dof = (nrow - ncol).max(1) as f64;
    let rms = (wres.iter().map(|r| r * r).sum::<f64>() / nrow as f64).sqrt();
    let s_hat = (wres.iter().map(|r| r * r).sum::<f64>() / dof).sqrt();
    let v_t = svd.v_t.as_ref().unwrap();
    let coefficient_sigma: Vec<f64> = (0..ncol)
        .map(|i| {
            let var: f64 = (0..sv.len()).map(|k| v_t[(k, i)].norm_sqr() / (sv[k] * sv[k])).sum();
            s_hat * var.sqrt() / scales[i]
        })
        .collect();
    let coefficients: Vec<Complex64> = (0..ncol).map(|i| x[i] / scales[i]).collect();

    let vmax = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let floor_at = |i: usize| 256.0 * f64::EPSILON * (values[i].norm().max(vmax * (rho[i] / rho.iter().cloned().fold(0.0, f64::max)).powf(p))).max(1e-300);
    let mut idx: Vec<usize> = (0..nrow).collect();
    idx.sort_by(|&i, &j| rho[i].total_cmp(&rho[j]));
    let fine: Vec<usize> = idx[..(nrow / 3).max(2)].to_vec();
    let max_re = model.terms.iter().map(|t| t.0.re).fold(f64::NEG_INFINITY, f64::max);
    let noise_limited = fine.iter().all(|&i| resid[i] <= floor_at(i));
    let residual_order = if noise_limited {
        max_re + 1.0
    } else {
        let pts: Vec<(f64, f64)> = fine.iter().map(|&i| (rho[i].ln(), resid[i].max(floor_at(i)).ln())).collect();
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    };
    Ok(ExpansionFit {
        model: model.clone(),
        coefficients,
        coefficient_sigma,
        residual_order,
        residual_rms: rms,
        condition,
        noise_limited,
        unreliable: residual_order < max_re - 0.5,
    })
}

/// Result of a fit with a free leading exponent.
#[derive(Clone, Debug)]
pub struct ExponentFit {
    pub exponent: f64,
    pub fit: ExpansionFit,
}

/// Variable projection over a real exponent `e`: minimize the residual of `family(e)` for
/// `e` in `[guess - halfwidth, guess + halfwidth]`.
pub fn fit_leading_exponent<M: Fn(f64) -> ExpansionModel>(
    rho: &[f64],
    values: &[Complex64],
    family: M,
    guess: f64,
    halfwidth: f64,
) -> Result<ExponentFit, AsymError> {
    let cost = |e: f64| -> f64 {
        fit_expansion(rho, values, &family(e)).map(|f| f.residual_rms).unwrap_or(f64::INFINITY)
    };
    let steps = 90;
    let (lo, hi) = (guess - halfwidth, guess + halfwidth);
    let h = (hi - lo) / steps as f64;
    let scan: Vec<f64> = (0..=steps).map(|i| cost(lo + h * i as f64)).collect();
    // the valley around the true exponent can be narrower than the scan step, so every
    // local minimum of the scan is refined
    let minima: Vec<usize> = (0..=steps)
        .filter(|&i| (i == 0 || scan[i] <= scan[i - 1]) && (i == steps || scan[i] <= scan[i + 1]))
        .collect();
    let golden = |mut a: f64, mut b: f64| -> (f64, f64) {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = b - g * (b - a);
        let mut x2 = a + g * (b - a);
        let (mut f1, mut f2) = (cost(x1), cost(x2));
        while b - a > 1e-12 {
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = cost(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = cost(x2);
            }
        }
        let x = 0.5 * (a + b);
        (x, cost(x))
    };
    let mut best = (guess, f64::INFINITY);
    for i in minima {
        let r = golden(lo + h * (i as f64 - 1.0), lo + h * (i as f64 + 1.0));
        if r.1 < best.1 {
            best = r;
        }
    }
    let e = best.0;
    Ok(ExponentFit { exponent: e, fit: fit_expansion(rho, values, &family(e))? })
}

/// Leading exponent estimate from the log-derivative between the two finest samples.
pub fn log_slope_guess(rho: &[f64], values: &[Complex64]) -> f64 {
    let mut idx: Vec<usize> = (0..rho.len()).collect();
    idx.sort_by(|&i, &j| rho[i].total_cmp(&rho[j]));
    let (i, j) = (idx[0], idx[1]);
    (values[i].norm().ln() - values[j].norm().ln()) / (rho[i].ln() - rho[j].ln())
}

/// Thresholds for [`detect_presence`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PresenceThresholds {
    pub residual_factor: f64,
    pub sigma_factor: f64,
}

impl Default for PresenceThresholds {
    fn default() -> Self {
        PresenceThresholds { residual_factor: 1e3, sigma_factor: 10.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Presence {
    pub present: bool,
    pub coefficient: Complex64,
    pub sigma: f64,
    pub improvement: f64,
}

/// Whether `probe` is needed on top of `base` to describe the samples.
pub fn detect_presence(
    rho: &[f64],
    values: &[Complex64],
    base: &ExpansionModel,
    probe: (Complex64, u32),
    thr: PresenceThresholds,
) -> Result<Presence, AsymError> {
    if base.contains(probe) {
        return Err(AsymError::Precondition("probe term already in the base model".into()));
    }
    let without = fit_expansion(rho, values, base)?;
    let with_model = base.with(probe);
    let with = fit_expansion(rho, values, &with_model)?;
    let i = with_model.index_of(probe).unwrap();
    let coefficient = with.coefficients[i];
    let sigma = with.coefficient_sigma[i];
    let improvement = without.residual_rms / with.residual_rms.max(1e-300);
    let present = improvement >= thr.residual_factor && coefficient.norm() >= thr.sigma_factor * sigma;
    Ok(Presence { present, coefficient, sigma, improvement })
}

/// Smallest log power `k` at exponent `e` that the data require: adding `(e, k)` improves the
/// residual by at least `1e3`, adding `(e, k+1)` by less than `10`. `rest` holds the other terms.
pub fn leading_log_power(
    rho: &[f64],
    values: &[Complex64],
    e: Complex64,
    rest: &ExpansionModel,
    max_k: u32,
) -> Result<Option<u32>, AsymError> {
    let model_upto = |k: i64| -> ExpansionModel {
        let mut m = rest.clone();
        for j in 0..=k {
            m = m.with((e, j as u32));
        }
        m
    };
    let floor = LOG_POWER_FLOOR * weighted_scale(rho, values);
    let mut rms = Vec::new();
    for k in -1..=(max_k as i64 + 1) {
        rms.push(fit_expansion(rho, values, &model_upto(k))?.residual_rms.max(floor));
    }
    for k in 0..=max_k as usize {
        let gain_k = rms[k] / rms[k + 1];
        let gain_next = rms[k + 1] / rms[k + 2];
        if gain_k >= 1e3 && gain_next < 10.0 {
            return Ok(Some(k as u32));
        }
    }
    Ok(None)
}

/// Like [`leading_log_power`], but the exponent is refitted for every candidate log count:
/// `family(x, k)` is the model with leading terms `(x, 0..=k)` (none for `k = -1`). A fixed
/// slightly-wrong exponent would otherwise leak into a spurious log column.
pub fn leading_log_power_free<M: Fn(f64, i64) -> ExpansionModel>(
    rho: &[f64],
    values: &[Complex64],
    family: M,
    guess: f64,
    halfwidth: f64,
    max_k: u32,
) -> Result<Option<u32>, AsymError> {
    let floor = LOG_POWER_FLOOR * weighted_scale(rho, values);
    let mut rms = Vec::new();
    for k in -1..=(max_k as i64 + 1) {
        let f = fit_leading_exponent(rho, values, |x| family(x, k), guess, halfwidth)?;
        rms.push(f.fit.residual_rms.max(floor));
    }
    for k in 0..=max_k as usize {
        if rms[k] / rms[k + 1] >= 1e3 && rms[k + 1] / rms[k + 2] < 10.0 {
            return Ok(Some(k as u32));
        }
    }
    Ok(None)
}

/// Ring samples and Laurent data around a candidate pole.
#[derive(Clone, Debug, PartialEq)]
pub struct MellinProbe {
    pub z_center: Complex64,
    pub radius: f64,
    pub ring_samples: Vec<(Complex64, Complex64)>,
    pub est_order: u32,
    pub est_leading: Complex64,
    /// `c_{-m}` for `m = 1..=4`.
    pub principal_part: Vec<Complex64>,
}

/// Laurent analysis of `g` on the circle `|z - z_center| = radius`.
pub fn laurent_probe<G>(g: &G, z_center: Complex64, radius: f64, nodes: usize, threshold: f64) -> Result<MellinProbe, AsymError>
where
    G: Fn(Complex64) -> Result<Complex64, AsymError> + Sync,
{
    let nodes = nodes.max(8);
    let zs: Vec<Complex64> = (0..nodes)
        .map(|k| z_center + Complex64::from_polar(radius, 2.0 * PI * k as f64 / nodes as f64))
        .collect();
    let vals: Result<Vec<Complex64>, AsymError> = zs.par_iter().map(|&z| g(z)).collect();
    let vals = vals?;
    let scale = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    // a_m = c_m r^m
    let mode = |m: i64| -> Complex64 {
        let mut s = c(0.0);
        for (k, v) in vals.iter().enumerate() {
            s += v * Complex64::from_polar(1.0, -2.0 * PI * (m * k as i64) as f64 / nodes as f64);
        }
        s / nodes as f64
    };
    let half = (nodes / 2) as i64 - 1;
    let alias = mode(half).norm().max(mode(-half).norm());
    if alias > 1e-6 * scale {
        return Err(AsymError::Inconclusive { residual: alias / scale });
    }
    let mut order = 0;
    for m in 1..=half {
        if mode(-m).norm() > threshold * scale {
            order = m;
        }
    }
    let principal_part: Vec<Complex64> = (1..=4).map(|m| mode(-m) * radius.powi(m as i32)).collect();
    let est_leading = if order > 0 { mode(-order) * radius.powi(order as i32) } else { mode(0) };
    Ok(MellinProbe {
        z_center,
        radius,
        ring_samples: zs.into_iter().zip(vals).collect(),
        est_order: order as u32,
        est_leading,
        principal_part,
    })
}

/// `int_0^L rho^{w-1} log^k rho d rho = d^k/dw^k (L^w / w)`.
pub fn mellin_power_log(w: Complex64, k: u32, l: f64) -> Complex64 {
    let ll = l.ln();
    let lw = (w * ll).exp();
    let mut s = c(0.0);
    for j in 0..=k {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        s += binom(k as i64, j as i64) * ll.powi((k - j) as i32) * sign * factorial(j as u64) / w.powu(j + 1);
    }
    s * lw
}

/// Settings for [`mellin_probe`].
#[derive(Clone, Debug)]
pub struct ProbeOptions {
    pub grid: GeometricGrid,
    /// Log powers `0..=peel_logs` are peeled at the candidate exponent.
    pub peel_logs: u32,
    /// Extra fitted terms, given as offsets from the candidate exponent.
    pub tail: Vec<(f64, u32)>,
    pub cutoff: CutoffSpec,
    pub order_threshold: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            grid: GeometricGrid::default(),
            peel_logs: 3,
            tail: vec![(1.0, 0), (1.0, 1), (2.0, 0), (2.0, 1), (3.0, 0)],
            cutoff: CutoffSpec::default(),
            order_threshold: 1e-7,
        }
    }
}

/// Numerical continuation of `M(z) = int_0^1 chi(rho) rho^{z-1} f(rho) d rho` around `z_center`.
///
/// Below `rho0` the fitted expansion is integrated in closed form; above it, `f` is integrated
/// by fixed Gauss-Legendre panels. Pole order and leading coefficient come from the ring.
pub fn mellin_probe<F: Fn(f64) -> Complex64 + Sync>(
    f: &F,
    z_center: Complex64,
    radius: f64,
    nodes: usize,
    opts: &ProbeOptions,
) -> Result<MellinProbe, AsymError> {
    let rho = opts.grid.points();
    let vals: Vec<Complex64> = rho.par_iter().map(|&r| f(r)).collect();
    let ec = -z_center;
    let mut terms: Vec<(Complex64, u32)> = (0..=opts.peel_logs).map(|k| (ec, k)).collect();
    terms.extend(opts.tail.iter().map(|&(d, k)| (ec + d, k)));
    let model = ExpansionModel::new(terms);
    let fit = fit_expansion(&rho, &vals, &model)?;
    let lo = opts.grid.rho0;
    if opts.cutoff.plateau_end < lo {
        return Err(AsymError::Precondition("rho0 must lie inside the cutoff plateau".into()));
    }
    // panels from rho0 up to the end of the support
    let mut br = vec![lo];
    while br.last().unwrap() * 2.0 < opts.cutoff.plateau_end {
        let nx = br.last().unwrap() * 2.0;
        br.push(nx);
    }
    br.push(opts.cutoff.plateau_end);
    let w = opts.cutoff.support_end - opts.cutoff.plateau_end;
    for j in 1..=8 {
        br.push(opts.cutoff.plateau_end + w * j as f64 / 8.0);
    }
    let rule = gauss_legendre(32);
    let mut nodes_w: Vec<(f64, f64)> = Vec::new();
    for p in br.windows(2) {
        let (a, b) = (p[0], p[1]);
        for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
            nodes_w.push((0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * wt));
        }
    }
    let fq: Vec<Complex64> = nodes_w
        .par_iter()
        .map(|&(r, wt)| f(r) * opts.cutoff.eval(r) * wt)
        .collect();
    let g = |z: Complex64| -> Result<Complex64, AsymError> {
        let mut s = c(0.0);
        for (i, &(e, k)) in fit.model.terms.iter().enumerate() {
            s += fit.coefficients[i] * mellin_power_log(z + e, k, lo);
        }
        for (j, &(r, _)) in nodes_w.iter().enumerate() {
            s += fq[j] * ((z - 1.0) * r.ln()).exp();
        }
        Ok(s)
    };
    laurent_probe(&g, z_center, radius, nodes, opts.order_threshold)
}

/// Quadrature nodes and weights on `S^{n-1}` for smooth integrands.
pub fn sphere_nodes(n: u32) -> Vec<(Vec<f64>, f64)> {
    if n == 2 {
        let m = 64;
        return (0..m)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / m as f64;
                (vec![t.cos(), t.sin()], 2.0 * PI / m as f64)
            })
            .collect();
    }
    let rule = gauss_legendre(24);
    let m = 48;
    let mut out = Vec::new();
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        let sn = (1.0 - x * x).sqrt();
        for k in 0..m {
            let t = 2.0 * PI * k as f64 / m as f64;
            out.push((vec![sn * t.cos(), sn * t.sin(), *x], w * 2.0 * PI / m as f64));
        }
    }
    out
}

/// `B(s, theta; z) = 1/2 int_0^1 xi^{z-1} (1-xi)^{(n-3)/2} H(xi) d xi`, continued in `z`, where
/// `H` integrates `h` over the fiber sphere of radius `sqrt(sigma (1 - xi))` centred at `s theta`.
/// With this kernel, `R(rho^{z-1} h) = sigma^{(n-1)/2 + z - 1} B`.
pub fn b_kernel(s: f64, sigma: f64, theta: &[f64], z: Complex64, h: &BoundaryWeight) -> Result<MeromorphicValue, AsymError> {
    let n = theta.len();
    if n != 2 && n != 3 {
        return Err(AsymError::Precondition("kernel continuation is implemented for n = 2, 3".into()));
    }
    let th = theta.to_vec();
    let hh = h.clone();
    let h_of = move |one_minus_xi: f64| -> Complex64 {
        let r = (sigma * one_minus_xi.max(0.0)).sqrt();
        fiber_sphere_integral(&th, |phi| {
            let x: Vec<f64> = th.iter().zip(phi).map(|(t, p)| s * t + r * p).collect();
            hh.eval(&x)
        })
    };
    // close to Re z = 0 the direct integral is nearly divergent
    if z.re > 0.5 {
        let half_pow = (n as f64 - 3.0) / 2.0;
        let v = tanh_sinh(
            |_, da, db| ((z - 1.0) * da.ln()).exp() * db.powf(half_pow) * h_of(db),
            0.0,
            1.0,
            1e-13,
        );
        return Ok(MeromorphicValue::regular(0.5 * v.value));
    }
    let depth = ((-z.re).floor().max(-1.0) as i64 + 2).clamp(1, 8) as u32;
    if z.re <= -8.0 {
        return Err(AsymError::Precondition("Re z must exceed -8".into()));
    }
    if n == 3 {
        let f = SampledFunction01::new(move |xi| h_of(1.0 - xi), 8);
        let v = mellin_functional(&f, z, depth)?;
        Ok(MeromorphicValue { value: 0.5 * v.value, ..v })
    } else {
        let f = SampledFunction01::new(move |t| h_of((1.0 - 2.0 * t) * (1.0 - 2.0 * t)), 8);
        let v = beta_functional(&f, z, depth)?;
        let k = ((z - 1.0) * 4f64.ln()).exp();
        Ok(MeromorphicValue { value: k * v.value, ..v })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoleScan {
    /// `(Re z, |B|)` on the off-integer grid.
    pub grid: Vec<(f64, f64)>,
    /// `(k, 1/|B(-k + delta)|)` next to each non-positive integer.
    pub near_integers: Vec<(i64, f64)>,
    pub regular_off_integers: bool,
    pub dips_at_integers: Vec<bool>,
}

/// Scan `B(s, theta; z)` on `Re z in (-5, 0]` for poles.
pub fn kernel_pole_scan(s: f64, theta: &[f64], h: &BoundaryWeight) -> Result<PoleScan, AsymError> {
    let sigma = (1.0 - s) * (1.0 + s);
    let zs: Vec<f64> = (0..50).map(|j| -4.95 + 0.1 * j as f64).collect();
    let grid: Result<Vec<(f64, f64)>, AsymError> = zs
        .par_iter()
        .map(|&x| Ok((x, b_kernel(s, sigma, theta, c(x), h)?.value.norm())))
        .collect();
    let grid = grid?;
    let delta = 1e-6;
    let near: Result<Vec<(i64, f64)>, AsymError> = (0..5i64)
        .into_par_iter()
        .map(|k| Ok((k, 1.0 / b_kernel(s, sigma, theta, c(-(k as f64) + delta), h)?.value.norm())))
        .collect();
    let near = near?;
    let inv_min = grid.iter().map(|g| 1.0 / g.1).fold(f64::INFINITY, f64::min);
    let mut sorted: Vec<f64> = grid.iter().map(|g| g.1).collect();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let regular = grid.iter().all(|g| g.1.is_finite() && g.1 <= 1e4 * median.max(1e-300));
    let dips = near.iter().map(|&(_, v)| v <= 1e-3 * inv_min).collect();
    Ok(PoleScan { grid, near_integers: near, regular_off_integers: regular, dips_at_integers: dips })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairingDecomposition {
    /// Direct integral of `u` against the kernel, when it converges.
    pub direct: Option<Complex64>,
    /// `1/2 sum_{q<m} A_{1,q}(z) A_{2,q}(z)`.
    pub truncated: Complex64,
    pub remainder: Complex64,
    pub remainder_bound: f64,
}

impl PairingDecomposition {
    pub fn continued(&self) -> Complex64 {
        self.truncated + self.remainder
    }
}

/// `int sigma^{w-1} log^ell sigma chi~(sigma) d sigma` over `[0, 1]`, `chi~(sigma) = chi(1 - sqrt(1 - sigma))`.
fn a1(w: Complex64, ell: u32, cut: &CutoffSpec) -> Complex64 {
    let sp = cut.plateau_end * (2.0 - cut.plateau_end);
    let sq = cut.support_end * (2.0 - cut.support_end);
    let closed = mellin_power_log(w, ell, sp);
    let rule = gauss_legendre(48);
    let mut s = c(0.0);
    for j in 0..4 {
        let (a, b) = (sp + (sq - sp) * j as f64 / 4.0, sp + (sq - sp) * (j + 1) as f64 / 4.0);
        for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
            let sg = 0.5 * (a + b) + 0.5 * (b - a) * x;
            let one_minus_s = sg / (1.0 + (1.0 - sg).sqrt());
            s += ((w - 1.0) * sg.ln()).exp() * sg.ln().powi(ell as i32) * cut.eval(one_minus_s) * (0.5 * (b - a) * wt);
        }
    }
    closed + s
}

/// Coefficients `B_q(theta; z)`, `q < count`, of `B (1 - sigma)^{-1/2} ~ sum sigma^q B_q`.
fn b_density_coeffs(theta: &[f64], z: Complex64, h: &BoundaryWeight, count: u32) -> Result<Vec<Complex64>, AsymError> {
    let n = theta.len() as f64;
    let hp = fiber_sphere_taylor(h, theta, count - 1)?.coeffs;
    let mut cj = Vec::new();
    for j in 0..count as i64 {
        let mut s = c(0.0);
        for p in 0..=j {
            let w = binom(j - 1, p - 1);
            if w == 0.0 {
                continue;
            }
            let bv = beta(z, c((n - 1.0) / 2.0 + p as f64));
            if bv.pole_flag {
                return Err(AsymError::Precondition("z sits on a kernel pole".into()));
            }
            s += hp[p as usize] * w * 0.5 * bv.value;
        }
        cj.push(s);
    }
    // (1 - sigma)^{-1/2} = sum binom(2i, i) 4^{-i} sigma^i
    let d: Vec<f64> = (0..count as i64).map(|i| binom(2 * i, i) / 4f64.powi(i as i32)).collect();
    Ok((0..count as usize)
        .map(|q| (0..=q).map(|j| cj[j] * d[q - j]).sum())
        .collect())
}

/// The Mellin pairing `P(z) = int rho^{z-1} h R*u dx` of a cylinder component, evaluated directly
/// (where the integral converges) and through the expansion of the kernel density in `sigma`.
pub fn pairing_decomposition(
    u: &PhgComponentCyl,
    h: &BoundaryWeight,
    z: Complex64,
    m: u32,
) -> Result<PairingDecomposition, AsymError> {
    let n = u.a.n;
    let cut = u
        .cutoff
        .ok_or_else(|| AsymError::Precondition("pairing needs a cylinder cutoff".into()))?;
    if m > 4 {
        return Err(AsymError::Precondition("m must be at most 4".into()));
    }
    if nonpositive_integer(z).is_some() {
        return Err(AsymError::Precondition("z sits on a kernel pole".into()));
    }
    let w = z + u.gamma + (n as f64 - 1.0) / 2.0;
    if w.re + m as f64 <= 0.0 {
        return Err(AsymError::Precondition("remainder integral diverges: raise m".into()));
    }
    let side = if u.side >= 0 { 1.0 } else { -1.0 };
    let ell = u.ell;
    let extra = 4;
    let mut nodes = sphere_nodes(n);
    if u.a.name == "const" && h.name == "const" {
        // rotation invariant integrand: one direction carries the whole sphere
        let total = nodes.iter().map(|t| t.1).sum();
        nodes.truncate(1);
        nodes[0].1 = total;
    }
    let sig_switch = 1e-3;
    let sp = cut.plateau_end * (2.0 - cut.plateau_end);
    let sq = cut.support_end * (2.0 - cut.support_end);
    let a1s: Vec<Complex64> = (0..m).map(|q| a1(w + q as f64, ell, &cut)).collect();
    let rule = gauss_legendre(32);
    // sigma panels for the remainder
    let mut br = vec![sig_switch];
    while br.last().unwrap() * 2.0 < sp {
        let nx = br.last().unwrap() * 2.0;
        br.push(nx);
    }
    br.push(sp);
    for j in 1..=4 {
        br.push(sp + (sq - sp) * j as f64 / 4.0);
    }
    let direct_ok = z.re > 0.0 && w.re > 0.0;
    let per_theta: Result<Vec<(Complex64, Complex64, Complex64, f64, f64)>, AsymError> = nodes
        .par_iter()
        .map(|(theta, wt)| {
            let a = u.a.eval(theta);
            let th_side: Vec<f64> = theta.iter().map(|t| t * side).collect();
            let bq = b_density_coeffs(&th_side, z, h, m + extra)?;
            let trunc: Complex64 = (0..m as usize).map(|q| a1s[q] * bq[q]).sum::<Complex64>() * 0.5 * a;
            // remainder: closed form below sig_switch, quadrature above
            let mut rem = c(0.0);
            for (q, b) in bq.iter().enumerate().skip(m as usize) {
                rem += b * mellin_power_log(w + q as f64, ell, sig_switch);
            }
            let mut sup = (m as usize..bq.len())
                .map(|q| bq[q] * sig_switch.powi(q as i32 - m as i32))
                .sum::<Complex64>()
                .norm();
            // the direct integral shares the panels above sig_switch with the remainder
            let mut direct = c(0.0);
            for p in br.windows(2) {
                let (lo, hi) = (p[0], p[1]);
                for (x, gw) in rule.nodes.iter().zip(&rule.weights) {
                    let sg = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x;
                    let root = (1.0 - sg).sqrt();
                    let one_minus_abs_s = sg / (1.0 + root);
                    let ch = cut.eval(one_minus_abs_s);
                    if ch == 0.0 {
                        continue;
                    }
                    let bk = b_kernel(side * root, sg, theta, z, h)?.value;
                    let weight = ((w - 1.0) * sg.ln()).exp() * sg.ln().powi(ell as i32) * ch * (0.5 * (hi - lo) * gw);
                    let mut br_val = bk / root;
                    direct += weight * br_val;
                    for (q, b) in bq.iter().enumerate().take(m as usize) {
                        br_val -= b * sg.powi(q as i32);
                    }
                    sup = sup.max(br_val.norm() / sg.powi(m as i32));
                    rem += weight * br_val;
                }
            }
            let rem = rem * 0.5 * a;
            let direct = if direct_ok {
                // below sig_switch the cutoff is 1
                let inner = tanh_sinh(
                    |_, da, _| {
                        let root = (1.0 - da).sqrt();
                        let bk = b_kernel(side * root, da, theta, z, h).map(|v| v.value).unwrap_or(c(f64::NAN));
                        ((w - 1.0) * da.ln()).exp() * da.ln().powi(ell as i32) * bk / root
                    },
                    0.0,
                    sig_switch,
                    1e-12,
                );
                (direct + inner.value) * 0.5 * a
            } else {
                c(0.0)
            };
            let bound_int = a1(c(w.re + m as f64), 0, &cut).re.abs().max(0.0);
            Ok((trunc * wt, rem * wt, direct * wt, sup * bound_int * 0.5 * a.norm() * wt, 0.0))
        })
        .collect();
    let per_theta = per_theta?;
    let truncated = per_theta.iter().map(|t| t.0).sum();
    let remainder = per_theta.iter().map(|t| t.1).sum();
    let direct = if direct_ok { Some(per_theta.iter().map(|t| t.2).sum()) } else { None };
    let remainder_bound = per_theta.iter().map(|t| t.3).sum::<f64>() * if ell > 0 { 10f64.powi(ell as i32) } else { 1.0 };
    Ok(PairingDecomposition { direct, truncated, remainder, remainder_bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(f: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<Complex64>) {
        let rho = GeometricGrid::default().points();
        let v = rho.iter().map(|&r| c(f(r))).collect();
        (rho, v)
    }

    #[test]
    fn exact_models() {
        let (rho, v) = samples(|r| 3.0 * r.sqrt());
        let fit = fit_expansion(&rho, &v, &ExpansionModel::real(&[(0.5, 0)])).unwrap();
        assert!((fit.coefficients[0] - 3.0).norm() < 1e-12);
        assert!(fit.residual_order >= 1.4);
        let (rho, v) = samples(|r| r.sqrt() * r.ln() - 2.0);
        let fit = fit_expansion(&rho, &v, &ExpansionModel::real(&[(0.0, 0), (0.5, 1), (0.5, 0)])).unwrap();
        let want = [-2.0, 0.0, 1.0];
        for (i, w) in want.iter().enumerate() {
            assert!((fit.coefficients[i] - w).norm() < 1e-9, "{i} {}", fit.coefficients[i]);
        }
    }

    #[test]
    fn exponent_recovery() {
        let (rho, v) = samples(|r| 2.0 * r.powf(0.7) * (1.0 - 3.0 * r));
        let fam = |e: f64| ExpansionModel::real(&[(e, 0), (e + 1.0, 0)]);
        let g = log_slope_guess(&rho, &v);
        let ef = fit_leading_exponent(&rho, &v, fam, g, 0.45).unwrap();
        assert!((ef.exponent - 0.7).abs() < 1e-6, "{}", ef.exponent);
    }

    #[test]
    fn presence_and_log_power() {
        let (rho, v) = samples(|r| 1.0 + r.sqrt() * r.ln() + 0.3 * r);
        let base = ExpansionModel::real(&[(0.0, 0), (1.0, 0), (0.5, 0)]);
        let p = detect_presence(&rho, &v, &base, (c(0.5), 1), PresenceThresholds::default()).unwrap();
        assert!(p.present && (p.coefficient - 1.0).norm() < 1e-8);
        let base = ExpansionModel::real(&[(0.0, 0), (1.0, 0), (0.5, 1), (0.5, 0)]);
        let p = detect_presence(&rho, &v, &base, (c(1.5), 0), PresenceThresholds::default()).unwrap();
        assert!(!p.present && p.coefficient.norm() < 1e-6);
        let rest = ExpansionModel::real(&[(0.0, 0), (1.0, 0)]);
        assert_eq!(leading_log_power(&rho, &v, c(0.5), &rest, 3).unwrap(), Some(1));
    }

    #[test]
    fn mellin_probe_examples() {
        let opts = ProbeOptions::default();
        let p = mellin_probe(&|r: f64| c(r.sqrt()), c(-0.5), 0.2, 64, &opts).unwrap();
        assert_eq!(p.est_order, 1);
        assert!((p.est_leading - 1.0).norm() < 1e-8);
        let p = mellin_probe(&|r: f64| c(r.sqrt() * r.ln()), c(-0.5), 0.2, 64, &opts).unwrap();
        assert_eq!(p.est_order, 2);
        assert!((p.est_leading + 1.0).norm() < 1e-8);
        let p = mellin_probe(&|r: f64| c(2.5 + r.sin()), c(0.0), 0.2, 64, &opts).unwrap();
        assert_eq!(p.est_order, 1);
        assert!((p.est_leading - 2.5).norm() < 1e-8);
    }

    #[test]
    fn kernel_limits() {
        // B at s -> 1 approaches the leading density term
        let h = BoundaryWeight::constant(2);
        let s: f64 = 1.0 - 1e-9;
        let sg = (1.0 - s) * (1.0 + s);
        let b = b_kernel(s, sg, &[1.0, 0.0], c(1.0), &h).unwrap();
        assert!((b.value - 2.0).norm() < 1e-10);
        let h3 = BoundaryWeight::constant(3);
        let b = b_kernel(s, sg, &[0.0, 0.0, 1.0], c(1.0), &h3).unwrap();
        assert!((b.value - PI).norm() < 1e-10);
        // continuation across Re z = 0 matches B(z, 1/2) for constant h, n = 2
        let z = Complex64::new(-0.3, 0.2);
        let b = b_kernel(0.4, 0.84, &[1.0, 0.0], z, &h).unwrap();
        let want = beta(z, c(0.5)).value;
        assert!((b.value - want).norm() < 1e-10 * want.norm(), "{} {}", b.value, want);
    }

    #[test]
    fn power_log_integral() {
        // int_0^L rho^{w-1} log rho = L^w (log L / w - 1 / w^2)
        let (w, l) = (c(0.7), 0.3f64);
        let want = l.powf(0.7) * (l.ln() / 0.7 - 1.0 / 0.49);
        assert!((mellin_power_log(w, 1, l) - want).norm() < 1e-14);
    }
}
