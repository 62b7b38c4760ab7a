//! Index sets in `C x N0` and the index maps of `R`, `R*` and the normal operators.
//!
//! An index set is stored by a finite list of generators; membership is answered
//! from the generators without materialising anything.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Two exponents are identified when they differ by at most this much.
pub const EXP_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexError {
    #[error("empty index set")]
    Empty,
    #[error("non-integrable component: inf(E) = {0} <= -1")]
    NonIntegrable(f64),
    #[error("shift must carry log power 0, got {0}")]
    ShiftWithLog(u32),
    #[error("precondition violated: Re gamma = {0} < 0")]
    NegativeWeight(f64),
    #[error("normal_iterate needs at least one iteration")]
    ZeroIterations,
    #[error("bad index set text: {0}")]
    Parse(String),
}

/// One element `(gamma, k)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Index {
    pub gamma: Complex64,
    pub k: u32,
}

impl Index {
    pub fn new(gamma: Complex64, k: u32) -> Self {
        Index { gamma, k }
    }

    pub fn real(re: f64, k: u32) -> Self {
        Index { gamma: Complex64::new(re, 0.0), k }
    }
}

impl PartialEq for Index {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && exp_eq(self.gamma, other.gamma)
    }
}

pub fn exp_eq(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= EXP_TOL
}

/// `d` is a non-negative integer up to [`EXP_TOL`].
pub fn is_nat0(d: Complex64) -> bool {
    d.im.abs() <= EXP_TOL && d.re > -EXP_TOL && (d.re - d.re.round()).abs() <= EXP_TOL
}

/// `d` is an integer up to [`EXP_TOL`].
pub fn is_int(d: Complex64) -> bool {
    d.im.abs() <= EXP_TOL && (d.re - d.re.round()).abs() <= EXP_TOL
}

fn cmp_lex(a: &Index, b: &Index) -> Ordering {
    a.gamma
        .re
        .total_cmp(&b.gamma.re)
        .then(a.gamma.im.total_cmp(&b.gamma.im))
        .then(a.k.cmp(&b.k))
}

/// Closure of a single generator contains `i`.
fn generated_by(g: &Index, i: &Index) -> bool {
    i.k <= g.k && is_nat0(i.gamma - g.gamma)
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct IndexSet {
    generators: Vec<Index>,
}

impl IndexSet {
    pub fn empty() -> Self {
        IndexSet { generators: Vec::new() }
    }

    /// `closure{(0,0)}`, the index set of smooth functions.
    pub fn smooth() -> Self {
        generate(&[Index::real(0.0, 0)])
    }

    pub fn generators(&self) -> &[Index] {
        &self.generators
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn contains(&self, i: &Index) -> bool {
        self.generators.iter().any(|g| generated_by(g, i))
    }

    /// Largest log power carried at exponent `gamma`, if any member sits there.
    pub fn max_log_at(&self, gamma: Complex64) -> Option<u32> {
        self.generators
            .iter()
            .filter(|g| is_nat0(gamma - g.gamma))
            .map(|g| g.k)
            .max()
    }

    pub fn is_subset_of(&self, other: &IndexSet) -> bool {
        self.generators.iter().all(|g| other.contains(g))
    }

    pub fn shift(&self, delta: Index) -> Result<IndexSet, IndexError> {
        if delta.k != 0 {
            return Err(IndexError::ShiftWithLog(delta.k));
        }
        Ok(self.translate(delta.gamma))
    }

    fn translate(&self, d: Complex64) -> IndexSet {
        generate(
            &self
                .generators
                .iter()
                .map(|g| Index::new(g.gamma + d, g.k))
                .collect::<Vec<_>>(),
        )
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut all = self.generators.clone();
        all.extend_from_slice(&other.generators);
        generate(&all)
    }

    /// `E ∪ F ∪ {(g, p+q+1)}` over exponents carried by both sets.
    pub fn extended_union(&self, other: &IndexSet) -> IndexSet {
        let mut all = self.generators.clone();
        all.extend_from_slice(&other.generators);
        // the max log powers only change at generator exponents
        let breaks: Vec<Complex64> = all.iter().map(|g| g.gamma).collect();
        for c in breaks {
            if let (Some(p), Some(q)) = (self.max_log_at(c), other.max_log_at(c)) {
                all.push(Index::new(c, p + q + 1));
            }
        }
        generate(&all)
    }

    pub fn inf_index(&self) -> Result<f64, IndexError> {
        self.generators
            .iter()
            .map(|g| g.gamma.re)
            .reduce(f64::min)
            .ok_or(IndexError::Empty)
    }

    /// Members with `Re gamma < t`, enumerated in canonical order.
    pub fn members_below(&self, t: f64) -> Vec<Index> {
        let mut out: Vec<Index> = Vec::new();
        for g in &self.generators {
            let mut m = 0.0;
            while g.gamma.re + m < t {
                for k in 0..=g.k {
                    let i = Index::new(g.gamma + m, k);
                    if !out.contains(&i) {
                        out.push(i);
                    }
                }
                m += 1.0;
            }
        }
        out.sort_by(cmp_lex);
        out
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.generators
                .iter()
                .map(|g| serde_json::json!([g.gamma.re, g.gamma.im, g.k]))
                .collect(),
        )
    }
}

impl PartialEq for IndexSet {
    fn eq(&self, other: &Self) -> bool {
        self.is_subset_of(other) && other.is_subset_of(self)
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, g) in self.generators.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            let sign = if g.gamma.im < 0.0 { '-' } else { '+' };
            write!(f, "({}{}{}i, {})", g.gamma.re, sign, g.gamma.im.abs(), g.k)?;
        }
        write!(f, "}}")
    }
}

impl FromStr for IndexSet {
    type Err = IndexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || IndexError::Parse(s.to_string());
        let body = s
            .trim()
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(bad)?;
        let mut gens = Vec::new();
        for part in body.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let inner = part
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(bad)?;
            let (z, k) = inner.rsplit_once(',').ok_or_else(bad)?;
            let k: u32 = k.trim().parse().map_err(|_| bad())?;
            gens.push(Index::new(parse_complex(z.trim()).ok_or_else(bad)?, k));
        }
        Ok(generate(&gens))
    }
}

// accepts "a", "a+bi", "a-bi"
pub fn parse_complex(z: &str) -> Option<Complex64> {
    let Some(body) = z.strip_suffix('i') else {
        return z.parse().ok().map(|re| Complex64::new(re, 0.0));
    };
    // split at the last sign that is not an exponent sign or the leading sign
    let bytes = body.as_bytes();
    let mut cut = None;
    for j in (1..bytes.len()).rev() {
        if (bytes[j] == b'+' || bytes[j] == b'-') && bytes[j - 1] != b'e' && bytes[j - 1] != b'E' {
            cut = Some(j);
            break;
        }
    }
    let j = cut?;
    let re: f64 = body[..j].parse().ok()?;
    let im: f64 = body[j..].parse().ok()?;
    Some(Complex64::new(re, im))
}

/// Smallest index set containing `indices`, with a canonical generator list.
pub fn generate(indices: &[Index]) -> IndexSet {
    let mut cand = indices.to_vec();
    // higher log power first within one exponent so that it absorbs the rest
    cand.sort_by(|a, b| {
        a.gamma
            .re
            .total_cmp(&b.gamma.re)
            .then(a.gamma.im.total_cmp(&b.gamma.im))
            .then(b.k.cmp(&a.k))
    });
    let mut kept: Vec<Index> = Vec::new();
    for c in cand {
        if !kept.iter().any(|g| generated_by(g, &c)) {
            kept.push(c);
        }
    }
    kept.sort_by(cmp_lex);
    IndexSet { generators: kept }
}

pub fn contains(e: &IndexSet, i: &Index) -> bool {
    e.contains(i)
}

pub fn shift(e: &IndexSet, delta: Index) -> Result<IndexSet, IndexError> {
    e.shift(delta)
}

pub fn union(e: &IndexSet, f: &IndexSet) -> IndexSet {
    e.union(f)
}

pub fn extended_union(e: &IndexSet, f: &IndexSet) -> IndexSet {
    e.extended_union(f)
}

pub fn inf_index(e: &IndexSet) -> Result<f64, IndexError> {
    e.inf_index()
}

fn half_dim(n: u32) -> f64 {
    (n as f64 - 1.0) / 2.0
}

/// Index set of `Ru` on either boundary face of the cylinder.
pub fn radon_index(e: &IndexSet, n: u32) -> Result<IndexSet, IndexError> {
    let inf = e.inf_index()?;
    if inf <= -1.0 {
        return Err(IndexError::NonIntegrable(inf));
    }
    e.shift(Index::real(half_dim(n), 0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    A,
    B,
    C,
    D,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseTag {
    pub case: Case,
    /// `(n-1)/2 + gamma >= 0`; only set for cases B and C.
    pub nonneg_branch: Option<bool>,
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.nonneg_branch {
            Some(true) => write!(f, "{:?}(>=0)", self.case),
            Some(false) => write!(f, "{:?}(<0)", self.case),
            None => write!(f, "{:?}", self.case),
        }
    }
}

pub fn case_classify(gamma: Complex64, _ell: u32, n: u32) -> CaseTag {
    let even = n % 2 == 0;
    let branch = Some(half_dim(n) + gamma.re >= -EXP_TOL);
    let half = Complex64::new(0.5, 0.0);
    if even && is_nat0(gamma) {
        CaseTag { case: Case::A, nonneg_branch: None }
    } else if even && is_int(gamma - half) {
        CaseTag { case: Case::B, nonneg_branch: branch }
    } else if !even && is_int(gamma) && gamma.re < -0.5 {
        CaseTag { case: Case::C, nonneg_branch: branch }
    } else {
        CaseTag { case: Case::D, nonneg_branch: None }
    }
}

/// Index set of `R*u` for `u = a sigma^gamma log^ell(sigma) chi(1 -+ s)`.
///
/// Cases B and C below zero use the generators `{(e, l), (0, l+1)}`.
pub fn backprojection_index(gamma: Complex64, ell: u32, n: u32) -> IndexSet {
    generate(&backprojection_generators(gamma, ell, n))
}

fn backprojection_generators(gamma: Complex64, ell: u32, n: u32) -> Vec<Index> {
    let e = gamma + half_dim(n);
    let tag = case_classify(gamma, ell, n);
    let zero = Index::real(0.0, 0);
    match tag.case {
        Case::A if ell == 0 => vec![zero],
        Case::A => vec![Index::new(e, ell - 1), zero],
        Case::B | Case::C if tag.nonneg_branch == Some(true) => {
            vec![Index::new(e, ell), zero, Index::new(e, ell + 1)]
        }
        Case::B | Case::C => vec![Index::new(e, ell), Index::real(0.0, ell + 1)],
        Case::D => vec![Index::new(e, ell), zero],
    }
}

/// Equivalent generator list with an explicit `(0, 0)` and `eta = max(0, e)`.
pub fn backprojection_eta_generators(gamma: Complex64, ell: u32, n: u32) -> Vec<Index> {
    let tag = case_classify(gamma, ell, n);
    match tag.case {
        Case::B | Case::C => {
            let e = gamma + half_dim(n);
            let eta = if e.re >= 0.0 { e } else { Complex64::new(0.0, 0.0) };
            vec![Index::new(e, ell), Index::real(0.0, 0), Index::new(eta, ell + 1)]
        }
        _ => backprojection_generators(gamma, ell, n),
    }
}

/// True when the eta form and the implemented generator lists differ before closure.
pub fn eta_generators_differ(gamma: Complex64, ell: u32, n: u32) -> bool {
    let a = backprojection_eta_generators(gamma, ell, n);
    let b = backprojection_generators(gamma, ell, n);
    a.len() != b.len() || a.iter().zip(&b).any(|(x, y)| x != y)
}

/// Classical pushforward estimate for a cylinder index family `(E+, E-)`.
pub fn backprojection_index_classical(eplus: &IndexSet, eminus: &IndexSet, n: u32) -> IndexSet {
    let d = Complex64::new(half_dim(n), 0.0);
    let smooth = IndexSet::smooth();
    let a = eplus.translate(d).extended_union(&smooth);
    let b = eminus.translate(d).extended_union(&smooth);
    a.union(&b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalIterate {
    pub set: IndexSet,
    pub note: Option<String>,
}

/// Index set of `(R*R)^iters C^inf`, by pushing every generator through `R` then `R*`.
pub fn normal_iterate(n: u32, iters: u32) -> Result<NormalIterate, IndexError> {
    if iters == 0 {
        return Err(IndexError::ZeroIterations);
    }
    if n % 2 == 1 {
        return Ok(NormalIterate {
            set: IndexSet::smooth(),
            note: Some("smooth: odd-dimensional normal operator".into()),
        });
    }
    let mut e = IndexSet::smooth();
    for _ in 0..iters {
        let mut next = IndexSet::empty();
        for g in e.generators() {
            let r = radon_index(&generate(&[*g]), n)?;
            for h in r.generators() {
                next = next.union(&backprojection_index(h.gamma, h.k, n));
            }
        }
        e = next;
    }
    Ok(NormalIterate { set: e, note: None })
}

/// The closed form: union over `0 <= j <= k <= iters` of `closure{((n-1)k, j)}`.
pub fn normal_iterate_closed_form(n: u32, iters: u32) -> IndexSet {
    let mut v = Vec::new();
    for k in 0..=iters {
        for j in 0..=k {
            v.push(Index::real(((n - 1) * k) as f64, j));
        }
    }
    generate(&v)
}

/// Index set of `R* sigma^{-(n-1)/2-gamma} R rho^gamma` applied to smooth functions.
pub fn weighted_normal_index(gamma: Complex64, n: u32) -> Result<IndexSet, IndexError> {
    if gamma.re < 0.0 {
        return Err(IndexError::NegativeWeight(gamma.re));
    }
    let weighted = IndexSet::smooth().shift(Index::new(gamma, 0))?;
    let r = radon_index(&weighted, n)?;
    let back = r.shift(Index::new(-(gamma + half_dim(n)), 0))?;
    let mut out = IndexSet::empty();
    for g in back.generators() {
        out = out.union(&backprojection_index(g.gamma, g.k, n));
    }
    debug_assert!(out.is_subset_of(&IndexSet::smooth()));
    Ok(out)
}

/// Largest log power per exponent among members below `t`; handy for reports.
pub fn log_profile(e: &IndexSet, t: f64) -> BTreeMap<String, u32> {
    let mut m = BTreeMap::new();
    for i in e.members_below(t) {
        let key = format!("{}{:+}i", i.gamma.re, i.gamma.im);
        let v = m.entry(key).or_insert(0);
        *v = (*v).max(i.k);
    }
    m
}

/// Outcome of [`property_suite`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    pub checks: usize,
    pub failures: Vec<String>,
}

fn random_set(rng: &mut impl rand::Rng) -> IndexSet {
    let count = rng.gen_range(1..=3);
    let v: Vec<Index> = (0..count)
        .map(|_| Index::real(rng.gen_range(-3i32..=12) as f64 / 4.0, rng.gen_range(0..=3)))
        .collect();
    generate(&v)
}

fn same_below(a: &IndexSet, b: &IndexSet, t: f64) -> bool {
    a.members_below(t).iter().all(|i| b.contains(i)) && b.members_below(t).iter().all(|i| a.contains(i))
}

fn subset_below(a: &IndexSet, b: &IndexSet, t: f64) -> bool {
    a.members_below(t).iter().all(|i| b.contains(i))
}

/// Randomized checks of the closure axioms, the extended-union algebra, monotonicity of the
/// index maps, and sharpness of the case A backprojection index against the classical estimate.
pub fn property_suite(seed: u64, count: usize) -> PropertyReport {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let t = 10.0;
    let mut failures = Vec::new();
    for i in 0..count {
        let e = random_set(&mut rng);
        let f = random_set(&mut rng);
        let g = random_set(&mut rng);
        let (name, ok) = match i % 10 {
            0 => {
                let again = generate(&e.members_below(t));
                ("closure idempotence", same_below(&again, &e, t - 1.0))
            }
            1 => {
                let ok = e.members_below(t).iter().all(|m| {
                    (0..=m.k).all(|k| e.contains(&Index::new(m.gamma, k)))
                        && e.contains(&Index::new(m.gamma + 1.0, m.k))
                });
                ("closure axioms", ok)
            }
            2 => ("extended union commutes", same_below(&e.extended_union(&f), &f.extended_union(&e), t)),
            3 => {
                let l = e.extended_union(&f).extended_union(&g);
                let r = e.extended_union(&f.extended_union(&g));
                ("extended union associates", same_below(&l, &r, t))
            }
            4 => {
                let ext = e.extended_union(&f);
                let ok = e.union(&f).is_subset_of(&ext)
                    && e.members_below(t).iter().all(|m| match f.max_log_at(m.gamma) {
                        Some(q) => {
                            let p = e.max_log_at(m.gamma).unwrap();
                            ext.contains(&Index::new(m.gamma, p + q + 1))
                        }
                        None => true,
                    });
                ("extended union adds (g, p+q+1)", ok)
            }
            5 => {
                let n = rng.gen_range(2..=4);
                let big = e.union(&f);
                let ok = match (radon_index(&e, n), radon_index(&big, n)) {
                    (Ok(a), Ok(b)) => subset_below(&a, &b, t),
                    (Err(_), _) | (_, Err(_)) => e.inf_index().map(|v| v <= -1.0).unwrap_or(true)
                        || big.inf_index().map(|v| v <= -1.0).unwrap_or(true),
                };
                ("radon index monotone", ok)
            }
            6 => {
                let n = rng.gen_range(2..=3);
                let small = backprojection_index_classical(&e, &g, n);
                let big = backprojection_index_classical(&e.union(&f), &g, n);
                let big2 = backprojection_index_classical(&e, &g.union(&f), n);
                ("classical estimate monotone", subset_below(&small, &big, t) && subset_below(&small, &big2, t))
            }
            7 => {
                let n = 2 * rng.gen_range(1..=2);
                let gamma = Complex64::new(rng.gen_range(0..=3) as f64, 0.0);
                let ell = rng.gen_range(0..=3);
                let sharp = backprojection_index(gamma, ell, n);
                let classical = backprojection_index_classical(&generate(&[Index::new(gamma, ell)]), &IndexSet::empty(), n);
                let strict = classical.members_below(t).iter().any(|m| !sharp.contains(m));
                ("case A sharper than classical", subset_below(&sharp, &classical, t) && strict)
            }
            8 => {
                let n = rng.gen_range(2..=5);
                let gamma = Complex64::new(rng.gen_range(-7i32..=12) as f64 / 4.0, 0.0);
                let ell = rng.gen_range(0..=3);
                let ok = if gamma.re <= -1.0 {
                    true
                } else {
                    let sharp = backprojection_index(gamma, ell, n);
                    let classical =
                        backprojection_index_classical(&generate(&[Index::new(gamma, ell)]), &IndexSet::empty(), n);
                    subset_below(&sharp, &classical, t)
                };
                ("backprojection index within classical estimate", ok)
            }
            _ => {
                let n = 2 * rng.gen_range(1..=2);
                let iters = rng.gen_range(1..=3);
                let ok = match normal_iterate(n, iters) {
                    Ok(it) => {
                        same_below(&it.set, &normal_iterate_closed_form(n, iters), t)
                            && it.set.generators().iter().all(|g| {
                                let k = g.gamma.re / (n - 1) as f64;
                                is_int(Complex64::new(k, 0.0)) && g.k as f64 <= k + EXP_TOL && k <= iters as f64 + EXP_TOL
                            })
                    }
                    Err(_) => false,
                };
                ("normal iterate shape", ok)
            }
        };
        if !ok {
            failures.push(format!("#{i} {name}: E={e} F={f} G={g}"));
        }
    }
    PropertyReport { checks: count, failures }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn set(v: &[(f64, u32)]) -> IndexSet {
        generate(&v.iter().map(|&(g, k)| Index::real(g, k)).collect::<Vec<_>>())
    }

    #[test]
    fn generate_drops_redundant() {
        assert_eq!(set(&[(0.0, 1), (0.0, 0)]).generators().len(), 1);
        assert_eq!(set(&[(0.0, 0), (2.0, 0), (0.5, 1)]).generators().len(), 2);
        assert!(set(&[(0.5, 1)]).contains(&Index::real(1.5, 0)));
        assert!(!set(&[(0.5, 1)]).contains(&Index::real(0.5, 2)));
        assert!(!IndexSet::smooth().contains(&Index::real(-1.0, 0)));
    }

    #[test]
    fn shift_and_inf() {
        let e = set(&[(1.0, 2)]);
        assert_eq!(e.shift(Index::real(-1.0, 0)).unwrap(), set(&[(0.0, 2)]));
        assert!(e.shift(Index::real(0.0, 1)).is_err());
        assert_eq!(set(&[(0.5, 3), (0.0, 0)]).inf_index().unwrap(), 0.0);
        assert_eq!(IndexSet::empty().inf_index(), Err(IndexError::Empty));
    }

    #[test]
    fn extended_union_examples() {
        let s = IndexSet::smooth();
        assert_eq!(s.extended_union(&s), set(&[(0.0, 1)]));
        let h = set(&[(0.5, 0)]);
        assert_eq!(h.extended_union(&s), h.union(&s));
        assert_eq!(set(&[(0.0, 0)]).extended_union(&set(&[(1.0, 0)])), set(&[(0.0, 0), (1.0, 1)]));
    }

    #[test]
    fn radon_index_examples() {
        let s = IndexSet::smooth();
        assert_eq!(radon_index(&s, 2).unwrap(), set(&[(0.5, 0)]));
        assert_eq!(radon_index(&s, 3).unwrap(), set(&[(1.0, 0)]));
        assert!(radon_index(&set(&[(-1.0, 0)]), 2).is_err());
    }

    #[test]
    fn classify() {
        assert_eq!(case_classify(c(0.0), 1, 2).case, Case::A);
        let b = case_classify(c(-0.5), 0, 2);
        assert_eq!((b.case, b.nonneg_branch), (Case::B, Some(true)));
        assert_eq!(case_classify(c(-2.5), 0, 2).nonneg_branch, Some(false));
        assert_eq!(case_classify(c(-1.0), 0, 3).case, Case::C);
        assert_eq!(case_classify(c(0.25), 0, 2).case, Case::D);
        assert_eq!(case_classify(c(0.0), 0, 3).case, Case::D);
    }

    #[test]
    fn backprojection_examples() {
        assert_eq!(backprojection_index(c(0.0), 0, 2), IndexSet::smooth());
        assert_eq!(backprojection_index(c(-0.5), 0, 2), set(&[(0.0, 1)]));
        assert_eq!(backprojection_index(c(-1.0), 0, 3), set(&[(0.0, 1)]));
        assert_eq!(backprojection_index(c(0.0), 2, 2), set(&[(0.5, 1), (0.0, 0)]));
        assert_eq!(backprojection_index(c(0.25), 0, 2), set(&[(0.75, 0), (0.0, 0)]));
        // below-zero branch: both generator forms agree after closure
        let g = c(-2.5);
        assert_eq!(backprojection_index(g, 1, 2), set(&[(-2.0, 1), (0.0, 2)]));
        assert!(eta_generators_differ(g, 1, 2));
        assert_eq!(generate(&backprojection_eta_generators(g, 1, 2)), backprojection_index(g, 1, 2));
    }

    #[test]
    fn classical_examples() {
        let s = IndexSet::smooth();
        let want = set(&[(0.0, 0), (1.0, 1)]);
        assert_eq!(backprojection_index_classical(&s, &s, 3), want);
        let h = set(&[(0.5, 0)]);
        assert_eq!(backprojection_index_classical(&h, &h, 2), want);
    }

    #[test]
    fn normal_iterate_examples() {
        assert_eq!(normal_iterate(2, 1).unwrap().set, set(&[(0.0, 0), (1.0, 1)]));
        assert_eq!(normal_iterate(2, 2).unwrap().set, set(&[(0.0, 0), (1.0, 1), (2.0, 2)]));
        assert_eq!(normal_iterate(4, 1).unwrap().set, set(&[(0.0, 0), (3.0, 1)]));
        let odd = normal_iterate(3, 2).unwrap();
        assert_eq!(odd.set, IndexSet::smooth());
        assert!(odd.note.is_some());
        for l in 1..=3 {
            assert_eq!(normal_iterate(2, l).unwrap().set, normal_iterate_closed_form(2, l));
        }
    }

    #[test]
    fn weighted_normal_examples() {
        for (g, n) in [(0.0, 2), (1.0, 3), (0.5, 2)] {
            assert_eq!(weighted_normal_index(c(g), n).unwrap(), IndexSet::smooth());
        }
        assert!(weighted_normal_index(c(-0.1), 2).is_err());
    }

    #[test]
    fn randomized_properties() {
        let r = property_suite(7, 200);
        assert!(r.failures.is_empty(), "{:?}", r.failures);
    }

    #[test]
    fn text_round_trip() {
        let e = generate(&[Index::new(Complex64::new(0.5, -1.0), 2), Index::real(0.0, 0)]);
        let s = e.to_string();
        assert_eq!(s, "{(0+0i, 0); (0.5-1i, 2)}");
        assert_eq!(s.parse::<IndexSet>().unwrap(), e);
        assert_eq!("{}".parse::<IndexSet>().unwrap(), IndexSet::empty());
        assert_eq!(e.to_json_value().to_string(), "[[0.0,0.0,0],[0.5,-1.0,2]]");
    }
}
