//! Knot diagrams from sampled links, Reidemeister I/II simplification, the
//! Kauffman bracket and the Jones polynomial.
//!
//! A diagram is stored as a signed Gauss code; the PD code is derived from
//! it. PD conventions: `X[a, b, c, d]` lists arc labels counterclockwise
//! starting from the incoming under-arc, so the under strand runs `a → c`.
//! Arcs are labelled `1..=2n` along the orientation.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::knot::StereoChart;
use crate::point::Point4;
use crate::scalar::Real;
use crate::surface::SampledSurface;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum InvariantError {
    #[error("scale index {0} is not on the ladder")]
    EmptySlice(usize),
    #[error("curve is open; diagrams need a closed curve")]
    OpenCurve,
    #[error("curve has fewer than 3 samples")]
    TooFewSamples,
    #[error("no projection pole off the curve")]
    PoleOnCurve,
    #[error("no generic projection after {0} attempts")]
    GenericityFailure(usize),
    #[error("{got} crossings exceed the cap of {cap}")]
    TooManyCrossings { got: usize, cap: usize },
    #[error("invalid PD code: {0}")]
    InvalidPd(String),
    #[error("invalid Gauss code: {0}")]
    InvalidGauss(String),
    #[error("braid closure has {0} components")]
    NotAKnot(usize),
    #[error("bracket exponent {0} is not divisible by 4")]
    NonIntegralExponent(i64),
    #[error("cannot parse polynomial term {0:?}")]
    ParsePoly(String),
}

/// Coefficient ring for Laurent polynomials.
pub trait Coeff:
    Clone
    + PartialEq
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + fmt::Display
    + FromStr
    + Send
    + Sync
{
}

impl<T> Coeff for T where
    T: Clone
        + PartialEq
        + Zero
        + One
        + Neg<Output = T>
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + fmt::Display
        + FromStr
        + Send
        + Sync
{
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Var {
    A,
    T,
}

impl Var {
    fn symbol(self) -> char {
        match self {
            Var::A => 'A',
            Var::T => 't',
        }
    }
}

/// Laurent polynomial in one variable with exact coefficients; zero
/// coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaurentPoly<C> {
    pub var: Var,
    terms: BTreeMap<i64, C>,
}

pub type Laurent = LaurentPoly<i64>;

impl<C: Coeff> LaurentPoly<C> {
    pub fn zero(var: Var) -> Self {
        Self { var, terms: BTreeMap::new() }
    }

    pub fn one(var: Var) -> Self {
        Self::monomial(var, C::one(), 0)
    }

    pub fn monomial(var: Var, c: C, e: i64) -> Self {
        let mut p = Self::zero(var);
        p.add_term(e, c);
        p
    }

    pub fn from_terms(var: Var, terms: impl IntoIterator<Item = (i64, C)>) -> Self {
        let mut p = Self::zero(var);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, e: i64, c: C) {
        let v = match self.terms.remove(&e) {
            Some(old) => old + c,
            None => c,
        };
        if !v.is_zero() {
            self.terms.insert(e, v);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &C)> {
        self.terms.iter().map(|(&e, c)| (e, c))
    }

    pub fn coeff(&self, e: i64) -> C {
        self.terms.get(&e).cloned().unwrap_or_else(C::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Multiplies by `var^e`.
    pub fn shift(&self, e: i64) -> Self {
        Self { var: self.var, terms: self.terms.iter().map(|(&k, c)| (k + e, c.clone())).collect() }
    }

    pub fn scale(&self, c: &C) -> Self {
        Self::from_terms(self.var, self.terms.iter().map(|(&e, v)| (e, v.clone() * c.clone())))
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::one(self.var);
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// `p(x) ↦ p(x⁻¹)`.
    pub fn mirror(&self) -> Self {
        Self { var: self.var, terms: self.terms.iter().map(|(&e, c)| (-e, c.clone())).collect() }
    }

    /// Exponents read backwards give the same coefficients.
    pub fn is_palindromic(&self) -> bool {
        *self == self.mirror()
    }

    /// Substitutes `A = t^{-1/4}`; every exponent must be divisible by 4.
    pub fn a_to_t(&self) -> Result<Self, InvariantError> {
        let mut out = Self::zero(Var::T);
        for (&e, c) in &self.terms {
            if e % 4 != 0 {
                return Err(InvariantError::NonIntegralExponent(e));
            }
            out.add_term(-e / 4, c.clone());
        }
        Ok(out)
    }
}

impl<C: Coeff> Add for &LaurentPoly<C> {
    type Output = LaurentPoly<C>;
    fn add(self, rhs: Self) -> LaurentPoly<C> {
        let mut out = self.clone();
        for (&e, c) in &rhs.terms {
            out.add_term(e, c.clone());
        }
        out
    }
}

impl<C: Coeff> Sub for &LaurentPoly<C> {
    type Output = LaurentPoly<C>;
    fn sub(self, rhs: Self) -> LaurentPoly<C> {
        self + &(-rhs)
    }
}

impl<C: Coeff> Neg for &LaurentPoly<C> {
    type Output = LaurentPoly<C>;
    fn neg(self) -> LaurentPoly<C> {
        LaurentPoly { var: self.var, terms: self.terms.iter().map(|(&e, c)| (e, -c.clone())).collect() }
    }
}

impl<C: Coeff> Mul for &LaurentPoly<C> {
    type Output = LaurentPoly<C>;
    fn mul(self, rhs: Self) -> LaurentPoly<C> {
        let mut out = LaurentPoly::zero(self.var);
        for (&a, x) in &self.terms {
            for (&b, y) in &rhs.terms {
                out.add_term(a + b, x.clone() * y.clone());
            }
        }
        out
    }
}

/// Sorted `coeff*t^exp` terms joined by `" + "`; the zero polynomial is `0`.
impl<C: Coeff> fmt::Display for LaurentPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(e, c)| format!("{c}*{}^{e}", self.var.symbol())).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl<C: Coeff> FromStr for LaurentPoly<C> {
    type Err = InvariantError;
    fn from_str(s: &str) -> Result<Self, InvariantError> {
        let s = s.trim();
        let var = if s.contains('A') { Var::A } else { Var::T };
        if s == "0" {
            return Ok(Self::zero(var));
        }
        let mut p = Self::zero(var);
        for term in s.split(" + ") {
            let bad = || InvariantError::ParsePoly(term.to_string());
            let (c, rest) = term.trim().split_once('*').ok_or_else(bad)?;
            let e = rest.trim_start_matches(['t', 'A']).strip_prefix('^').ok_or_else(bad)?;
            let c: C = c.parse().map_err(|_| bad())?;
            let e: i64 = e.parse().map_err(|_| bad())?;
            p.add_term(e, c);
        }
        Ok(p)
    }
}

/// A closed single-component knot diagram, possibly with extra disjoint
/// crossingless circles.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnotDiagram {
    /// Passes in traversal order: `(crossing, over)`.
    pub gauss: Vec<(usize, bool)>,
    /// Sign of each crossing, `±1`.
    pub signs: Vec<i8>,
    pub extra_circles: usize,
}

impl KnotDiagram {
    pub fn unknot() -> Self {
        Self { gauss: Vec::new(), signs: Vec::new(), extra_circles: 0 }
    }

    pub fn new(gauss: Vec<(usize, bool)>, signs: Vec<i8>) -> Result<Self, InvariantError> {
        let d = Self { gauss, signs, extra_circles: 0 };
        d.validate()?;
        Ok(d)
    }

    pub fn n_crossings(&self) -> usize {
        self.signs.len()
    }

    pub fn writhe(&self) -> i64 {
        self.signs.iter().map(|&s| s as i64).sum()
    }

    pub fn validate(&self) -> Result<(), InvariantError> {
        let n = self.signs.len();
        if self.gauss.len() != 2 * n {
            return Err(InvariantError::InvalidGauss(format!("{} passes for {n} crossings", self.gauss.len())));
        }
        if self.signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(InvariantError::InvalidGauss("signs must be +-1".into()));
        }
        let mut seen = vec![[false; 2]; n];
        for &(c, over) in &self.gauss {
            if c >= n || seen[c][over as usize] {
                return Err(InvariantError::InvalidGauss(format!("crossing {c} repeated or out of range")));
            }
            seen[c][over as usize] = true;
        }
        Ok(())
    }

    /// `(under pass, over pass)` positions of each crossing.
    fn passes(&self) -> Vec<(usize, usize)> {
        let mut p = vec![(0, 0); self.n_crossings()];
        for (i, &(c, over)) in self.gauss.iter().enumerate() {
            if over {
                p[c].1 = i;
            } else {
                p[c].0 = i;
            }
        }
        p
    }

    /// PD code, one `[a, b, c, d]` per crossing.
    pub fn pd(&self) -> Vec<[usize; 4]> {
        let m = self.gauss.len();
        let inc = |p: usize| (p + m - 1) % m + 1;
        let out = |p: usize| p + 1;
        self.passes()
            .iter()
            .zip(&self.signs)
            .map(
                |(&(u, o), &s)| {
                    if s > 0 {
                        [inc(u), out(o), out(u), inc(o)]
                    } else {
                        [inc(u), inc(o), out(u), out(o)]
                    }
                },
            )
            .collect()
    }

    pub fn from_pd(pd: &[[usize; 4]]) -> Result<Self, InvariantError> {
        let n = pd.len();
        let m = 2 * n;
        let mut count = vec![0usize; m + 1];
        for x in pd {
            for &l in x {
                if l == 0 || l > m {
                    return Err(InvariantError::InvalidPd(format!("label {l} outside 1..={m}")));
                }
                count[l] += 1;
            }
        }
        if let Some(l) = (1..=m).find(|&l| count[l] != 2) {
            return Err(InvariantError::InvalidPd(format!("label {l} appears {} times", count[l])));
        }
        let mut gauss = vec![None; m];
        let mut signs = Vec::with_capacity(n);
        for (c, &[i, j, k, l]) in pd.iter().enumerate() {
            if (k + m - 2) % m + 1 != i {
                return Err(InvariantError::InvalidPd(format!("under strand {i} -> {k} is not consecutive")));
            }
            let positive = i == j || k == l || j == l + 1 || l > j + 1;
            let over_out = if positive { j } else { l };
            signs.push(if positive { 1 } else { -1 });
            for (slot, over) in [(k - 1, false), (over_out - 1, true)] {
                if gauss[slot].replace((c, over)).is_some() {
                    return Err(InvariantError::InvalidPd(format!("two passes end on arc {}", slot + 1)));
                }
            }
        }
        let gauss = gauss
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| InvariantError::InvalidPd("missing pass".into()))?;
        let d = Self::new(gauss, signs)?;
        if d.pd() != pd {
            return Err(InvariantError::InvalidPd("over strand labels are inconsistent".into()));
        }
        Ok(d)
    }

    /// `PD n=<k>` followed by one whitespace-separated 4-tuple per line.
    pub fn to_pd_string(&self) -> String {
        let mut s = format!("PD n={}\n", self.n_crossings());
        for x in self.pd() {
            s.push_str(&format!("{} {} {} {}\n", x[0], x[1], x[2], x[3]));
        }
        s
    }

    pub fn parse_pd(text: &str) -> Result<Self, InvariantError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| InvariantError::InvalidPd("empty input".into()))?;
        let n: usize = header
            .strip_prefix("PD n=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| InvariantError::InvalidPd(format!("bad header {header:?}")))?;
        let mut pd = Vec::with_capacity(n);
        for line in lines {
            let v: Vec<usize> = line
                .split_whitespace()
                .map(|x| x.parse().map_err(|_| InvariantError::InvalidPd(format!("bad line {line:?}"))))
                .collect::<Result<_, _>>()?;
            if v.len() != 4 {
                return Err(InvariantError::InvalidPd(format!("bad line {line:?}")));
            }
            pd.push([v[0], v[1], v[2], v[3]]);
        }
        if pd.len() != n {
            return Err(InvariantError::InvalidPd(format!("header says {n}, found {}", pd.len())));
        }
        Self::from_pd(&pd)
    }

    /// `(incoming over arc, incoming under arc, sign)` per crossing.
    pub fn crossings(&self) -> Vec<(usize, usize, i8)> {
        self.pd().iter().zip(&self.signs).map(|(x, &s)| (if s > 0 { x[3] } else { x[1] }, x[0], s)).collect()
    }

    pub fn mirror(&self) -> Self {
        Self {
            gauss: self.gauss.iter().map(|&(c, o)| (c, !o)).collect(),
            signs: self.signs.iter().map(|s| -s).collect(),
            extra_circles: self.extra_circles,
        }
    }

    /// Closure of a braid word on `strands` strands; letter `±i` is `σ_i^{±1}`.
    /// Strands run upward; in `σ_i` the strand moving from position `i` to
    /// `i + 1` passes over, giving a positive crossing.
    pub fn from_braid(strands: usize, word: &[i32]) -> Result<Self, InvariantError> {
        if strands == 0 || word.iter().any(|&l| l == 0 || l.unsigned_abs() as usize >= strands) {
            return Err(InvariantError::InvalidGauss("braid letter out of range".into()));
        }
        let mut gauss = Vec::with_capacity(2 * word.len());
        let mut visited = vec![false; strands + 1];
        let mut components = 0;
        for start in 1..=strands {
            if visited[start] {
                continue;
            }
            components += 1;
            let mut p = start;
            loop {
                visited[p] = true;
                for (i, &l) in word.iter().enumerate() {
                    let k = l.unsigned_abs() as usize;
                    if p == k || p == k + 1 {
                        let over = if l > 0 { p == k } else { p == k + 1 };
                        gauss.push((i, over));
                        p = if p == k { k + 1 } else { k };
                    }
                }
                if p == start {
                    break;
                }
            }
        }
        if components != 1 {
            return Err(InvariantError::NotAKnot(components));
        }
        Self::new(gauss, word.iter().map(|&l| if l > 0 { 1 } else { -1 }).collect())
    }

    fn without(&self, drop: &[usize]) -> Self {
        let keep: Vec<usize> = (0..self.n_crossings()).filter(|c| !drop.contains(c)).collect();
        let mut renum = vec![usize::MAX; self.n_crossings()];
        for (new, &old) in keep.iter().enumerate() {
            renum[old] = new;
        }
        Self {
            gauss: self.gauss.iter().filter(|(c, _)| !drop.contains(c)).map(|&(c, o)| (renum[c], o)).collect(),
            signs: keep.iter().map(|&c| self.signs[c]).collect(),
            extra_circles: self.extra_circles,
        }
    }

    fn find_r1(&self) -> Option<usize> {
        let m = self.gauss.len();
        (0..m).find(|&i| self.gauss[i].0 == self.gauss[(i + 1) % m].0).map(|i| self.gauss[i].0)
    }

    fn find_r2(&self) -> Option<(usize, usize)> {
        let m = self.gauss.len();
        if m < 4 {
            return None;
        }
        let pos = self.passes();
        let other = |c: usize, over: bool| if over { pos[c].0 } else { pos[c].1 };
        for i in 0..m {
            let (x, ox) = self.gauss[i];
            let (y, oy) = self.gauss[(i + 1) % m];
            if x == y || ox != oy || self.signs[x] == self.signs[y] {
                continue;
            }
            let (px, py) = (other(x, ox), other(y, oy));
            if (px + 1) % m == py || (py + 1) % m == px {
                return Some((x, y));
            }
        }
        None
    }
}

/// Applies Reidemeister I and II reductions until none applies.
pub fn simplify_diagram(d: &KnotDiagram) -> KnotDiagram {
    let mut d = d.clone();
    loop {
        if let Some(c) = d.find_r1() {
            d = d.without(&[c]);
        } else if let Some((x, y)) = d.find_r2() {
            d = d.without(&[x, y]);
        } else {
            return d;
        }
    }
}

pub const DEFAULT_CROSSING_CAP: usize = 24;

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// `⟨D⟩` by the state sum over all `2^n` smoothings, normalized so that the
/// crossingless circle has bracket 1.
pub fn kauffman_bracket(d: &KnotDiagram, cap: usize) -> Result<Laurent, InvariantError> {
    d.validate()?;
    let n = d.n_crossings();
    if n > cap {
        return Err(InvariantError::TooManyCrossings { got: n, cap });
    }
    let loop_value = Laurent::from_terms(Var::A, [(2, -1), (-2, -1)]);
    if n == 0 {
        return Ok(loop_value.pow(d.extra_circles as u32));
    }
    let pd: Vec<[usize; 4]> = d.pd().iter().map(|x| x.map(|l| l - 1)).collect();
    let m = 2 * n;
    let width = n + 2;
    // hist[a * width + loops] counts states with `a` A-smoothings
    let hist = (0u64..1u64 << n)
        .into_par_iter()
        .fold(
            || vec![0u64; (n + 1) * width],
            |mut h, state| {
                let mut parent: Vec<usize> = (0..m).collect();
                let mut a = 0;
                for (i, x) in pd.iter().enumerate() {
                    let (p, q) = if state >> i & 1 == 0 {
                        a += 1;
                        ((x[0], x[1]), (x[2], x[3]))
                    } else {
                        ((x[0], x[3]), (x[1], x[2]))
                    };
                    for (u, v) in [p, q] {
                        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
                        parent[ru] = rv;
                    }
                }
                let loops = (0..m).filter(|&i| find(&mut parent, i) == i).count();
                h[a * width + loops] += 1;
                h
            },
        )
        .reduce(
            || vec![0u64; (n + 1) * width],
            |mut x, y| {
                x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
                x
            },
        );
    let powers: Vec<Laurent> = (0..width).map(|k| loop_value.pow(k as u32)).collect();
    let mut total = Laurent::zero(Var::A);
    for a in 0..=n {
        for loops in 1..width {
            let count = hist[a * width + loops];
            if count == 0 {
                continue;
            }
            let term = powers[loops - 1].shift(2 * a as i64 - n as i64).scale(&(count as i64));
            total = &total + &term;
        }
    }
    Ok(&total * &loop_value.pow(d.extra_circles as u32))
}

/// `V(t) = (−A³)^{−w} ⟨D⟩` at `A = t^{−1/4}`.
pub fn jones_polynomial(d: &KnotDiagram, cap: usize) -> Result<Laurent, InvariantError> {
    let b = kauffman_bracket(d, cap)?;
    let w = d.writhe();
    let sign = if w.rem_euclid(2) == 0 { 1 } else { -1 };
    b.shift(-3 * w).scale(&sign).a_to_t()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// The Jones polynomials differ, also after mirroring.
    Distinct,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub jones1: String,
    pub jones2: String,
    /// The polynomials agree after `t ↦ t⁻¹`.
    pub mirror_match: bool,
}

/// Non-isotopy certificate. Mirror images are not distinguished, since the
/// comparison must not depend on orientation conventions.
pub fn certify_distinct(d1: &KnotDiagram, d2: &KnotDiagram, cap: usize) -> Result<Certificate, InvariantError> {
    let j1 = jones_polynomial(&simplify_diagram(d1), cap)?;
    let j2 = jones_polynomial(&simplify_diagram(d2), cap)?;
    let mirror_match = j1 == j2.mirror();
    Ok(Certificate {
        verdict: if j1 == j2 || mirror_match { Verdict::Inconclusive } else { Verdict::Distinct },
        jones1: j1.to_string(),
        jones2: j2.to_string(),
        mirror_match,
    })
}

/// The link of a sampled germ at one scale, rescaled to the unit sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkCurve<S> {
    pub points: Vec<Point4<S>>,
    pub closed: bool,
}

pub fn extract_link<S: Real>(surface: &SampledSurface<S>, k: usize) -> Result<LinkCurve<S>, InvariantError> {
    if k >= surface.rows() || surface.cols == 0 {
        return Err(InvariantError::EmptySlice(k));
    }
    Ok(LinkCurve { points: surface.rescaled_link(k), closed: surface.closed && surface.breaks.is_empty() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagramOptions {
    pub max_retries: usize,
    pub min_angle_deg: f64,
    /// Crossings closer than this multiple of the local segment length are non-generic.
    pub separation_factor: f64,
    /// Directions whose simplified diagram exceeds this are retried.
    pub crossing_cap: usize,
    /// Generic directions compared; the one with the fewest crossings after
    /// simplification wins.
    pub directions: usize,
}

impl Default for DiagramOptions {
    fn default() -> Self {
        Self {
            max_retries: 50,
            min_angle_deg: 2.0,
            separation_factor: 3.0,
            crossing_cap: DEFAULT_CROSSING_CAP,
            directions: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub diagram: KnotDiagram,
    pub pole: [f64; 4],
    pub direction: [f64; 3],
    pub attempts: usize,
}

fn random_unit<const N: usize>(rng: &mut ChaCha8Rng) -> [f64; N] {
    loop {
        let mut v = [0.0; N];
        for x in v.iter_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-4 && n2 <= 1.0 {
            let n = n2.sqrt();
            return v.map(|x| x / n);
        }
    }
}

/// Sphere point farthest from the samples among `-mean` and random candidates.
fn farthest_pole(points: &[Point4<f64>], rng: &mut ChaCha8Rng) -> Option<(Point4<f64>, f64)> {
    let mean = points.iter().fold(Point4::zero(), |a, &b| a + b);
    let mut cands: Vec<Point4<f64>> = (-mean).normalized().into_iter().collect();
    cands.extend((0..256).map(|_| Point4(random_unit::<4>(rng))));
    cands
        .into_iter()
        .map(|c| (c, points.iter().map(|p| p.dist(c)).fold(f64::INFINITY, f64::min)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

struct Cross {
    seg: [usize; 2],
    par: [f64; 2],
    /// Which of the two segments passes over.
    over: usize,
    pos: [f64; 2],
    h: f64,
    sign: i8,
}

fn cross2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Crossings of a closed polygon seen from `+dir`; `None` if non-generic.
fn find_crossings(p3: &[[f64; 3]], dir: [f64; 3], opts: &DiagramOptions) -> Option<Vec<Cross>> {
    let e3 = dir;
    let helper = if e3[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let crs =
        |a: [f64; 3], b: [f64; 3]| [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let e1 = {
        let v = crs(helper, e3);
        let n = dot(v, v).sqrt();
        v.map(|x| x / n)
    };
    let e2 = crs(e3, e1);
    let n = p3.len();
    let xy: Vec<[f64; 2]> = p3.iter().map(|&p| [dot(p, e1), dot(p, e2)]).collect();
    let z: Vec<f64> = p3.iter().map(|&p| dot(p, e3)).collect();
    let seg = |i: usize| {
        let (a, b) = (xy[i], xy[(i + 1) % n]);
        [b[0] - a[0], b[1] - a[1]]
    };
    let len = |v: [f64; 2]| (v[0] * v[0] + v[1] * v[1]).sqrt();
    let len3 = |i: usize| {
        let (a, b) = (p3[i], p3[(i + 1) % n]);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    };
    let bbox: Vec<[f64; 4]> = (0..n)
        .map(|i| {
            let (a, b) = (xy[i], xy[(i + 1) % n]);
            [a[0].min(b[0]), a[0].max(b[0]), a[1].min(b[1]), a[1].max(b[1])]
        })
        .collect();
    let sin_min = opts.min_angle_deg.to_radians().sin();
    const EPS: f64 = 1e-9;
    let found: Option<Vec<Cross>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            let r = seg(i);
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (bi, bj) = (bbox[i], bbox[j]);
                if bi[1] < bj[0] || bj[1] < bi[0] || bi[3] < bj[2] || bj[3] < bi[2] {
                    continue;
                }
                let w = seg(j);
                let (lr, lw) = (len(r), len(w));
                let denom = cross2(r, w);
                let q = [xy[j][0] - xy[i][0], xy[j][1] - xy[i][1]];
                if denom.abs() <= 1e-12 * lr * lw {
                    // parallel: non-generic only if the segments overlap
                    if cross2(q, r).abs() <= 1e-12 * lr * lr.max(len(q)) {
                        return None;
                    }
                    continue;
                }
                let s = cross2(q, w) / denom;
                let u = cross2(q, r) / denom;
                if !(-EPS..=1.0 + EPS).contains(&s) || !(-EPS..=1.0 + EPS).contains(&u) {
                    continue;
                }
                if !(EPS..=1.0 - EPS).contains(&s) || !(EPS..=1.0 - EPS).contains(&u) {
                    return None;
                }
                if denom.abs() / (lr * lw) < sin_min {
                    return None;
                }
                let zi = z[i] + s * (z[(i + 1) % n] - z[i]);
                let zj = z[j] + u * (z[(j + 1) % n] - z[j]);
                if (zi - zj).abs() <= 1e-9 * len3(i).max(len3(j)) {
                    return None;
                }
                let over = if zi > zj { 0 } else { 1 };
                let (o, un) = if over == 0 { (r, w) } else { (w, r) };
                out.push(Cross {
                    seg: [i, j],
                    par: [s, u],
                    over,
                    pos: [xy[i][0] + s * r[0], xy[i][1] + s * r[1]],
                    h: lr.min(lw),
                    sign: if cross2(o, un) > 0.0 { 1 } else { -1 },
                });
            }
            Some(out)
        })
        .collect::<Option<Vec<Vec<Cross>>>>()
        .map(|v| v.into_iter().flatten().collect());
    let found = found?;
    for a in 0..found.len() {
        for b in a + 1..found.len() {
            let (ca, cb) = (&found[a], &found[b]);
            let d = ((ca.pos[0] - cb.pos[0]).powi(2) + (ca.pos[1] - cb.pos[1]).powi(2)).sqrt();
            if d < opts.separation_factor * ca.h.min(cb.h) {
                return None;
            }
        }
    }
    Some(found)
}

fn diagram_from_crossings(crosses: &[Cross]) -> KnotDiagram {
    let mut passes: Vec<(usize, f64, usize, bool)> = Vec::with_capacity(2 * crosses.len());
    for (c, x) in crosses.iter().enumerate() {
        for k in 0..2 {
            passes.push((x.seg[k], x.par[k], c, x.over == k));
        }
    }
    passes.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    KnotDiagram {
        gauss: passes.iter().map(|&(_, _, c, o)| (c, o)).collect(),
        signs: crosses.iter().map(|x| x.sign).collect(),
        extra_circles: 0,
    }
}

/// Stereographic projection from the sphere point farthest from the curve,
/// then orthogonal projection along seeded random directions. Non-generic
/// directions are discarded (at most `max_retries` of them); among the
/// generic ones the diagram that simplifies furthest is kept.
pub fn project_to_diagram<S: Real>(
    curve: &LinkCurve<S>,
    seed: u64,
    opts: &DiagramOptions,
) -> Result<Projection, InvariantError> {
    if !curve.closed {
        return Err(InvariantError::OpenCurve);
    }
    if curve.points.len() < 3 {
        return Err(InvariantError::TooFewSamples);
    }
    let pts: Vec<Point4<f64>> = curve.points.iter().map(|p| p.cast::<f64>()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (pole, clearance) = farthest_pole(&pts, &mut rng).ok_or(InvariantError::PoleOnCurve)?;
    if clearance < 1e-6 {
        return Err(InvariantError::PoleOnCurve);
    }
    let chart = StereoChart::new(-pole);
    let p3: Vec<[f64; 3]> = pts.iter().map(|&x| chart.project(x)).collect();
    let mut best: Option<(usize, Projection)> = None;
    let mut generic = 0;
    let mut attempt = 0;
    while attempt < opts.max_retries + generic {
        attempt += 1;
        let dir = random_unit::<3>(&mut rng);
        let Some(crosses) = find_crossings(&p3, dir, opts) else { continue };
        let diagram = diagram_from_crossings(&crosses);
        let size = simplify_diagram(&diagram).n_crossings();
        if best.as_ref().is_none_or(|b| size < b.0) {
            best = Some((size, Projection { diagram, pole: pole.0, direction: dir, attempts: attempt }));
        }
        generic += 1;
        if generic >= opts.directions.max(1) && best.as_ref().is_some_and(|b| b.0 <= opts.crossing_cap) {
            break;
        }
    }
    best.map(|b| b.1).ok_or(InvariantError::GenericityFailure(opts.max_retries))
}

/// Jones polynomial of a closed curve on `S³`: project, simplify, state sum.
pub fn jones_of_curve<S: Real>(
    curve: &LinkCurve<S>,
    seed: u64,
    opts: &DiagramOptions,
) -> Result<Laurent, InvariantError> {
    let p = project_to_diagram(curve, seed, opts)?;
    jones_polynomial(&simplify_diagram(&p.diagram), opts.crossing_cap)
}
