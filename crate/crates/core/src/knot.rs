//! Smooth closed knot curves on `S³` placed near the axis pole, spherical
//! geodesics, stereographic charts and the simplicity test for orbit arcs.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{axis_horn_contains, AxisLine};
use crate::point::{oriented_frame, Point4};
use crate::scalar::Real;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum KnotError {
    #[error("unknown knot preset {0:?} (expected unknot, torus-P-Q or figure-eight)")]
    UnknownPreset(String),
    #[error("torus knot needs coprime positive p, q; got ({0}, {1})")]
    NotCoprime(u32, u32),
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("sample {index} leaves the horn neighbourhood of the axis")]
    TubeViolation { index: usize },
    #[error("curve meets the axis at sample {index}")]
    MeetsAxis { index: usize },
    #[error("self distance {distance} is below the threshold {threshold}")]
    SelfIntersection { distance: f64, threshold: f64 },
    #[error("sample {index} is not on the unit sphere (norm {norm})")]
    NotOnSphere { index: usize, norm: f64 },
    #[error("geodesic endpoints are equal or antipodal")]
    AntipodalOrEqual,
    #[error("the knot point at theta = {0} is the axis point or its antipode")]
    DegenerateGeodesic(f64),
    #[error("no dyadic scale keeps the knot inside the horn neighbourhood")]
    NoAdmissibleScale,
}

/// The knot presets addressable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KnotKind {
    Unknot,
    Torus { p: u32, q: u32 },
    FigureEight,
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl KnotKind {
    pub fn trefoil() -> Self {
        KnotKind::Torus { p: 2, q: 3 }
    }

    pub fn validate(self) -> Result<Self, KnotError> {
        if let KnotKind::Torus { p, q } = self {
            if p == 0 || q == 0 || gcd(p, q) != 1 {
                return Err(KnotError::NotCoprime(p, q));
            }
        }
        Ok(self)
    }

    pub fn is_trivial(self) -> bool {
        match self {
            KnotKind::Unknot => true,
            KnotKind::Torus { p, q } => p == 1 || q == 1,
            KnotKind::FigureEight => false,
        }
    }

    /// Parametrization in R³, `u ∈ [0, 2π)`. The curve avoids the origin.
    pub fn r3_point(self, u: f64) -> [f64; 3] {
        match self {
            KnotKind::Unknot => [u.cos(), u.sin(), 0.0],
            KnotKind::Torus { p, q } => {
                let (p, q) = (p as f64, q as f64);
                let r = 2.0 + (q * u).cos();
                [r * (p * u).cos(), r * (p * u).sin(), (q * u).sin()]
            }
            KnotKind::FigureEight => {
                let r = 2.0 + (2.0 * u).cos();
                [r * (3.0 * u).cos(), r * (3.0 * u).sin(), (4.0 * u).sin()]
            }
        }
    }

    /// A braid word whose closure is this knot with the chirality of
    /// [`KnotKind::r3_point`]: `(strands, letters)` where letter `±i` is
    /// `σ_i^{±1}` (1-based).
    pub fn reference_braid(self) -> (usize, Vec<i32>) {
        match self {
            KnotKind::Unknot => (1, Vec::new()),
            KnotKind::Torus { p, q } => {
                let (p, q) = (p as usize, q as usize);
                let word: Vec<i32> = (0..q).flat_map(|_| 1..p as i32).collect();
                (p, word.into_iter().map(|l| TORUS_CHIRALITY * l).collect())
            }
            KnotKind::FigureEight => (3, vec![1, -2, 1, -2]),
        }
    }
}

/// Sign of the braid letters matching the handedness of the torus-knot
/// parametrization (checked against the Gauss writhe integral in tests).
const TORUS_CHIRALITY: i32 = -1;

impl fmt::Display for KnotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KnotKind::Unknot => write!(f, "unknot"),
            KnotKind::Torus { p, q } => write!(f, "torus-{p}-{q}"),
            KnotKind::FigureEight => write!(f, "figure-eight"),
        }
    }
}

impl FromStr for KnotKind {
    type Err = KnotError;
    fn from_str(s: &str) -> Result<Self, KnotError> {
        let bad = || KnotError::UnknownPreset(s.to_string());
        match s {
            "unknot" => Ok(KnotKind::Unknot),
            "figure-eight" | "figure-8" => Ok(KnotKind::FigureEight),
            "trefoil" => Ok(KnotKind::trefoil()),
            _ => {
                let rest = s.strip_prefix("torus-").ok_or_else(bad)?;
                let (p, q) = rest.split_once('-').ok_or_else(bad)?;
                let p = p.parse().map_err(|_| bad())?;
                let q = q.parse().map_err(|_| bad())?;
                KnotKind::Torus { p, q }.validate()
            }
        }
    }
}

/// Stereographic chart of `S³` centred at a pole: the pole maps to the
/// origin of R³ and its antipode to infinity. The frame is positively
/// oriented, so all charts induce the same orientation and preserve
/// chirality.
#[derive(Clone, Copy, Debug)]
pub struct StereoChart<S> {
    frame: [Point4<S>; 4],
}

impl<S: Real> StereoChart<S> {
    pub fn new(pole: Point4<S>) -> Self {
        Self { frame: oriented_frame(pole) }
    }

    pub fn pole(&self) -> Point4<S> {
        self.frame[0]
    }

    /// R³ → S³.
    pub fn lift(&self, y: [S; 3]) -> Point4<S> {
        let r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
        let d = S::one() + r2;
        let two = S::lit(2.0);
        (self.frame[0] * (S::one() - r2)
            + self.frame[1] * (two * y[0])
            + self.frame[2] * (two * y[1])
            + self.frame[3] * (two * y[2]))
            * (S::one() / d)
    }

    /// S³ ∖ {−pole} → R³.
    pub fn project(&self, x: Point4<S>) -> [S; 3] {
        let d = S::one() + x.dot(self.frame[0]);
        [x.dot(self.frame[1]) / d, x.dot(self.frame[2]) / d, x.dot(self.frame[3]) / d]
    }
}

/// A closed embedded curve on the unit sphere `S³ ⊂ R⁴`, stored as an
/// ordered cyclic list of samples at parameters `θ_j = 2πj/m`.
#[derive(Clone, Debug, PartialEq)]
pub struct KnotCurve<S> {
    pub name: String,
    pub kind: Option<KnotKind>,
    pub samples: Vec<Point4<S>>,
    pub min_self_distance: S,
}

/// Options for preset construction.
#[derive(Clone, Copy, Debug)]
pub struct PresetOptions<S> {
    pub beta: S,
    pub eta: S,
    pub samples: usize,
    /// Fixed R³ scale; `None` picks the largest admissible dyadic scale.
    pub scale: Option<S>,
}

impl<S: Real> Default for PresetOptions<S> {
    fn default() -> Self {
        Self { beta: S::lit(2.0), eta: S::lit(0.2), samples: 512, scale: None }
    }
}

pub fn make_preset_knot<S: Real>(
    kind: KnotKind,
    ell: &AxisLine<S>,
    opts: &PresetOptions<S>,
) -> Result<KnotCurve<S>, KnotError> {
    let kind = kind.validate()?;
    if opts.samples < 64 {
        return Err(KnotError::TooFewSamples { min: 64, got: opts.samples });
    }
    // normalize the R³ curve to unit maximal radius
    let fine = 4096;
    let rmax = (0..fine)
        .map(|i| {
            let y = kind.r3_point(std::f64::consts::TAU * i as f64 / fine as f64);
            (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt()
        })
        .fold(0.0, f64::max);
    let chart = StereoChart::new(ell.dir());
    let build = |s: S| -> Result<KnotCurve<S>, KnotError> {
        let samples: Vec<Point4<S>> = (0..opts.samples)
            .map(|j| {
                let u = std::f64::consts::TAU * j as f64 / opts.samples as f64;
                let y = kind.r3_point(u);
                let k = s.as_f64() / rmax;
                chart.lift([S::lit(y[0] * k), S::lit(y[1] * k), S::lit(y[2] * k)])
            })
            .collect();
        let knot = KnotCurve::from_samples(&kind.to_string(), samples)?;
        knot.check_in_axis_horn(ell, opts.beta, opts.eta)?;
        Ok(KnotCurve { kind: Some(kind), ..knot })
    };
    match opts.scale {
        Some(s) => build(s),
        None => {
            for j in 0..40 {
                let s = S::lit(0.5f64.powi(j));
                match build(s) {
                    Ok(k) => return Ok(k),
                    Err(KnotError::TubeViolation { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(KnotError::NoAdmissibleScale)
        }
    }
}

impl<S: Real> KnotCurve<S> {
    /// Validates a user-supplied cyclic sample list.
    pub fn from_samples(name: &str, samples: Vec<Point4<S>>) -> Result<Self, KnotError> {
        if samples.len() < 8 {
            return Err(KnotError::TooFewSamples { min: 8, got: samples.len() });
        }
        for (index, p) in samples.iter().enumerate() {
            let n = p.norm();
            if (n - S::one()).abs() > S::sphere_tol() {
                return Err(KnotError::NotOnSphere { index, norm: n.as_f64() });
            }
        }
        let min_self_distance = self_distance(&samples);
        let threshold = max_spacing(&samples);
        if !(min_self_distance > threshold) {
            return Err(KnotError::SelfIntersection {
                distance: min_self_distance.as_f64(),
                threshold: threshold.as_f64(),
            });
        }
        Ok(Self { name: name.to_string(), kind: None, samples, min_self_distance })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Parameter of sample `j`.
    pub fn theta(&self, j: usize) -> S {
        S::TAU() * S::from_usize_lossy(j) / S::from_usize_lossy(self.len())
    }

    /// Nearest sample index to a parameter.
    pub fn index_of(&self, theta: S) -> usize {
        let m = self.len();
        let x = (theta / S::TAU() * S::from_usize_lossy(m)).round().to_i64().unwrap_or(0);
        x.rem_euclid(m as i64) as usize
    }

    /// `δ(θ)`: spherical interpolation between consecutive samples.
    pub fn delta(&self, theta: S) -> Point4<S> {
        let m = self.len();
        let x = (theta / S::TAU()).fract();
        let x = if x < S::zero() { x + S::one() } else { x } * S::from_usize_lossy(m);
        let i = x.floor().to_usize().unwrap_or(0).min(m - 1);
        let f = x - S::from_usize_lossy(i);
        let (a, b) = (self.samples[i], self.samples[(i + 1) % m]);
        a.lerp(b, f).normalized().unwrap_or(a)
    }

    /// Unit tangent at sample `j` (central difference).
    pub fn tangent(&self, j: usize) -> Point4<S> {
        let m = self.len();
        let d = self.samples[(j + 1) % m] - self.samples[(j + m - 1) % m];
        d.normalized().unwrap_or(d)
    }

    pub fn spacing(&self) -> S {
        max_spacing(&self.samples)
    }

    pub fn length(&self) -> S {
        let m = self.len();
        (0..m).map(|i| self.samples[i].dist(self.samples[(i + 1) % m])).sum()
    }

    pub fn check_in_axis_horn(&self, ell: &AxisLine<S>, beta: S, eta: S) -> Result<(), KnotError> {
        for (index, &x) in self.samples.iter().enumerate() {
            if ell.transverse(x).norm() <= S::epsilon() * S::lit(8.0) {
                return Err(KnotError::MeetsAxis { index });
            }
            if !axis_horn_contains(x, ell, beta, eta) {
                return Err(KnotError::TubeViolation { index });
            }
        }
        Ok(())
    }

    /// Largest chordal offset `ρ` of a sample from the axis point.
    pub fn max_offset(&self, ell: &AxisLine<S>) -> S {
        self.samples.iter().map(|&x| x.dist(ell.dir())).fold(S::zero(), S::max)
    }

    /// Projects the samples into the stereographic chart centred at `pole`.
    pub fn to_r3(&self, pole: Point4<S>) -> Vec<[S; 3]> {
        let chart = StereoChart::new(pole);
        self.samples.iter().map(|&x| chart.project(x)).collect()
    }
}

pub fn max_spacing<S: Real>(samples: &[Point4<S>]) -> S {
    let m = samples.len();
    (0..m).map(|i| samples[i].dist(samples[(i + 1) % m])).fold(S::zero(), S::max)
}

/// Distance of closest approach of a closed polygon: the smallest distance
/// `‖q_i − q_j‖` over pairs where `j` is a local extremum of `‖q_i − q_·‖`
/// away from `i` (the chord is normal to the curve at `q_j`).
pub fn self_distance<S: Real>(samples: &[Point4<S>]) -> S {
    let m = samples.len();
    (0..m)
        .into_par_iter()
        .map(|i| {
            let d = |j: usize| samples[i].dist(samples[j % m]);
            let mut best = S::infinity();
            for off in 2..m - 1 {
                let j = i + off;
                let (a, b, c) = (d(j - 1), d(j), d(j + 1));
                let is_min = b <= a && b <= c;
                let is_max = b >= a && b >= c;
                if (is_min || is_max) && b < best {
                    best = b;
                }
            }
            best
        })
        .reduce(|| S::infinity(), S::min)
}

/// Minor great-circle arc between two points of `S³`, arc-length parametrized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphericalGeodesic<S> {
    pub a: Point4<S>,
    pub b: Point4<S>,
    /// Unit tangent at `a`.
    pub dir: Point4<S>,
    pub length: S,
}

pub fn geodesic_between<S: Real>(a: Point4<S>, b: Point4<S>) -> Result<SphericalGeodesic<S>, KnotError> {
    for (index, p) in [a, b].into_iter().enumerate() {
        if (p.norm() - S::one()).abs() > S::sphere_tol() {
            return Err(KnotError::NotOnSphere { index, norm: p.norm().as_f64() });
        }
    }
    let w = b - a * a.dot(b);
    let wn = w.norm();
    if wn <= S::lit(1e3) * S::epsilon() {
        return Err(KnotError::AntipodalOrEqual);
    }
    let length = wn.atan2(a.dot(b));
    Ok(SphericalGeodesic { a, b, dir: w * (S::one() / wn), length })
}

impl<S: Real> SphericalGeodesic<S> {
    pub fn eval(&self, s: S) -> Point4<S> {
        let (sn, cs) = s.sin_cos();
        self.a * cs + self.dir * sn
    }

    pub fn tangent(&self, s: S) -> Point4<S> {
        let (sn, cs) = s.sin_cos();
        self.dir * cs - self.a * sn
    }

    pub fn midpoint(&self) -> Point4<S> {
        self.eval(self.length / S::lit(2.0))
    }

    /// `n + 1` points from `a` to `b` inclusive.
    pub fn sample(&self, n: usize) -> Vec<Point4<S>> {
        let n = n.max(1);
        (0..=n)
            .map(
                |i| {
                    if i == n {
                        self.b
                    } else {
                        self.eval(self.length * S::from_usize_lossy(i) / S::from_usize_lossy(n))
                    }
                },
            )
            .collect()
    }
}

/// Thresholds for [`is_simple`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplicityOptions {
    /// Minimal crossing angle, degrees.
    pub min_angle_deg: f64,
    /// Tube radius as a multiple of the sample spacing.
    pub tube_factor: f64,
}

impl Default for SimplicityOptions {
    fn default() -> Self {
        Self { min_angle_deg: 5.0, tube_factor: 2.0 }
    }
}

/// Where the great circle `r_θ` meets the knot tube.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeHit {
    /// Arc-length parameter along `r_θ`, in `[0, 2π)`.
    pub s: f64,
    pub angle_deg: f64,
    pub sample: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplicityReport {
    pub theta: f64,
    pub hits: Vec<TubeHit>,
    /// Index into `hits` of the hit at `δ(θ)`.
    pub own_hit: usize,
    pub transversal: bool,
    pub min_angle_deg: f64,
    /// Cap-boundary crossings of `r_θ` on `(τ_k, τ_{k+1})`.
    pub boundary_crossings_after: usize,
    /// Cap-boundary crossings on `(τ_{k-1}, τ_k)`.
    pub boundary_crossings_before: usize,
    pub simple: bool,
}

/// Parameters along `r_θ` where it crosses the cap boundary `ρ = η`.
pub fn cap_exit_parameter<S: Real>(eta: S) -> S {
    S::lit(2.0) * (eta / S::lit(2.0)).asin()
}

/// Tests whether the orbit arc through `δ(θ)` is simple: the great circle
/// `r_θ` from `ℓ(1)` through `δ(θ)` meets the knot tube transversally, and
/// right after `δ(θ)` it leaves and re-enters the cap `ρ < η` exactly once
/// each before meeting the knot again.
pub fn is_simple<S: Real>(
    theta: S,
    knot: &KnotCurve<S>,
    ell: &AxisLine<S>,
    eta: S,
    opts: &SimplicityOptions,
) -> Result<SimplicityReport, KnotError> {
    let p = ell.dir();
    let b = knot.delta(theta);
    let w = b - p * b.dot(p);
    let wn = w.norm();
    if wn <= S::lit(1e-12) {
        return Err(KnotError::DegenerateGeodesic(theta.as_f64()));
    }
    let u = w * (S::one() / wn);
    let tau = S::TAU();
    let param = |q: Point4<S>| {
        let s = q.dot(u).atan2(q.dot(p));
        if s < S::zero() {
            s + tau
        } else {
            s
        }
    };
    let tube = S::lit(opts.tube_factor) * knot.spacing();
    let m = knot.len();
    let dist: Vec<S> = knot
        .samples
        .iter()
        .map(|&q| {
            let (a, c) = (q.dot(p), q.dot(u));
            let r = q - p * a - u * c;
            let radial = (a * a + c * c).sqrt() - S::one();
            (r.norm_sq() + radial * radial).sqrt()
        })
        .collect();
    let inside: Vec<bool> = dist.iter().map(|&d| d < tube).collect();
    let own = knot.index_of(theta);

    // maximal cyclic runs of samples inside the tube
    let mut hits = Vec::new();
    let mut own_hit = None;
    if inside.iter().all(|&x| x) {
        return Err(KnotError::DegenerateGeodesic(theta.as_f64()));
    }
    let start = (0..m).find(|&i| !inside[i]).unwrap();
    let mut i = 0;
    while i < m {
        let idx = (start + i) % m;
        if !inside[idx] {
            i += 1;
            continue;
        }
        let mut run = Vec::new();
        while i < m && inside[(start + i) % m] {
            run.push((start + i) % m);
            i += 1;
        }
        let contains_own = run.contains(&own);
        let best = if contains_own {
            own
        } else {
            *run.iter().min_by(|&&x, &&y| dist[x].partial_cmp(&dist[y]).unwrap()).unwrap()
        };
        let q = if contains_own { b } else { knot.samples[best] };
        let s = param(q);
        let (sn, cs) = s.sin_cos();
        let circle_tangent = u * cs - p * sn;
        let cosang = knot.tangent(best).dot(circle_tangent).abs().min(S::one());
        let angle_deg = cosang.acos().as_f64().to_degrees();
        if contains_own {
            own_hit = Some(hits.len());
        }
        hits.push(TubeHit { s: s.as_f64(), angle_deg, sample: best });
    }
    let mut order: Vec<usize> = (0..hits.len()).collect();
    order.sort_by(|&a, &b| hits[a].s.partial_cmp(&hits[b].s).unwrap());
    let hits: Vec<TubeHit> = order.iter().map(|&i| hits[i]).collect();
    let own_hit = match own_hit {
        Some(o) => order.iter().position(|&i| i == o).unwrap(),
        None => {
            // δ(θ) lies on the knot, so its own run always exists; fall back to nearest
            let s0 = param(b).as_f64();
            (0..hits.len())
                .min_by(|&a, &c| (hits[a].s - s0).abs().partial_cmp(&(hits[c].s - s0).abs()).unwrap())
                .unwrap()
        }
    };
    let min_angle_deg = hits.iter().map(|h| h.angle_deg).fold(90.0, f64::min);
    let transversal = min_angle_deg >= opts.min_angle_deg;

    let s_exit = cap_exit_parameter(eta).as_f64();
    let boundary = [s_exit, std::f64::consts::TAU - s_exit];
    let count = |lo: f64, hi: f64| boundary.iter().filter(|&&x| x > lo && x < hi).count();
    let s_k = hits[own_hit].s;
    let s_next = hits.get(own_hit + 1).map_or(std::f64::consts::TAU, |h| h.s);
    let s_prev = if own_hit == 0 { 0.0 } else { hits[own_hit - 1].s };
    let after = count(s_k, s_next);
    let before = count(s_prev, s_k);
    Ok(SimplicityReport {
        theta: theta.as_f64(),
        hits,
        own_hit,
        transversal,
        min_angle_deg,
        boundary_crossings_after: after,
        boundary_crossings_before: before,
        simple: transversal && after == 2,
    })
}

/// Simplicity flags for `n` equally spaced parameters `θ_i = 2πi/n`.
pub fn scan_simple<S: Real>(
    knot: &KnotCurve<S>,
    ell: &AxisLine<S>,
    eta: S,
    n: usize,
    opts: &SimplicityOptions,
) -> Vec<bool> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let theta = S::TAU() * S::from_usize_lossy(i) / S::from_usize_lossy(n);
            is_simple(theta, knot, ell, eta, opts).map(|r| r.simple).unwrap_or(false)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    type P = Point4<f64>;

    fn ell() -> AxisLine<f64> {
        AxisLine::e0()
    }

    #[test]
    fn stereo_chart_round_trip() {
        let chart = StereoChart::new(P::new(0.5, 0.5, 0.5, 0.5));
        let y = [0.3, -0.2, 0.7];
        let x = chart.lift(y);
        assert!((x.norm() - 1.0).abs() < 1e-15);
        let z = chart.project(x);
        for i in 0..3 {
            assert!((z[i] - y[i]).abs() < 1e-14);
        }
        assert!(chart.lift([0.0; 3]).dist(chart.pole()) < 1e-15);
    }

    #[test]
    fn preset_names_round_trip() {
        for name in ["unknot", "torus-2-3", "figure-eight", "torus-3-5"] {
            assert_eq!(name.parse::<KnotKind>().unwrap().to_string(), name);
        }
        assert_eq!("torus-2-4".parse::<KnotKind>(), Err(KnotError::NotCoprime(2, 4)));
        assert!(matches!("hopf".parse::<KnotKind>(), Err(KnotError::UnknownPreset(_))));
    }

    #[test]
    fn unknot_self_distance_is_diameter() {
        let k =
            make_preset_knot(KnotKind::Unknot, &ell(), &PresetOptions { samples: 128, ..Default::default() }).unwrap();
        // the round circle of chordal radius r has diameter 2r
        let c = k.samples.iter().fold(P::zero(), |a, &b| a + b) * (1.0 / 128.0);
        let r = k.samples[0].dist(c);
        assert!((k.min_self_distance - 2.0 * r).abs() < 1e-9 * r, "{} vs {}", k.min_self_distance, 2.0 * r);
    }

    #[test]
    fn presets_are_valid_at_all_resolutions() {
        for kind in [KnotKind::Unknot, KnotKind::trefoil(), KnotKind::FigureEight] {
            for m in [64, 128, 256, 512] {
                let k = make_preset_knot(kind, &ell(), &PresetOptions { samples: m, ..Default::default() }).unwrap();
                assert_eq!(k.len(), m);
                assert!(k.samples.iter().all(|p| (p.norm() - 1.0).abs() < 1e-12));
                assert!(k.min_self_distance > k.spacing());
                k.check_in_axis_horn(&ell(), 2.0, 0.2).unwrap();
            }
        }
    }

    #[test]
    fn preset_rejects_low_resolution_and_large_scale() {
        let o = PresetOptions { samples: 32, ..Default::default() };
        assert!(matches!(make_preset_knot(KnotKind::Unknot, &ell(), &o), Err(KnotError::TooFewSamples { .. })));
        let o = PresetOptions { scale: Some(1.0), ..Default::default() };
        assert!(matches!(make_preset_knot(KnotKind::Unknot, &ell(), &o), Err(KnotError::TubeViolation { .. })));
    }

    #[test]
    fn quarter_circle_geodesic() {
        let g = geodesic_between(P::basis(0), P::basis(1)).unwrap();
        assert!((g.length - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let mid = (P::basis(0) + P::basis(1)) * (0.5f64.sqrt());
        assert!(g.midpoint().dist(mid) < 1e-15);
        assert!(g.eval(g.length).dist(P::basis(1)) < 1e-15);
        assert_eq!(geodesic_between(P::basis(0), -P::basis(0)), Err(KnotError::AntipodalOrEqual));
        assert_eq!(geodesic_between(P::basis(0), P::basis(0)), Err(KnotError::AntipodalOrEqual));
    }

    #[test]
    fn short_geodesic_matches_chord() {
        let a = P::basis(0);
        let b = (a + P::basis(2) * 1e-6).normalized().unwrap();
        let g = geodesic_between(a, b).unwrap();
        assert!((g.length - a.dist(b)).abs() < 1e-15);
    }

    /// Off-centre circle in the chart: rays from the pole are tangent to it
    /// at two points and cross it twice elsewhere.
    fn off_centre_circle(m: usize) -> KnotCurve<f64> {
        let chart = StereoChart::new(P::basis(0));
        let (cx, r) = (0.06, 0.02);
        let samples = (0..m)
            .map(|j| {
                let a = std::f64::consts::TAU * j as f64 / m as f64;
                chart.lift([cx + r * a.cos(), r * a.sin(), 0.0])
            })
            .collect();
        KnotCurve::from_samples("off-centre", samples).unwrap()
    }

    #[test]
    fn farthest_point_of_off_centre_circle_is_simple() {
        let k = off_centre_circle(256);
        let far = (0..k.len())
            .max_by(|&a, &b| k.samples[a].dist(P::basis(0)).partial_cmp(&k.samples[b].dist(P::basis(0))).unwrap())
            .unwrap();
        let r = is_simple(k.theta(far), &k, &ell(), 0.2, &SimplicityOptions::default()).unwrap();
        assert!(r.simple, "{r:?}");
        assert_eq!(r.hits.len(), 2);
        assert!(r.min_angle_deg > 80.0);
        // the near side is shadowed by the far side
        let near = (far + k.len() / 2) % k.len();
        let r = is_simple(k.theta(near), &k, &ell(), 0.2, &SimplicityOptions::default()).unwrap();
        assert!(!r.simple);
        assert_eq!(r.boundary_crossings_after, 0);
    }

    #[test]
    fn tangent_ray_is_not_transversal() {
        let k = off_centre_circle(256);
        // tangency where (y − c) ⊥ y: angle a with cos a = −r / cx
        let a = (-0.02f64 / 0.06).acos();
        let r = is_simple(a, &k, &ell(), 0.2, &SimplicityOptions::default()).unwrap();
        assert!(!r.transversal && !r.simple, "{r:?}");
        assert!(r.min_angle_deg < 5.0);
    }

    #[test]
    fn trefoil_scan_finds_simple_parameters() {
        let k = make_preset_knot(KnotKind::trefoil(), &ell(), &PresetOptions::default()).unwrap();
        let flags = scan_simple(&k, &ell(), 0.2, 360, &SimplicityOptions::default());
        let n = flags.iter().filter(|&&f| f).count();
        assert!(n > 0 && n < 360, "{n}");
    }

    #[test]
    fn simplicity_survives_refinement() {
        let o = SimplicityOptions::default();
        for kind in [KnotKind::trefoil(), KnotKind::FigureEight] {
            let k1 = make_preset_knot(kind, &ell(), &PresetOptions { samples: 256, ..Default::default() }).unwrap();
            let k2 = make_preset_knot(kind, &ell(), &PresetOptions { samples: 512, ..Default::default() }).unwrap();
            let f1 = scan_simple(&k1, &ell(), 0.2, 360, &o);
            let f2 = scan_simple(&k2, &ell(), 0.2, 360, &o);
            let lost = f1.iter().zip(&f2).filter(|(&a, &b)| a && !b).count();
            assert_eq!(lost, 0, "{kind}");
        }
    }

    fn writhe_integral(kind: KnotKind, m: usize) -> f64 {
        let pts: Vec<[f64; 3]> = (0..m).map(|j| kind.r3_point(std::f64::consts::TAU * j as f64 / m as f64)).collect();
        let step = |a: usize| {
            let (p, q) = (pts[a], pts[(a + 1) % m]);
            [q[0] - p[0], q[1] - p[1], q[2] - p[2]]
        };
        let mut w = 0.0;
        for i in 0..m {
            for j in 0..m {
                if i == j {
                    continue;
                }
                let (a, b) = (step(i), step(j));
                let r = [pts[i][0] - pts[j][0], pts[i][1] - pts[j][1], pts[i][2] - pts[j][2]];
                let c = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
                let n = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
                w += (c[0] * r[0] + c[1] * r[1] + c[2] * r[2]) / n.powi(3);
            }
        }
        w / (4.0 * std::f64::consts::PI)
    }

    #[test]
    fn torus_braid_matches_writhe_sign() {
        for kind in [KnotKind::trefoil(), KnotKind::Torus { p: 2, q: 5 }] {
            let w = writhe_integral(kind, 600);
            let (_, word) = kind.reference_braid();
            assert!(w.abs() > 1.0, "{kind}: {w}");
            assert!(word.iter().all(|&l| (l > 0) == (w > 0.0)), "{kind}: {w}");
        }
        assert!(writhe_integral(KnotKind::FigureEight, 600).abs() < 1.5);
    }
}
