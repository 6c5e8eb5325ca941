//! The Θ_β action, hornified knots, orbit arcs, the universal LNE triangle
//! `T_{β,K}` with its closing cone `T′`, and the pair `(Y_K, Ỹ_K)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{
    axis_horn_contains, cone_over, quasi_polar_decompose, quasi_polar_reconstruct, ArcGerm, AxisLine, GeometryError,
    QuasiPolar,
};
use crate::knot::{
    cap_exit_parameter, geodesic_between, is_simple, KnotCurve, KnotError, SimplicityOptions, SphericalGeodesic,
};
use crate::point::Point4;
use crate::scalar::Real;
use crate::surface::{check_ladder, SampledSurface, SurfaceError};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum HornError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Knot(#[from] KnotError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error("beta must be >= 1, got {0}")]
    InvalidBeta(f64),
    #[error("point ({col}, {row}) leaves the horn neighbourhood")]
    TubeViolation { col: usize, row: usize },
    #[error("need theta1 < theta2 inside [0, 2pi)")]
    EmptyRange,
    #[error("knot tangent is parallel to the axis")]
    DegeneratePlane,
    #[error("no simple window found in the theta scan")]
    NoSimpleWindow,
    #[error("pieces {0} and {1} do not share their boundary arc (gap {2})")]
    GlueMismatch(String, String, f64),
    #[error("no transversal closing geodesic outside the horn neighbourhood")]
    NoClosingGeodesic,
    #[error("the counterexample needs a non-trivial knot and beta > 1")]
    TrivialInput,
}

fn check_beta<S: Real>(beta: S) -> Result<(), HornError> {
    if !(beta >= S::one()) || !beta.is_finite() {
        return Err(HornError::InvalidBeta(beta.as_f64()));
    }
    Ok(())
}

/// Quasi-polar data `(ρ, v)` of a point of `S³`.
fn unit_coords<S: Real>(x: Point4<S>, ell: &AxisLine<S>) -> Result<(S, Point4<S>), HornError> {
    if (x.norm() - S::one()).abs() > S::sphere_tol() {
        return Err(GeometryError::NonSpherical { index: 0, norm: x.norm().as_f64() }.into());
    }
    let q = quasi_polar_decompose(x, ell)?;
    let v = q.v.ok_or(KnotError::DegenerateGeodesic(0.0))?;
    Ok((q.rho, v))
}

fn act<S: Real>(t: S, rho: S, v: Point4<S>, ell: &AxisLine<S>, beta: S) -> Result<Point4<S>, HornError> {
    let r = t.powf(beta) * rho;
    if r >= S::lit(2.0) * t {
        return Err(GeometryError::OffsetOverflow(r.as_f64()).into());
    }
    Ok(quasi_polar_reconstruct(&QuasiPolar { t, rho: r, v: Some(v) }, ell)?)
}

/// `Θ_β(t, x) = (t, t^β ρ(x), v(x))` for `x ∈ S³ ∖ {±dir}`.
pub fn theta_action<S: Real>(t: S, x: Point4<S>, ell: &AxisLine<S>, beta: S) -> Result<Point4<S>, HornError> {
    check_beta(beta)?;
    if !(t > S::zero()) {
        return Err(GeometryError::ZeroPoint.into());
    }
    let (rho, v) = unit_coords(x, ell)?;
    act(t, rho, v, ell, beta)
}

/// The map carrying the slice at scale `t` of a β-hornification onto the
/// slice at scale `s·t`: `(t, ρ, v) ↦ (s t, s^β ρ, v)`.
pub fn rescale_compatible<S: Real>(z: Point4<S>, s: S, ell: &AxisLine<S>, beta: S) -> Result<Point4<S>, HornError> {
    let q = quasi_polar_decompose(z, ell)?;
    let r = QuasiPolar { t: q.t * s, rho: q.rho * s.powf(beta), v: q.v };
    Ok(quasi_polar_reconstruct(&r, ell)?)
}

/// `γ_θ(t) = Θ_β(t, δ_K(θ))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitArc<S> {
    pub theta: S,
    pub beta: S,
    pub ell: AxisLine<S>,
    rho: S,
    v: Point4<S>,
}

impl<S: Real> OrbitArc<S> {
    pub fn new(knot: &KnotCurve<S>, theta: S, ell: &AxisLine<S>, beta: S) -> Result<Self, HornError> {
        check_beta(beta)?;
        Self::through(knot.delta(theta), theta, ell, beta)
    }

    /// The orbit through a given point of `S³`.
    pub fn through(x: Point4<S>, theta: S, ell: &AxisLine<S>, beta: S) -> Result<Self, HornError> {
        let (rho, v) = unit_coords(x, ell)?;
        Ok(Self { theta, beta, ell: *ell, rho, v })
    }

    pub fn eval(&self, t: S) -> Result<Point4<S>, HornError> {
        act(t, self.rho, self.v, &self.ell, self.beta)
    }

    pub fn germ(&self) -> ArcGerm<S> {
        let a = *self;
        ArcGerm::new(S::one(), move |t| a.eval(t).unwrap_or_else(|_| Point4::zero()))
    }

    /// Orthonormal basis `(dir, v)` of the plane `P_θ`.
    pub fn plane(&self) -> (Point4<S>, Point4<S>) {
        (self.ell.dir(), self.v)
    }

    /// Largest relative distance from `P_θ` over the given scales.
    pub fn planarity_defect(&self, ladder: &[S]) -> Result<S, HornError> {
        let (a, b) = self.plane();
        let mut worst = S::zero();
        for &t in ladder {
            let p = self.eval(t)?;
            let off = p - a * p.dot(a) - b * p.dot(b);
            worst = worst.max(off.norm() / t);
        }
        Ok(worst)
    }
}

/// Samples `X_{β,K}` on a ladder: row `k` is `Θ_β(t_k, ·)` applied to the
/// knot samples, so every link is a copy of the knot.
pub fn hornify<S: Real>(
    knot: &KnotCurve<S>,
    ell: &AxisLine<S>,
    beta: S,
    eta: S,
    ladder: &[S],
) -> Result<SampledSurface<S>, HornError> {
    check_beta(beta)?;
    check_ladder(ladder)?;
    let coords: Vec<(S, Point4<S>)> = knot.samples.iter().map(|&x| unit_coords(x, ell)).collect::<Result<_, _>>()?;
    let rows: Vec<Vec<Point4<S>>> = ladder
        .par_iter()
        .map(|&t| coords.iter().map(|&(rho, v)| act(t, rho, v, ell, beta)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()?;
    let mut s = SampledSurface::from_rows(&format!("X[{}]", knot.name), ladder.to_vec(), knot.len(), true, |k, _| {
        rows[k].clone()
    });
    s.tags = vec!["horn".into(); knot.len()];
    for k in 0..s.rows() {
        for j in 0..s.cols {
            if !axis_horn_contains(s.point(j, k), ell, beta, eta) {
                return Err(HornError::TubeViolation { col: j, row: k });
            }
        }
    }
    Ok(s)
}

/// Column index of the sample parameter nearest to `theta`.
pub fn column_of<S: Real>(x: &SampledSurface<S>, theta: S) -> usize {
    let c = (theta / S::TAU() * S::from_usize_lossy(x.cols)).round().to_usize().unwrap_or(0);
    c.min(x.cols - 1)
}

/// `T(γ_{θ₁}, γ_{θ₂})`: the columns between two orbit arcs.
pub fn sub_triangle<S: Real>(x: &SampledSurface<S>, theta1: S, theta2: S) -> Result<SampledSurface<S>, HornError> {
    if !(theta1 >= S::zero() && theta1 < theta2 && theta2 < S::TAU()) {
        return Err(HornError::EmptyRange);
    }
    let (j1, j2) = (column_of(x, theta1), column_of(x, theta2));
    sub_triangle_cols(x, j1, j2)
}

pub fn sub_triangle_cols<S: Real>(x: &SampledSurface<S>, j1: usize, j2: usize) -> Result<SampledSurface<S>, HornError> {
    if j1 >= j2 || j2 >= x.cols {
        return Err(HornError::EmptyRange);
    }
    let mut t = x.restrict_columns(j1, j2, &format!("T[{j1},{j2}]"))?;
    let last = t.cols - 1;
    t.tags[0] = "gamma1".into();
    t.tags[last] = "gamma2".into();
    Ok(t)
}

/// The closure of `X ∖ T(γ_{θ₁}, γ_{θ₂})`: columns from `j2` around to `j1`.
pub fn complement_triangle<S: Real>(
    x: &SampledSurface<S>,
    j1: usize,
    j2: usize,
) -> Result<SampledSurface<S>, HornError> {
    if j1 >= j2 || j2 >= x.cols {
        return Err(HornError::EmptyRange);
    }
    let order: Vec<usize> = (j2..x.cols).chain(0..=j1).collect();
    let mut b = x.select_columns(&order, "body");
    let last = b.cols - 1;
    b.tags.iter_mut().for_each(|t| *t = "body".into());
    b.tags[0] = "gamma2".into();
    b.tags[last] = "gamma1".into();
    Ok(b)
}

/// Bi-Lipschitz distortion of the orthogonal projection of `t` onto
/// `Q_θ = span(dir, knot tangent at θ)`: the larger of the maximal expansion
/// and the maximal contraction over all sampled pairs.
pub fn projection_distortion<S: Real>(
    t: &SampledSurface<S>,
    knot: &KnotCurve<S>,
    theta: S,
    ell: &AxisLine<S>,
) -> Result<S, HornError> {
    let a = ell.dir();
    let tan = ell.transverse(knot.tangent(knot.index_of(theta)));
    let b = tan.normalized().filter(|_| tan.norm() > S::lit(1e-6)).ok_or(HornError::DegeneratePlane)?;
    let proj: Vec<(S, S)> = t.points.iter().map(|&p| (p.dot(a), p.dot(b))).collect();
    let n = t.points.len();
    let worst = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut w = S::one();
            for j in i + 1..n {
                let d = t.points[i].dist(t.points[j]);
                if d == S::zero() {
                    continue;
                }
                let (dx, dy) = (proj[i].0 - proj[j].0, proj[i].1 - proj[j].1);
                let e = (dx * dx + dy * dy).sqrt() / d;
                w = w.max(e).max(if e > S::zero() { S::one() / e } else { S::infinity() });
            }
            w
        })
        .reduce(|| S::one(), S::max);
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniversalOptions {
    pub eta: f64,
    pub simplicity: SimplicityOptions,
    pub distortion_bound: f64,
    /// Arc-length margin past the cap boundary for `x₁, x₂`.
    pub margin: f64,
    pub min_window: usize,
    /// Glue columns spanning the link's own size next to the knot.
    pub glue_inner_cols: usize,
    /// Geometrically spaced glue columns from there out to `ℓ_i`.
    pub glue_outer_cols: usize,
    /// Extent of the inner glue zone, in units of the link's angular radius.
    pub glue_inner_extent: f64,
    pub tau_cols: usize,
}

impl Default for UniversalOptions {
    fn default() -> Self {
        Self {
            eta: 0.2,
            simplicity: SimplicityOptions::default(),
            distortion_bound: 4.0,
            margin: 0.05,
            min_window: 3,
            glue_inner_cols: 64,
            glue_outer_cols: 40,
            glue_inner_extent: 1.5,
            tau_cols: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniversalTriangle<S> {
    pub beta: S,
    pub knot: String,
    pub ell: AxisLine<S>,
    /// `X_{β,K}`.
    pub horn: SampledSurface<S>,
    /// The excised `T = T(γ_{θ₁}, γ_{θ₂})`.
    pub excised: SampledSurface<S>,
    /// Closure of `X_{β,K} ∖ T`, from `γ_{θ₂}` around to `γ_{θ₁}`.
    pub body: SampledSurface<S>,
    /// `T_{θ₁}`, from `γ_{θ₁}` to `ℓ₁`.
    pub glue1: SampledSurface<S>,
    /// `T_{θ₂}`, from `γ_{θ₂}` to `ℓ₂`.
    pub glue2: SampledSurface<S>,
    /// `T′ = Tr₀(τ)`, from `ℓ₁` to `ℓ₂`.
    pub closing: SampledSurface<S>,
    /// `T_{β,K}` as one open surface from `ℓ₂` to `ℓ₁`.
    pub assembled: SampledSurface<S>,
    /// `T_{β,K} ∪ T′`, closed.
    pub closed: SampledSurface<S>,
    pub j1: usize,
    pub j2: usize,
    pub theta1: S,
    pub theta2: S,
    /// The largest simple window the scan found, as column indices.
    pub simple_window: (usize, usize),
    pub distortion: S,
    pub x1: Point4<S>,
    pub x2: Point4<S>,
    pub tau: SphericalGeodesic<S>,
    /// Angles (degrees) between `τ` and `r_{θ₁}`, `r_{θ₂}` at `x₁`, `x₂`.
    pub tau_angles_deg: (f64, f64),
    /// Smallest spherical distance from `τ` to the axis point.
    pub tau_clearance: S,
    /// The link of the tangent cone of `T_{β,K} ∪ T′`: the arc of `r_{θ₁}`
    /// from `dir` to `x₁`, then `τ`, then back along `r_{θ₂}`; closed.
    pub tangent_limit: Vec<Point4<S>>,
}

/// Longest run of `true` in a non-wrapping scan, as inclusive bounds.
fn longest_run(flags: &[bool]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for i in 0..=flags.len() {
        let on = i < flags.len() && flags[i];
        match (on, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if best.is_none_or(|(a, b)| i - s > b - a + 1) {
                    best = Some((s, i - 1));
                }
                start = None;
            }
            _ => {}
        }
    }
    best
}

/// Angle between `p` and the unit vector `dir`, accurate for tiny angles
/// where `acos` of the dot product loses all digits.
fn polar_angle<S: Real>(p: Point4<S>, dir: Point4<S>) -> S {
    let c = p.dot(dir);
    (p - dir * c).norm().atan2(c)
}

fn sector_point<S: Real>(t: S, angle: S, dir: Point4<S>, u: Point4<S>) -> Point4<S> {
    let (s, c) = angle.sin_cos();
    (dir * c + u * s) * t
}

/// Polar angles of the glue columns on one row. Near the knot the spacing
/// is a fixed fraction of the link's current size, so rows at small scales
/// are similar to each other; beyond that the angles grow geometrically up
/// to `psi`.
fn glue_angles<S: Real>(phi: S, size: S, psi: S, opts: &UniversalOptions) -> Vec<S> {
    let (n_in, n_out) = (opts.glue_inner_cols.max(1), opts.glue_outer_cols.max(1));
    let half = (psi - phi) / S::lit(2.0);
    let reach = (size * S::lit(opts.glue_inner_extent)).min(half);
    let mut a: Vec<S> = (0..=n_in).map(|c| phi + reach * S::from_usize_lossy(c) / S::from_usize_lossy(n_in)).collect();
    let start = phi + reach;
    let r = (psi / start).powf(S::one() / S::from_usize_lossy(n_out));
    for c in 1..n_out {
        a.push(start * r.powi(c as i32));
    }
    a.push(psi);
    a
}

/// Planar sector `T_θ ⊂ P_θ` between the orbit column `gamma` and the ray
/// through the point at polar angle `psi` in direction `u`; `sizes[k]` is
/// the angular radius of the link at row `k`.
#[allow(clippy::too_many_arguments)]
fn glue_sector<S: Real>(
    gamma: &[Point4<S>],
    sizes: &[S],
    ladder: &[S],
    dir: Point4<S>,
    u: Point4<S>,
    psi: S,
    opts: &UniversalOptions,
    name: &str,
    ell_tag: &str,
) -> SampledSurface<S> {
    let n = opts.glue_inner_cols.max(1) + opts.glue_outer_cols.max(1) + 1;
    let mut s = SampledSurface::from_rows(name, ladder.to_vec(), n, false, |k, t| {
        let g = gamma[k];
        let phi = (g.dot(u) / t).atan2(g.dot(dir) / t);
        glue_angles(phi, sizes[k], psi, opts)
            .into_iter()
            .enumerate()
            .map(|(c, a)| if c == 0 { g } else { sector_point(t, a, dir, u) })
            .collect()
    });
    s.tags = vec![name.to_string(); n];
    s.tags[0] = if name.ends_with('1') { "gamma1".into() } else { "gamma2".into() };
    s.tags[n - 1] = ell_tag.into();
    s
}

fn check_glue<S: Real>(a: &SampledSurface<S>, b: &SampledSurface<S>) -> Result<(), HornError> {
    let mut gap = S::zero();
    for k in 0..a.rows() {
        let d = a.point(a.cols - 1, k).dist(b.point(0, k)) / a.ladder[k];
        gap = gap.max(d);
    }
    if gap > S::geom_tol() {
        return Err(HornError::GlueMismatch(a.name.clone(), b.name.clone(), gap.as_f64()));
    }
    Ok(())
}

fn angle_deg<S: Real>(a: Point4<S>, b: Point4<S>) -> f64 {
    let c = (a.dot(b).abs() / (a.norm() * b.norm())).min(S::one());
    c.acos().as_f64().to_degrees()
}

struct Closing<S> {
    psi: S,
    tau: SphericalGeodesic<S>,
    angles_deg: (f64, f64),
    clearance: S,
}

/// Picks `x₁, x₂` past the cap boundary on `r_{θ₁}, r_{θ₂}` so that the
/// geodesic `τ` between them avoids the cap and crosses both rays
/// transversally.
fn closing_points<S: Real>(
    dir: Point4<S>,
    u1: Point4<S>,
    u2: Point4<S>,
    eta: S,
    opts: &UniversalOptions,
) -> Result<Closing<S>, HornError> {
    let exit = cap_exit_parameter(eta);
    let mut psi = exit + S::lit(opts.margin);
    while psi < S::FRAC_PI_2() {
        let x1 = sector_point(S::one(), psi, dir, u1);
        let x2 = sector_point(S::one(), psi, dir, u2);
        if let Ok(tau) = geodesic_between(x1, x2) {
            let n = 64;
            let clearance = tau.sample(n).iter().map(|p| polar_angle(*p, dir)).fold(S::infinity(), S::min);
            let (s, c) = psi.sin_cos();
            let r1 = u1 * c - dir * s;
            let r2 = u2 * c - dir * s;
            let a1 = angle_deg(tau.tangent(S::zero()), r1);
            let a2 = angle_deg(tau.tangent(tau.length), r2);
            let min_angle = opts.simplicity.min_angle_deg;
            if clearance > exit && a1 >= min_angle && a2 >= min_angle {
                return Ok(Closing { psi, tau, angles_deg: (a1, a2), clearance });
            }
        }
        psi = psi + S::lit(opts.margin);
    }
    Err(HornError::NoClosingGeodesic)
}

pub fn build_universal_triangle<S: Real>(
    knot: &KnotCurve<S>,
    ell: &AxisLine<S>,
    beta: S,
    ladder: &[S],
    opts: &UniversalOptions,
) -> Result<UniversalTriangle<S>, HornError> {
    let eta = S::lit(opts.eta);
    let horn = hornify(knot, ell, beta, eta, ladder)?;
    let m = knot.len();
    let flags: Vec<bool> = (0..m)
        .into_par_iter()
        .map(|j| is_simple(knot.theta(j), knot, ell, eta, &opts.simplicity).map(|r| r.simple).unwrap_or(false))
        .collect();
    let (w0, w1) = longest_run(&flags).ok_or(HornError::NoSimpleWindow)?;
    if w1 - w0 + 1 < opts.min_window {
        return Err(HornError::NoSimpleWindow);
    }
    let j1 = w0;
    let theta1 = knot.theta(j1);
    // largest j2 in the window with distortion within bound; monotone in j2
    let distortion = |j2: usize| -> Result<S, HornError> {
        projection_distortion(&sub_triangle_cols(&horn, j1, j2)?, knot, theta1, ell)
    };
    let bound = S::lit(opts.distortion_bound);
    let (mut lo, mut hi) = (j1 + opts.min_window - 1, w1);
    if distortion(lo)? > bound {
        return Err(HornError::NoSimpleWindow);
    }
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if distortion(mid)? <= bound {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let j2 = lo;
    let dist = distortion(j2)?;
    let theta2 = knot.theta(j2);

    let excised = sub_triangle_cols(&horn, j1, j2)?;
    let body = complement_triangle(&horn, j1, j2)?;
    let dir = ell.dir();
    let (_, u1) = unit_coords(knot.samples[j1], ell)?;
    let (_, u2) = unit_coords(knot.samples[j2], ell)?;
    let Closing { psi, tau, angles_deg: tau_angles_deg, clearance: tau_clearance } =
        closing_points(dir, u1, u2, eta, opts)?;

    let col = |j: usize| -> Vec<Point4<S>> { (0..horn.rows()).map(|k| horn.point(j, k)).collect() };
    let sizes: Vec<S> = (0..horn.rows())
        .map(|k| horn.rescaled_link(k).iter().map(|p| polar_angle(*p, dir)).fold(S::zero(), S::max))
        .collect();
    let glue1 = glue_sector(&col(j1), &sizes, ladder, dir, u1, psi, opts, "glue1", "ell1");
    let glue2 = glue_sector(&col(j2), &sizes, ladder, dir, u2, psi, opts, "glue2", "ell2");
    let tau_samples = tau.sample(opts.tau_cols.max(2) - 1);
    let mut closing = cone_over(&tau_samples, ladder, false, "tau")?;
    closing.tags = vec!["tau".into(); closing.cols];
    closing.tags[0] = "ell1".into();
    let last = closing.cols - 1;
    closing.tags[last] = "ell2".into();

    let glue2_rev = glue2.reversed_columns("glue2");
    check_glue(&glue2_rev, &body)?;
    check_glue(&body, &glue1)?;
    check_glue(&glue1, &closing)?;
    let mut closing_rev_check = closing.clone();
    closing_rev_check.name = "tau".into();
    check_glue(&closing_rev_check, &glue2_rev)?;

    let assembled = SampledSurface::concat(&[&glue2_rev, &body, &glue1], true, "T_beta_K")?;
    let loop_open = SampledSurface::concat(&[&assembled, &closing], true, "Y_K")?;
    let mut closed = loop_open.restrict_columns(0, loop_open.cols - 2, "Y_K")?;
    closed.closed = true;

    let x1 = tau.a;
    let x2 = tau.b;
    let mut tangent_limit = Vec::new();
    let ray_n = 48;
    for i in 0..ray_n {
        tangent_limit.push(sector_point(S::one(), psi * S::from_usize_lossy(i) / S::from_usize_lossy(ray_n), dir, u1));
    }
    tangent_limit.extend_from_slice(&tau_samples[..tau_samples.len() - 1]);
    for i in (1..=ray_n).rev() {
        tangent_limit.push(sector_point(S::one(), psi * S::from_usize_lossy(i) / S::from_usize_lossy(ray_n), dir, u2));
    }

    Ok(UniversalTriangle {
        beta,
        knot: knot.name.clone(),
        ell: *ell,
        horn,
        excised,
        body,
        glue1,
        glue2,
        closing,
        assembled,
        closed,
        j1,
        j2,
        theta1,
        theta2,
        simple_window: (w0, w1),
        distortion: dist,
        x1,
        x2,
        tau,
        tau_angles_deg,
        tau_clearance,
        tangent_limit,
    })
}

/// `Y_K = T_{β,K} ∪ T′` and `Ỹ_K = Tr₀ K̃`: outer bi-Lipschitz equivalent LNE
/// germs whose tangent cones have non-isotopic links.
#[derive(Clone, Debug, PartialEq)]
pub struct CounterexamplePair<S> {
    pub y: SampledSurface<S>,
    pub y_tilde: SampledSurface<S>,
    /// Link of the tangent cone of `Y_K` (unknotted).
    pub y_tangent_link: Vec<Point4<S>>,
    /// Link of the tangent cone of `Ỹ_K`: the knot itself.
    pub y_tilde_tangent_link: Vec<Point4<S>>,
    pub triangle: UniversalTriangle<S>,
}

pub fn build_counterexample_pair<S: Real>(
    knot: &KnotCurve<S>,
    ell: &AxisLine<S>,
    beta: S,
    ladder: &[S],
    opts: &UniversalOptions,
) -> Result<CounterexamplePair<S>, HornError> {
    if !(beta > S::one()) || knot.kind.is_some_and(|k| k.is_trivial()) {
        return Err(HornError::TrivialInput);
    }
    let triangle = build_universal_triangle(knot, ell, beta, ladder, opts)?;
    let mut y_tilde = cone_over(&knot.samples, ladder, true, "Y~_K")?;
    y_tilde.tags = vec!["cone".into(); y_tilde.cols];
    let mut y = triangle.closed.clone();
    y.name = "Y_K".into();
    Ok(CounterexamplePair {
        y,
        y_tilde,
        y_tangent_link: triangle.tangent_limit.clone(),
        y_tilde_tangent_link: knot.samples.clone(),
        triangle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knot::{make_preset_knot, KnotKind, PresetOptions};
    use crate::surface::dyadic_ladder;

    type P = Point4<f64>;

    fn trefoil(m: usize) -> KnotCurve<f64> {
        make_preset_knot(KnotKind::trefoil(), &AxisLine::e0(), &PresetOptions { samples: m, ..Default::default() })
            .unwrap()
    }

    #[test]
    fn identity_at_unit_scale() {
        let k = trefoil(128);
        let ell = AxisLine::e0();
        for &x in k.samples.iter().step_by(7) {
            for beta in [1.0, 1.5, 3.0] {
                assert!(theta_action(1.0, x, &ell, beta).unwrap().dist(x) < 1e-15);
            }
        }
    }

    #[test]
    fn beta_one_is_a_cone() {
        let ell = AxisLine::e0();
        let x = P::new(0.9, 0.3, -0.2, 0.1).normalized().unwrap();
        for t in [0.5, 0.01, 1e-6] {
            let y = theta_action(t, x, &ell, 1.0).unwrap();
            assert!(y.dist(x * t) < 1e-15 * t.max(1e-300) * 10.0, "{t}");
        }
    }

    #[test]
    fn offset_overflow_at_large_scale() {
        let ell = AxisLine::e0();
        let x = P::new(0.0, 1.0, 0.0, 0.0);
        assert!(matches!(theta_action(4.0, x, &ell, 2.0), Err(HornError::Geometry(GeometryError::OffsetOverflow(_)))));
        assert!(matches!(theta_action(0.5, x, &ell, 0.5), Err(HornError::InvalidBeta(_))));
    }

    #[test]
    fn orbit_arcs_are_planar() {
        let k = trefoil(256);
        let ell = AxisLine::e0();
        for j in (0..256).step_by(17) {
            let g = OrbitArc::new(&k, k.theta(j), &ell, 2.0).unwrap();
            assert!(g.planarity_defect(&dyadic_ladder(12)).unwrap() < 1e-12);
        }
    }

    #[test]
    fn hornified_links_are_rescaled_copies() {
        let k = trefoil(128);
        let ell = AxisLine::e0();
        let x = hornify(&k, &ell, 2.0, 0.2, &dyadic_ladder(8)).unwrap();
        x.check_shells(1e-12).unwrap();
        // chordal offsets scale exactly by t^beta
        for kk in 0..x.rows() {
            let t: f64 = x.ladder[kk];
            for j in (0..128).step_by(9) {
                let want = t.powi(2) * k.samples[j].dist(ell.dir());
                let got = x.point(j, kk).dist(ell.at(t));
                assert!((got - want).abs() <= 1e-12 * want);
            }
        }
    }

    #[test]
    fn scale_equivariance() {
        let k = trefoil(64);
        let ell = AxisLine::e0();
        let ladder = dyadic_ladder(6);
        let s = 0.375;
        let a = hornify(&k, &ell, 1.5, 0.2, &ladder).unwrap();
        let scaled: Vec<f64> = ladder.iter().map(|t| t * s).collect();
        let b = hornify(&k, &ell, 1.5, 0.2, &scaled).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            let r = rescale_compatible(*p, s, &ell, 1.5).unwrap();
            assert!(r.dist(*q) <= 1e-13 * q.norm());
        }
    }

    #[test]
    fn sub_triangle_and_complement_cover_the_horn() {
        let k = trefoil(128);
        let x = hornify(&k, &AxisLine::e0(), 2.0, 0.2, &dyadic_ladder(4)).unwrap();
        let t = sub_triangle(&x, k.theta(10), k.theta(30)).unwrap();
        let c = complement_triangle(&x, 10, 30).unwrap();
        assert_eq!(t.cols + c.cols, 128 + 2);
        assert_eq!(t.tags[0], "gamma1");
        assert_eq!(sub_triangle(&x, 2.0, 1.0), Err(HornError::EmptyRange));
    }

    #[test]
    fn planar_triangle_has_unit_distortion() {
        let k = trefoil(128);
        let ell = AxisLine::e0();
        // a sector in span(dir, tangent) projects isometrically
        let (a, b) = (ell.dir(), ell.transverse(k.tangent(5)).normalized().unwrap());
        let t = SampledSurface::from_rows("flat", dyadic_ladder(4), 5, false, |_, t| {
            (0..5).map(|j| sector_point(t, 0.05 * j as f64, a, b)).collect()
        });
        let d = projection_distortion(&t, &k, k.theta(5), &ell).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distortion_shrinks_with_window() {
        let k = trefoil(256);
        let ell = AxisLine::e0();
        let x = hornify(&k, &ell, 2.0, 0.2, &dyadic_ladder(6)).unwrap();
        let mut prev = f64::INFINITY;
        for j2 in (12..40).rev() {
            let d = projection_distortion(&sub_triangle_cols(&x, 10, j2).unwrap(), &k, k.theta(10), &ell).unwrap();
            assert!(d.is_finite() && d <= prev + 1e-12);
            prev = d;
        }
    }

    #[test]
    fn universal_triangle_glues_along_shared_arcs() {
        let k = trefoil(256);
        let ell = AxisLine::e0();
        let u = build_universal_triangle(&k, &ell, 2.0, &dyadic_ladder(8), &UniversalOptions::default()).unwrap();
        assert!(u.j1 < u.j2);
        assert!(u.distortion <= 4.0);
        assert!(u.tau_clearance > cap_exit_parameter(0.2));
        assert!(u.tau_angles_deg.0 >= 5.0 && u.tau_angles_deg.1 >= 5.0);
        u.closed.check_shells(1e-12).unwrap();
        u.assembled.check_shells(1e-12).unwrap();
        assert!(u.closed.closed && u.closed.breaks.is_empty());
        assert_eq!(u.assembled.tags[0], "ell2");
        assert_eq!(u.assembled.tags[u.assembled.cols - 1], "ell1");
        // x_i lie outside the horn neighbourhood
        for x in [u.x1, u.x2] {
            assert!(!axis_horn_contains(x, &ell, 2.0, 0.2));
        }
        // every closed link is a simple polygon: no two non-adjacent vertices coincide
        for kk in 0..u.closed.rows() {
            let row = u.closed.rescaled_link(kk);
            assert!(crate::knot::self_distance(&row) > 0.0);
        }
    }

    #[test]
    fn counterexample_rejects_trivial_input() {
        let k = make_preset_knot(KnotKind::Unknot, &AxisLine::e0(), &PresetOptions::default()).unwrap();
        let r = build_counterexample_pair(&k, &AxisLine::e0(), 2.0, &dyadic_ladder(4), &UniversalOptions::default());
        assert_eq!(r.unwrap_err(), HornError::TrivialInput);
        let k = trefoil(128);
        let r = build_counterexample_pair(&k, &AxisLine::e0(), 1.0, &dyadic_ladder(4), &UniversalOptions::default());
        assert_eq!(r.unwrap_err(), HornError::TrivialInput);
    }
}
