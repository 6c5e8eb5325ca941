//! Exact-formula layer for R⁴: quasi-polar coordinates around an axis line,
//! horn neighbourhoods, arcs, standard Hölder triangles and horns, and cones
//! over spherical sets.

use std::sync::Arc;

use crate::point::Point4;
use crate::scalar::Real;
use crate::surface::{check_ladder, SampledArc, SampledSurface, SurfaceError};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GeometryError {
    #[error("point is the origin")]
    ZeroPoint,
    #[error("point is antipodal to the axis; direction undefined")]
    AntipodalPoint,
    #[error("chordal offset {rho} is not below 2t = {two_t}")]
    InvalidOffset { rho: f64, two_t: f64 },
    #[error("offset t^beta*rho = {0} overflows the sphere")]
    OffsetOverflow(f64),
    #[error("axis direction is not a unit vector")]
    NonUnitAxis,
    #[error("direction vector missing for a point off the axis")]
    MissingDirection,
    #[error("direction vector is not a unit vector orthogonal to the axis")]
    BadDirection,
    #[error("sampler yielded no points")]
    EmptySet,
    #[error("sample {index} has norm {norm}, expected a unit vector")]
    NonSpherical { index: usize, norm: f64 },
    #[error("exponent must be >= 1, got {0}")]
    InvalidExponent(f64),
    #[error("resolution must be >= {min}, got {got}")]
    InvalidResolution { min: usize, got: usize },
    #[error("scales must lie in (0, 1]")]
    ScaleOutOfRange,
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

/// A straight line through the origin, `ℓ(t) = t·dir` for `t ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisLine<S> {
    dir: Point4<S>,
}

impl<S: Real> AxisLine<S> {
    pub fn new(dir: Point4<S>) -> Result<Self, GeometryError> {
        if (dir.norm() - S::one()).abs() > S::unit_tol() {
            return Err(GeometryError::NonUnitAxis);
        }
        Ok(Self { dir })
    }

    /// Normalizes `dir` first.
    pub fn through(dir: Point4<S>) -> Result<Self, GeometryError> {
        Self::new(dir.normalized().ok_or(GeometryError::ZeroPoint)?)
    }

    /// The `x0`-axis.
    pub fn e0() -> Self {
        Self { dir: Point4::basis(0) }
    }

    pub fn dir(&self) -> Point4<S> {
        self.dir
    }

    pub fn at(&self, t: S) -> Point4<S> {
        self.dir * t
    }

    /// Component of `x` orthogonal to the axis.
    pub fn transverse(&self, x: Point4<S>) -> Point4<S> {
        x - self.dir * x.dot(self.dir)
    }
}

/// Quasi-polar coordinates `(t, ρ, v)` of a point with respect to an axis.
///
/// `v = None` is the zero flag used for points on the axis (`ρ = 0`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuasiPolar<S> {
    pub t: S,
    pub rho: S,
    pub v: Option<Point4<S>>,
}

pub fn quasi_polar_decompose<S: Real>(x: Point4<S>, ell: &AxisLine<S>) -> Result<QuasiPolar<S>, GeometryError> {
    let t = x.norm();
    if t == S::zero() {
        return Err(GeometryError::ZeroPoint);
    }
    let w = ell.transverse(x);
    let wn = w.norm();
    // below this the direction is numerical noise
    if wn <= S::epsilon() * S::lit(8.0) * t {
        return if x.dot(ell.dir()) > S::zero() {
            Ok(QuasiPolar { t, rho: S::zero(), v: None })
        } else {
            Err(GeometryError::AntipodalPoint)
        };
    }
    let rho = x.dist(ell.at(t));
    Ok(QuasiPolar { t, rho, v: Some(w * (S::one() / wn)) })
}

pub fn quasi_polar_reconstruct<S: Real>(q: &QuasiPolar<S>, ell: &AxisLine<S>) -> Result<Point4<S>, GeometryError> {
    let two = S::lit(2.0);
    if !(q.t >= S::zero()) || !(q.rho >= S::zero()) {
        return Err(GeometryError::InvalidOffset { rho: q.rho.as_f64(), two_t: (two * q.t).as_f64() });
    }
    if q.rho >= two * q.t && q.t > S::zero() {
        return Err(GeometryError::InvalidOffset { rho: q.rho.as_f64(), two_t: (two * q.t).as_f64() });
    }
    match q.v {
        None if q.rho == S::zero() => Ok(ell.at(q.t)),
        None => Err(GeometryError::MissingDirection),
        Some(v) => {
            if (v.norm() - S::one()).abs() > S::lit(1e3) * S::unit_tol() || v.dot(ell.dir()).abs() > S::geom_tol() {
                return Err(GeometryError::BadDirection);
            }
            if q.t == S::zero() {
                return Ok(Point4::zero());
            }
            // walk the great circle in span(dir, v) until the chord reaches rho
            let half = (q.rho / (two * q.t)).asin();
            let (s, c) = (two * half).sin_cos();
            Ok((ell.dir() * c + v * s) * q.t)
        }
    }
}

/// Germ-level membership in the horn neighbourhood of the axis: the witness
/// point is `ℓ(‖z‖)`, i.e. `ρ(z) < η‖z‖^β`. On `S³` this is the spherical
/// cap `ρ < η` about `ℓ(1)`.
pub fn axis_horn_contains<S: Real>(z: Point4<S>, ell: &AxisLine<S>, beta: S, eta: S) -> bool {
    let t = z.norm();
    t > S::zero() && z.dist(ell.at(t)) < eta * t.powf(beta)
}

/// `true` iff some sampled `x` satisfies `‖z − x‖ < η‖x‖^β`.
///
/// The answer approximates membership in the horn neighbourhood of the
/// sampled set and depends on the sampling resolution.
pub fn horn_neighborhood_contains<S, I>(z: Point4<S>, samples: I, beta: S, eta: S) -> Result<bool, GeometryError>
where
    S: Real,
    I: IntoIterator<Item = Point4<S>>,
{
    if beta < S::one() {
        return Err(GeometryError::InvalidExponent(beta.as_f64()));
    }
    let mut any = false;
    for x in samples {
        any = true;
        if z.dist(x) < eta * x.norm().powf(beta) {
            return Ok(true);
        }
    }
    if any {
        Ok(false)
    } else {
        Err(GeometryError::EmptySet)
    }
}

/// A curve germ parametrized by distance to the origin, `‖γ(t)‖ = t`.
#[derive(Clone)]
pub struct ArcGerm<S> {
    eval: Arc<dyn Fn(S) -> Point4<S> + Send + Sync>,
    pub t0: S,
}

impl<S: Real> std::fmt::Debug for ArcGerm<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ArcGerm").field("t0", &self.t0).finish_non_exhaustive()
    }
}

impl<S: Real> ArcGerm<S> {
    pub fn new(t0: S, eval: impl Fn(S) -> Point4<S> + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(eval), t0 }
    }

    pub fn eval(&self, t: S) -> Point4<S> {
        (self.eval)(t)
    }

    pub fn sample(&self, ladder: &[S]) -> SampledArc<S> {
        SampledArc { scales: ladder.to_vec(), points: ladder.iter().map(|&t| self.eval(t)).collect() }
    }

    /// Largest relative deviation of `‖γ(t)‖` from `t` over the given scales.
    pub fn norm_defect(&self, scales: &[S]) -> S {
        scales.iter().map(|&t| ((self.eval(t).norm() - t) / t).abs()).fold(S::zero(), S::max)
    }
}

/// Solves `u² + u^{2p} = s²` for `u ∈ [0, s]` by bisection.
fn solve_norm_shell<S: Real>(s: S, p: S) -> S {
    let two = S::lit(2.0);
    let f = |u: S| u * u + u.powf(two * p) - s * s;
    let (mut lo, mut hi) = (S::zero(), s);
    for _ in 0..200 {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > S::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo + hi) / two
}

/// The standard α-Hölder triangle `{0 ≤ y ≤ x^α, 0 ≤ x ≤ 1}` in the
/// `(x0, x1)`-plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StandardTriangle<S> {
    alpha: S,
}

impl<S: Real> StandardTriangle<S> {
    pub fn new(alpha: S) -> Result<Self, GeometryError> {
        if !(alpha >= S::one()) {
            return Err(GeometryError::InvalidExponent(alpha.as_f64()));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> S {
        self.alpha
    }

    /// Boundary arc `l₀ = {(x, 0)}`.
    pub fn l0(&self) -> ArcGerm<S> {
        ArcGerm::new(S::one(), |t| Point4::new(t, S::zero(), S::zero(), S::zero()))
    }

    /// Boundary arc `l₁ = {(x, x^α)}`, reparametrized by norm.
    pub fn l1(&self) -> ArcGerm<S> {
        let a = self.alpha;
        ArcGerm::new(S::one(), move |t| {
            let x = solve_norm_shell(t, a);
            Point4::new(x, x.powf(a), S::zero(), S::zero())
        })
    }

    /// Rows are the norm shells of the ladder; columns sweep from `l₀` to `l₁`.
    pub fn sample(&self, cols: usize, ladder: &[S]) -> Result<SampledSurface<S>, GeometryError> {
        if cols < 2 {
            return Err(GeometryError::InvalidResolution { min: 2, got: cols });
        }
        check_ladder(ladder)?;
        if ladder[0] > S::one() {
            return Err(GeometryError::ScaleOutOfRange);
        }
        let a = self.alpha;
        let last = S::from_usize_lossy(cols - 1);
        let mut s = SampledSurface::from_rows("standard_triangle", ladder.to_vec(), cols, false, |_, t| {
            let x = solve_norm_shell(t, a);
            let y = x.powf(a);
            let psi_max = y.atan2(x);
            (0..cols)
                .map(|j| {
                    if j == 0 {
                        Point4::new(t, S::zero(), S::zero(), S::zero())
                    } else if j == cols - 1 {
                        Point4::new(x, y, S::zero(), S::zero())
                    } else {
                        let (sn, cs) = (psi_max * S::from_usize_lossy(j) / last).sin_cos();
                        Point4::new(t * cs, t * sn, S::zero(), S::zero())
                    }
                })
                .collect()
        });
        s.tags[0] = "l0".into();
        s.tags[cols - 1] = "l1".into();
        Ok(s)
    }
}

/// The standard β-horn `{x² + y² = t^{2β}}` embedded as `(x, y, t, 0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StandardHorn<S> {
    beta: S,
}

impl<S: Real> StandardHorn<S> {
    pub fn new(beta: S) -> Result<Self, GeometryError> {
        if !(beta >= S::one()) {
            return Err(GeometryError::InvalidExponent(beta.as_f64()));
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> S {
        self.beta
    }

    /// Height `u` of the horn circle lying on the norm shell `s`.
    pub fn height_at_norm(&self, s: S) -> S {
        solve_norm_shell(s, self.beta)
    }

    /// Angular resolution `cols` per link, rows on the ladder's norm shells.
    pub fn sample(&self, cols: usize, ladder: &[S]) -> Result<SampledSurface<S>, GeometryError> {
        if cols < 3 {
            return Err(GeometryError::InvalidResolution { min: 3, got: cols });
        }
        check_ladder(ladder)?;
        let b = self.beta;
        let n = S::from_usize_lossy(cols);
        Ok(SampledSurface::from_rows("standard_horn", ladder.to_vec(), cols, true, |_, s| {
            let u = solve_norm_shell(s, b);
            let r = u.powf(b);
            (0..cols)
                .map(|j| {
                    let (sn, cs) = (S::TAU() * S::from_usize_lossy(j) / n).sin_cos();
                    Point4::new(r * cs, r * sn, u, S::zero())
                })
                .collect()
        }))
    }
}

/// The cone `{t·v}` over unit-sphere samples, one row per ladder scale.
pub fn cone_over<S: Real>(
    samples: &[Point4<S>],
    ladder: &[S],
    closed: bool,
    name: &str,
) -> Result<SampledSurface<S>, GeometryError> {
    if samples.is_empty() {
        return Err(GeometryError::EmptySet);
    }
    check_ladder(ladder)?;
    for (index, v) in samples.iter().enumerate() {
        let n = v.norm();
        if (n - S::one()).abs() > S::sphere_tol() {
            return Err(GeometryError::NonSpherical { index, norm: n.as_f64() });
        }
    }
    Ok(SampledSurface::from_rows(name, ladder.to_vec(), samples.len(), closed, |_, t| {
        samples.iter().map(|&v| v * t).collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::dyadic_ladder;

    type P = Point4<f64>;

    #[test]
    fn decompose_axis_point_is_zero_flagged() {
        let ell = AxisLine::e0();
        let q = quasi_polar_decompose(P::basis(0), &ell).unwrap();
        assert_eq!(q, QuasiPolar { t: 1.0, rho: 0.0, v: None });
        assert_eq!(
            quasi_polar_reconstruct(&QuasiPolar { t: 3.0, rho: 0.0, v: None }, &ell).unwrap(),
            P::basis(0) * 3.0
        );
    }

    #[test]
    fn decompose_worked_example() {
        let ell = AxisLine::e0();
        let q = quasi_polar_decompose(P::new(3.0, 4.0, 0.0, 0.0), &ell).unwrap();
        assert_eq!(q.t, 5.0);
        assert!((q.rho - 20f64.sqrt()).abs() < 1e-14);
        assert_eq!(q.v, Some(P::basis(1)));
        let x = quasi_polar_reconstruct(&QuasiPolar { t: 5.0, rho: 20f64.sqrt(), v: Some(P::basis(1)) }, &ell).unwrap();
        assert!(x.dist(P::new(3.0, 4.0, 0.0, 0.0)) < 1e-13);
    }

    #[test]
    fn decompose_errors() {
        let ell = AxisLine::e0();
        assert_eq!(quasi_polar_decompose(P::zero(), &ell), Err(GeometryError::ZeroPoint));
        assert_eq!(quasi_polar_decompose(P::basis(0) * -2.0, &ell), Err(GeometryError::AntipodalPoint));
    }

    #[test]
    fn reconstruct_rejects_large_offset() {
        let ell = AxisLine::e0();
        let q = QuasiPolar { t: 1.0, rho: 2.0, v: Some(P::basis(2)) };
        assert!(matches!(quasi_polar_reconstruct(&q, &ell), Err(GeometryError::InvalidOffset { .. })));
        let q = QuasiPolar { t: 1.0, rho: 0.3, v: None };
        assert_eq!(quasi_polar_reconstruct(&q, &ell), Err(GeometryError::MissingDirection));
    }

    #[test]
    fn horn_neighborhood_axis_examples() {
        // min over s of ‖(1, y) − (s, 0)‖ / s equals y / sqrt(1 + y²)
        let axis: Vec<P> = (1..=30_000).map(|i| P::basis(0) * (i as f64 * 1e-4)).collect();
        let far = P::new(1.0, 0.6, 0.0, 0.0);
        let near = P::new(1.0, 0.3, 0.0, 0.0);
        assert!(0.6 / 1.36f64.sqrt() > 0.5 && 0.3 / 1.09f64.sqrt() < 0.5);
        assert!(!horn_neighborhood_contains(far, axis.iter().copied(), 1.0, 0.5).unwrap());
        assert!(horn_neighborhood_contains(near, axis.iter().copied(), 1.0, 0.5).unwrap());
        assert!(horn_neighborhood_contains(far, [far], 2.0, 0.1).unwrap());
        assert_eq!(horn_neighborhood_contains(far, std::iter::empty(), 1.0, 0.5), Err(GeometryError::EmptySet));
    }

    #[test]
    fn standard_triangle_points_respect_inequality() {
        let ladder = dyadic_ladder::<f64>(8);
        for alpha in [1.0, 1.5, 2.0, 3.0] {
            let tri = StandardTriangle::new(alpha).unwrap();
            let s = tri.sample(9, &ladder).unwrap();
            s.check_shells(1e-12).unwrap();
            for p in &s.points {
                assert!(p[1] >= 0.0 && p[1] <= p[0].powf(alpha) * (1.0 + 1e-12) && p[0] <= 1.0);
            }
        }
    }

    #[test]
    fn standard_triangle_l1_monomial_point() {
        let tri = StandardTriangle::new(2.0).unwrap();
        let t = (0.25f64 + 0.0625).sqrt();
        assert!(tri.l1().eval(t).dist(P::new(0.5, 0.25, 0.0, 0.0)) < 1e-14);
        assert!(tri.l1().norm_defect(&dyadic_ladder(12)) < 1e-12);
        assert!(StandardTriangle::new(0.5).is_err());
    }

    #[test]
    fn standard_horn_points_on_horn() {
        for beta in [1.0f64, 1.5, 2.0] {
            let h = StandardHorn::new(beta).unwrap();
            let s = h.sample(32, &dyadic_ladder(10)).unwrap();
            s.check_shells(1e-12).unwrap();
            for p in &s.points {
                let lhs = p[0] * p[0] + p[1] * p[1];
                let rhs = p[2].powf(2.0 * beta);
                assert!((lhs - rhs).abs() <= 1e-14 * rhs.max(1e-300) + 1e-300, "{lhs} {rhs}");
            }
        }
    }

    #[test]
    fn cone_over_point_is_segment() {
        let v = P::new(0.0, 0.6, 0.8, 0.0);
        let s = cone_over(&[v], &dyadic_ladder(4), false, "seg").unwrap();
        for k in 0..s.rows() {
            assert_eq!(s.point(0, k), v * s.ladder[k]);
        }
        assert!(matches!(
            cone_over(&[P::new(0.0, 1.0, 1.0, 0.0)], &dyadic_ladder(2), false, "x"),
            Err(GeometryError::NonSpherical { index: 0, .. })
        ));
    }
}
