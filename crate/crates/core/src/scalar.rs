//! Scalar abstraction shared by every geometric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar the geometry is generic over (`f32` or `f64`).
///
/// Tolerances are carried by the scalar so that identities checked at
/// `1e-9` for `f64` degrade gracefully to single precision.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Relative tolerance for geometric identities (round trips, norms of arcs).
    fn geom_tol() -> Self;
    /// Tolerance for unit-norm checks on direction vectors.
    fn unit_tol() -> Self;
    /// Tolerance for "point lies on the unit sphere" checks.
    fn sphere_tol() -> Self;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f64 {
    fn geom_tol() -> Self {
        1e-9
    }
    fn unit_tol() -> Self {
        1e-12
    }
    fn sphere_tol() -> Self {
        1e-9
    }
}

impl Real for f32 {
    fn geom_tol() -> Self {
        2e-4
    }
    fn unit_tol() -> Self {
        1e-5
    }
    fn sphere_tol() -> Self {
        1e-5
    }
}
