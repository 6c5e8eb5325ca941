use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// A point (or vector) of R⁴.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Point4<S>(pub [S; 4]);

impl<S: Real> Point4<S> {
    pub const fn new(x0: S, x1: S, x2: S, x3: S) -> Self {
        Self([x0, x1, x2, x3])
    }

    pub fn zero() -> Self {
        Self([S::zero(); 4])
    }

    /// The `i`-th standard basis vector.
    pub fn basis(i: usize) -> Self {
        let mut c = [S::zero(); 4];
        c[i] = S::one();
        Self(c)
    }

    pub fn from_f64(c: [f64; 4]) -> Self {
        Self(c.map(S::lit))
    }

    pub fn to_f64(self) -> [f64; 4] {
        self.0.map(Real::as_f64)
    }

    pub fn dot(self, other: Self) -> S {
        self.0.iter().zip(other.0.iter()).map(|(&a, &b)| a * b).sum()
    }

    pub fn norm_sq(self) -> S {
        self.dot(self)
    }

    /// Euclidean norm, computed with scaling so tiny vectors keep full precision.
    pub fn norm(self) -> S {
        let m = self.0.iter().fold(S::zero(), |m, &c| m.max(c.abs()));
        if m == S::zero() || !m.is_finite() {
            return m;
        }
        let s = self * (S::one() / m);
        m * s.norm_sq().sqrt()
    }

    pub fn dist(self, other: Self) -> S {
        (self - other).norm()
    }

    /// Unit vector in the same direction, or `None` for (numerically) zero vectors.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > S::zero() && n.is_finite() {
            Some(self * (S::one() / n))
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn lerp(self, other: Self, s: S) -> Self {
        self + (other - self) * s
    }

    pub fn cast<T: Real>(self) -> Point4<T> {
        Point4(self.0.map(|c| T::lit(c.as_f64())))
    }
}

impl<S: Real> Add for Point4<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1], self.0[2] + rhs.0[2], self.0[3] + rhs.0[3]])
    }
}

impl<S: Real> AddAssign for Point4<S> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<S: Real> Sub for Point4<S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1], self.0[2] - rhs.0[2], self.0[3] - rhs.0[3]])
    }
}

impl<S: Real> Mul<S> for Point4<S> {
    type Output = Self;
    fn mul(self, k: S) -> Self {
        Self(self.0.map(|c| c * k))
    }
}

impl<S: Real> Neg for Point4<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Self(self.0.map(|c| -c))
    }
}

impl<S> Index<usize> for Point4<S> {
    type Output = S;
    fn index(&self, i: usize) -> &S {
        &self.0[i]
    }
}

/// Gram-Schmidt completion of a unit vector to an orthonormal frame of R⁴.
/// The first element of the result is `u` itself.
pub fn complete_frame<S: Real>(u: Point4<S>) -> [Point4<S>; 4] {
    let mut frame = vec![u];
    // prefer basis vectors least aligned with u for stability
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| u.0[a].abs().partial_cmp(&u.0[b].abs()).unwrap());
    for i in order {
        if frame.len() == 4 {
            break;
        }
        let mut w = Point4::basis(i);
        for f in &frame {
            w = w - *f * w.dot(*f);
        }
        for f in &frame {
            w = w - *f * w.dot(*f);
        }
        if let Some(w) = w.normalized() {
            if w.norm() > S::lit(0.5) {
                frame.push(w);
            }
        }
    }
    [frame[0], frame[1], frame[2], frame[3]]
}

/// Determinant of the 4×4 matrix with the given rows.
pub fn det4<S: Real>(r: &[Point4<S>; 4]) -> S {
    let m = |i: usize, j: usize| r[i].0[j];
    let mut total = S::zero();
    for c in 0..4 {
        // cofactor expansion along the first row
        let cols: Vec<usize> = (0..4).filter(|&j| j != c).collect();
        let minor = |a: usize, b: usize| m(a, cols[b]);
        let d3 = minor(1, 0) * (minor(2, 1) * minor(3, 2) - minor(2, 2) * minor(3, 1))
            - minor(1, 1) * (minor(2, 0) * minor(3, 2) - minor(2, 2) * minor(3, 0))
            + minor(1, 2) * (minor(2, 0) * minor(3, 1) - minor(2, 1) * minor(3, 0));
        let term = m(0, c) * d3;
        total = if c % 2 == 0 { total + term } else { total - term };
    }
    total
}

/// [`complete_frame`] with the last vector flipped if needed so that the
/// frame is positively oriented.
pub fn oriented_frame<S: Real>(u: Point4<S>) -> [Point4<S>; 4] {
    let mut f = complete_frame(u);
    if det4(&f) < S::zero() {
        f[3] = -f[3];
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_of_tiny_vector_keeps_precision() {
        let p = Point4::<f64>::new(3e-200, 4e-200, 0.0, 0.0);
        assert!((p.norm() / 5e-200 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn frame_is_orthonormal() {
        let u = Point4::<f64>::new(0.3, -0.1, 0.9, 0.2).normalized().unwrap();
        let f = complete_frame(u);
        assert_eq!(f[0], u);
        assert!((det4(&oriented_frame(u)) - 1.0).abs() < 1e-12);
        assert!((det4(&f).abs() - 1.0).abs() < 1e-12);
        let id = [0, 1, 2, 3].map(Point4::<f64>::basis);
        assert_eq!(det4(&id), 1.0);
        for i in 0..4 {
            for j in 0..4 {
                let d = f[i].dot(f[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-14, "{i} {j} {d}");
            }
        }
    }
}
