//! Surface germs sampled on a scale ladder.
//!
//! A [`SampledSurface`] stores one row of points per scale `t_k` of a
//! strictly decreasing ladder. Row `k` is an ordered sampling of the link
//! `X ∩ S_{t_k}`; column `j` is a sampled arc of the germ. Consecutive
//! columns are joined by link edges unless a break is declared, and the last
//! column is joined to the first when the link is closed.

use serde::{Deserialize, Serialize};

use crate::point::Point4;
use crate::scalar::Real;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SurfaceError {
    #[error("point ({col}, {row}) has norm {norm}, expected scale {scale}")]
    OffShell { col: usize, row: usize, norm: f64, scale: f64 },
    #[error("scale ladder must be strictly decreasing and positive")]
    BadLadder,
    #[error("grid shape mismatch: {0}")]
    Shape(String),
    #[error("empty column range")]
    EmptyRange,
}

/// A scale-parametrized arc sampled on a ladder: `points[k]` sits at scale `scales[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledArc<S> {
    pub scales: Vec<S>,
    pub points: Vec<Point4<S>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledSurface<S> {
    pub name: String,
    /// Decreasing positive scales `t_0 > t_1 > …`.
    pub ladder: Vec<S>,
    pub cols: usize,
    /// Row-major: `points[k * cols + j]`.
    pub points: Vec<Point4<S>>,
    /// The link at each scale is a closed curve.
    pub closed: bool,
    /// Columns `j` for which the link edge `(j - 1, j)` is absent.
    pub breaks: Vec<usize>,
    /// One label per column (piece name, boundary arc id).
    pub tags: Vec<String>,
}

pub fn check_ladder<S: Real>(ladder: &[S]) -> Result<(), SurfaceError> {
    if ladder.is_empty() || ladder.iter().any(|&t| !(t > S::zero()) || !t.is_finite()) {
        return Err(SurfaceError::BadLadder);
    }
    if ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(SurfaceError::BadLadder);
    }
    Ok(())
}

/// Geometric ladder `t_k = top · base^k`, `k = 0..=depth`.
pub fn geometric_ladder<S: Real>(top: S, base: S, depth: usize) -> Vec<S> {
    (0..=depth).map(|k| top * base.powi(k as i32)).collect()
}

/// The default dyadic ladder `2^0 … 2^-12`.
pub fn dyadic_ladder<S: Real>(depth: usize) -> Vec<S> {
    geometric_ladder(S::one(), S::lit(0.5), depth)
}

impl<S: Real> SampledSurface<S> {
    /// Builds a surface from a per-row generator.
    pub fn from_rows<F>(name: &str, ladder: Vec<S>, cols: usize, closed: bool, mut row: F) -> Self
    where
        F: FnMut(usize, S) -> Vec<Point4<S>>,
    {
        let mut points = Vec::with_capacity(ladder.len() * cols);
        for (k, &t) in ladder.iter().enumerate() {
            let r = row(k, t);
            assert_eq!(r.len(), cols, "row {k} has {} points, expected {cols}", r.len());
            points.extend(r);
        }
        Self {
            name: name.to_string(),
            ladder,
            cols,
            points,
            closed,
            breaks: Vec::new(),
            tags: vec![String::new(); cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.ladder.len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.cols + col
    }

    #[inline]
    pub fn point(&self, col: usize, row: usize) -> Point4<S> {
        self.points[self.index(col, row)]
    }

    pub fn row(&self, k: usize) -> &[Point4<S>] {
        &self.points[k * self.cols..(k + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> SampledArc<S> {
        SampledArc { scales: self.ladder.clone(), points: (0..self.rows()).map(|k| self.point(j, k)).collect() }
    }

    /// Row index of a scale, matched within relative tolerance.
    pub fn scale_index(&self, t: S) -> Option<usize> {
        self.ladder.iter().position(|&s| (s - t).abs() <= S::geom_tol() * s.max(t))
    }

    pub fn is_break(&self, j: usize) -> bool {
        self.breaks.contains(&j)
    }

    /// Link edges `(j, j')` between columns of one row.
    pub fn link_edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = (1..self.cols).filter(|&j| !self.is_break(j)).map(|j| (j - 1, j)).collect();
        if self.closed && self.cols > 2 && !self.is_break(0) {
            e.push((self.cols - 1, 0));
        }
        e
    }

    /// Checks `‖point(j, k)‖ = t_k` within `rel_tol`.
    pub fn check_shells(&self, rel_tol: S) -> Result<(), SurfaceError> {
        check_ladder(&self.ladder)?;
        if self.points.len() != self.cols * self.rows() || self.tags.len() != self.cols {
            return Err(SurfaceError::Shape(format!(
                "{} points, {} tags for {}x{} grid",
                self.points.len(),
                self.tags.len(),
                self.cols,
                self.rows()
            )));
        }
        for k in 0..self.rows() {
            let t = self.ladder[k];
            for j in 0..self.cols {
                let n = self.point(j, k).norm();
                if (n - t).abs() > rel_tol * t {
                    return Err(SurfaceError::OffShell { col: j, row: k, norm: n.as_f64(), scale: t.as_f64() });
                }
            }
        }
        Ok(())
    }

    /// Row `k` rescaled onto the unit sphere.
    pub fn rescaled_link(&self, k: usize) -> Vec<Point4<S>> {
        let inv = S::one() / self.ladder[k];
        self.row(k).iter().map(|&p| p * inv).collect()
    }

    /// Sampling pitch: the longest rescaled link edge over all rows.
    pub fn pitch(&self) -> S {
        let edges = self.link_edges();
        let mut h = S::zero();
        for k in 0..self.rows() {
            let inv = S::one() / self.ladder[k];
            for &(a, b) in &edges {
                h = h.max(self.point(a, k).dist(self.point(b, k)) * inv);
            }
        }
        h
    }

    /// Restriction to the columns `lo..=hi` (the link becomes an arc).
    pub fn restrict_columns(&self, lo: usize, hi: usize, name: &str) -> Result<Self, SurfaceError> {
        if lo > hi || hi >= self.cols {
            return Err(SurfaceError::EmptyRange);
        }
        let cols = hi - lo + 1;
        let mut points = Vec::with_capacity(cols * self.rows());
        for k in 0..self.rows() {
            points.extend_from_slice(&self.row(k)[lo..=hi]);
        }
        Ok(Self {
            name: name.to_string(),
            ladder: self.ladder.clone(),
            cols,
            points,
            closed: false,
            breaks: self.breaks.iter().filter(|&&b| b > lo && b <= hi).map(|b| b - lo).collect(),
            tags: self.tags[lo..=hi].to_vec(),
        })
    }

    /// Columns in the given (possibly wrapping) order.
    pub fn select_columns(&self, order: &[usize], name: &str) -> Self {
        let mut points = Vec::with_capacity(order.len() * self.rows());
        for k in 0..self.rows() {
            let r = self.row(k);
            points.extend(order.iter().map(|&j| r[j]));
        }
        Self {
            name: name.to_string(),
            ladder: self.ladder.clone(),
            cols: order.len(),
            points,
            closed: false,
            breaks: Vec::new(),
            tags: order.iter().map(|&j| self.tags[j].clone()).collect(),
        }
    }

    pub fn reversed_columns(&self, name: &str) -> Self {
        let order: Vec<usize> = (0..self.cols).rev().collect();
        let mut s = self.select_columns(&order, name);
        s.closed = self.closed;
        s
    }

    /// Concatenates surfaces over the same ladder column-wise. When `glue` is
    /// set, the first column of each later piece is expected to coincide with
    /// the last column of the previous one and is dropped.
    pub fn concat(pieces: &[&Self], glue: bool, name: &str) -> Result<Self, SurfaceError> {
        let first = pieces.first().ok_or(SurfaceError::EmptyRange)?;
        let rows = first.rows();
        for p in pieces {
            if p.ladder != first.ladder {
                return Err(SurfaceError::Shape("ladders differ".into()));
            }
        }
        let mut cols = 0;
        let mut tags = Vec::new();
        let mut breaks = Vec::new();
        let mut ranges = Vec::new();
        for (i, p) in pieces.iter().enumerate() {
            let skip = usize::from(glue && i > 0);
            if !glue && i > 0 {
                breaks.push(cols);
            }
            for &b in &p.breaks {
                if b >= skip {
                    breaks.push(cols + b - skip);
                }
            }
            tags.extend_from_slice(&p.tags[skip..]);
            ranges.push(skip);
            cols += p.cols - skip;
        }
        let mut points = Vec::with_capacity(cols * rows);
        for k in 0..rows {
            for (p, &skip) in pieces.iter().zip(&ranges) {
                points.extend_from_slice(&p.row(k)[skip..]);
            }
        }
        breaks.sort_unstable();
        breaks.dedup();
        Ok(Self { name: name.to_string(), ladder: first.ladder.clone(), cols, points, closed: false, breaks, tags })
    }

    /// Multiplies every point and scale by `s > 0`.
    pub fn scaled(&self, s: S) -> Self {
        let mut out = self.clone();
        out.ladder.iter_mut().for_each(|t| *t = *t * s);
        out.points.iter_mut().for_each(|p| *p = *p * s);
        out
    }

    pub fn cast<T: Real>(&self) -> SampledSurface<T> {
        SampledSurface {
            name: self.name.clone(),
            ladder: self.ladder.iter().map(|t| T::lit(t.as_f64())).collect(),
            cols: self.cols,
            points: self.points.iter().map(|p| p.cast()).collect(),
            closed: self.closed,
            breaks: self.breaks.clone(),
            tags: self.tags.clone(),
        }
    }
}
