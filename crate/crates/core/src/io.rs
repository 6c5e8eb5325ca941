//! File formats for sampled surfaces and curves.
//!
//! CSV columns, in order: `idx, theta_idx, t_idx, x0, x1, x2, x3, tags`, one
//! row per sample in row-major order (`idx = t_idx * cols + theta_idx`).
//! PLY and OBJ meshes use the grid as vertices (same order) and one quad per
//! linked pair of adjacent columns between consecutive scales; the 3-D
//! coordinates are the 4-D ones with one coordinate dropped.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::point::Point4;
use crate::scalar::Real;
use crate::surface::SampledSurface;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("unknown coordinate {0:?}; expected x0, x1, x2 or x3")]
    UnknownCoordinate(String),
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let err = |source| IoError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(err)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(err)?;
    fs::rename(&tmp, path).map_err(err)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub idx: usize,
    pub theta_idx: usize,
    pub t_idx: usize,
    pub x0: f64,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    #[serde(rename = "tags")]
    pub tag: String,
}

pub fn surface_csv<S: Real>(s: &SampledSurface<S>) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for k in 0..s.rows() {
        for j in 0..s.cols {
            let [x0, x1, x2, x3] = s.point(j, k).to_f64();
            let tag = s.tags.get(j).cloned().unwrap_or_default();
            w.serialize(CsvRow { idx: s.index(j, k), theta_idx: j, t_idx: k, x0, x1, x2, x3, tag })?;
        }
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

/// A curve in the surface schema: one scale row, `t_idx = 0`.
pub fn curve_csv<S: Real>(points: &[Point4<S>], tag: &str) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (j, p) in points.iter().enumerate() {
        let [x0, x1, x2, x3] = p.to_f64();
        w.serialize(CsvRow { idx: j, theta_idx: j, t_idx: 0, x0, x1, x2, x3, tag: tag.to_string() })?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

pub fn read_csv_rows(path: &Path) -> Result<Vec<CsvRow>, IoError> {
    let mut r = csv::Reader::from_path(path).map_err(|source| IoError::Csv { path: path.to_path_buf(), source })?;
    r.deserialize().collect::<Result<_, _>>().map_err(|source| IoError::Csv { path: path.to_path_buf(), source })
}

/// Shape data that the CSV does not carry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMeta {
    pub name: String,
    pub file: String,
    pub cols: usize,
    pub rows: usize,
    pub closed: bool,
    pub breaks: Vec<usize>,
}

impl SurfaceMeta {
    pub fn of<S: Real>(s: &SampledSurface<S>, file: &str) -> Self {
        Self {
            name: s.name.clone(),
            file: file.to_string(),
            cols: s.cols,
            rows: s.rows(),
            closed: s.closed,
            breaks: s.breaks.clone(),
        }
    }
}

pub fn read_surface_csv(path: &Path, meta: &SurfaceMeta, ladder: &[f64]) -> Result<SampledSurface<f64>, IoError> {
    let rows = read_csv_rows(path)?;
    let bad = |msg: String| IoError::Format { path: path.to_path_buf(), msg };
    if rows.len() != meta.cols * meta.rows || ladder.len() != meta.rows {
        return Err(bad(format!("expected {} x {} samples, found {}", meta.rows, meta.cols, rows.len())));
    }
    let mut points = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        if r.idx != i || r.theta_idx != i % meta.cols || r.t_idx != i / meta.cols {
            return Err(bad(format!("row {i} is out of order")));
        }
        points.push(Point4([r.x0, r.x1, r.x2, r.x3]));
    }
    Ok(SampledSurface {
        name: meta.name.clone(),
        ladder: ladder.to_vec(),
        cols: meta.cols,
        points,
        closed: meta.closed,
        breaks: meta.breaks.clone(),
        tags: rows[..meta.cols].iter().map(|r| r.tag.clone()).collect(),
    })
}

pub fn read_curve_csv(path: &Path) -> Result<Vec<Point4<f64>>, IoError> {
    Ok(read_csv_rows(path)?.iter().map(|r| Point4([r.x0, r.x1, r.x2, r.x3])).collect())
}

/// The coordinate dropped when flattening `R⁴` to `R³`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct DropAxis(pub usize);

impl FromStr for DropAxis {
    type Err = IoError;
    fn from_str(s: &str) -> Result<Self, IoError> {
        match s {
            "x0" => Ok(DropAxis(0)),
            "x1" => Ok(DropAxis(1)),
            "x2" => Ok(DropAxis(2)),
            "x3" => Ok(DropAxis(3)),
            _ => Err(IoError::UnknownCoordinate(s.to_string())),
        }
    }
}

impl DropAxis {
    pub fn apply(self, p: [f64; 4]) -> [f64; 3] {
        let mut out = [0.0; 3];
        let mut i = 0;
        for (c, v) in p.into_iter().enumerate() {
            if c != self.0 {
                out[i] = v;
                i += 1;
            }
        }
        out
    }
}

/// Quads `(a, b, c, d)` of the sampling grid, counterclockwise in `(j, k)`.
pub fn grid_quads<S: Real>(s: &SampledSurface<S>) -> Vec<[usize; 4]> {
    let mut quads = Vec::new();
    for (a, b) in s.link_edges() {
        for k in 0..s.rows().saturating_sub(1) {
            quads.push([s.index(a, k), s.index(b, k), s.index(b, k + 1), s.index(a, k + 1)]);
        }
    }
    quads
}

pub fn surface_ply<S: Real>(s: &SampledSurface<S>, drop: DropAxis) -> String {
    let quads = grid_quads(s);
    let mut out = String::new();
    let _ = write!(
        out,
        "ply\nformat ascii 1.0\ncomment {}\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\n\
         element face {}\nproperty list uchar int vertex_indices\nend_header\n",
        s.name,
        s.len(),
        quads.len()
    );
    for p in &s.points {
        let [x, y, z] = drop.apply(p.to_f64());
        let _ = writeln!(out, "{x:e} {y:e} {z:e}");
    }
    for q in quads {
        let _ = writeln!(out, "4 {} {} {} {}", q[0], q[1], q[2], q[3]);
    }
    out
}

pub fn surface_obj<S: Real>(s: &SampledSurface<S>, drop: DropAxis) -> String {
    let mut out = format!("o {}\n", s.name.replace(char::is_whitespace, "_"));
    for p in &s.points {
        let [x, y, z] = drop.apply(p.to_f64());
        let _ = writeln!(out, "v {x:e} {y:e} {z:e}");
    }
    for q in grid_quads(s) {
        let _ = writeln!(out, "f {} {} {} {}", q[0] + 1, q[1] + 1, q[2] + 1, q[3] + 1);
    }
    out
}
