//! Inner metric on sampled germs via shortest paths, per-scale LNE
//! constants, tangency-order regression, Hausdorff distances and tangent
//! cones.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::point::Point4;
use crate::scalar::Real;
use crate::surface::{SampledArc, SampledSurface};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricError {
    #[error("nodes {0} and {1} lie in different components")]
    Disconnected(usize, usize),
    #[error("the link at scale index {0} is disconnected")]
    DisconnectedLink(usize),
    #[error("empty point set")]
    EmptySet,
    #[error("arcs coincide on the fitted scales (tord = infinity)")]
    IdenticalArcs,
    #[error("need at least {min} scales, got {got}")]
    TooFewScales { min: usize, got: usize },
    #[error("arcs are sampled on different ladders")]
    LadderMismatch,
    #[error("index {0} out of range")]
    BadIndex(usize),
}

/// Boundary tags kept when pair sampling is capped.
pub const BOUNDARY_TAGS: [&str; 6] = ["l0", "l1", "gamma1", "gamma2", "ell1", "ell2"];

#[derive(Clone, Copy, Debug, PartialEq)]
struct Item<S> {
    d: S,
    node: usize,
}

impl<S: Real> Eq for Item<S> {}

impl<S: Real> Ord for Item<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance
        other.d.partial_cmp(&self.d).unwrap_or(Ordering::Equal).then(self.node.cmp(&other.node))
    }
}

impl<S: Real> PartialOrd for Item<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Weighted graph on sample points; every edge weighs the Euclidean length
/// of its endpoints, so shortest paths bound the inner metric from above.
#[derive(Clone, Debug)]
pub struct MetricGraph<S> {
    pub points: Vec<Point4<S>>,
    adj: Vec<Vec<(usize, S)>>,
    pub grid_edges: usize,
    pub knn_edges: usize,
}

impl<S: Real> MetricGraph<S> {
    pub fn new(points: Vec<Point4<S>>) -> Self {
        let n = points.len();
        Self { points, adj: vec![Vec::new(); n], grid_edges: 0, knn_edges: 0 }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn push_edge(&mut self, a: usize, b: usize) -> bool {
        if a == b || self.adj[a].iter().any(|&(n, _)| n == b) {
            return false;
        }
        let w = self.points[a].dist(self.points[b]);
        self.adj[a].push((b, w));
        self.adj[b].push((a, w));
        true
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        if self.push_edge(a, b) {
            self.grid_edges += 1;
        }
    }

    pub fn neighbors(&self, a: usize) -> &[(usize, S)] {
        &self.adj[a]
    }

    /// Adds edges to the `k` nearest neighbours of every node, skipping
    /// candidates farther than `max_len(node)` (brute force, parallel).
    pub fn add_knn(&mut self, k: usize, max_len: impl Fn(usize) -> S + Sync) {
        let pts = &self.points;
        let cand: Vec<Vec<usize>> = (0..pts.len())
            .into_par_iter()
            .map(|i| {
                let cap = max_len(i);
                let mut near: Vec<(S, usize)> = pts
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(j, p)| (pts[i].dist(*p), j))
                    .filter(|&(d, _)| d <= cap)
                    .collect();
                near.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
                near.into_iter().take(k).map(|(_, j)| j).collect()
            })
            .collect();
        for (i, c) in cand.into_iter().enumerate() {
            for j in c {
                if self.push_edge(i, j) {
                    self.knn_edges += 1;
                }
            }
        }
    }

    /// Single-source shortest paths; unreachable nodes get `+∞`.
    pub fn dijkstra(&self, src: usize) -> Vec<S> {
        self.dijkstra_until(src, None)
    }

    fn dijkstra_until(&self, src: usize, target: Option<usize>) -> Vec<S> {
        let mut dist = vec![S::infinity(); self.len()];
        let mut heap = BinaryHeap::new();
        dist[src] = S::zero();
        heap.push(Item { d: S::zero(), node: src });
        while let Some(Item { d, node }) = heap.pop() {
            if d > dist[node] {
                continue;
            }
            if Some(node) == target {
                break;
            }
            for &(n, w) in &self.adj[node] {
                let nd = d + w;
                if nd < dist[n] {
                    dist[n] = nd;
                    heap.push(Item { d: nd, node: n });
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.is_empty() || self.dijkstra(0).iter().all(|d| d.is_finite())
    }
}

/// Shortest-path distance between two nodes.
pub fn inner_distance<S: Real>(g: &MetricGraph<S>, i: usize, j: usize) -> Result<S, MetricError> {
    if i >= g.len() {
        return Err(MetricError::BadIndex(i));
    }
    if j >= g.len() {
        return Err(MetricError::BadIndex(j));
    }
    let d = g.dijkstra_until(i, Some(j))[j];
    if d.is_finite() {
        Ok(d)
    } else {
        Err(MetricError::Disconnected(i, j))
    }
}

/// Graph of one link: the points of row `k` joined by the link edges.
pub fn link_graph<S: Real>(surface: &SampledSurface<S>, k: usize) -> MetricGraph<S> {
    let mut g = MetricGraph::new(surface.row(k).to_vec());
    for (a, b) in surface.link_edges() {
        g.add_edge(a, b);
    }
    g
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GermGraphOptions {
    /// Nearest-neighbour enrichment; `0` disables it.
    pub knn: usize,
    /// k-NN edges longer than this multiple of the local link pitch are dropped.
    pub knn_cap: f64,
    /// Join the finest row to a node at the origin.
    pub apex: bool,
}

impl Default for GermGraphOptions {
    fn default() -> Self {
        Self { knn: 8, knn_cap: 1.5, apex: true }
    }
}

/// Graph on a whole sampled germ: link edges in every row, radial edges
/// along every column, optional k-NN edges and the origin.
#[derive(Clone, Debug)]
pub struct GermGraph<S> {
    pub graph: MetricGraph<S>,
    pub cols: usize,
    pub rows: usize,
    /// Node index of the origin, when present.
    pub apex: Option<usize>,
}

impl<S: Real> GermGraph<S> {
    pub fn new(surface: &SampledSurface<S>, opts: &GermGraphOptions) -> Self {
        let mut pts = surface.points.clone();
        if opts.apex {
            pts.push(Point4::zero());
        }
        let mut g = MetricGraph::new(pts);
        let edges = surface.link_edges();
        for k in 0..surface.rows() {
            for &(a, b) in &edges {
                g.add_edge(surface.index(a, k), surface.index(b, k));
            }
            if k + 1 < surface.rows() {
                for j in 0..surface.cols {
                    g.add_edge(surface.index(j, k), surface.index(j, k + 1));
                }
            }
        }
        let apex = opts.apex.then(|| {
            let a = surface.len();
            let last = surface.rows() - 1;
            for j in 0..surface.cols {
                g.add_edge(a, surface.index(j, last));
            }
            a
        });
        if opts.knn > 0 {
            // cap by the link spacing of the node's own row, so k-NN edges
            // cannot shortcut across links that shrink faster than `t`
            let caps: Vec<S> =
                (0..surface.rows()).map(|k| S::lit(opts.knn_cap) * row_pitch(surface, k) * surface.ladder[k]).collect();
            let n = surface.len();
            let cols = surface.cols;
            g.add_knn(opts.knn, |i| if i >= n { S::zero() } else { caps[i / cols] });
        }
        Self { graph: g, cols: surface.cols, rows: surface.rows(), apex }
    }

    pub fn node(&self, col: usize, row: usize) -> usize {
        row * self.cols + col
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LneMode {
    /// Each link with its own inner metric.
    Link,
    /// Pairs on one link, paths anywhere in the sampled germ.
    Germ,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LneOptions {
    pub mode: LneMode,
    pub uniformity_bound: f64,
    pub pair_cap: usize,
    pub graph: GermGraphOptions,
    pub min_scales: usize,
}

impl Default for LneOptions {
    fn default() -> Self {
        Self {
            mode: LneMode::Link,
            uniformity_bound: 1.25,
            pair_cap: 2000,
            graph: GermGraphOptions::default(),
            min_scales: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleLne {
    pub t: f64,
    pub c: f64,
    /// Longest link edge at this scale, rescaled to the unit sphere.
    pub pitch: f64,
    pub pairs_checked: usize,
    /// Columns realizing `c`.
    pub argmax: (usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LneVerdict {
    /// Uniformly bounded on the tested scales; a sampled ladder can only be
    /// consistent with the property, never prove it.
    LneConsistent,
    NotLne,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LneReport {
    pub surface: String,
    pub mode: LneMode,
    pub per_scale: Vec<ScaleLne>,
    pub c_sup: f64,
    /// `max C_k / min C_k` over the finest half of the ladder.
    pub uniformity_ratio: f64,
    /// The same ratio over the whole ladder.
    pub full_ratio: f64,
    /// Slope of `log C_k` against `log t_k` on the finest half; clearly
    /// negative when `C_k` blows up as `t → 0`.
    pub growth_exponent: f64,
    pub bound: f64,
    pub verdict: LneVerdict,
}

/// Greedy farthest-point subsample of `cap` indices (always includes `forced`).
pub fn farthest_point_sample<S: Real>(points: &[Point4<S>], cap: usize, forced: &[usize]) -> Vec<usize> {
    let n = points.len();
    if n <= cap {
        return (0..n).collect();
    }
    let mut chosen = vec![false; n];
    let mut out = Vec::with_capacity(cap + forced.len());
    let mut dmin = vec![S::infinity(); n];
    let take = |i: usize, out: &mut Vec<usize>, dmin: &mut Vec<S>, chosen: &mut Vec<bool>| {
        chosen[i] = true;
        out.push(i);
        for (j, d) in dmin.iter_mut().enumerate() {
            *d = d.min(points[i].dist(points[j]));
        }
    };
    take(0, &mut out, &mut dmin, &mut chosen);
    while out.len() < cap {
        let (best, _) = dmin
            .iter()
            .enumerate()
            .filter(|(i, _)| !chosen[*i])
            .fold((usize::MAX, -S::one()), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
        if best == usize::MAX {
            break;
        }
        take(best, &mut out, &mut dmin, &mut chosen);
    }
    for &f in forced {
        if f < n && !chosen[f] {
            chosen[f] = true;
            out.push(f);
        }
    }
    out.sort_unstable();
    out
}

fn boundary_columns<S: Real>(s: &SampledSurface<S>) -> Vec<usize> {
    (0..s.cols).filter(|&j| BOUNDARY_TAGS.contains(&s.tags[j].as_str())).collect()
}

fn row_pitch<S: Real>(s: &SampledSurface<S>, k: usize) -> S {
    let inv = S::one() / s.ladder[k];
    s.link_edges().iter().map(|&(a, b)| s.point(a, k).dist(s.point(b, k)) * inv).fold(S::zero(), S::max)
}

fn max_ratio<S: Real>(
    row: &[Point4<S>],
    sources: &[usize],
    dist_from: impl Fn(usize) -> Vec<S> + Sync,
    node_of: impl Fn(usize) -> usize + Sync,
) -> (S, (usize, usize)) {
    sources
        .par_iter()
        .map(|&i| {
            let d = dist_from(node_of(i));
            let mut best = (S::one(), (i, i));
            for &j in sources {
                if j == i {
                    continue;
                }
                let out = row[i].dist(row[j]);
                if out > S::zero() {
                    let r = d[node_of(j)] / out;
                    if r > best.0 {
                        best = (r, (i.min(j), i.max(j)));
                    }
                }
            }
            best
        })
        .reduce(|| (S::one(), (0, 0)), |a, b| if b.0 > a.0 { b } else { a })
}

/// `C_k`: the largest inner/outer ratio over sampled pairs of the link at
/// scale index `k`.
pub fn lne_constant_per_scale<S: Real>(
    surface: &SampledSurface<S>,
    k: usize,
    opts: &LneOptions,
) -> Result<ScaleLne, MetricError> {
    let germ = match opts.mode {
        LneMode::Germ => Some(GermGraph::new(surface, &opts.graph)),
        LneMode::Link => None,
    };
    scale_lne(surface, k, opts, germ.as_ref())
}

fn scale_lne<S: Real>(
    surface: &SampledSurface<S>,
    k: usize,
    opts: &LneOptions,
    germ: Option<&GermGraph<S>>,
) -> Result<ScaleLne, MetricError> {
    if k >= surface.rows() {
        return Err(MetricError::BadIndex(k));
    }
    let row = surface.row(k);
    let sources = farthest_point_sample(row, opts.pair_cap, &boundary_columns(surface));
    let (c, argmax) = match germ {
        None => {
            let g = link_graph(surface, k);
            if !g.is_connected() {
                return Err(MetricError::DisconnectedLink(k));
            }
            max_ratio(row, &sources, |i| g.dijkstra(i), |i| i)
        }
        Some(gg) => {
            let d0 = gg.graph.dijkstra(gg.node(0, k));
            if (0..surface.cols).any(|j| !d0[gg.node(j, k)].is_finite()) {
                return Err(MetricError::DisconnectedLink(k));
            }
            max_ratio(row, &sources, |i| gg.graph.dijkstra(i), |i| gg.node(i, k))
        }
    };
    let n = sources.len();
    Ok(ScaleLne {
        t: surface.ladder[k].as_f64(),
        c: c.as_f64(),
        pitch: row_pitch(surface, k).as_f64(),
        pairs_checked: n * (n - 1) / 2,
        argmax,
    })
}

/// Least-squares line `y = a + b x`; returns `(a, b, r²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let r2 = if syy > 0.0 { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) } else { 1.0 };
    (a, b, r2)
}

fn finest_half(n: usize) -> usize {
    n / 2
}

fn ratio(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::MIN, f64::max);
    let min = v.iter().cloned().fold(f64::MAX, f64::min);
    max / min
}

/// Aggregates `C_k` over the ladder. The verdict is "consistent with LNE"
/// when `C_k` is uniform on the finest half of the ladder.
pub fn lne_verdict<S: Real>(surface: &SampledSurface<S>, opts: &LneOptions) -> Result<LneReport, MetricError> {
    let n = surface.rows();
    if n < opts.min_scales {
        return Err(MetricError::TooFewScales { min: opts.min_scales, got: n });
    }
    let germ = match opts.mode {
        LneMode::Germ => Some(GermGraph::new(surface, &opts.graph)),
        LneMode::Link => None,
    };
    let per_scale = (0..n).map(|k| scale_lne(surface, k, opts, germ.as_ref())).collect::<Result<Vec<_>, _>>()?;
    let cs: Vec<f64> = per_scale.iter().map(|s| s.c).collect();
    let h = finest_half(n);
    let uniformity_ratio = ratio(&cs[h..]);
    let full_ratio = ratio(&cs);
    let lx: Vec<f64> = per_scale[h..].iter().map(|s| s.t.ln()).collect();
    let ly: Vec<f64> = cs[h..].iter().map(|c| c.ln()).collect();
    let growth_exponent = linear_fit(&lx, &ly).1;
    Ok(LneReport {
        surface: surface.name.clone(),
        mode: opts.mode,
        c_sup: cs.iter().cloned().fold(1.0, f64::max),
        per_scale,
        uniformity_ratio,
        full_ratio,
        growth_exponent,
        bound: opts.uniformity_bound,
        verdict: if uniformity_ratio <= opts.uniformity_bound { LneVerdict::LneConsistent } else { LneVerdict::NotLne },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TordMetric {
    Outer,
    Inner,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TordEstimate {
    /// Regression slope of `log d` against `log t`.
    pub exponent: f64,
    pub coefficient: f64,
    pub r_squared: f64,
    pub metric: TordMetric,
    /// `(t, d)` pairs used by the fit.
    pub samples: Vec<(f64, f64)>,
}

/// Fits `d ≈ c t^e` on the finest half of the given scales.
pub fn fit_power_law(scales: &[f64], dists: &[f64], metric: TordMetric) -> Result<TordEstimate, MetricError> {
    let n = scales.len();
    let h = finest_half(n);
    if n - h < 3 {
        return Err(MetricError::TooFewScales { min: 6, got: n });
    }
    let samples: Vec<(f64, f64)> = scales[h..].iter().cloned().zip(dists[h..].iter().cloned()).collect();
    if samples.iter().any(|&(t, d)| !(d > t * 1e-14)) {
        return Err(MetricError::IdenticalArcs);
    }
    let lx: Vec<f64> = samples.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = samples.iter().map(|p| p.1.ln()).collect();
    let (a, b, r2) = linear_fit(&lx, &ly);
    Ok(TordEstimate { exponent: b, coefficient: a.exp(), r_squared: r2, metric, samples })
}

/// Outer tangency order `tord(γ₁, γ₂)`.
pub fn estimate_tord<S: Real>(a: &SampledArc<S>, b: &SampledArc<S>) -> Result<TordEstimate, MetricError> {
    if a.scales != b.scales || a.points.len() != b.points.len() {
        return Err(MetricError::LadderMismatch);
    }
    let d: Vec<f64> = a.points.iter().zip(&b.points).map(|(p, q)| p.dist(*q).as_f64()).collect();
    let t: Vec<f64> = a.scales.iter().map(|s| s.as_f64()).collect();
    fit_power_law(&t, &d, TordMetric::Outer)
}

/// Inner tangency order of the arcs along columns `ca`, `cb` of a germ graph.
pub fn estimate_tord_inner<S: Real>(
    g: &GermGraph<S>,
    ladder: &[S],
    ca: usize,
    cb: usize,
) -> Result<TordEstimate, MetricError> {
    if ca >= g.cols || cb >= g.cols {
        return Err(MetricError::BadIndex(ca.max(cb)));
    }
    if ca == cb {
        return Err(MetricError::IdenticalArcs);
    }
    let h = finest_half(g.rows);
    let mut d = vec![0.0; g.rows];
    for (k, dk) in d.iter_mut().enumerate().skip(h) {
        *dk = inner_distance(&g.graph, g.node(ca, k), g.node(cb, k))?.as_f64();
    }
    let t: Vec<f64> = ladder.iter().map(|s| s.as_f64()).collect();
    fit_power_law(&t, &d, TordMetric::Inner)
}

/// Symmetric Hausdorff distance between finite point sets.
pub fn hausdorff_distance<S: Real>(a: &[Point4<S>], b: &[Point4<S>]) -> Result<S, MetricError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::EmptySet);
    }
    Ok(directed(a, b).max(directed(b, a)))
}

fn directed<S: Real>(a: &[Point4<S>], b: &[Point4<S>]) -> S {
    a.par_iter().map(|p| b.iter().map(|q| p.dist(*q)).fold(S::infinity(), S::min)).reduce(|| S::zero(), S::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeOptions {
    pub tolerance_factor: f64,
    /// Sampling pitch; defaults to the surface's largest rescaled link edge.
    pub pitch: Option<f64>,
    pub min_scales: usize,
}

impl Default for ConeOptions {
    fn default() -> Self {
        Self { tolerance_factor: 3.0, pitch: None, min_scales: 6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub surface: String,
    pub scales: Vec<f64>,
    /// Hausdorff distance between rescaled links `k` and `k + 1`.
    pub consecutive: Vec<f64>,
    /// Hausdorff distance from rescaled link `k` to the candidate limit.
    pub to_limit: Option<Vec<f64>>,
    pub pitch: f64,
    pub tolerance: f64,
    /// Distances to the limit never increase along the ladder.
    pub monotone: bool,
    pub converged: bool,
}

/// Rescales every link to the unit sphere and tracks Hausdorff convergence,
/// towards `limit` when supplied and between consecutive scales otherwise.
pub fn estimate_tangent_cone<S: Real>(
    surface: &SampledSurface<S>,
    limit: Option<&[Point4<S>]>,
    opts: &ConeOptions,
) -> Result<ConeReport, MetricError> {
    let n = surface.rows();
    if n < opts.min_scales {
        return Err(MetricError::TooFewScales { min: opts.min_scales, got: n });
    }
    let links: Vec<Vec<Point4<S>>> = (0..n).map(|k| surface.rescaled_link(k)).collect();
    let consecutive = (0..n - 1)
        .map(|k| hausdorff_distance(&links[k], &links[k + 1]).map(|d| d.as_f64()))
        .collect::<Result<Vec<_>, _>>()?;
    let to_limit = limit
        .map(|l| links.iter().map(|x| hausdorff_distance(x, l).map(|d| d.as_f64())).collect::<Result<Vec<_>, _>>())
        .transpose()?;
    let pitch = opts.pitch.unwrap_or_else(|| surface.pitch().as_f64());
    let tolerance = opts.tolerance_factor * pitch;
    let seq = to_limit.as_ref().unwrap_or(&consecutive);
    let monotone = seq.windows(2).all(|w| w[1] <= w[0]);
    let converged = monotone && seq.last().is_some_and(|&d| d <= tolerance);
    Ok(ConeReport {
        surface: surface.name.clone(),
        scales: surface.ladder.iter().map(|t| t.as_f64()).collect(),
        consecutive,
        to_limit,
        pitch,
        tolerance,
        monotone,
        converged,
    })
}
