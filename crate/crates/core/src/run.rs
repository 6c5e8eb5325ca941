//! Run directories: JSON configs, the build pipeline, verification suites
//! and exports.
//!
//! Layout of a run directory:
//! - `manifest.json`: resolved config, chosen window `θ₁, θ₂`, `x₁, x₂`, seed
//!   and the shape of every stored surface;
//! - `surfaces/<role>.csv`: sampled surfaces and curves (see [`crate::io`]);
//! - `reports/`: verification output, JSON plus per-scale CSV;
//! - `export/<format>/`: converted artifacts.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::AxisLine;
use crate::hornification::{build_counterexample_pair, build_universal_triangle, hornify, HornError, UniversalOptions};
use crate::invariants::{
    certify_distinct, extract_link, jones_polynomial, project_to_diagram, simplify_diagram, DiagramOptions,
    InvariantError, KnotDiagram, Laurent, LinkCurve, Verdict,
};
use crate::io::{self, DropAxis, IoError, SurfaceMeta};
use crate::knot::{make_preset_knot, KnotError, KnotKind, PresetOptions, SimplicityOptions};
use crate::metric::{
    estimate_tangent_cone, estimate_tord, estimate_tord_inner, lne_verdict, ConeOptions, GermGraph, GermGraphOptions,
    LneOptions, LneVerdict, MetricError, TordEstimate,
};
use crate::point::Point4;
use crate::surface::{geometric_ladder, SampledSurface, SurfaceError};

pub const SCHEMA: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{module}: {msg}")]
    Construction { module: &'static str, msg: String },
    #[error("{module}: {msg}")]
    Analysis { module: &'static str, msg: String },
    #[error("missing artifact {0}")]
    MissingArtifact(PathBuf),
    #[error("unknown suite {0:?}; expected lne, tord, cone, knot or all")]
    UnknownSuite(String),
    #[error("unknown export format {0:?}; expected csv, ply, obj or pd")]
    UnknownFormat(String),
}

impl RunError {
    /// Process exit code; `1` is reserved for failed verification checks.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 3,
            RunError::Io(_) | RunError::Json { .. } => 4,
            RunError::Construction { .. } => 5,
            RunError::MissingArtifact(_) => 6,
            RunError::UnknownSuite(_) => 7,
            RunError::UnknownFormat(_) => 8,
            RunError::Analysis { .. } => 9,
        }
    }
}

impl From<HornError> for RunError {
    fn from(e: HornError) -> Self {
        RunError::Construction { module: "hornification", msg: e.to_string() }
    }
}

impl From<KnotError> for RunError {
    fn from(e: KnotError) -> Self {
        RunError::Construction { module: "knot-model", msg: e.to_string() }
    }
}

impl From<SurfaceError> for RunError {
    fn from(e: SurfaceError) -> Self {
        RunError::Construction { module: "geometry-core", msg: e.to_string() }
    }
}

impl From<MetricError> for RunError {
    fn from(e: MetricError) -> Self {
        RunError::Analysis { module: "metric-analysis", msg: e.to_string() }
    }
}

impl From<InvariantError> for RunError {
    fn from(e: InvariantError) -> Self {
        RunError::Analysis { module: "knot-invariants", msg: e.to_string() }
    }
}

/// Octaves of `t^{β-1}` a ladder may span before link features fall below
/// double-precision resolution relative to `t`.
pub const MAX_OCTAVES: f64 = 30.0;
const AUTO_OCTAVES: f64 = 24.0;
const AUTO_MAX_DEPTH: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LadderSpec {
    /// Ratio of consecutive scales, in `(0, 1)`.
    pub base: f64,
    /// Scales are `base^0 … base^depth`. When absent, the deepest ladder
    /// (at most 32 steps) keeping `t^{β-1}` above `2^-24`: tangency-order
    /// fits are asymptotic and need all the depth precision allows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
}

impl Default for LadderSpec {
    fn default() -> Self {
        Self { base: 0.5, depth: None }
    }
}

impl LadderSpec {
    fn octaves_per_step(&self, beta: f64) -> f64 {
        (beta - 1.0) * (1.0 / self.base).log2()
    }

    pub fn resolve_depth(&self, beta: f64) -> usize {
        self.depth.unwrap_or_else(|| {
            let per = self.octaves_per_step(beta);
            if per <= 0.0 {
                AUTO_MAX_DEPTH
            } else {
                ((AUTO_OCTAVES / per).floor() as usize).min(AUTO_MAX_DEPTH)
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Resolutions {
    pub knot_samples: usize,
    pub glue_inner_cols: usize,
    pub glue_outer_cols: usize,
    pub tau_cols: usize,
}

impl Default for Resolutions {
    fn default() -> Self {
        let u = UniversalOptions::default();
        Self {
            knot_samples: 512,
            glue_inner_cols: u.glue_inner_cols,
            glue_outer_cols: u.glue_outer_cols,
            tau_cols: u.tau_cols,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub lne_uniformity: f64,
    pub cone_tolerance_factor: f64,
    /// Allowed relative error of orbit tangency orders.
    pub tord_rel_tol: f64,
    pub tord_min_r2: f64,
    /// Slack in `tord_inn ≤ tord`.
    pub tord_slack: f64,
    /// Random arc pairs for the inner/outer tangency comparison.
    pub tord_pairs: usize,
    pub min_angle_deg: f64,
    pub distortion_bound: f64,
    pub crossing_cap: usize,
    pub max_retries: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            lne_uniformity: 1.25,
            cone_tolerance_factor: 3.0,
            tord_rel_tol: 0.05,
            tord_min_r2: 0.999,
            tord_slack: 0.05,
            tord_pairs: 100,
            min_angle_deg: 5.0,
            distortion_bound: 4.0,
            crossing_cap: 24,
            max_retries: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub knot: String,
    pub beta: f64,
    pub eta: f64,
    pub ladder: LadderSpec,
    pub resolutions: Resolutions,
    pub thresholds: Thresholds,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA,
            knot: "torus-2-3".into(),
            beta: 2.0,
            eta: 0.2,
            ladder: LadderSpec::default(),
            resolutions: Resolutions::default(),
            thresholds: Thresholds::default(),
            seed: 1,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str, path: &Path) -> Result<Self, RunError> {
        let cfg: Self = serde_json::from_str(text).map_err(|source| RunError::Json { path: path.into(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|source| IoError::Io { path: path.into(), source })?;
        Self::from_json(&text, path)
    }

    pub fn kind(&self) -> Result<KnotKind, RunError> {
        self.knot.parse::<KnotKind>().map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::Config(m));
        if self.schema != SCHEMA {
            return bad(format!("schema {} is not supported (expected {SCHEMA})", self.schema));
        }
        self.kind()?;
        if !(self.beta >= 1.0) || !self.beta.is_finite() {
            return bad(format!("beta must be >= 1, got {}", self.beta));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(format!("eta must lie in (0, 1), got {}", self.eta));
        }
        if !(self.ladder.base > 0.0 && self.ladder.base < 1.0) {
            return bad(format!("ladder base must lie in (0, 1) for a decreasing ladder, got {}", self.ladder.base));
        }
        let depth = self.ladder.resolve_depth(self.beta);
        if depth < 5 {
            return bad(format!("ladder depth must be at least 5, got {depth}"));
        }
        if depth as f64 * self.ladder.octaves_per_step(self.beta) > MAX_OCTAVES {
            return bad(format!(
                "ladder depth {depth} shrinks links below double precision for beta {}; use at most {}",
                self.beta,
                (MAX_OCTAVES / self.ladder.octaves_per_step(self.beta)).floor()
            ));
        }
        if self.resolutions.knot_samples < 64 {
            return bad("knot_samples must be at least 64".into());
        }
        let t = &self.thresholds;
        if [
            t.lne_uniformity,
            t.cone_tolerance_factor,
            t.tord_rel_tol,
            t.tord_min_r2,
            t.min_angle_deg,
            t.distortion_bound,
        ]
        .iter()
        .any(|v| !(*v > 0.0) || !v.is_finite())
        {
            return bad("thresholds must be positive".into());
        }
        Ok(())
    }

    pub fn ladder(&self) -> Vec<f64> {
        geometric_ladder(1.0, self.ladder.base, self.ladder.resolve_depth(self.beta))
    }

    pub fn universal_options(&self) -> UniversalOptions {
        UniversalOptions {
            eta: self.eta,
            simplicity: SimplicityOptions { min_angle_deg: self.thresholds.min_angle_deg, ..Default::default() },
            distortion_bound: self.thresholds.distortion_bound,
            glue_inner_cols: self.resolutions.glue_inner_cols,
            glue_outer_cols: self.resolutions.glue_outer_cols,
            tau_cols: self.resolutions.tau_cols,
            ..Default::default()
        }
    }

    pub fn diagram_options(&self) -> DiagramOptions {
        DiagramOptions {
            max_retries: self.thresholds.max_retries,
            crossing_cap: self.thresholds.crossing_cap,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnotInfo {
    pub name: String,
    pub samples: usize,
    pub min_self_distance: f64,
    pub max_offset: f64,
    /// Jones polynomial of the reference braid closure.
    pub reference_jones: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowInfo {
    pub theta1: f64,
    pub theta2: f64,
    pub j1: usize,
    pub j2: usize,
    pub simple_window: (usize, usize),
    pub distortion: f64,
    pub x1: [f64; 4],
    pub x2: [f64; 4],
    pub tau_angles_deg: (f64, f64),
    pub tau_clearance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub file: String,
    pub closed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: u32,
    pub config: RunConfig,
    pub seed: u64,
    pub knot: KnotInfo,
    pub ladder: Vec<f64>,
    pub window: Option<WindowInfo>,
    pub surfaces: BTreeMap<String, SurfaceMeta>,
    pub curves: BTreeMap<String, CurveMeta>,
    pub counterexample: bool,
    /// Constructions not applicable to this config, with the reason.
    pub skipped: Vec<String>,
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn csv_bytes(r: Result<Vec<u8>, csv::Error>, path: &Path) -> Result<Vec<u8>, RunError> {
    r.map_err(|source| RunError::Io(IoError::Csv { path: path.into(), source }))
}

pub fn reference_jones(kind: KnotKind) -> Result<Laurent, RunError> {
    let (strands, word) = kind.reference_braid();
    Ok(jones_polynomial(&KnotDiagram::from_braid(strands, &word)?, 24)?)
}

/// Builds every construction the config admits and writes the run directory.
pub fn build(cfg: &RunConfig, out: &Path) -> Result<Manifest, RunError> {
    cfg.validate()?;
    let kind = cfg.kind()?;
    let ell = AxisLine::e0();
    let ladder = cfg.ladder();
    let knot = make_preset_knot(
        kind,
        &ell,
        &PresetOptions { beta: cfg.beta, eta: cfg.eta, samples: cfg.resolutions.knot_samples, scale: None },
    )?;
    let horn = hornify(&knot, &ell, cfg.beta, cfg.eta, &ladder)?;
    let mut surfaces: Vec<(&str, SampledSurface<f64>)> = vec![("horn", horn)];
    let mut curves: Vec<(&str, Vec<Point4<f64>>, bool)> = vec![("knot", knot.samples.clone(), true)];
    let mut skipped = Vec::new();
    let mut window = None;
    let mut counterexample = false;
    if cfg.beta > 1.0 {
        let opts = cfg.universal_options();
        let triangle = if kind.is_trivial() {
            skipped.push("counterexample pair: the knot is trivial".into());
            build_universal_triangle(&knot, &ell, cfg.beta, &ladder, &opts)?
        } else {
            let pair = build_counterexample_pair(&knot, &ell, cfg.beta, &ladder, &opts)?;
            surfaces.push(("y_tilde", pair.y_tilde));
            counterexample = true;
            pair.triangle
        };
        window = Some(WindowInfo {
            theta1: triangle.theta1,
            theta2: triangle.theta2,
            j1: triangle.j1,
            j2: triangle.j2,
            simple_window: triangle.simple_window,
            distortion: triangle.distortion,
            x1: triangle.x1.0,
            x2: triangle.x2.0,
            tau_angles_deg: triangle.tau_angles_deg,
            tau_clearance: triangle.tau_clearance,
        });
        curves.push(("tangent_limit", triangle.tangent_limit.clone(), true));
        let mut y = triangle.closed;
        y.name = "Y_K".into();
        surfaces.extend([
            ("excised", triangle.excised),
            ("body", triangle.body),
            ("glue1", triangle.glue1),
            ("glue2", triangle.glue2),
            ("closing", triangle.closing),
            ("assembled", triangle.assembled),
            ("y", y),
        ]);
    } else {
        skipped.push("universal triangle and counterexample pair: beta = 1 gives a cone".into());
    }
    let mut metas = BTreeMap::new();
    for (role, s) in &surfaces {
        let file = format!("surfaces/{role}.csv");
        let path = out.join(&file);
        io::write_atomic(&path, &csv_bytes(io::surface_csv(s), &path)?)?;
        metas.insert(role.to_string(), SurfaceMeta::of(s, &file));
    }
    let mut curve_metas = BTreeMap::new();
    for (role, pts, closed) in &curves {
        let file = format!("surfaces/{role}.csv");
        let path = out.join(&file);
        io::write_atomic(&path, &csv_bytes(io::curve_csv(pts, role), &path)?)?;
        curve_metas.insert(role.to_string(), CurveMeta { file, closed: *closed });
    }
    let manifest = Manifest {
        schema: SCHEMA,
        config: RunConfig { out: None, ..cfg.clone() },
        seed: cfg.seed,
        knot: KnotInfo {
            name: knot.name.clone(),
            samples: knot.len(),
            min_self_distance: knot.min_self_distance,
            max_offset: knot.max_offset(&ell),
            reference_jones: reference_jones(kind)?.to_string(),
        },
        ladder,
        window,
        surfaces: metas,
        curves: curve_metas,
        counterexample,
        skipped,
    };
    io::write_atomic(&out.join("manifest.json"), &to_json(&manifest))?;
    Ok(manifest)
}

/// A built run directory, loaded lazily.
#[derive(Debug)]
pub struct Run {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl Run {
    pub fn open(dir: &Path) -> Result<Self, RunError> {
        let path = dir.join("manifest.json");
        if !path.exists() {
            return Err(RunError::MissingArtifact(path));
        }
        let text = fs::read_to_string(&path).map_err(|source| IoError::Io { path: path.clone(), source })?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|source| RunError::Json { path, source })?;
        Ok(Self { dir: dir.to_path_buf(), manifest })
    }

    pub fn has_surface(&self, role: &str) -> bool {
        self.manifest.surfaces.contains_key(role)
    }

    pub fn surface(&self, role: &str) -> Result<SampledSurface<f64>, RunError> {
        let meta = self
            .manifest
            .surfaces
            .get(role)
            .ok_or_else(|| RunError::MissingArtifact(self.dir.join(format!("surfaces/{role}.csv"))))?;
        let path = self.dir.join(&meta.file);
        if !path.exists() {
            return Err(RunError::MissingArtifact(path));
        }
        Ok(io::read_surface_csv(&path, meta, &self.manifest.ladder)?)
    }

    pub fn curve(&self, role: &str) -> Result<LinkCurve<f64>, RunError> {
        let meta = self
            .manifest
            .curves
            .get(role)
            .ok_or_else(|| RunError::MissingArtifact(self.dir.join(format!("surfaces/{role}.csv"))))?;
        let path = self.dir.join(&meta.file);
        if !path.exists() {
            return Err(RunError::MissingArtifact(path));
        }
        Ok(LinkCurve { points: io::read_curve_csv(&path)?, closed: meta.closed })
    }

    fn write_report(&self, name: &str, bytes: &[u8]) -> Result<(), RunError> {
        Ok(io::write_atomic(&self.dir.join("reports").join(name), bytes)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Lne,
    Tord,
    Cone,
    Knot,
    All,
}

impl Suite {
    pub fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::Lne, Suite::Tord, Suite::Cone, Suite::Knot],
            s => vec![s],
        }
    }
}

impl FromStr for Suite {
    type Err = RunError;
    fn from_str(s: &str) -> Result<Self, RunError> {
        match s {
            "lne" => Ok(Suite::Lne),
            "tord" => Ok(Suite::Tord),
            "cone" => Ok(Suite::Cone),
            "knot" => Ok(Suite::Knot),
            "all" => Ok(Suite::All),
            _ => Err(RunError::UnknownSuite(s.into())),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Lne => "lne",
            Suite::Tord => "tord",
            Suite::Cone => "cone",
            Suite::Knot => "knot",
            Suite::All => "all",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub pass: bool,
    pub checks: Vec<Check>,
    /// Full analysis records (LNE, tord, cone or Jones data).
    pub data: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for s in &self.suites {
            for c in &s.checks {
                out.push_str(&format!(
                    "[{}] {:<5} {}: {}\n",
                    s.suite,
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                ));
            }
        }
        out.push_str(if self.pass { "all checks passed\n" } else { "some checks FAILED\n" });
        out
    }
}

struct Checks(Vec<Check>);

impl Checks {
    fn add(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.0.push(Check { name: name.into(), pass, detail: detail.into() });
    }

    fn finish(self, suite: Suite, data: serde_json::Value) -> SuiteReport {
        SuiteReport { suite, pass: self.0.iter().all(|c| c.pass), checks: self.0, data }
    }
}

/// Runs the selected suites, writing `reports/verify_<suite>.json` and the
/// per-scale CSVs. Deterministic for a given run directory.
pub fn verify(run: &Run, suite: Suite) -> Result<VerifyReport, RunError> {
    let mut suites = Vec::new();
    for s in suite.expand() {
        let r = match s {
            Suite::Lne => verify_lne(run)?,
            Suite::Tord => verify_tord(run)?,
            Suite::Cone => verify_cone(run)?,
            Suite::Knot => verify_knot(run)?,
            Suite::All => unreachable!(),
        };
        run.write_report(&format!("verify_{s}.json"), &to_json(&r))?;
        suites.push(r);
    }
    let report = VerifyReport { pass: suites.iter().all(|s| s.pass), suites };
    if suite == Suite::All {
        run.write_report("verify_all.json", &to_json(&report))?;
    }
    Ok(report)
}

const LNE_ROLES: [&str; 4] = ["horn", "assembled", "y", "y_tilde"];

fn verify_lne(run: &Run) -> Result<SuiteReport, RunError> {
    let th = run.manifest.config.thresholds;
    let opts = LneOptions { uniformity_bound: th.lne_uniformity, ..Default::default() };
    let mut checks = Checks(Vec::new());
    let mut data = serde_json::Map::new();
    for role in LNE_ROLES.into_iter().filter(|r| run.has_surface(r)) {
        let s = run.surface(role)?;
        let r = lne_verdict(&s, &opts)?;
        let mut csv = String::from("t,c,pitch,pairs_checked\n");
        for p in &r.per_scale {
            csv.push_str(&format!("{:e},{:e},{:e},{}\n", p.t, p.c, p.pitch, p.pairs_checked));
        }
        run.write_report(&format!("lne_{role}.csv"), csv.as_bytes())?;
        checks.add(
            format!("{role} LNE-consistent"),
            r.verdict == LneVerdict::LneConsistent,
            format!(
                "sup C = {:.4}, uniformity {:.4} (bound {}), full ratio {:.4}",
                r.c_sup, r.uniformity_ratio, r.bound, r.full_ratio
            ),
        );
        data.insert(role.into(), serde_json::to_value(&r).expect("serializable"));
    }
    Ok(checks.finish(Suite::Lne, data.into()))
}

fn tord_csv(rows: &mut String, label: &str, e: &TordEstimate) {
    for &(t, d) in &e.samples {
        if t > 0.0 && d > 0.0 {
            rows.push_str(&format!("{label},{:?},{t:e},{d:e},{:e},{:e}\n", e.metric, t.ln(), d.ln()));
        }
    }
}

fn verify_tord(run: &Run) -> Result<SuiteReport, RunError> {
    let cfg = &run.manifest.config;
    let th = cfg.thresholds;
    let beta = cfg.beta;
    let horn = run.surface("horn")?;
    let mut checks = Checks(Vec::new());
    let mut csv = String::from("pair,metric,t,d,log_t,log_d\n");
    let mut orbit = Vec::new();
    let m = horn.cols;
    for (a, b) in [(0, m / 2), (m / 8, m / 8 + 1), (m / 3, 2 * m / 3), (m / 4, m / 4 + m / 16)] {
        let e = estimate_tord(&horn.column(a), &horn.column(b))?;
        tord_csv(&mut csv, &format!("orbit:{a}-{b}"), &e);
        let ok = ((e.exponent - beta) / beta).abs() <= th.tord_rel_tol && e.r_squared >= th.tord_min_r2;
        checks.add(
            format!("orbit tord cols {a},{b}"),
            ok,
            format!("exponent {:.5} (beta {beta}), r2 {:.6}", e.exponent, e.r_squared),
        );
        orbit.push(e);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(run.manifest.seed);
    let roles: Vec<&str> = ["horn", "y"].into_iter().filter(|r| run.has_surface(r)).collect();
    let mut pairs = Vec::new();
    let mut worst_gap = f64::NEG_INFINITY;
    let mut min_order = f64::INFINITY;
    for (i, role) in roles.iter().enumerate() {
        let s = if *role == "horn" { horn.clone() } else { run.surface(role)? };
        let g = GermGraph::new(&s, &GermGraphOptions::default());
        let n = th.tord_pairs / roles.len() + usize::from(i < th.tord_pairs % roles.len());
        for _ in 0..n {
            let a = rng.gen_range(0..s.cols);
            let b = loop {
                let b = rng.gen_range(0..s.cols);
                if b != a {
                    break b;
                }
            };
            let outer = estimate_tord(&s.column(a), &s.column(b))?;
            let inner = estimate_tord_inner(&g, &s.ladder, a, b)?;
            tord_csv(&mut csv, &format!("{role}:{a}-{b}"), &outer);
            tord_csv(&mut csv, &format!("{role}:{a}-{b}"), &inner);
            worst_gap = worst_gap.max(inner.exponent - outer.exponent);
            min_order = min_order.min(inner.exponent.min(outer.exponent));
            pairs.push(serde_json::json!({
                "surface": role, "a": a, "b": b, "tord": outer.exponent, "tord_inn": inner.exponent,
            }));
        }
    }
    checks.add(
        "tord_inn <= tord",
        worst_gap <= th.tord_slack,
        format!("{} pairs, max(tord_inn - tord) = {worst_gap:.4} (slack {})", pairs.len(), th.tord_slack),
    );
    checks.add("tangency orders >= 1", min_order >= 0.95, format!("smallest estimate {min_order:.4}"));
    run.write_report("tord.csv", csv.as_bytes())?;
    Ok(checks.finish(Suite::Tord, serde_json::json!({ "orbit": orbit, "pairs": pairs })))
}

fn verify_cone(run: &Run) -> Result<SuiteReport, RunError> {
    let cfg = &run.manifest.config;
    let th = cfg.thresholds;
    let opts = ConeOptions { tolerance_factor: th.cone_tolerance_factor, ..Default::default() };
    let mut checks = Checks(Vec::new());
    let mut data = serde_json::Map::new();
    let write_csv = |role: &str, r: &crate::metric::ConeReport| -> Result<(), RunError> {
        let mut csv = String::from("t,consecutive,to_limit\n");
        for (k, t) in r.scales.iter().enumerate() {
            let c = r.consecutive.get(k).map_or(String::new(), |d| format!("{d:e}"));
            let l = r.to_limit.as_ref().map_or(String::new(), |v| format!("{:e}", v[k]));
            csv.push_str(&format!("{t:e},{c},{l}\n"));
        }
        run.write_report(&format!("cone_{role}.csv"), csv.as_bytes())
    };
    let horn = run.surface("horn")?;
    if cfg.beta > 1.0 {
        let axis = [AxisLine::<f64>::e0().dir()];
        let r = estimate_tangent_cone(&horn, Some(&axis), &opts)?;
        let last = r.to_limit.as_ref().and_then(|v| v.last().copied()).unwrap_or(f64::NAN);
        checks.add(
            "horn tangent cone is the axis",
            r.converged,
            format!("monotone {}, final distance {last:.4e} (tolerance {:.4e})", r.monotone, r.tolerance),
        );
        write_csv("horn", &r)?;
        data.insert("horn".into(), serde_json::to_value(&r).expect("serializable"));
    } else {
        let r = estimate_tangent_cone(&horn, None, &opts)?;
        let worst = r.consecutive.iter().copied().fold(0.0, f64::max);
        checks.add(
            "horn is a cone",
            worst <= r.pitch,
            format!("max consecutive distance {worst:.4e}, pitch {:.4e}", r.pitch),
        );
        write_csv("horn", &r)?;
        data.insert("horn".into(), serde_json::to_value(&r).expect("serializable"));
    }
    if run.has_surface("y_tilde") {
        let yt = run.surface("y_tilde")?;
        let r = estimate_tangent_cone(&yt, None, &opts)?;
        let worst = r.consecutive.iter().copied().fold(0.0, f64::max);
        checks.add(
            "Y~_K is its own tangent cone",
            worst <= r.pitch,
            format!("max consecutive distance {worst:.4e}, pitch {:.4e}", r.pitch),
        );
        write_csv("y_tilde", &r)?;
        data.insert("y_tilde".into(), serde_json::to_value(&r).expect("serializable"));
    }
    if run.has_surface("y") {
        let y = run.surface("y")?;
        let limit = run.curve("tangent_limit")?;
        let r = estimate_tangent_cone(&y, Some(&limit.points), &opts)?;
        let last = r.to_limit.as_ref().and_then(|v| v.last().copied()).unwrap_or(f64::NAN);
        checks.add(
            "Y_K links approach the tangent limit",
            last <= r.tolerance,
            format!("final distance {last:.4e} (tolerance {:.4e}), monotone {}", r.tolerance, r.monotone),
        );
        write_csv("y", &r)?;
        data.insert("y".into(), serde_json::to_value(&r).expect("serializable"));
    }
    if run.manifest.counterexample {
        let dopts = cfg.diagram_options();
        let d1 = project_to_diagram(&run.curve("tangent_limit")?, run.manifest.seed, &dopts)?.diagram;
        let d2 = project_to_diagram(&run.curve("knot")?, run.manifest.seed, &dopts)?.diagram;
        let cert = certify_distinct(&d1, &d2, th.crossing_cap)?;
        checks.add(
            "tangent links of Y_K and Y~_K distinct",
            cert.verdict == Verdict::Distinct,
            format!("{:?}: {} vs {}", cert.verdict, cert.jones1, cert.jones2),
        );
        data.insert("certificate".into(), serde_json::to_value(&cert).expect("serializable"));
    }
    Ok(checks.finish(Suite::Cone, data.into()))
}

fn curve_jones(c: &LinkCurve<f64>, seed: u64, opts: &DiagramOptions) -> Result<(Laurent, usize), RunError> {
    let d = simplify_diagram(&project_to_diagram(c, seed, opts)?.diagram);
    Ok((jones_polynomial(&d, opts.crossing_cap)?, d.n_crossings()))
}

fn verify_knot(run: &Run) -> Result<SuiteReport, RunError> {
    let cfg = &run.manifest.config;
    let seed = run.manifest.seed;
    let dopts = cfg.diagram_options();
    let oracle = reference_jones(cfg.kind()?)?;
    let mut checks = Checks(Vec::new());
    let mut data = serde_json::Map::new();
    data.insert("oracle".into(), oracle.to_string().into());
    let knot = run.curve("knot")?;
    let mut seeds = Vec::new();
    for s in [seed, seed + 1, seed + 2] {
        let (j, n) = curve_jones(&knot, s, &dopts)?;
        checks.add(format!("knot Jones, seed {s}"), j == oracle, format!("{j} ({n} crossings)"));
        seeds.push(j.to_string());
    }
    data.insert("knot".into(), seeds.into());
    for role in ["horn", "y", "y_tilde"].into_iter().filter(|r| run.has_surface(r)) {
        let s = run.surface(role)?;
        let mut per_scale = Vec::new();
        let mut ok = true;
        for k in 0..s.rows() {
            let (j, _) = curve_jones(&extract_link(&s, k)?, seed, &dopts)?;
            ok &= j == oracle;
            per_scale.push(j.to_string());
        }
        checks.add(
            format!("{role} link Jones at every scale"),
            ok,
            format!("{} scales, distinct values {:?}", per_scale.len(), {
                let mut v = per_scale.clone();
                v.dedup();
                v
            }),
        );
        data.insert(role.into(), per_scale.into());
    }
    if run.has_surface("assembled") {
        let a = run.surface("assembled")?;
        let open = (0..a.rows()).all(|k| extract_link(&a, k).is_ok_and(|c| !c.closed));
        checks.add("T_{beta,K} link is an arc", open, format!("{} scales", a.rows()));
    }
    if run.manifest.curves.contains_key("tangent_limit") {
        let (j, _) = curve_jones(&run.curve("tangent_limit")?, seed, &dopts)?;
        checks.add("Y_K tangent link is unknotted", j == Laurent::one(j.var), j.to_string());
        data.insert("tangent_limit".into(), j.to_string().into());
    }
    Ok(checks.finish(Suite::Knot, data.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Ply,
    Obj,
    Pd,
}

impl FromStr for Format {
    type Err = RunError;
    fn from_str(s: &str) -> Result<Self, RunError> {
        match s {
            "csv" => Ok(Format::Csv),
            "ply" => Ok(Format::Ply),
            "obj" => Ok(Format::Obj),
            "pd" => Ok(Format::Pd),
            _ => Err(RunError::UnknownFormat(s.into())),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Ply => "ply",
            Format::Obj => "obj",
            Format::Pd => "pd",
        })
    }
}

/// Converts stored artifacts into `export/<format>/`; returns the written
/// paths. PD files hold simplified diagrams of the knot and of every closed
/// link at the finest scale.
pub fn export(run: &Run, format: Format, drop: DropAxis) -> Result<Vec<PathBuf>, RunError> {
    let dir = run.dir.join("export").join(format.to_string());
    let mut written = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> Result<(), RunError> {
        let p = dir.join(name);
        io::write_atomic(&p, &bytes)?;
        written.push(p);
        Ok(())
    };
    let roles: Vec<String> = run.manifest.surfaces.keys().cloned().collect();
    match format {
        Format::Csv | Format::Ply | Format::Obj => {
            for role in &roles {
                let s = run.surface(role)?;
                let path = dir.join(format!("{role}.{format}"));
                let bytes = match format {
                    Format::Csv => csv_bytes(io::surface_csv(&s), &path)?,
                    Format::Ply => io::surface_ply(&s, drop).into_bytes(),
                    _ => io::surface_obj(&s, drop).into_bytes(),
                };
                put(format!("{role}.{format}"), bytes)?;
            }
            if format == Format::Csv {
                for role in run.manifest.curves.keys() {
                    let c = run.curve(role)?;
                    let path = dir.join(format!("{role}.csv"));
                    put(format!("{role}.csv"), csv_bytes(io::curve_csv(&c.points, role), &path)?)?;
                }
            }
        }
        Format::Pd => {
            let dopts = run.manifest.config.diagram_options();
            let seed = run.manifest.seed;
            let pd = |c: &LinkCurve<f64>| -> Result<Vec<u8>, RunError> {
                let d = simplify_diagram(&project_to_diagram(c, seed, &dopts)?.diagram);
                Ok(d.to_pd_string().into_bytes())
            };
            for role in run.manifest.curves.keys() {
                put(format!("{role}.pd"), pd(&run.curve(role)?)?)?;
            }
            for role in &roles {
                let s = run.surface(role)?;
                let link = extract_link(&s, s.rows() - 1)?;
                if link.closed {
                    put(format!("{role}_link.pd"), pd(&link)?)?;
                }
            }
        }
    }
    Ok(written)
}
