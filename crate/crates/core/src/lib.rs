// `!(x > 0)` style guards deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geometry;
pub mod hornification;
pub mod invariants;
pub mod io;
pub mod knot;
pub mod metric;
pub mod point;
pub mod run;
pub mod scalar;
pub mod surface;

pub use scalar::Real;

pub type Point = point::Point4<f64>;
pub type AxisLine = geometry::AxisLine<f64>;
pub type QuasiPolar = geometry::QuasiPolar<f64>;
pub type ArcGerm = geometry::ArcGerm<f64>;
pub type StandardTriangle = geometry::StandardTriangle<f64>;
pub type StandardHorn = geometry::StandardHorn<f64>;
pub type KnotCurve = knot::KnotCurve<f64>;
pub type StereoChart = knot::StereoChart<f64>;
pub type SphericalGeodesic = knot::SphericalGeodesic<f64>;
pub type OrbitArc = hornification::OrbitArc<f64>;
pub type UniversalTriangle = hornification::UniversalTriangle<f64>;
pub type CounterexamplePair = hornification::CounterexamplePair<f64>;
pub type SampledArc = surface::SampledArc<f64>;
pub type SampledSurface = surface::SampledSurface<f64>;
pub type MetricGraph = metric::MetricGraph<f64>;
pub type GermGraph = metric::GermGraph<f64>;
pub type LinkCurve = invariants::LinkCurve<f64>;
