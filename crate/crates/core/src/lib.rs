//! Divisors, harmonic morphisms, Riemann–Hurwitz formulas and second main
//! theorem checks for finite graphs, vertex-weighted graphs, metric graphs,
//! vertex-weighted metric graphs and metrized complexes of curves.
//!
//! Metric data is generic over [`scalar::Scalar`]; the aliases below fix it to
//! arbitrary-precision rationals.

pub mod complex;
pub mod divisor;
pub mod error;
pub mod format;
pub mod generators;
pub mod graph;
pub mod metric;
pub mod morphism;
pub mod scalar;
pub mod theorems;
pub mod weighted;

pub use divisor::Divisor;
pub use error::{Error, Result};
pub use graph::{EdgeId, Multigraph, PointId, VertexId};
pub use morphism::{Category, EdgeImage, GraphMorphism, IndexedMorphism, Morphism};
pub use scalar::Scalar;
pub use weighted::WeightedGraph;

/// Exact rational scalar used by the CLI and the aliases below.
pub type Rational = num_rational::BigRational;

pub type MetricGraph = metric::MetricModel<Rational>;
pub type PseudoMetricGraph = metric::PseudoMetricGraph<Rational>;
pub type WeightedMetricGraph = metric::WeightedMetricGraph<Rational>;
pub type MetrizedComplex = complex::MetrizedComplex<Rational>;
pub type ComplexDivisor = complex::ComplexDivisor<Rational>;
pub type MetricMorphism = morphism::MetricMorphism<Rational>;
pub type WeightedMetricMorphism = morphism::WeightedMetricMorphism<Rational>;
pub type ComplexMorphism = complex::ComplexMorphism<Rational>;
pub type Instance = generators::Instance<Rational>;
pub type Document = format::Document<Rational>;
