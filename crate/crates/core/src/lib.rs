//! Regularized functional-map solvers, tangent-gradient features and
//! overlap metrics.

pub mod batched;
pub mod csvio;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod mask;
pub mod metrics;
pub mod solver;
pub mod spectral;
pub mod tangent;

pub use error::{Error, Result};
pub use linalg::{Mat, Real};
pub use mask::{mask_commutativity, mask_resolvent, MaskKind, PenaltyMask};
pub use metrics::{ConfusionCounts, Metric, MetricValue, OverlapScenario, Predictor};
pub use solver::{Problem, SolveOptions, SolveReport};
pub use spectral::{FunctionalMap, SpectralDescriptors, Spectrum, VertexFeatures};
pub use tangent::{GradientTransform, TangentField, Variant};
