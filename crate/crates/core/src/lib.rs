// Tensor loops index several arrays at once, and `!(x > 0.0)` is used on
// purpose so NaN fails the check.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod catalog;
pub mod chart;
pub mod classifier;
pub mod cohomog1;
pub mod curvature;
pub mod error;
pub mod expr;
pub mod integrals;
pub mod sampling;
pub mod static_ops;
mod jet;
pub mod tensor;

pub use catalog::{ExampleDescriptor, ExampleName, Params};
pub use chart::{BoundaryFace, ChartMetric, End, Interval, Point, ScalarField};
pub use classifier::{ObataTag, ObataVerdict, Subject, Surjectivity, SurjectivityVerdict, Tolerances};
pub use cohomog1::{Cohomog1Metric, RadialFunction};
pub use curvature::{Christoffel, Curvature, RicciGradient, SymTensorField};
pub use error::{Error, Result};
pub use expr::{parse, Expr, VarEnv};
pub use integrals::{FluxScan, QuadratureSettings, TailFit};
pub use sampling::SamplePlan;
pub use static_ops::{PotentialSpec, StaticReport};
pub use tensor::{MetricFactor, SymTensor2, Tensor4, Valence};
