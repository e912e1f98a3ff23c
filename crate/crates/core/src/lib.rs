//! Task-space curriculum learning for three-class classification.
//!
//! A coarse binary sub-task (class 0 against classes 1 and 2) and the full
//! three-class task are blended per epoch by a loss scheduler:
//!
//! ```text
//! loss = λ(e) · easy(p, z) + (1 - λ(e)) · hard(p, y),    z = 1{y != 0}
//! ```
//!
//! The numeric core ([`scheduler`], [`loss`], [`model`], [`train`],
//! [`metrics`], [`data`]) is generic over the scalar type through
//! [`Scalar`]; the aliases below fix it to `f64`, which is what the
//! experiment [`harness`] and the CLI use.

pub mod data;
pub mod error;
pub mod harness;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod scalar;
pub mod scheduler;
pub mod train;

pub use error::{Error, Result};
pub use loss::{CoarseLabel, FineLabel};
pub use metrics::MetricsReport;
pub use scalar::Scalar;
pub use scheduler::SchedulerKind;

pub type SchedulerSpec = scheduler::SchedulerSpec<f64>;
pub type ProbabilityVector = loss::ProbabilityVector<f64>;
pub type Mlp = model::Mlp<f64>;
pub type Dataset = data::Dataset<f64>;
pub type Sample = data::Sample<f64>;

pub type SchedulerSpecF32 = scheduler::SchedulerSpec<f32>;
pub type ProbabilityVectorF32 = loss::ProbabilityVector<f32>;
pub type MlpF32 = model::Mlp<f32>;
pub type DatasetF32 = data::Dataset<f32>;
