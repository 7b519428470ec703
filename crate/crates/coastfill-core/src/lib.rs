//! Cloud-gap filling for categorical coastal raster stacks.
//!
//! Frames of a water/wetland/land raster time series are flattened into a
//! frames-by-pixels matrix with missing (cloud) entries, then completed by
//! one of two engines:
//!
//! - [`dineof`]: iterative truncated-SVD reconstruction of the missing
//!   entries, with diagnostics tracking how the truncation tail feeds back
//!   into the iteration;
//! - [`funksvd`]: regularized low-rank factorization fit by stochastic
//!   gradient descent over the observed entries only.
//!
//! Around the engines: a synthetic coastal landscape generator ([`synth`]),
//! blob-shaped cloud-mask synthesis at target blocking rates ([`masking`]),
//! F1 scoring and timing ([`eval`]), and a blocking-rate sweep harness that
//! emits plot-ready CSV tables ([`bench`]). Stacks serialize in a small
//! line-oriented text format, GSF (see [`rasterstack`]).

pub mod bench;
pub mod dineof;
pub mod error;
pub mod eval;
pub mod funksvd;
pub mod masking;
pub mod rasterstack;
pub mod synth;

pub use error::{Error, Result};
pub use rasterstack::{ClassLabel, GridStack, StackHeader};
