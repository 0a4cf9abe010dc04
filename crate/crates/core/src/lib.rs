//! Two-sided marked Hawkes model for intraday electricity prices.
//!
//! The crate is organised along the life of a price series:
//!
//! - [`model`]: parameters, events and the exponential-kernel intensity state.
//! - [`analytics`]: closed-form moments and signature plots.
//! - [`simulate`]: thinning simulation, price paths and Monte Carlo summaries.
//! - [`estimate`]: event extraction, likelihood and parameter fitting.
//! - [`empirics`]: model-free estimators and Kolmogorov-Smirnov tests.
//! - [`limits`]: Monte Carlo checks of the large-horizon limits.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod curve;
pub mod empirics;
pub mod estimate;
pub mod limits;
pub mod model;
pub mod simulate;

pub use curve::{CurveTable, MeanVar};
pub use model::{EventStream, HawkesParams, IntensityState, MarkedEvent, ModelError, Sign};
