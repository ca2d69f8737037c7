//! Temporal modelling of an epidemic curve.
//!
//! The crate covers the full desk-scale pipeline for a daily case series:
//!
//! - [`series`]: CSV ingestion, validation and cumulative/incremental transforms.
//! - [`rates`]: per-day change rates and their windowed mean.
//! - [`network`]: natural visibility graphs, modularity communities and the
//!   spline knot vector derived from them.
//! - [`spline`]: truncated-power regression splines with hat-matrix
//!   diagnostics, closed-form LOOCV and a Monte-Carlo bias/variance study.
//! - [`forecast`]: recursive and geometric-increment forecasts plus the
//!   saturation upper bound.
//! - [`logistic`]: bounded logistic growth fits with a fixed ceiling.
//! - [`plot`]: deterministic SVG line plots.
//! - [`cli`]: the `curveflat` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod forecast;
pub mod format;
pub mod logistic;
pub mod network;
pub mod plot;
pub mod rates;
pub mod series;
pub mod spline;

pub use error::{Error, Result};
