//! Strong-measurement limits of Belavkin filtering equations: the n-level
//! equation and its two-state reduction, the scale-function time change, the
//! spike process in the limit, and a Hausdorff metric on graphs.

// `!(x <= tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod belavkin;
pub mod error;
pub mod graph_metric;
pub mod io;
pub mod path;
pub mod quad;
pub mod rng;
pub mod schedule;
pub mod spike_limit;
pub mod scale_time;
pub mod stats;
pub mod twostate;
pub mod validation;

pub use error::{Error, Result};
pub use path::Path;
