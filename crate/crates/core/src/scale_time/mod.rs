//! Scale-function transformation of the scalar model, effective-time Brownian
//! motion, and the clocks that connect effective and real time.

mod brownian;
mod local_time;
mod scale;
mod time_change;

pub use brownian::{fold_unit, sample_brownian, sample_brownian_stream, BrownianPath};
pub use local_time::{
    default_band, inverse_local_time, local_time, mixed_local_time_clock, mixed_local_time_clock_reflected,
    mixed_local_time_clock_with, ClockRun, MixedClock,
};
pub use scale::{clamp_inverse, inner_exponent, InverseCursor, ScaleFunction, ScalePoint, PHI_CAP, TABLE_REACH, TABLE_STEP};
pub use time_change::{coupled_graph, coupled_trajectory, sweep, time_change_inverse, CoupledSample, SweepSummary, TimeChange};
