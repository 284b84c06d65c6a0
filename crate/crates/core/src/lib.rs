//! Metric scale recovery for monocular visual odometry using the known
//! mounting height of the camera above the road.

pub mod eval;
pub mod geometry;
pub mod io;
pub mod motion;
pub mod pipeline;
pub mod plot;
pub mod road;
pub mod scale;
pub mod synth;
