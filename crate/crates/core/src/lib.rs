//! Slot-driven simulator of a wirelessly-connected robot control loop.
//!
//! Sensors on the robot feed an edge controller over an impaired uplink; the
//! edge runs a PID law and sends command-and-control (C&C) packets back over an
//! impaired downlink; the robot picks which queued command to execute. The
//! crate compares C&C execution policies (latest-only, FIFO and a semantic
//! policy scoring freshness-discounted value of information), semantic queue
//! priority at the edge, and risk-driven dynamic transmission rates on a UAV
//! target-tracking task.
//!
//! Everything here is `no_std` + `alloc`: file formats, the CLI and parallel
//! sweeps live in the `rcs-sim` crate.
#![no_std]
#![forbid(unsafe_code)]
// `!(x >= 0.0)` rejects NaN along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod control;
pub mod engine;
mod error;
pub mod network;
pub mod policies;
mod rng;
pub mod safety;
pub mod world;

pub use error::SimError;
pub use rng::{stream_rng, SimRng};

pub type Result<T, E = SimError> = core::result::Result<T, E>;
