//! Wireless link scheduling under the SINR interference model.
//!
//! * [`model`]: planar link instances and random topologies.
//! * [`sinr`]: power assignments, affectance, and feasibility.
//! * [`scheduling`]: partitioning packet batches into feasible slots.
//! * [`arrivals`]: arrival-rate vectors and Bernoulli packet processes.
//! * [`simulator`]: centralized batching and distributed backoff engines.

pub mod arrivals;
pub mod error;
pub mod model;
pub mod preset;
pub mod rng;
pub mod scheduling;
pub mod simulator;
pub mod sinr;

pub use error::{ArrivalError, ModelError, ScheduleError, SimError, SinrError};
