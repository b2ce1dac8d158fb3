//! Dirichlet heat-kernel envelopes for the killed symmetric α-stable process
//! on horn-shaped regions, with a Monte Carlo simulator to check them.

pub mod config;
pub mod envelopes;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod reference;
pub mod simulator;

pub use envelopes::{
    free_kernel_log, long_time_integral_log, EnvelopeConstants, HeatKernelModel, LogEnvelope, ProcessParams, Regime,
};
pub use error::{HornError, Result};
pub use geometry::{Ball, Domain, FreeSpace, HornRegion};
pub use reference::{GMonotone, InverseValue, Profile, ReferenceFunction, T0Config};
pub use simulator::{MCConfig, MCResult};
