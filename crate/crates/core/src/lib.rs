//! Solvers for resource allocation in wireless-powered networks: harvest-then-
//! transmit time allocation (TDMA and uplink NOMA with time sharing),
//! proportional fairness, an energy/resource pricing game, and SWIPT relay /
//! joint downlink-uplink optimization.
//!
//! Conventions used throughout:
//! - Powers and noise are linear watts unless a name says `_dbm`.
//! - `rho0` is the transmit-power-to-noise ratio `P0 / (N0 W)`.
//! - Rates are spectral efficiencies in bit/s/Hz.
//! - Unless stated otherwise, users are ordered by non-increasing effective
//!   uplink channel gain `g`.

pub mod channel;
pub mod harvest;
pub mod noma;
pub mod numerics;
pub mod propfair;
pub mod stackelberg;
pub mod swipt_joint;
pub mod swipt_relay;
pub mod tdma;

mod error;
mod report;

pub use error::{Error, Result};
pub use report::SolverReport;
