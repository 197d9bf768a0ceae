//! Simulation and analysis toolkit for harmonic radar with phase-coherent
//! auxiliary ("helper") transmitters.
//!
//! The crate is organised bottom-up:
//!
//! * [`tag`]: the diode transponder, exact (Lambert-W) and asymptotic
//!   second-harmonic responses.
//! * [`link`]: uplink/downlink gains, tag drive amplitudes, received power
//!   and the three-term received envelope.
//! * [`coherence`]: one phase-adjustment slot: sweep integrals, SNRs and the
//!   phase-offset estimator.
//! * [`dist`]: closed-form statistics of the adjustment process (K-factor,
//!   phase-error law, amplitude-ratio recursion, range extension).
//! * [`montecarlo`]: full adjustment frames under noise, LO frequency error
//!   and propagation delay.
//! * [`config`] and [`experiments`]: configuration files and the CSV
//!   producers behind the `hrsim` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coherence;
pub mod config;
pub mod csv;
pub mod dist;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod link;
pub mod montecarlo;
pub mod special;
pub mod tag;
pub mod units;

pub use error::{Error, Result};
pub use exec::Execution;
