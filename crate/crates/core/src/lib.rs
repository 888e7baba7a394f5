//! Photon-level Monte Carlo simulation of polarization-secured imaging and
//! entanglement-based secure ranging.
//!
//! - [`polar`]: linear polarization states, projective measurement, and the
//!   closed-form jammer/receiver error rates and mutual information.
//! - [`scene`]: object and spoof masks, pixel sampling, PBM/PGM I/O.
//! - [`protocol`]: the pulse-level imaging engine with honest,
//!   intercept-resend and photon-number-splitting channels.
//! - [`ranging`]: entangled-pair CHSH test and time-of-flight range.
//! - [`analysis`]: error tallies, security verdicts, reports.

pub mod analysis;
pub mod polar;
pub mod protocol;
pub mod ranging;
pub mod scene;
