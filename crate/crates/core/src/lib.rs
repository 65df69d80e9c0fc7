//! Transient excitation of a lossy two-level atom driven by shaped quantum
//! wavepackets.
//!
//! The crate covers single-photon Fock pulses (closed forms and the
//! Cauchy–Schwarz bound), coherent-state drive through the optical Bloch
//! equations, the N-photon Fock hierarchy, pulse-duration optimization, and
//! the large-photon-number asymptotics built on the pulse-area expansion.
//!
//! Rates are plain `f64` values in arbitrary but consistent units; most of
//! the tooling works in units where the pulse coupling rate `Γ_P = 1`.

pub mod asymptotics;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod fock_single;
pub mod io;
pub mod ode;
pub mod optimizer;
pub mod pulses;
pub mod quadrature;
pub mod special_functions;

pub use error::{Error, Result};
pub use pulses::{LossModel, PulseKind, PulseShape};
