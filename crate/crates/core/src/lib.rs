//! Conditional (weak-value) probabilities for particles tunneling through
//! or scattering off 1D barriers.
//!
//! - [`scattering`]: stationary amplitudes for piecewise-constant potentials.
//! - [`wavepacket`]: incident and post-selected packets built from eigenstates.
//! - [`conditional`]: conditional densities `P(x,t|f)` and conditional dwell times.
//! - [`weakmeas`]: finite-dimensional von Neumann pointer simulation.
//! - [`multilayer`]: quarter-wave mirror transfer matrices and loss scans.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditional;
pub mod error;
pub mod multilayer;
pub mod quadrature;
pub mod scattering;
pub mod wavepacket;
pub mod weakmeas;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use scattering::{PotentialProfile, ScatteringAmplitudes, Segment};
pub use wavepacket::{BandwidthSpec, ComplexField, FinalState, SpaceTimeGrid, WavePacket};
