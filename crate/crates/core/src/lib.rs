//! Continuous-wave ODMR simulation of NV-center ensembles in diamond, with
//! field reconstruction from simulated spectra and figure-of-merit sweeps.
//!
//! The forward model builds, for each of the eight orientation branches,
//! the spin-1 ground Hamiltonian, mixes the seven-level rate matrix with the
//! resulting eigenstates, adds microwave-driven transitions with a
//! Lorentzian density of states and solves for the steady state. The
//! inverse pipeline fits the eight resonances and solves the overdetermined
//! axis projection system for the field vector.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod config;
pub mod engine;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod microwave;
pub mod noise;
pub mod optimize;
pub mod oracle;
pub mod physics;
pub mod reconstruct;
pub mod seven_level;

pub use engine::{simulate_spectrum, simulate_widefield, ApparatusConfig, Spectrum, SweepGrid, WidefieldCube};
pub use error::{OdmrError, Result};
pub use noise::{NoiseConfig, RandomSource};
pub use physics::FieldVector;
