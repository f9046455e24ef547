//! Gaussian wave packets tunneling through square barriers on a 1D lattice.
//!
//! The time-dependent Schrödinger equation is integrated with the
//! Crank-Nicolson scheme, which is exactly norm conserving. A tunneling run
//! is always paired with an identically prepared free run, and the
//! experiments measure how far the transmitted packet's maximum sits ahead
//! of the free packet's maximum.
//!
//! Modules, bottom up:
//!
//! - [`state`]: grid, wave function, Gaussian packet, square barrier.
//! - [`tridiag`], [`propagator`]: the Crank-Nicolson stepper.
//! - [`observables`]: peak positions, norms, shift, envelope, spectra.
//! - [`oracles`]: closed-form references used by the tests.
//! - [`experiments`]: paired runs and parameter sweeps.
//! - [`cli`]: argument parsing and CSV/JSON output.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod observables;
pub mod oracles;
pub mod propagator;
pub mod state;
pub mod tridiag;

pub use error::{Error, Result};
pub use experiments::{ExperimentConfig, RunPoint, RunRecord, SummaryRow, SweepTable};
pub use propagator::Stepper;
pub use state::{gaussian_packet, sample_potential, Grid, SquareBarrier, WaveFunction};
