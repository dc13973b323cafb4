//! Split-step simulation of a paraxial beam repeatedly reflected off a
//! spatial light modulator that imprints a static speckle phase.
//!
//! Free-space dispersion and the phase print alternate exactly, so the
//! kick–drift map is the physical propagator rather than an approximation
//! to one. The beam's transverse profile is an analog of a quantum particle
//! in a disordered potential and exhibits Anderson localization.
//!
//! Modules, bottom-up:
//! - [`grid`]: periodic lattice, spectral transform, complex field
//! - [`disorder`]: Gaussian-spike potential and its statistics
//! - [`propagation`]: kick, drift, their composition, free-Gaussian oracle
//! - [`observables`]: moments, participation ratio, tail fits
//! - [`experiment`]: configs, seeded ensembles, CSV/manifest output, CLI

pub mod cli;
pub mod disorder;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod observables;
pub mod propagation;

pub use error::{Error, Result, Warning};
