//! Fourier pseudospectral solver for the doubly periodic two-layer
//! Boussinesq/Boussinesq internal-wave systems, integrated in time with the
//! implicit midpoint rule.
//!
//! Modules are layered bottom-up: [`model`] (coefficients and linear
//! analysis), [`spectral`] (grid and Fourier multipliers), [`dynamics`]
//! (semidiscrete right-hand side and Hamiltonian), [`timestepper`] (IMR),
//! [`waves`] (exact solutions and initial data) and [`harness`] (files,
//! norms and scripted experiments).

pub mod dynamics;
pub mod error;
pub mod harness;
pub mod model;
pub mod spectral;
pub mod timestepper;
pub mod waves;

pub use dynamics::{Functionals, State};
pub use error::{Error, Result};
pub use model::{Model, ModelCoeffs, ModellingKnobs, PhysicalParams, SystemClass};
pub use spectral::{Grid2D, RealField, SpectralField};
pub use timestepper::{ImrConfig, Integrator, StepReport};
pub use waves::SolitaryWaveParams;
