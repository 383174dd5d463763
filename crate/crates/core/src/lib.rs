//! Dynamics of a two-level atom under a strong classical drive, solved
//! without the rotating-wave approximation.
//!
//! The pipeline is: reduce parameters, integrate the fundamental pair over a
//! quarter period, extend by symmetry, read the Floquet exponent, solve the
//! Fourier recurrence, and assemble emission line amplitudes. Large-ε
//! closed forms live in [`wkb`].

pub mod elliptic;
pub mod error;
pub mod floquet;
pub mod integrator;
pub mod ode;
pub mod params;
pub mod quad;
pub mod spectrum;
pub mod wkb;

pub use error::{Error, Result};
pub use floquet::FloquetData;

pub use integrator::StepControl;
pub use num_complex::Complex64 as C64;
pub use ode::{BlochSeries, SolutionGrid};
pub use params::{PhysicalParams, ReducedParams};
pub use spectrum::{LineClass, Route, SpectrumLine, SpectrumSet};
pub use wkb::WkbSolution;


