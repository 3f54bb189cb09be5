//! Bohmian trajectories, nodal points and X-points of superpositions of
//! 2-d harmonic oscillator eigenstates.

pub mod diagnostics;
pub mod dynamics;
pub mod eigenbasis;
pub mod error;
pub mod export;
pub mod nodes;
pub mod ode;
pub mod presets;
pub mod wavefield;
pub mod xpoints;

pub use error::{Error, Result};
pub use num_complex::Complex64;
