//! Twisted transfer operators for compact-group extensions of analytic
//! expanding interval maps: periodic-orbit traces, collocation spectra,
//! dynamical determinants, heat-kernel averages and correlation decay.

pub mod catalog;
pub mod correlations;
pub mod dynamics;
pub mod error;
pub mod groups;
pub mod heataverage;
pub mod linalg;
pub mod quadrature;
pub mod thermo;
pub mod twisted;

pub use error::{Error, Result};
