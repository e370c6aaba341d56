//! Circular Radon transform with centres on the unit circle: forward
//! transforms, Fourier-Hankel inversion and range-condition checks, plus the
//! classical planar Radon range conditions.

pub mod error;
pub mod forward;
pub mod grid;
pub mod perturb;
pub mod phantom;
pub mod pipeline;
pub mod range;
pub mod specfun;
pub mod spectral;

pub mod cli;

pub use error::{Error, Result};
