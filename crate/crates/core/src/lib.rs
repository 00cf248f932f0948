//! Spectral tools for leafwise complex structures on linear foliations of the 3-torus.
//!
//! The foliation is given by the level sets of `l(x) = a1 x1 + a2 x2 - x3`. Fields are
//! truncated Fourier series ([`FourierField`]); the leafwise Cauchy-Riemann operators are
//! diagonal Fourier multipliers ([`foliation`]).

pub mod diophantine;
pub mod chart;
pub mod error;
pub mod foliation;
pub mod homotopy;
pub mod linalg;
pub mod metric;
pub mod scalar;
pub mod slope;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use foliation::{FoliationParams, Geometry, MultiplierSymbol, SymbolTag};
pub use scalar::Real;
pub use slope::Slope;
pub use spectral::{Dim, Field, FourierField, ModeIndex, NormSpec};

/// Double precision complex number.
pub type C64 = num_complex::Complex<f64>;

/// Double precision foliation parameters.
pub type Params = FoliationParams<f64>;
