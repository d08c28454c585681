pub mod bessel;
pub mod error;
pub mod euler;
pub mod holder;
pub mod initial;
pub mod interp;
pub mod lab;
pub mod lp;
pub mod multiplier;
pub mod osgood;
pub mod patch;
pub mod quadrature;
pub mod scenario;
pub mod spectral;

pub use error::{Error, Result};
