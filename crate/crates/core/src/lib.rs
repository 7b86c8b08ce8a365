//! Spectral tools for the inverse conductivity problem on the unit disk with
//! a single boundary measurement.

pub mod circle_map;
pub mod conformal;
pub mod dtn;
pub mod error;
pub mod fit;
pub mod fourier;
pub mod geometry;
pub mod identify;
pub mod moebius;
pub mod oracle;
pub mod precompose;

pub use circle_map::CircleMap;
pub use error::{Error, Result};
pub use fourier::{FourierSeries, SobolevIndex};
