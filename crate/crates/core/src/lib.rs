//! Desk-scale numerical laboratory for two-bubble dynamics of the focusing
//! energy-critical Hartree equation in dimension N >= 7.

pub mod error;
pub mod field;
pub mod gauss;
pub mod grid;
pub mod bubble;
pub mod kernel;
pub mod linops;
pub mod stencil;

pub use error::CoreError;
pub use field::RadialField;
pub use grid::{GridRef, RadialGrid};
