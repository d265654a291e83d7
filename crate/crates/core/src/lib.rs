//! Vacuum pair production and dressing of a two-level atom coupled to a
//! quantized field, in a waveguide or in free space.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod dressing;
pub mod error;
pub mod fock;
pub mod modes;
pub mod quad;
pub mod radiation;
pub mod scattering;
pub mod scenario;
pub mod vec3;

pub use error::{Error, Result};
