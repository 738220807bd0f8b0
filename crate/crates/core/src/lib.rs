//! Numerical bounds for intrinsic distances and Kähler-Einstein metrics on
//! Reinhardt domains `{|z_i| < R, |z_1⋯z_n| < ε}`.

pub mod caratheodory;
pub mod certificate;
pub mod domain;
pub mod experiments;
pub mod error;
pub mod hyperbolic;
pub mod kahler_einstein;
pub mod kobayashi;
pub(crate) mod optim;

pub use error::{LabError, Result};
