pub mod adjoint;
pub mod banded;
pub mod cgm;
pub mod direct;
pub mod error;
pub mod experiments;
pub mod gradient;
pub mod grid;
pub mod noise;
pub mod objective;
pub mod rng;
pub mod sensitivity;
pub mod stability;

pub use error::{Error, Result};
