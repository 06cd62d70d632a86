pub mod born;
pub mod cli;
pub mod error;
pub mod hilbert;
pub mod json;
pub mod random;
pub mod schmidt;
pub mod tolerance;
pub mod twins;

pub use error::{Error, Result};
pub use tolerance::Tolerances;
