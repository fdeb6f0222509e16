pub mod cli;
pub mod error;
mod linalg;
pub mod mobius;
pub mod model;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod sampling;
pub mod pipeline;
pub mod prony;
pub mod residues;
pub mod spectral;

pub use error::{Error, Result};
