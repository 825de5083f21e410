pub mod bnp;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod inference;
pub mod metrics;
pub mod scenario;
mod tomlio;

pub use error::{Error, Result};
