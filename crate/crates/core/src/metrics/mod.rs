//! OSPA distance, optimal assignment and cardinality error.

mod assignment;
mod cardinality;
mod ospa;

pub use assignment::{optimal_assignment, Assignment};
pub use cardinality::{cardinality_error, CardinalityError};
pub use ospa::{ospa, OspaResult};
