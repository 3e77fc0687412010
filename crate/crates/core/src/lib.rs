pub mod center;
pub mod cli;
pub mod cocycles;
pub mod cyclotomic;
pub mod error;
pub mod groups;
pub mod matcher;
pub mod oracle;
pub mod pq_family;
pub mod reps;

pub use error::{Error, Result};
