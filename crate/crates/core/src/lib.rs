//! Monte Carlo laboratory for loop-erased random walk on ℤ², radial SLE via
//! the Loewner equation, and the occupation-measure encoding of
//! time-parametrized curves.

pub mod cli;
pub mod curve;
pub mod estimators;
pub mod error;
pub mod green;
pub mod lattice;
pub mod loewner;
pub mod measure;
pub mod numeric;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
