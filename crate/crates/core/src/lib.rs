//! Unlabelled Gibbs partitions.
//!
//! Exact cycle-index calculus for weighted species, Pólya-Boltzmann sampling of
//! composite structures up to symmetry, and numerical experiments for the
//! giant-component regime: the remainder left after removing a largest component
//! converges to a Boltzmann-distributed derived composite structure.

pub mod asymptotics;
pub mod cycle_index;
pub mod error;
pub mod fit;
pub mod gibbs;
pub mod parallel;
pub mod rational;
pub mod series;
pub mod species;
pub mod stats;

pub use error::{Error, Result};
pub use series::TruncatedSeries;
