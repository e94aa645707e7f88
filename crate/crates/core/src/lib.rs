//! Prediction and postdiction for prepare–transform–measure quantum
//! scenarios.
//!
//! The crate solves both inference directions for closed systems, open
//! systems, general channels and instruments, and checks the identities
//! that relate them: inference symmetry of unitaries, the dimension-ratio
//! laws of open systems, channel postdiction through a purification,
//! time-reversed tasks, and no-signalling from the further unknown.

pub mod channels;
pub mod cli;
pub mod error;
pub mod inference;
pub mod linalg;
pub mod purify;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod scenario;
pub mod table;

pub use error::{Error, Result};
pub use linalg::{DimsPartition, Operator, C64};
pub use table::{Direction, ProbabilityTable};
