//! Bayesian optimization with configurable initial designs, plus the
//! statistical harness used to compare default-centered, default-only and
//! uniform initialization.

pub mod acquisition;
pub mod engine;
pub mod error;
pub mod harness;
pub mod init;
pub mod normal;
pub mod objectives;
pub mod optimize;
pub mod space;
pub mod stats;
pub mod surrogate;
pub mod trace;

pub use engine::{run_bo, BoOptions, Trace};
pub use error::{EvalError, Error, Result};
pub use init::InitStrategy;
pub use space::{Configuration, Parameter, SearchSpace};
