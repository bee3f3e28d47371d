//! File formats, a threaded executor, the experiment harness and the `dmatch`
//! command-line tool on top of [`dmatch_core`].

pub mod error;
pub mod exec;
pub mod harness;
pub mod io;

pub use dmatch_core;
pub use error::{Error, Result};
pub use exec::{run_threaded, solve, InstantClock};
