//! Configuration, snapshot and CSV input/output.

mod config;
mod csv_io;
mod snapshot;

pub use config::*;
pub use csv_io::*;
pub use snapshot::*;
