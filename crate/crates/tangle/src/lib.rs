//! File formats and the command-line front end for `nilcore`.

pub mod cli;
pub mod io;
pub mod sample;

pub use cli::run;
