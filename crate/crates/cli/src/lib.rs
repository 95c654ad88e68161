//! Command line front end for the clipcube engine.

pub mod app;
pub mod problem;

pub use app::{run, Outcome};
pub use problem::{parse_problem, serialize_problem, ParseError};
