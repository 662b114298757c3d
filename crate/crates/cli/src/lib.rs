//! Configuration-driven front end for the meshfree Monge-Ampère solver.

pub mod config;
pub mod expr;
pub mod run;

pub use config::{Command, ConfigError, ProblemSpec, RunConfig};
pub use expr::{FieldExpr, ParseError};
pub use run::{execute, load, Outcome, RunError};
