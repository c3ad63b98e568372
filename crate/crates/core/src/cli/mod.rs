//! Expression language, instance files and the command-line front end.

pub mod commands;
pub mod eval;
pub mod instance;
pub mod syntax;

pub use commands::{main_with, run, Cli, EXIT_INPUT, EXIT_OK, EXIT_VIOLATION};
pub use eval::{Env, Value};
pub use instance::InstanceFile;
pub use syntax::{parse, Expr};
