//! Built-in experiments, one module per subcommand.

pub mod ensemble;
pub mod gedanken;
pub mod pointer;
pub mod sinks;
pub mod verify;
pub mod walk;
