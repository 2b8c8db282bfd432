//! Command line tools and the interactive editing service.
//!
//! The binary exposes `render`, `ablate`, `convert`, `replay` and `serve`.
//! The same pieces are usable as a library: [`executor::Executor`] applies
//! protocol commands to a session, [`service`] puts it behind a socket and
//! [`replay`] drives it from a recorded log.

pub mod batch;
pub mod convert;
pub mod error;
pub mod executor;
pub mod inputs;
pub mod oracle;
pub mod protocol;
pub mod replay;
pub mod service;

pub use error::CliError;
