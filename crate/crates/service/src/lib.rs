//! Command line and session service for visual preference inference.

pub mod backend;
pub mod cli;
pub mod server;
pub mod session;
