//! Library surface of the experiment runner; the binary in `main.rs` is
//! a thin argument-parsing wrapper so every command is testable in
//! process.

pub mod commands;
pub mod report;
