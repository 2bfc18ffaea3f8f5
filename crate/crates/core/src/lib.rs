//! # mbrb
//!
//! A reliable-broadcast stack for asynchronous systems that face two
//! adversaries at once: up to `t` Byzantine processes, and a message
//! adversary that may suppress up to `d` copies of every implementation
//! message broadcast by a correct process. The protocol collects process
//! signatures over a `(payload, sequence number, sender)` triplet and
//! delivers once strictly more than `(n+t)/2` distinct signatures are
//! saved, which is achievable whenever `n > 3t + 2d`.
//!
//! The crate is organised as a pipeline:
//!
//! * [`sigcrypt`] — canonical triplet encoding and pluggable signatures;
//! * [`protocol`] — the per-process state machine (pure, no I/O);
//! * [`adversary`] — drop policies and Byzantine strategy catalogue,
//!   including the partition attack that shows `n > 3t + 2d` is tight;
//! * [`simnet`] — deterministic lockstep / seeded-async execution engine
//!   producing complete [`trace::Trace`]s;
//! * [`metrics`] — property checkers and the closed-form bound predictor;
//! * [`scenario`] — experiment description plus the TOML file schema.
//!
//! Everything is deterministic: a scenario plus a master seed fully
//! determines the trace, byte for byte.

pub mod adversary;
pub mod metrics;
pub mod protocol;
pub mod scenario;
pub mod sigcrypt;
pub mod simnet;
pub mod trace;

pub use protocol::{Bundle, Config, Delivery, ProcessState, Step};
pub use scenario::Scenario;
pub use sigcrypt::ProcessId;
pub use trace::Trace;
