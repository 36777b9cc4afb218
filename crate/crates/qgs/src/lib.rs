//! Qudit graph states over odd prime dimensions.
//!
//! The crate has three layers:
//!
//! * a symbolic layer — exact arithmetic in `F_d` ([`field`]), generalized
//!   Pauli operators with phase tracking ([`pauli`]), and labelled graph
//!   states with their rewrite calculus: stabilizer relabelling, label
//!   shuffling, and local-measurement graph reduction ([`graphstate`]);
//! * a brute-force dense state-vector simulator ([`oracle`]) that serves as
//!   ground truth for every symbolic rule;
//! * executable secret-sharing protocols ([`protocols`]) built on both:
//!   classical secrets over private channels (CC), key-distribution-style
//!   classical secrets over public quantum channels (CQ), and quantum
//!   secrets via teleportation-based dealing (QQ).
//!
//! Everything is deterministic under an explicit 64-bit seed; the [`verify`]
//! module packages the cross-validation suites the CLI exposes.

pub mod field;
pub mod fixtures;
pub mod graphstate;
pub mod oracle;
pub mod pauli;
pub mod protocols;
pub mod verify;
