//! Test-time tool evolution.
//!
//! Problems are decomposed into sub-goals; each sub-goal either reuses a
//! library tool or triggers synthesis of a new one, which is verified in a
//! sandbox, split into atomic functions, deduplicated and registered. The
//! resulting tool chain is executed to produce the answer.

pub mod engine;
pub mod metrics;
pub mod registry;
pub mod retrieval;
pub mod synthesis;
pub mod theory_sim;
pub mod verification;
