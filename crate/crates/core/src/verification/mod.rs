//! Tool verification: the sandbox protocol, the three-gate verifier, and the
//! code-similarity redundancy gate.

pub mod dedup;
pub mod gates;
pub mod sandbox;

pub use dedup::{dedup_check, dedup_check_embedding, DedupDecision};
pub use gates::{
    find_non_finite, result_matches, verify, DomainPredicate, GateDurations, VerificationReport,
    VerifyLimits,
};
pub use sandbox::{
    CannedRule, CannedSandbox, FnSandbox, ProcessSandbox, Sandbox, SandboxError, SandboxMode,
    SandboxRequest, SandboxResponse,
};
