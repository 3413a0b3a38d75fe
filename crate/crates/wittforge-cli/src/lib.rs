//! Orchestration behind the `wittforge` binary: run configuration, the
//! verification suites and deterministic reports.

pub mod commands;
pub mod config;
pub mod report;
pub mod suites;

use wittforge::Error;

/// Stable exit-code contract.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const PRECISION: i32 = 2;
    pub const VERIFY: i32 = 3;
    pub const CACHE: i32 = 4;
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Mismatch(_) => exit::CONFIG,
        Error::InsufficientDepth(_)
        | Error::Resource(_)
        | Error::NonRepresentable(_)
        | Error::NotDivisible(_) => exit::PRECISION,
        Error::CacheCorrupt(_) => exit::CACHE,
        Error::Internal(_) => exit::VERIFY,
    }
}
