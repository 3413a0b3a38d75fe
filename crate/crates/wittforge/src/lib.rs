//! Exact arithmetic for truncated p-typical Witt vectors over finite-depth
//! perfectoid tilts, Fontaine's theta map and the kernel-division algorithm,
//! used to compute the coefficients `a_n` in
//!
//! ```text
//! T^{1-1/p^n} dT^{1/p^n} + S^{1-1/p^n} dS^{1/p^n} = a_n p^{1-1/p^n} dp^{1/p^n}    (S = 1 - T)
//! ```
//!
//! Layers, bottom up: [`tower_rings`] (normal forms in the finite tower rings),
//! [`witt_core`] (universal polynomials and Witt vectors), [`tilt`] (tilt
//! coordinates and sharp maps), [`fontaine`] (theta, kernel division,
//! scenarios), [`coeff_analysis`] (goodness, types, valuations) and
//! [`omega`] (presented differential modules).

pub mod coeff_analysis;
pub mod fontaine;
pub mod omega;
pub mod tilt;
pub mod tower_rings;
pub mod witt_core;

use num_rational::Ratio;

/// Rational numbers used for valuations and error bounds.
pub type Q = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("ring mismatch: {0}")]
    Mismatch(String),
    #[error("not divisible: {0}")]
    NotDivisible(String),
    #[error("insufficient depth: {0}")]
    InsufficientDepth(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("not representable: {0}")]
    NonRepresentable(String),
    #[error("cache corrupt: {0}")]
    CacheCorrupt(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}
