//! Finite-size key lengths for entanglement-based QKD protocols via entropy accumulation.
//!
//! The crate builds per-round channels, constructs min-tradeoff functions by convex
//! optimization and SDP duality, and evaluates Rényi and smooth-min-entropy key lengths.

pub mod channel;
pub mod error;
pub mod linalg;
pub mod markov;
pub mod sdp;
pub mod protocols;
pub mod frank_wolfe;
pub mod tradeoff;
pub mod keylength;
pub mod config;
pub mod scan;
