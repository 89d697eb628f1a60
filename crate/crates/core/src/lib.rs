//! Network-coded content-centric networking.
//!
//! The crate holds the GF(2^8) codec, the per-node forwarder state machines
//! for both the network-coded protocol and baseline CCN, a deterministic
//! discrete-event network simulator, and the experiment harness that drives
//! them.

pub mod experiments;
pub mod forwarder;
pub mod gf256;
pub mod names;
pub mod rlnc;
pub mod simnet;

/// Index of a face within one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaceId(pub usize);
