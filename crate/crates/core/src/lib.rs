//! Deterministic simulator of MimbleWimble transaction relay under
//! Dandelion++, with an adversary that exploits stem-phase aggregation.

pub mod adversary;
pub mod harness;
pub mod mw;
pub mod net;
pub mod records;
pub mod relay;
pub mod seed;
pub mod time;
