//! Reputation-based Stackelberg spectrum leasing with cooperative relaying
//! and jamming.
//!
//! A licensed primary user (PU) leases part of each time slot to one
//! secondary user (SU), which in return relays the PU's traffic and jams an
//! eavesdropper. The PU leads (time split and relay choice), the SU follows
//! (power split), and a reputation table steers the PU away from SUs that
//! break their commitments.

pub mod channel;
pub mod cli;
pub mod error;
pub mod game;
pub mod optimize;
pub mod reputation;
pub mod selection;
pub mod sim;

pub use error::{Error, Result};
