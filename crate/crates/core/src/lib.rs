//! Deferred payments on a redactable blockchain.
//!
//! A user signs a batch of payment transactions whose final content is left
//! to a designated provider. Each transaction is anchored by a chameleon
//! hash whose trapdoor is time-locked to the due date; once the time server
//! releases the matching key, the provider recovers the trapdoor and rewrites
//! the transaction in place. Signatures over a batch aggregate into one
//! element that can be checked member-by-member with short auxiliary data.
//!
//! Modules, bottom up:
//!
//! * [`group`]: the bilinear-group backends (exact toy arithmetic and
//!   BLS12-381);
//! * [`lvs`], [`chameleon`], [`tre`]: the three primitives;
//! * [`protocol`]: the roles and algorithms built from them;
//! * [`ledger`]: a single-process chain simulator to run them on.
//!
//! [`conformance`] replays randomly drawn pairing relations on two backends
//! and reports where they disagree.

pub mod chameleon;
pub mod conformance;
pub mod exec;
pub mod group;
pub mod ledger;
pub mod lvs;
pub mod poly;
pub mod protocol;
pub mod tre;
pub mod wire;

pub use exec::Exec;
pub use group::{BackendKind, Bls12Backend, PairingBackend, ToyBackend};
