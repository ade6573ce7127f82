//! MIB handling, SNMPv2c wire codec and agent engine for the MARF
//! management stack.

pub mod agent;
pub mod client;
pub mod codec;
pub mod oid;
pub mod smi;

pub use oid::Oid;
