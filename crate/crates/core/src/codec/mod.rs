//! SNMPv2c wire codec.

mod ber;
mod message;

use thiserror::Error;

pub use ber::{counter_inc, decode_value, encode_value, encode_value_into, BerValue};
pub use message::{
    decode_message, encode_message, ErrorStatus, Pdu, PduKind, SnmpMessage, Varbind, MAX_DATAGRAM, VERSION_2C,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("input truncated")]
    Truncated,
    #[error("unknown tag 0x{0:02X}")]
    UnknownTag(u8),
    #[error("unexpected tag 0x{found:02X}, expected 0x{expected:02X}")]
    UnexpectedTag { expected: u8, found: u8 },
    #[error("length not minimally encoded")]
    NonMinimalLength,
    #[error("indefinite length not supported")]
    IndefiniteLength,
    #[error("length does not fit")]
    LengthOverflow,
    #[error("non-canonical encoding: {0}")]
    NonCanonical(&'static str),
    #[error("integer out of range")]
    IntegerOverflow,
    #[error("malformed object identifier")]
    InvalidOid,
    #[error("unsupported SNMP version {0} (only v2c is accepted)")]
    VersionMismatch(i64),
    #[error("invalid PDU: {0}")]
    InvalidPdu(&'static str),
    #[error("trailing bytes after message")]
    TrailingData,
}
