//! BER primitives for the SNMPv2c subset: definite lengths, minimal
//! integers, base-128 OID arcs. The decoder is strict and only accepts the
//! canonical form the encoder produces, so `encode(decode(b)) == b` for every
//! accepted `b`.

use crate::oid::Oid;

use super::CodecError;

pub mod tag {
    pub const INTEGER: u8 = 0x02;
    pub const OCTET_STRING: u8 = 0x04;
    pub const NULL: u8 = 0x05;
    pub const OBJECT_IDENTIFIER: u8 = 0x06;
    pub const SEQUENCE: u8 = 0x30;
    pub const COUNTER32: u8 = 0x41;
    pub const TIMETICKS: u8 = 0x43;
    pub const NO_SUCH_OBJECT: u8 = 0x80;
    pub const NO_SUCH_INSTANCE: u8 = 0x81;
    pub const END_OF_MIB_VIEW: u8 = 0x82;
}

/// A value carried in a variable binding.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BerValue {
    Integer(i64),
    Counter32(u32),
    TimeTicks(u32),
    OctetString(Vec<u8>),
    OidValue(Oid),
    Null,
    NoSuchObject,
    NoSuchInstance,
    EndOfMibView,
}

impl BerValue {
    pub fn is_exception(&self) -> bool {
        matches!(self, BerValue::NoSuchObject | BerValue::NoSuchInstance | BerValue::EndOfMibView)
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            BerValue::Integer(_) => "INTEGER",
            BerValue::Counter32(_) => "Counter32",
            BerValue::TimeTicks(_) => "TimeTicks",
            BerValue::OctetString(_) => "OCTET STRING",
            BerValue::OidValue(_) => "OBJECT IDENTIFIER",
            BerValue::Null => "NULL",
            BerValue::NoSuchObject => "noSuchObject",
            BerValue::NoSuchInstance => "noSuchInstance",
            BerValue::EndOfMibView => "endOfMibView",
        }
    }

    pub fn string(s: impl Into<String>) -> Self {
        BerValue::OctetString(s.into().into_bytes())
    }
}

impl std::fmt::Display for BerValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BerValue::Integer(v) => write!(f, "INTEGER: {v}"),
            BerValue::Counter32(v) => write!(f, "Counter32: {v}"),
            BerValue::TimeTicks(v) => write!(f, "Timeticks: ({v})"),
            BerValue::OctetString(b) => match std::str::from_utf8(b) {
                Ok(s) if s.chars().all(|c| !c.is_control()) => write!(f, "STRING: \"{s}\""),
                _ => {
                    f.write_str("Hex-STRING:")?;
                    for byte in b {
                        write!(f, " {byte:02X}")?;
                    }
                    Ok(())
                }
            },
            BerValue::OidValue(o) => write!(f, "OID: {o}"),
            BerValue::Null => f.write_str("NULL"),
            BerValue::NoSuchObject => f.write_str("No Such Object available on this agent at this OID"),
            BerValue::NoSuchInstance => f.write_str("No Such Instance currently exists at this OID"),
            BerValue::EndOfMibView => f.write_str("No more variables left in this MIB View"),
        }
    }
}

/// `(c + delta) mod 2^32`.
pub fn counter_inc(c: u32, delta: u64) -> u32 {
    ((c as u64).wrapping_add(delta) % (1u64 << 32)) as u32
}

// ---------------------------------------------------------------------------
// encoding

pub(crate) fn push_length(out: &mut Vec<u8>, len: usize) {
    if len < 0x80 {
        out.push(len as u8);
        return;
    }
    let bytes = (len as u64).to_be_bytes();
    let skip = bytes.iter().take_while(|b| **b == 0).count();
    out.push(0x80 | (8 - skip) as u8);
    out.extend_from_slice(&bytes[skip..]);
}

pub(crate) fn push_tlv(out: &mut Vec<u8>, tag: u8, content: &[u8]) {
    out.push(tag);
    push_length(out, content.len());
    out.extend_from_slice(content);
}

fn signed_content(v: i64) -> Vec<u8> {
    let bytes = v.to_be_bytes();
    let mut start = 0;
    // drop a leading octet while the next one carries the same sign
    while start < 7 {
        let (b, next) = (bytes[start], bytes[start + 1]);
        if (b == 0x00 && next & 0x80 == 0) || (b == 0xFF && next & 0x80 != 0) {
            start += 1;
        } else {
            break;
        }
    }
    bytes[start..].to_vec()
}

fn unsigned_content(v: u32) -> Vec<u8> {
    let bytes = (v as u64).to_be_bytes();
    let mut start = 0;
    while start < 7 && bytes[start] == 0 && bytes[start + 1] & 0x80 == 0 {
        start += 1;
    }
    bytes[start..].to_vec()
}

pub(crate) fn push_integer(out: &mut Vec<u8>, tag: u8, v: i64) {
    push_tlv(out, tag, &signed_content(v));
}

fn push_base128(out: &mut Vec<u8>, mut v: u64) {
    let mut tmp = [0u8; 10];
    let mut n = 0;
    loop {
        tmp[n] = (v & 0x7F) as u8;
        n += 1;
        v >>= 7;
        if v == 0 {
            break;
        }
    }
    for i in (0..n).rev() {
        out.push(if i == 0 { tmp[i] } else { tmp[i] | 0x80 });
    }
}

pub(crate) fn oid_content(oid: &Oid) -> Vec<u8> {
    let s = oid.as_slice();
    let mut out = Vec::with_capacity(s.len() + 4);
    push_base128(&mut out, s[0] as u64 * 40 + s[1] as u64);
    for &sub in &s[2..] {
        push_base128(&mut out, sub as u64);
    }
    out
}

/// Appends the TLV encoding of `v`.
pub fn encode_value_into(out: &mut Vec<u8>, v: &BerValue) {
    match v {
        BerValue::Integer(i) => push_integer(out, tag::INTEGER, *i),
        BerValue::Counter32(c) => push_tlv(out, tag::COUNTER32, &unsigned_content(*c)),
        BerValue::TimeTicks(t) => push_tlv(out, tag::TIMETICKS, &unsigned_content(*t)),
        BerValue::OctetString(b) => push_tlv(out, tag::OCTET_STRING, b),
        BerValue::OidValue(o) => push_tlv(out, tag::OBJECT_IDENTIFIER, &oid_content(o)),
        BerValue::Null => push_tlv(out, tag::NULL, &[]),
        BerValue::NoSuchObject => push_tlv(out, tag::NO_SUCH_OBJECT, &[]),
        BerValue::NoSuchInstance => push_tlv(out, tag::NO_SUCH_INSTANCE, &[]),
        BerValue::EndOfMibView => push_tlv(out, tag::END_OF_MIB_VIEW, &[]),
    }
}

pub fn encode_value(v: &BerValue) -> Vec<u8> {
    let mut out = Vec::new();
    encode_value_into(&mut out, v);
    out
}

// ---------------------------------------------------------------------------
// decoding

/// Reads one TLV header at the start of `input`, returning
/// `(tag, content, total_consumed)`.
pub(crate) fn read_tlv(input: &[u8]) -> Result<(u8, &[u8], usize), CodecError> {
    let tag = *input.first().ok_or(CodecError::Truncated)?;
    let first = *input.get(1).ok_or(CodecError::Truncated)?;
    let (len, header) = if first < 0x80 {
        (first as usize, 2)
    } else if first == 0x80 {
        return Err(CodecError::IndefiniteLength);
    } else {
        let n = (first & 0x7F) as usize;
        if n > 4 {
            return Err(CodecError::LengthOverflow);
        }
        let bytes = input.get(2..2 + n).ok_or(CodecError::Truncated)?;
        if bytes[0] == 0 {
            return Err(CodecError::NonMinimalLength);
        }
        let len = bytes.iter().fold(0usize, |acc, b| (acc << 8) | *b as usize);
        if len < 0x80 {
            return Err(CodecError::NonMinimalLength);
        }
        (len, 2 + n)
    };
    let end = header.checked_add(len).ok_or(CodecError::LengthOverflow)?;
    let content = input.get(header..end).ok_or(CodecError::Truncated)?;
    Ok((tag, content, end))
}

pub(crate) fn decode_signed(content: &[u8]) -> Result<i64, CodecError> {
    if content.is_empty() {
        return Err(CodecError::NonCanonical("empty integer"));
    }
    if content.len() > 8 {
        return Err(CodecError::IntegerOverflow);
    }
    if content.len() > 1 {
        let (b, next) = (content[0], content[1]);
        if (b == 0x00 && next & 0x80 == 0) || (b == 0xFF && next & 0x80 != 0) {
            return Err(CodecError::NonCanonical("redundant leading integer octet"));
        }
    }
    let mut v: i64 = if content[0] & 0x80 != 0 { -1 } else { 0 };
    for b in content {
        v = (v << 8) | *b as i64;
    }
    Ok(v)
}

fn decode_unsigned(content: &[u8]) -> Result<u32, CodecError> {
    let v = decode_signed(content)?;
    if v < 0 {
        return Err(CodecError::NonCanonical("negative unsigned value"));
    }
    u32::try_from(v).map_err(|_| CodecError::IntegerOverflow)
}

pub(crate) fn decode_oid(content: &[u8]) -> Result<Oid, CodecError> {
    if content.is_empty() {
        return Err(CodecError::InvalidOid);
    }
    let mut arcs: Vec<u64> = Vec::new();
    let mut acc: u64 = 0;
    let mut in_arc = false;
    for &b in content {
        if !in_arc && b == 0x80 {
            return Err(CodecError::NonCanonical("leading 0x80 in OID arc"));
        }
        acc = (acc << 7) | (b & 0x7F) as u64;
        if acc > u32::MAX as u64 + 80 {
            return Err(CodecError::InvalidOid);
        }
        if b & 0x80 != 0 {
            in_arc = true;
        } else {
            arcs.push(acc);
            acc = 0;
            in_arc = false;
        }
    }
    if in_arc {
        return Err(CodecError::Truncated);
    }
    let first = arcs[0];
    let (a, b) = match first {
        0..=39 => (0, first),
        40..=79 => (1, first - 40),
        _ => (2, first - 80),
    };
    let mut subs = Vec::with_capacity(arcs.len() + 1);
    subs.push(a as u32);
    subs.push(u32::try_from(b).map_err(|_| CodecError::InvalidOid)?);
    for arc in &arcs[1..] {
        subs.push(u32::try_from(*arc).map_err(|_| CodecError::InvalidOid)?);
    }
    Oid::new(subs).map_err(|_| CodecError::InvalidOid)
}

/// Decodes one value from the front of `input`; returns it with the number
/// of bytes consumed. Trailing bytes are left alone.
pub fn decode_value(input: &[u8]) -> Result<(BerValue, usize), CodecError> {
    let (t, content, used) = read_tlv(input)?;
    let empty = |v: BerValue| {
        if content.is_empty() {
            Ok(v)
        } else {
            Err(CodecError::NonCanonical("non-empty null-like value"))
        }
    };
    let v = match t {
        tag::INTEGER => BerValue::Integer(decode_signed(content)?),
        tag::COUNTER32 => BerValue::Counter32(decode_unsigned(content)?),
        tag::TIMETICKS => BerValue::TimeTicks(decode_unsigned(content)?),
        tag::OCTET_STRING => BerValue::OctetString(content.to_vec()),
        tag::OBJECT_IDENTIFIER => BerValue::OidValue(decode_oid(content)?),
        tag::NULL => empty(BerValue::Null)?,
        tag::NO_SUCH_OBJECT => empty(BerValue::NoSuchObject)?,
        tag::NO_SUCH_INSTANCE => empty(BerValue::NoSuchInstance)?,
        tag::END_OF_MIB_VIEW => empty(BerValue::EndOfMibView)?,
        other => return Err(CodecError::UnknownTag(other)),
    };
    Ok((v, used))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oid;

    #[test]
    fn integer_zero() {
        assert_eq!(encode_value(&BerValue::Integer(0)), [0x02, 0x01, 0x00]);
    }

    #[test]
    fn integer_minimal_forms() {
        assert_eq!(encode_value(&BerValue::Integer(127)), [0x02, 0x01, 0x7F]);
        assert_eq!(encode_value(&BerValue::Integer(128)), [0x02, 0x02, 0x00, 0x80]);
        assert_eq!(encode_value(&BerValue::Integer(-1)), [0x02, 0x01, 0xFF]);
        assert_eq!(encode_value(&BerValue::Integer(-128)), [0x02, 0x01, 0x80]);
        assert_eq!(encode_value(&BerValue::Integer(-129)), [0x02, 0x02, 0xFF, 0x7F]);
        assert_eq!(encode_value(&BerValue::Counter32(u32::MAX)), [0x41, 0x05, 0x00, 0xFF, 0xFF, 0xFF, 0xFF]);
    }

    #[test]
    fn empty_octet_string() {
        assert_eq!(encode_value(&BerValue::OctetString(vec![])), [0x04, 0x00]);
    }

    #[test]
    fn marf_enterprise_oid() {
        let bytes = encode_value(&BerValue::OidValue(oid!(1, 3, 6, 1, 4, 1, 28218)));
        assert_eq!(bytes, [0x06, 0x08, 0x2B, 0x06, 0x01, 0x04, 0x01, 0x81, 0xDC, 0x3A]);
    }

    #[test]
    fn long_length_form() {
        let v = BerValue::OctetString(vec![7; 300]);
        let bytes = encode_value(&v);
        assert_eq!(&bytes[..4], &[0x04, 0x82, 0x01, 0x2C]);
        assert_eq!(decode_value(&bytes).unwrap(), (v, 304));
    }

    #[test]
    fn rejects_non_canonical() {
        assert_eq!(decode_value(&[0x04, 0x81, 0x05, 1, 2, 3, 4, 5]), Err(CodecError::NonMinimalLength));
        assert_eq!(decode_value(&[0x04, 0x82, 0x00, 0x90]), Err(CodecError::NonMinimalLength));
        assert!(matches!(decode_value(&[0x02, 0x02, 0x00, 0x01]), Err(CodecError::NonCanonical(_))));
        assert!(matches!(decode_value(&[0x02, 0x02, 0xFF, 0x80]), Err(CodecError::NonCanonical(_))));
        assert!(matches!(decode_value(&[0x06, 0x02, 0x2B, 0x81]), Err(CodecError::Truncated)));
        assert!(matches!(decode_value(&[0x06, 0x03, 0x2B, 0x80, 0x01]), Err(CodecError::NonCanonical(_))));
        assert_eq!(decode_value(&[0x05, 0x01, 0x00]), Err(CodecError::NonCanonical("non-empty null-like value")));
        assert_eq!(decode_value(&[0x04, 0x80]), Err(CodecError::IndefiniteLength));
        assert_eq!(decode_value(&[0x02]), Err(CodecError::Truncated));
        assert_eq!(decode_value(&[0x04, 0x03, 1]), Err(CodecError::Truncated));
        assert_eq!(decode_value(&[0x44, 0x00]), Err(CodecError::UnknownTag(0x44)));
        // Counter32 above 2^32-1
        assert_eq!(decode_value(&[0x41, 0x05, 0x01, 0, 0, 0, 0]), Err(CodecError::IntegerOverflow));
    }

    #[test]
    fn trailing_bytes_untouched() {
        let (v, used) = decode_value(&[0x02, 0x01, 0x05, 0xAA, 0xBB]).unwrap();
        assert_eq!(v, BerValue::Integer(5));
        assert_eq!(used, 3);
    }

    #[test]
    fn counter_wraps() {
        assert_eq!(counter_inc(0, 1), 1);
        assert_eq!(counter_inc(u32::MAX, 1), 0);
        assert_eq!(counter_inc(4_294_967_000, 600), 304);
        assert_eq!(counter_inc(5, 1 << 32), 5);
    }
}
