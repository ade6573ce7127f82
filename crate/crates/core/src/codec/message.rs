use crate::oid::Oid;

use super::ber::{self, decode_signed, read_tlv, tag, BerValue};
use super::CodecError;

/// Largest payload that fits in one UDP datagram.
pub const MAX_DATAGRAM: usize = 65_507;

/// SNMPv2c carries version 1 on the wire.
pub const VERSION_2C: i64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Varbind {
    pub oid: Oid,
    pub value: BerValue,
}

impl Varbind {
    pub fn new(oid: Oid, value: BerValue) -> Self {
        Varbind { oid, value }
    }

    pub fn null(oid: Oid) -> Self {
        Varbind { oid, value: BerValue::Null }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PduKind {
    Get,
    GetNext,
    Response,
    Set,
    GetBulk,
    Trap,
}

impl PduKind {
    pub const ALL: [PduKind; 6] =
        [PduKind::Get, PduKind::GetNext, PduKind::Response, PduKind::Set, PduKind::GetBulk, PduKind::Trap];

    pub fn tag(self) -> u8 {
        match self {
            PduKind::Get => 0xA0,
            PduKind::GetNext => 0xA1,
            PduKind::Response => 0xA2,
            PduKind::Set => 0xA3,
            PduKind::GetBulk => 0xA5,
            PduKind::Trap => 0xA7,
        }
    }

    pub fn from_tag(t: u8) -> Option<Self> {
        Some(match t {
            0xA0 => PduKind::Get,
            0xA1 => PduKind::GetNext,
            0xA2 => PduKind::Response,
            0xA3 => PduKind::Set,
            0xA5 => PduKind::GetBulk,
            0xA7 => PduKind::Trap,
            _ => return None,
        })
    }
}

/// Error-status codes an agent may place in a response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(i32)]
pub enum ErrorStatus {
    NoError = 0,
    NoSuchName = 2,
    BadValue = 3,
    ReadOnly = 4,
    GenErr = 5,
    NoAccess = 6,
    WrongType = 7,
    WrongValue = 10,
    NotWritable = 17,
}

impl ErrorStatus {
    pub const ALL: [ErrorStatus; 9] = [
        ErrorStatus::NoError,
        ErrorStatus::NoSuchName,
        ErrorStatus::BadValue,
        ErrorStatus::ReadOnly,
        ErrorStatus::GenErr,
        ErrorStatus::NoAccess,
        ErrorStatus::WrongType,
        ErrorStatus::WrongValue,
        ErrorStatus::NotWritable,
    ];

    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn from_code(code: i32) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorStatus::NoError => "noError",
            ErrorStatus::NoSuchName => "noSuchName",
            ErrorStatus::BadValue => "badValue",
            ErrorStatus::ReadOnly => "readOnly",
            ErrorStatus::GenErr => "genErr",
            ErrorStatus::NoAccess => "noAccess",
            ErrorStatus::WrongType => "wrongType",
            ErrorStatus::WrongValue => "wrongValue",
            ErrorStatus::NotWritable => "notWritable",
        }
    }
}

impl std::fmt::Display for ErrorStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A protocol data unit. For get-bulk, `error_status` carries non-repeaters
/// and `error_index` carries max-repetitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pdu {
    pub kind: PduKind,
    pub request_id: i32,
    pub error_status: i32,
    pub error_index: i32,
    pub varbinds: Vec<Varbind>,
}

impl Pdu {
    pub fn request(kind: PduKind, request_id: i32, varbinds: Vec<Varbind>) -> Self {
        Pdu { kind, request_id, error_status: 0, error_index: 0, varbinds }
    }

    pub fn get_bulk(request_id: i32, non_repeaters: i32, max_repetitions: i32, varbinds: Vec<Varbind>) -> Self {
        Pdu { kind: PduKind::GetBulk, request_id, error_status: non_repeaters, error_index: max_repetitions, varbinds }
    }

    pub fn response(request_id: i32, status: ErrorStatus, index: usize, varbinds: Vec<Varbind>) -> Self {
        Pdu { kind: PduKind::Response, request_id, error_status: status.code(), error_index: index as i32, varbinds }
    }

    pub fn status(&self) -> Option<ErrorStatus> {
        ErrorStatus::from_code(self.error_status)
    }

    pub fn non_repeaters(&self) -> i32 {
        self.error_status
    }

    pub fn max_repetitions(&self) -> i32 {
        self.error_index
    }

    fn check(&self) -> Result<(), CodecError> {
        if self.kind == PduKind::Response {
            if ErrorStatus::from_code(self.error_status).is_none() {
                return Err(CodecError::InvalidPdu("unknown error-status"));
            }
            if self.error_index < 0 || self.error_index as usize > self.varbinds.len() {
                return Err(CodecError::InvalidPdu("error-index out of range"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnmpMessage {
    pub community: Vec<u8>,
    pub pdu: Pdu,
}

impl SnmpMessage {
    pub fn new(community: impl Into<Vec<u8>>, pdu: Pdu) -> Self {
        SnmpMessage { community: community.into(), pdu }
    }
}

fn encode_pdu(out: &mut Vec<u8>, pdu: &Pdu) {
    let mut vbs = Vec::new();
    for vb in &pdu.varbinds {
        let mut one = Vec::new();
        ber::push_tlv(&mut one, tag::OBJECT_IDENTIFIER, &ber::oid_content(&vb.oid));
        ber::encode_value_into(&mut one, &vb.value);
        ber::push_tlv(&mut vbs, tag::SEQUENCE, &one);
    }
    let mut body = Vec::new();
    ber::push_integer(&mut body, tag::INTEGER, pdu.request_id as i64);
    ber::push_integer(&mut body, tag::INTEGER, pdu.error_status as i64);
    ber::push_integer(&mut body, tag::INTEGER, pdu.error_index as i64);
    ber::push_tlv(&mut body, tag::SEQUENCE, &vbs);
    ber::push_tlv(out, pdu.kind.tag(), &body);
}

/// Encodes a message. Response PDUs must satisfy the error-status and
/// error-index invariants.
pub fn encode_message(msg: &SnmpMessage) -> Result<Vec<u8>, CodecError> {
    msg.pdu.check()?;
    let mut body = Vec::new();
    ber::push_integer(&mut body, tag::INTEGER, VERSION_2C);
    ber::push_tlv(&mut body, tag::OCTET_STRING, &msg.community);
    encode_pdu(&mut body, &msg.pdu);
    let mut out = Vec::with_capacity(body.len() + 4);
    ber::push_tlv(&mut out, tag::SEQUENCE, &body);
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn expect(&mut self, want: u8) -> Result<&'a [u8], CodecError> {
        let (t, content, used) = read_tlv(self.buf)?;
        if t != want {
            return Err(CodecError::UnexpectedTag { expected: want, found: t });
        }
        self.buf = &self.buf[used..];
        Ok(content)
    }

    fn int32(&mut self) -> Result<i32, CodecError> {
        let v = decode_signed(self.expect(tag::INTEGER)?)?;
        i32::try_from(v).map_err(|_| CodecError::IntegerOverflow)
    }

    fn finish(&self) -> Result<(), CodecError> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(CodecError::TrailingData)
        }
    }
}

fn decode_pdu(t: u8, content: &[u8]) -> Result<Pdu, CodecError> {
    let kind = PduKind::from_tag(t).ok_or(CodecError::UnknownTag(t))?;
    let mut r = Reader { buf: content };
    let request_id = r.int32()?;
    let error_status = r.int32()?;
    let error_index = r.int32()?;
    let mut list = Reader { buf: r.expect(tag::SEQUENCE)? };
    r.finish()?;
    let mut varbinds = Vec::new();
    while !list.buf.is_empty() {
        let mut vb = Reader { buf: list.expect(tag::SEQUENCE)? };
        let oid = ber::decode_oid(vb.expect(tag::OBJECT_IDENTIFIER)?)?;
        let (value, used) = ber::decode_value(vb.buf)?;
        vb.buf = &vb.buf[used..];
        vb.finish()?;
        varbinds.push(Varbind { oid, value });
    }
    let pdu = Pdu { kind, request_id, error_status, error_index, varbinds };
    pdu.check()?;
    Ok(pdu)
}

/// Decodes one whole datagram. Only SNMPv2c (version 1) is accepted.
pub fn decode_message(input: &[u8]) -> Result<SnmpMessage, CodecError> {
    let mut outer = Reader { buf: input };
    let body = outer.expect(tag::SEQUENCE)?;
    outer.finish()?;
    let mut r = Reader { buf: body };
    let version = decode_signed(r.expect(tag::INTEGER)?)?;
    if version != VERSION_2C {
        return Err(CodecError::VersionMismatch(version));
    }
    let community = r.expect(tag::OCTET_STRING)?.to_vec();
    let (t, content, used) = read_tlv(r.buf)?;
    let pdu = decode_pdu(t, content)?;
    r.buf = &r.buf[used..];
    r.finish()?;
    Ok(SnmpMessage { community, pdu })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oid;

    #[test]
    fn empty_get_round_trip() {
        let m = SnmpMessage::new("public", Pdu::request(PduKind::Get, 1, vec![]));
        let bytes = encode_message(&m).unwrap();
        assert_eq!(
            bytes,
            [
                0x30, 0x18, 0x02, 0x01, 0x01, 0x04, 0x06, b'p', b'u', b'b', b'l', b'i', b'c', 0xA0, 0x0B, 0x02, 0x01,
                0x01, 0x02, 0x01, 0x00, 0x02, 0x01, 0x00, 0x30, 0x00
            ]
        );
        assert_eq!(decode_message(&bytes).unwrap(), m);
    }

    #[test]
    fn v1_rejected() {
        let m = SnmpMessage::new("public", Pdu::request(PduKind::Get, 1, vec![]));
        let mut bytes = encode_message(&m).unwrap();
        assert_eq!(bytes[4], 0x01);
        bytes[4] = 0x00;
        assert_eq!(decode_message(&bytes), Err(CodecError::VersionMismatch(0)));
    }

    #[test]
    fn response_invariants_checked() {
        let bad = SnmpMessage::new(
            "public",
            Pdu { kind: PduKind::Response, request_id: 1, error_status: 1, error_index: 0, varbinds: vec![] },
        );
        assert!(matches!(encode_message(&bad), Err(CodecError::InvalidPdu(_))));
        let bad_index =
            SnmpMessage::new("public", Pdu::response(1, ErrorStatus::GenErr, 2, vec![Varbind::null(oid!(1, 3))]));
        assert!(matches!(encode_message(&bad_index), Err(CodecError::InvalidPdu(_))));
    }

    #[test]
    fn trailing_garbage_rejected() {
        let m = SnmpMessage::new("public", Pdu::request(PduKind::GetNext, 7, vec![Varbind::null(oid!(1, 3, 6))]));
        let mut bytes = encode_message(&m).unwrap();
        bytes.push(0);
        assert_eq!(decode_message(&bytes), Err(CodecError::TrailingData));
    }
}
