#![allow(dead_code)]

use std::net::SocketAddr;
use std::time::Duration;

use marf_core::client::Client;
use marf_core::codec::{BerValue, ErrorStatus, Pdu, PduKind, Varbind};
use marf_core::smi::Mib;
use marf_core::Oid;

pub fn oid(text: &str) -> Oid {
    Mib::bundled().parse_oid(text).unwrap()
}

fn client(addr: SocketAddr) -> Client {
    Client::new(addr).unwrap().with_timeout(Duration::from_secs(2)).with_retries(1)
}

pub fn get(addr: SocketAddr, name: &str) -> BerValue {
    let resp = client(addr).request(b"public", Pdu::request(PduKind::Get, 0, vec![Varbind::null(oid(name))])).unwrap();
    assert_eq!(resp.status(), Some(ErrorStatus::NoError), "GET {name}");
    resp.varbinds[0].value.clone()
}

pub fn get_int(addr: SocketAddr, name: &str) -> i64 {
    match get(addr, name) {
        BerValue::Integer(v) => v,
        BerValue::Counter32(v) | BerValue::TimeTicks(v) => v as i64,
        other => panic!("{name} = {other:?}"),
    }
}

pub fn set(addr: SocketAddr, name: &str, value: BerValue) -> Pdu {
    client(addr).request(b"private", Pdu::request(PduKind::Set, 0, vec![Varbind::new(oid(name), value)])).unwrap()
}

/// Every instance under `root`, via GETNEXT.
pub fn walk(addr: SocketAddr, root: &str) -> Vec<(Oid, BerValue)> {
    let c = client(addr);
    let root = oid(root);
    let mut cur = root.clone();
    let mut out = Vec::new();
    loop {
        let resp = c.request(b"public", Pdu::request(PduKind::GetNext, 0, vec![Varbind::null(cur.clone())])).unwrap();
        assert_eq!(resp.status(), Some(ErrorStatus::NoError));
        let vb = resp.varbinds.into_iter().next().unwrap();
        if vb.value == BerValue::EndOfMibView || !vb.oid.starts_with(&root) {
            return out;
        }
        assert!(vb.oid > cur, "walk went backwards at {}", vb.oid);
        cur = vb.oid.clone();
        out.push((vb.oid, vb.value));
    }
}
