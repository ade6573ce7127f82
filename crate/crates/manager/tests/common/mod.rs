#![allow(dead_code)]

use std::net::SocketAddr;
use std::time::Duration;

use marf_core::smi::Mib;
use marf_core::Oid;
use marf_manager::{Session, TargetSpec};
use marf_pipeline::fixtures::speaker_wav;
use marf_pipeline::{Topology, TopologyConfig};

pub fn mib() -> &'static Mib {
    Mib::bundled()
}

pub fn oid(text: &str) -> Oid {
    mib().parse_oid(text).unwrap()
}

pub fn session(addr: SocketAddr) -> Session {
    Session::open(TargetSpec::new(addr)).unwrap()
}

/// A session against a port nobody answers on.
pub fn dead_session() -> Session {
    let sock = std::net::UdpSocket::bind("127.0.0.1:0").unwrap();
    let mut t = TargetSpec::new(sock.local_addr().unwrap());
    drop(sock);
    t.timeout = Duration::from_millis(150);
    t.retries = 0;
    Session::open(t).unwrap()
}

pub fn topology(cfg: TopologyConfig) -> Topology {
    Topology::start(cfg).unwrap()
}

pub fn trained(cfg: TopologyConfig) -> Topology {
    let t = topology(cfg);
    for speaker in [1, 2] {
        for take in 0..3 {
            t.app.train(speaker, &speaker_wav(speaker, take)).unwrap();
        }
    }
    t
}
