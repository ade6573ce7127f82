//! Request/response operations against one agent.

use std::net::{SocketAddr, ToSocketAddrs};
use std::time::Duration;

use marf_core::client::{Client, ClientError};
use marf_core::codec::{BerValue, ErrorStatus, Pdu, PduKind, Varbind};
use marf_core::Oid;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetSpec {
    pub addr: SocketAddr,
    pub read_community: Vec<u8>,
    pub write_community: Vec<u8>,
    /// Per attempt; never zero.
    pub timeout: Duration,
    pub retries: u32,
}

impl TargetSpec {
    pub fn new(addr: SocketAddr) -> TargetSpec {
        TargetSpec {
            addr,
            read_community: b"public".to_vec(),
            write_community: b"private".to_vec(),
            timeout: Duration::from_secs(2),
            retries: 1,
        }
    }

    /// Resolves `host:port`.
    pub fn parse(target: &str) -> Result<TargetSpec, ManagerError> {
        let addr = target
            .to_socket_addrs()
            .ok()
            .and_then(|mut a| a.next())
            .ok_or_else(|| ManagerError::BadTarget(target.to_string()))?;
        Ok(TargetSpec::new(addr))
    }
}

#[derive(Debug, Error)]
pub enum ManagerError {
    #[error("no response from {0}")]
    Timeout(SocketAddr),
    #[error("agent answered {} at varbind {index}", status.name())]
    ErrorResponse { status: ErrorStatus, index: usize },
    #[error("undecodable response: {0}")]
    Decode(String),
    #[error("walk did not advance past {0}")]
    LoopDetected(Oid),
    #[error("cannot resolve target {0}")]
    BadTarget(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<ClientError> for ManagerError {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::Timeout { target, .. } => ManagerError::Timeout(target),
            ClientError::Decode(e) | ClientError::Encode(e) => ManagerError::Decode(e.to_string()),
            ClientError::Io(e) => ManagerError::Io(e),
        }
    }
}

#[derive(Debug)]
pub struct Session {
    target: TargetSpec,
    client: Client,
}

impl Session {
    pub fn open(target: TargetSpec) -> Result<Session, ManagerError> {
        let client = Client::new(target.addr)?.with_timeout(target.timeout).with_retries(target.retries);
        Ok(Session { target, client })
    }

    pub fn target(&self) -> &TargetSpec {
        &self.target
    }

    fn exchange(&self, write: bool, pdu: Pdu) -> Result<Vec<Varbind>, ManagerError> {
        let community = if write { &self.target.write_community } else { &self.target.read_community };
        let resp = self.client.request(community, pdu)?;
        match resp.status() {
            Some(ErrorStatus::NoError) => Ok(resp.varbinds),
            Some(status) => Err(ManagerError::ErrorResponse { status, index: resp.error_index as usize }),
            None => Err(ManagerError::Decode(format!("unknown error-status {}", resp.error_status))),
        }
    }

    fn nulls(oids: &[Oid]) -> Vec<Varbind> {
        oids.iter().cloned().map(Varbind::null).collect()
    }

    pub fn get(&self, oids: &[Oid]) -> Result<Vec<Varbind>, ManagerError> {
        self.exchange(false, Pdu::request(PduKind::Get, 0, Self::nulls(oids)))
    }

    pub fn get_one(&self, oid: &Oid) -> Result<BerValue, ManagerError> {
        Ok(self.get(std::slice::from_ref(oid))?.remove(0).value)
    }

    pub fn getnext(&self, oids: &[Oid]) -> Result<Vec<Varbind>, ManagerError> {
        self.exchange(false, Pdu::request(PduKind::GetNext, 0, Self::nulls(oids)))
    }

    pub fn getbulk(
        &self,
        non_repeaters: i32,
        max_repetitions: i32,
        oids: &[Oid],
    ) -> Result<Vec<Varbind>, ManagerError> {
        self.exchange(false, Pdu::get_bulk(0, non_repeaters, max_repetitions, Self::nulls(oids)))
    }

    pub fn set(&self, varbinds: Vec<Varbind>) -> Result<Vec<Varbind>, ManagerError> {
        self.exchange(true, Pdu::request(PduKind::Set, 0, varbinds))
    }

    /// Chained GETNEXT over the subtree at `root`. Output is strictly
    /// increasing; a successor that does not advance aborts the walk.
    pub fn walk(&self, root: &Oid) -> Result<Vec<Varbind>, ManagerError> {
        let mut out = Vec::new();
        let mut cur = root.clone();
        loop {
            let vb = self.getnext(std::slice::from_ref(&cur))?.remove(0);
            if vb.value == BerValue::EndOfMibView || !vb.oid.starts_with(root) {
                return Ok(out);
            }
            if vb.oid <= cur {
                return Err(ManagerError::LoopDetected(cur));
            }
            cur = vb.oid.clone();
            out.push(vb);
        }
    }
}
