//! Blocking SNMPv2c request/response over UDP.

use std::io;
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::sync::atomic::{AtomicI32, Ordering};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::codec::{decode_message, encode_message, CodecError, Pdu, PduKind, SnmpMessage, MAX_DATAGRAM};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(2);
pub const DEFAULT_RETRIES: u32 = 1;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("no response from {target} after {attempts} attempt(s)")]
    Timeout { target: SocketAddr, attempts: u32 },
    #[error("cannot encode request: {0}")]
    Encode(CodecError),
    #[error("undecodable response: {0}")]
    Decode(CodecError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One UDP socket talking to one agent. Responses are matched by request-id
/// and source address; anything else on the socket is discarded.
#[derive(Debug)]
pub struct Client {
    socket: UdpSocket,
    target: SocketAddr,
    timeout: Duration,
    retries: u32,
    next_id: AtomicI32,
}

impl Client {
    pub fn new(target: impl ToSocketAddrs) -> io::Result<Client> {
        let target = target
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "target resolves to no address"))?;
        let bind: SocketAddr = if target.is_ipv4() { "0.0.0.0:0" } else { "[::]:0" }.parse().unwrap();
        let socket = UdpSocket::bind(bind)?;
        // request ids start somewhere unpredictable so a restarted client
        // does not accept a stale answer meant for its predecessor
        let seed = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.subsec_nanos() as i32 & 0x3FFF_FFFF)
            .unwrap_or(1);
        Ok(Client { socket, target, timeout: DEFAULT_TIMEOUT, retries: DEFAULT_RETRIES, next_id: AtomicI32::new(seed) })
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        assert!(!timeout.is_zero(), "timeout must be positive");
        self.timeout = timeout;
        self
    }

    pub fn with_retries(mut self, retries: u32) -> Self {
        self.retries = retries;
        self
    }

    pub fn target(&self) -> SocketAddr {
        self.target
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    pub fn retries(&self) -> u32 {
        self.retries
    }

    pub fn next_request_id(&self) -> i32 {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        if id == i32::MAX {
            self.next_id.store(1, Ordering::Relaxed);
        }
        id
    }

    /// Sends `pdu` (its request-id is overwritten) and waits for the matching
    /// response PDU, retrying on timeout.
    pub fn request(&self, community: &[u8], mut pdu: Pdu) -> Result<Pdu, ClientError> {
        pdu.request_id = self.next_request_id();
        let id = pdu.request_id;
        let bytes = encode_message(&SnmpMessage::new(community, pdu)).map_err(ClientError::Encode)?;
        let mut buf = vec![0u8; MAX_DATAGRAM];
        let attempts = self.retries + 1;
        let mut garbled = None;
        for _ in 0..attempts {
            self.socket.send_to(&bytes, self.target)?;
            let deadline = Instant::now() + self.timeout;
            loop {
                let left = deadline.saturating_duration_since(Instant::now());
                if left.is_zero() {
                    break;
                }
                self.socket.set_read_timeout(Some(left))?;
                let (n, from) = match self.socket.recv_from(&mut buf) {
                    Ok(r) => r,
                    Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => break,
                    // ICMP port unreachable surfaces here on some platforms
                    Err(e) if e.kind() == io::ErrorKind::ConnectionRefused => continue,
                    Err(e) => return Err(e.into()),
                };
                if from != self.target {
                    continue;
                }
                let msg = match decode_message(&buf[..n]) {
                    Ok(m) => m,
                    Err(e) => {
                        log::debug!("discarding undecodable datagram from {from}: {e}");
                        garbled = Some(e);
                        continue;
                    }
                };
                if msg.pdu.kind == PduKind::Response && msg.pdu.request_id == id {
                    return Ok(msg.pdu);
                }
            }
        }
        // the agent did answer, just not intelligibly
        if let Some(e) = garbled {
            return Err(ClientError::Decode(e));
        }
        Err(ClientError::Timeout { target: self.target, attempts })
    }
}
