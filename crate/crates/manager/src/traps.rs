//! Receives SNMPv2 notifications into a bounded in-memory log.

use std::collections::VecDeque;
use std::io;
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex, RwLock};
use std::thread::JoinHandle;
use std::time::Duration;

use chrono::{DateTime, Utc};
use marf_core::agent::TrapEvent;
use marf_core::codec::{decode_message, MAX_DATAGRAM};
use thiserror::Error;

pub const DEFAULT_LOG_CAPACITY: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct TrapRecord {
    /// Arrival order, from 1.
    pub seq: u64,
    pub received: DateTime<Utc>,
    pub source: SocketAddr,
    pub community: Vec<u8>,
    pub event: TrapEvent,
}

#[derive(Debug, Error)]
#[error("cannot bind trap listener: {0}")]
pub struct BindFailure(#[from] pub io::Error);

struct Shared {
    log: RwLock<VecDeque<TrapRecord>>,
    capacity: usize,
    received: AtomicU64,
    malformed: AtomicU64,
    subscribers: Mutex<Vec<Sender<TrapRecord>>>,
    stop: AtomicBool,
}

impl Shared {
    fn accept(&self, bytes: &[u8], source: SocketAddr) {
        let decoded =
            decode_message(bytes).ok().and_then(|m| TrapEvent::from_pdu(&m.pdu).ok().map(|e| (m.community, e)));
        let Some((community, event)) = decoded else {
            self.malformed.fetch_add(1, Ordering::SeqCst);
            log::debug!("discarding malformed datagram from {source}");
            return;
        };
        let rec = TrapRecord {
            seq: self.received.fetch_add(1, Ordering::SeqCst) + 1,
            received: Utc::now(),
            source,
            community,
            event,
        };
        {
            let mut log = self.log.write().unwrap();
            if log.len() == self.capacity {
                log.pop_front();
            }
            log.push_back(rec.clone());
        }
        self.subscribers.lock().unwrap().retain(|s| s.send(rec.clone()).is_ok());
    }
}

pub struct TrapListener {
    addr: SocketAddr,
    shared: Arc<Shared>,
    thread: Option<JoinHandle<()>>,
}

impl TrapListener {
    pub fn bind(addr: impl ToSocketAddrs) -> Result<TrapListener, BindFailure> {
        Self::with_capacity(addr, DEFAULT_LOG_CAPACITY)
    }

    pub fn with_capacity(addr: impl ToSocketAddrs, capacity: usize) -> Result<TrapListener, BindFailure> {
        assert!(capacity > 0);
        let socket = UdpSocket::bind(addr)?;
        socket.set_read_timeout(Some(Duration::from_millis(50)))?;
        let addr = socket.local_addr()?;
        let shared = Arc::new(Shared {
            log: RwLock::new(VecDeque::with_capacity(capacity)),
            capacity,
            received: AtomicU64::new(0),
            malformed: AtomicU64::new(0),
            subscribers: Mutex::new(Vec::new()),
            stop: AtomicBool::new(false),
        });
        let s = shared.clone();
        let thread = std::thread::Builder::new().name("trap-listener".into()).spawn(move || {
            let mut buf = vec![0u8; MAX_DATAGRAM];
            while !s.stop.load(Ordering::SeqCst) {
                match socket.recv_from(&mut buf) {
                    Ok((n, from)) => s.accept(&buf[..n], from),
                    Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {}
                    Err(e) => log::warn!("trap socket: {e}"),
                }
            }
        })?;
        log::info!("listening for traps on {addr}");
        Ok(TrapListener { addr, shared, thread: Some(thread) })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Events still in the log, oldest first.
    pub fn events(&self) -> Vec<TrapRecord> {
        self.shared.log.read().unwrap().iter().cloned().collect()
    }

    pub fn malformed_count(&self) -> u64 {
        self.shared.malformed.load(Ordering::SeqCst)
    }

    /// Total events accepted, including those since evicted from the log.
    pub fn received_count(&self) -> u64 {
        self.shared.received.load(Ordering::SeqCst)
    }

    /// Every event accepted from now on, in arrival order.
    pub fn subscribe(&self) -> Receiver<TrapRecord> {
        let (tx, rx) = mpsc::channel();
        self.shared.subscribers.lock().unwrap().push(tx);
        rx
    }

    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for TrapListener {
    fn drop(&mut self) {
        self.stop_now();
    }
}
