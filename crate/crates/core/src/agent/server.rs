//! UDP receive loop for an [`Agent`].

use std::io;
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use crate::codec::{decode_message, encode_message, ErrorStatus, Pdu, SnmpMessage, MAX_DATAGRAM};

use super::Agent;

/// How often the loop checks for shutdown while idle.
const POLL: Duration = Duration::from_millis(50);

/// A running agent. Dropping it stops the loop and closes the socket.
#[derive(Debug)]
pub struct AgentServer {
    addr: SocketAddr,
    agent: Arc<Agent>,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl AgentServer {
    pub fn spawn(agent: Arc<Agent>, bind: impl ToSocketAddrs) -> io::Result<AgentServer> {
        let socket = UdpSocket::bind(bind)?;
        socket.set_read_timeout(Some(POLL))?;
        let addr = socket.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let thread = {
            let agent = agent.clone();
            let stop = stop.clone();
            std::thread::Builder::new()
                .name(format!("agent-{}", agent.name()))
                .spawn(move || serve(&agent, &socket, &stop))?
        };
        log::info!("agent {} listening on {addr}", agent.name());
        Ok(AgentServer { addr, agent, stop, thread: Some(thread) })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn agent(&self) -> &Arc<Agent> {
        &self.agent
    }

    pub fn shutdown(mut self) {
        self.stop_thread();
    }

    fn stop_thread(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for AgentServer {
    fn drop(&mut self) {
        self.stop_thread();
    }
}

fn serve(agent: &Agent, socket: &UdpSocket, stop: &AtomicBool) {
    let mut buf = vec![0u8; MAX_DATAGRAM];
    while !stop.load(Ordering::Relaxed) {
        let (n, from) = match socket.recv_from(&mut buf) {
            Ok(r) => r,
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => continue,
            Err(e) => {
                log::debug!("agent {}: recv failed: {e}", agent.name());
                continue;
            }
        };
        agent.stats().packets_in.fetch_add(1, Ordering::Relaxed);
        let request = match decode_message(&buf[..n]) {
            Ok(m) => m,
            Err(e) => {
                agent.stats().decode_errors.fetch_add(1, Ordering::Relaxed);
                log::debug!("agent {}: undecodable datagram from {from}: {e}", agent.name());
                continue;
            }
        };
        let Some(response) = agent.route_or_serve(&request) else { continue };
        let bytes = match encode_message(&response) {
            Ok(b) if b.len() <= MAX_DATAGRAM => b,
            _ => {
                // the answer does not fit; report without varbinds
                let pdu = Pdu::response(request.pdu.request_id, ErrorStatus::GenErr, 0, Vec::new());
                encode_message(&SnmpMessage::new(request.community.clone(), pdu)).expect("minimal response encodes")
            }
        };
        if let Err(e) = socket.send_to(&bytes, from) {
            log::debug!("agent {}: send to {from} failed: {e}", agent.name());
        }
    }
}
