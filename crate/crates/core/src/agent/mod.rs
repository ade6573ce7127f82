//! SNMPv2c agent runtime: object registry, PDU evaluation, proxying of OID
//! subtrees to sub-agents, and trap emission.

mod eval;
mod registry;
mod server;
mod trap;

use std::net::{SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicI32, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock, RwLock};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::client::{Client, DEFAULT_RETRIES, DEFAULT_TIMEOUT};
use crate::codec::{ErrorStatus, Pdu, PduKind, SnmpMessage, Varbind};
use crate::oid::Oid;
use crate::smi::ResolvedTable;

pub use registry::{check_syntax, ManagedObject, MemoryTable, Registry, RowSource, Writer};
pub use server::AgentServer;
pub use trap::{TrapError, TrapEvent, SNMP_TRAP_OID, SYS_UPTIME};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("an object is already registered at or around {0}")]
    DuplicateRegistration(Oid),
    #[error("route for {0} already configured")]
    DuplicateRoute(Oid),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct AgentConfig {
    pub read_community: Vec<u8>,
    pub write_community: Vec<u8>,
    /// Answer reads carrying an unknown community with noAccess instead of
    /// dropping them.
    pub respond_to_bad_community: bool,
    pub trap_community: Vec<u8>,
    pub subagent_timeout: Duration,
    pub subagent_retries: u32,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            read_community: b"public".to_vec(),
            write_community: b"private".to_vec(),
            respond_to_bad_community: false,
            trap_community: b"public".to_vec(),
            subagent_timeout: DEFAULT_TIMEOUT,
            subagent_retries: DEFAULT_RETRIES,
        }
    }
}

/// An OID subtree served by another agent.
#[derive(Debug)]
pub struct SubAgentRoute {
    pub subtree: Oid,
    pub target: SocketAddr,
    client: Client,
}

/// Per-agent counters, for diagnostics.
#[derive(Debug, Default)]
pub struct AgentStats {
    pub packets_in: AtomicU64,
    pub decode_errors: AtomicU64,
    pub bad_community: AtomicU64,
    pub traps_sent: AtomicU64,
}

pub struct Agent {
    name: String,
    config: AgentConfig,
    registry: RwLock<Registry>,
    routes: RwLock<Vec<SubAgentRoute>>,
    sinks: RwLock<Vec<SocketAddr>>,
    /// Serializes PDU evaluation.
    eval: Mutex<()>,
    started: Instant,
    trap_socket: OnceLock<UdpSocket>,
    trap_seq: AtomicI32,
    stats: AgentStats,
}

impl std::fmt::Debug for Agent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Agent").field("name", &self.name).finish_non_exhaustive()
    }
}

impl Agent {
    pub fn new(name: impl Into<String>, config: AgentConfig) -> Arc<Agent> {
        Arc::new(Agent {
            name: name.into(),
            config,
            registry: RwLock::new(Registry::new()),
            routes: RwLock::new(Vec::new()),
            sinks: RwLock::new(Vec::new()),
            eval: Mutex::new(()),
            started: Instant::now(),
            trap_socket: OnceLock::new(),
            trap_seq: AtomicI32::new(1),
            stats: AgentStats::default(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn stats(&self) -> &AgentStats {
        &self.stats
    }

    /// Hundredths of a second since the agent was created, wrapping.
    pub fn uptime_ticks(&self) -> u32 {
        (self.started.elapsed().as_millis() / 10) as u32
    }

    pub fn register(&self, obj: ManagedObject) -> Result<(), AgentError> {
        self.registry.write().unwrap().register(obj)
    }

    pub fn register_table(&self, table: &ResolvedTable, source: Arc<dyn RowSource>) -> Result<(), AgentError> {
        self.registry.write().unwrap().register_table(table, source)
    }

    /// Every locally registered instance in OID order.
    pub fn dump(&self) -> Vec<Varbind> {
        self.registry.read().unwrap().dump().into_iter().map(|(o, v)| Varbind::new(o, v)).collect()
    }

    /// Forwards `subtree` to the agent at `target`. The longest matching
    /// subtree wins when routes nest.
    pub fn add_route(&self, subtree: Oid, target: SocketAddr) -> Result<(), AgentError> {
        let mut routes = self.routes.write().unwrap();
        if routes.iter().any(|r| r.subtree == subtree) {
            return Err(AgentError::DuplicateRoute(subtree));
        }
        let client =
            Client::new(target)?.with_timeout(self.config.subagent_timeout).with_retries(self.config.subagent_retries);
        routes.push(SubAgentRoute { subtree, target, client });
        Ok(())
    }

    pub fn routes(&self) -> Vec<(Oid, SocketAddr)> {
        self.routes.read().unwrap().iter().map(|r| (r.subtree.clone(), r.target)).collect()
    }

    pub fn set_trap_sinks(&self, sinks: Vec<SocketAddr>) {
        *self.sinks.write().unwrap() = sinks;
    }

    pub fn add_trap_sink(&self, sink: SocketAddr) {
        self.sinks.write().unwrap().push(sink);
    }

    pub fn trap_sinks(&self) -> Vec<SocketAddr> {
        self.sinks.read().unwrap().clone()
    }

    /// Evaluates a request against the local registry only.
    pub fn handle_pdu(&self, msg: &SnmpMessage) -> Option<SnmpMessage> {
        self.evaluate(msg, false)
    }

    /// Evaluates a request, forwarding varbinds under routed subtrees to
    /// their sub-agents. Identical to [`handle_pdu`](Self::handle_pdu) when
    /// no routes are configured. `None` means the request is dropped.
    pub fn route_or_serve(&self, msg: &SnmpMessage) -> Option<SnmpMessage> {
        self.evaluate(msg, true)
    }

    fn evaluate(&self, msg: &SnmpMessage, use_routes: bool) -> Option<SnmpMessage> {
        let pdu = &msg.pdu;
        let deny = |status: ErrorStatus| {
            Some(SnmpMessage::new(
                msg.community.clone(),
                Pdu::response(pdu.request_id, status, 0, pdu.varbinds.clone()),
            ))
        };
        let c = &msg.community;
        match pdu.kind {
            PduKind::Response | PduKind::Trap => return None,
            PduKind::Set => {
                if *c != self.config.write_community {
                    self.stats.bad_community.fetch_add(1, Ordering::Relaxed);
                    return deny(ErrorStatus::NoAccess);
                }
            }
            PduKind::Get | PduKind::GetNext | PduKind::GetBulk => {
                if *c != self.config.read_community && *c != self.config.write_community {
                    self.stats.bad_community.fetch_add(1, Ordering::Relaxed);
                    if self.config.respond_to_bad_community {
                        return deny(ErrorStatus::NoAccess);
                    }
                    log::debug!("{}: dropping request with unknown community", self.name);
                    return None;
                }
            }
        }

        let _serial = self.eval.lock().unwrap();
        let reg = self.registry.read().unwrap();
        let routes = self.routes.read().unwrap();
        let ctx = eval::Ctx { reg: &reg, routes: if use_routes { &routes } else { &[] }, community: c };
        let response = match pdu.kind {
            PduKind::Get => ctx.get(pdu),
            PduKind::GetNext => ctx.get_next(pdu),
            PduKind::GetBulk => ctx.get_bulk(pdu),
            PduKind::Set => ctx.set(pdu),
            PduKind::Response | PduKind::Trap => unreachable!(),
        };
        Some(SnmpMessage::new(msg.community.clone(), response))
    }
}
