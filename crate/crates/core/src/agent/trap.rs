//! SNMPv2 notifications.

use std::net::UdpSocket;
use std::sync::atomic::Ordering;

use thiserror::Error;

use crate::codec::{encode_message, BerValue, Pdu, PduKind, SnmpMessage, Varbind};
use crate::oid::Oid;

use super::Agent;

/// sysUpTime.0
pub const SYS_UPTIME: &[u32] = &[1, 3, 6, 1, 2, 1, 1, 3, 0];
/// snmpTrapOID.0
pub const SNMP_TRAP_OID: &[u32] = &[1, 3, 6, 1, 6, 3, 1, 1, 4, 1, 0];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrapEvent {
    pub notification: Oid,
    /// Payload varbinds, without the two leading header varbinds.
    pub varbinds: Vec<Varbind>,
    /// Sender's sysUpTime in hundredths of a second.
    pub timestamp: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrapError {
    #[error("PDU is not an SNMPv2 trap")]
    NotATrap,
    #[error("first varbind must be sysUpTime.0 with TimeTicks")]
    MissingUptime,
    #[error("second varbind must be snmpTrapOID.0 with an OID value")]
    MissingTrapOid,
}

impl TrapEvent {
    pub fn to_pdu(&self, request_id: i32) -> Pdu {
        let mut vbs = Vec::with_capacity(self.varbinds.len() + 2);
        vbs.push(Varbind::new(Oid::from_slice(SYS_UPTIME).unwrap(), BerValue::TimeTicks(self.timestamp)));
        vbs.push(Varbind::new(Oid::from_slice(SNMP_TRAP_OID).unwrap(), BerValue::OidValue(self.notification.clone())));
        vbs.extend(self.varbinds.iter().cloned());
        Pdu::request(PduKind::Trap, request_id, vbs)
    }

    pub fn from_pdu(pdu: &Pdu) -> Result<TrapEvent, TrapError> {
        if pdu.kind != PduKind::Trap {
            return Err(TrapError::NotATrap);
        }
        let timestamp = match pdu.varbinds.first() {
            Some(Varbind { oid, value: BerValue::TimeTicks(t) }) if oid.as_slice() == SYS_UPTIME => *t,
            _ => return Err(TrapError::MissingUptime),
        };
        let notification = match pdu.varbinds.get(1) {
            Some(Varbind { oid, value: BerValue::OidValue(n) }) if oid.as_slice() == SNMP_TRAP_OID => n.clone(),
            _ => return Err(TrapError::MissingTrapOid),
        };
        Ok(TrapEvent { notification, varbinds: pdu.varbinds[2..].to_vec(), timestamp })
    }
}

impl Agent {
    /// Sends one trap datagram to every configured sink, best effort.
    /// Returns the number of datagrams handed to the network.
    pub fn emit_trap(&self, notification: Oid, varbinds: Vec<Varbind>) -> usize {
        let sinks = self.trap_sinks();
        if sinks.is_empty() {
            return 0;
        }
        let event = TrapEvent { notification, varbinds, timestamp: self.uptime_ticks() };
        let id = self.trap_seq.fetch_add(1, Ordering::Relaxed) & 0x7FFF_FFFF;
        let msg = SnmpMessage::new(self.config.trap_community.clone(), event.to_pdu(id));
        let bytes = match encode_message(&msg) {
            Ok(b) => b,
            Err(e) => {
                log::error!("{}: cannot encode trap: {e}", self.name);
                return 0;
            }
        };
        let socket = match self.trap_socket.get() {
            Some(s) => s,
            None => match UdpSocket::bind("0.0.0.0:0") {
                Ok(s) => self.trap_socket.get_or_init(|| s),
                Err(e) => {
                    log::error!("{}: cannot open trap socket: {e}", self.name);
                    return 0;
                }
            },
        };
        let mut sent = 0;
        for sink in sinks {
            match socket.send_to(&bytes, sink) {
                Ok(_) => sent += 1,
                Err(e) => log::warn!("{}: trap to {sink} failed: {e}", self.name),
            }
        }
        self.stats.traps_sent.fetch_add(sent as u64, Ordering::Relaxed);
        sent
    }
}
