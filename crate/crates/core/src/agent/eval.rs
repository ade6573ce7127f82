//! PDU evaluation over the local registry plus sub-agent routes.

use std::collections::BTreeMap;

use crate::client::ClientError;
use crate::codec::{encode_value, BerValue, ErrorStatus, Pdu, PduKind, Varbind, MAX_DATAGRAM};
use crate::oid::Oid;
use crate::smi::Access;

use super::registry::{check_syntax, Lookup, Registry};
use super::SubAgentRoute;

/// Bytes kept free for the message header when filling a bulk response.
const HEADER_ALLOWANCE: usize = 512;

/// Upper bound on GETNEXT steps taken inside one sub-agent to find the next
/// OID that belongs to its route.
const MAX_ROUTE_STEPS: usize = 10_000;

pub(super) struct Ctx<'a> {
    pub reg: &'a Registry,
    pub routes: &'a [SubAgentRoute],
    pub community: &'a [u8],
}

/// A failure to obtain a value, reported as error-status.
struct Failed(ErrorStatus);

fn varbind_size(oid: &Oid, v: &BerValue) -> usize {
    // oid arcs take at most 5 bytes; tags and lengths at most 4 each
    oid.len() * 5 + encode_value(v).len() + 12
}

impl Ctx<'_> {
    /// Index of the longest-prefix route covering `oid`.
    fn route_of(&self, oid: &Oid) -> Option<usize> {
        self.routes
            .iter()
            .enumerate()
            .filter(|(_, r)| oid.starts_with(&r.subtree))
            .max_by_key(|(_, r)| r.subtree.len())
            .map(|(i, _)| i)
    }

    fn forward(&self, route: usize, kind: PduKind, varbinds: Vec<Varbind>) -> Result<Pdu, ClientError> {
        let r = &self.routes[route];
        log::trace!("forwarding {kind:?} with {} varbind(s) to {}", varbinds.len(), r.target);
        r.client.request(self.community, Pdu::request(kind, 0, varbinds))
    }

    /// Partitions varbind positions by route; `None` collects the local ones.
    fn partition(&self, varbinds: &[Varbind]) -> BTreeMap<Option<usize>, Vec<usize>> {
        let mut groups: BTreeMap<Option<usize>, Vec<usize>> = BTreeMap::new();
        for (i, vb) in varbinds.iter().enumerate() {
            groups.entry(self.route_of(&vb.oid)).or_default().push(i);
        }
        groups
    }

    pub fn get(&self, pdu: &Pdu) -> Pdu {
        let mut out = pdu.varbinds.clone();
        let mut error: Option<(ErrorStatus, usize)> = None;
        let mut note = |status: ErrorStatus, pos: usize| {
            if error.is_none_or(|(_, p)| pos < p) {
                error = Some((status, pos));
            }
        };
        for (route, positions) in self.partition(&pdu.varbinds) {
            match route {
                None => {
                    for &i in &positions {
                        out[i].value = self.reg.get(&out[i].oid);
                    }
                }
                Some(r) => {
                    let vbs = positions.iter().map(|&i| Varbind::null(pdu.varbinds[i].oid.clone())).collect();
                    match self.forward(r, PduKind::Get, vbs) {
                        Ok(resp) if resp.error_status == 0 && resp.varbinds.len() == positions.len() => {
                            for (&i, vb) in positions.iter().zip(resp.varbinds) {
                                out[i].value = vb.value;
                            }
                        }
                        Ok(resp) => note(remote_status(&resp), remote_position(&resp, &positions)),
                        Err(e) => {
                            log::warn!("sub-agent {} failed: {e}", self.routes[r].target);
                            note(ErrorStatus::GenErr, positions[0]);
                        }
                    }
                }
            }
        }
        respond(pdu, error, out)
    }

    /// Next instance after `q` across the local registry and all routes.
    fn next_any(&self, q: &Oid) -> Result<Option<(Oid, BerValue)>, Failed> {
        let mut best = self.next_local(q);
        for r in 0..self.routes.len() {
            if let Some(end) = self.routes[r].subtree.subtree_end() {
                if *q >= end {
                    continue;
                }
            }
            // a route cannot beat a candidate that precedes its whole subtree
            if best.as_ref().is_some_and(|(o, _)| *o < self.routes[r].subtree) {
                continue;
            }
            if let Some(c) = self.next_in_route(r, q)? {
                if best.as_ref().is_none_or(|(o, _)| c.0 < *o) {
                    best = Some(c);
                }
            }
        }
        Ok(best)
    }

    fn next_local(&self, q: &Oid) -> Option<(Oid, BerValue)> {
        let mut cur = q.clone();
        loop {
            let (oid, v) = self.reg.next(&cur)?;
            // local objects shadowed by a route are not served
            if self.route_of(&oid).is_none() {
                return Some((oid, v));
            }
            cur = oid;
        }
    }

    fn next_in_route(&self, r: usize, q: &Oid) -> Result<Option<(Oid, BerValue)>, Failed> {
        let subtree = &self.routes[r].subtree;
        let fail = |e: ClientError| {
            log::warn!("sub-agent {} failed: {e}", self.routes[r].target);
            Failed(ErrorStatus::GenErr)
        };
        let mut cur = q.clone();
        if *q < *subtree {
            // the subtree root itself may be an instance
            let resp = self.forward(r, PduKind::Get, vec![Varbind::null(subtree.clone())]).map_err(fail)?;
            if let Some(vb) = resp.varbinds.first() {
                if resp.error_status == 0 && !vb.value.is_exception() && self.route_of(subtree) == Some(r) {
                    return Ok(Some((subtree.clone(), vb.value.clone())));
                }
            }
            cur = subtree.clone();
        }
        for _ in 0..MAX_ROUTE_STEPS {
            let resp = self.forward(r, PduKind::GetNext, vec![Varbind::null(cur.clone())]).map_err(fail)?;
            if resp.error_status != 0 {
                return Err(Failed(remote_status(&resp)));
            }
            let Some(vb) = resp.varbinds.into_iter().next() else {
                return Err(Failed(ErrorStatus::GenErr));
            };
            if vb.value == BerValue::EndOfMibView || !vb.oid.starts_with(subtree) && vb.oid > *subtree {
                return Ok(None);
            }
            if vb.oid <= cur {
                log::warn!("sub-agent {} returned non-increasing OID {}", self.routes[r].target, vb.oid);
                return Err(Failed(ErrorStatus::GenErr));
            }
            if vb.oid.starts_with(subtree) && self.route_of(&vb.oid) == Some(r) {
                return Ok(Some((vb.oid, vb.value)));
            }
            cur = vb.oid;
        }
        Err(Failed(ErrorStatus::GenErr))
    }

    pub fn get_next(&self, pdu: &Pdu) -> Pdu {
        let mut out = pdu.varbinds.clone();
        let mut error = None;
        for (i, vb) in pdu.varbinds.iter().enumerate() {
            match self.next_any(&vb.oid) {
                Ok(Some((oid, v))) => out[i] = Varbind::new(oid, v),
                Ok(None) => out[i].value = BerValue::EndOfMibView,
                Err(Failed(s)) => {
                    error = Some((s, i));
                    break;
                }
            }
        }
        respond(pdu, error, out)
    }

    pub fn get_bulk(&self, pdu: &Pdu) -> Pdu {
        let n = pdu.varbinds.len();
        let non_rep = (pdu.non_repeaters().max(0) as usize).min(n);
        let max_rep = pdu.max_repetitions().max(0) as usize;
        let budget = MAX_DATAGRAM - HEADER_ALLOWANCE - self.community.len();
        let mut used = 0;
        let mut out = Vec::new();

        for (i, vb) in pdu.varbinds[..non_rep].iter().enumerate() {
            let next = match self.next_any(&vb.oid) {
                Ok(Some((oid, v))) => Varbind::new(oid, v),
                Ok(None) => Varbind::new(vb.oid.clone(), BerValue::EndOfMibView),
                Err(Failed(s)) => return respond(pdu, Some((s, i)), pdu.varbinds.clone()),
            };
            used += varbind_size(&next.oid, &next.value);
            out.push(next);
        }
        if used > budget {
            out.clear();
        }

        let mut cursors: Vec<(Oid, bool)> = pdu.varbinds[non_rep..].iter().map(|vb| (vb.oid.clone(), false)).collect();
        'rounds: for _ in 0..max_rep {
            if cursors.is_empty() || cursors.iter().all(|(_, done)| *done) {
                break;
            }
            for (j, (cur, done)) in cursors.iter_mut().enumerate() {
                let next = if *done {
                    Varbind::new(cur.clone(), BerValue::EndOfMibView)
                } else {
                    match self.next_any(cur) {
                        Ok(Some((oid, v))) => {
                            *cur = oid.clone();
                            Varbind::new(oid, v)
                        }
                        Ok(None) => {
                            *done = true;
                            Varbind::new(cur.clone(), BerValue::EndOfMibView)
                        }
                        Err(Failed(s)) => return respond(pdu, Some((s, non_rep + j)), pdu.varbinds.clone()),
                    }
                };
                let size = varbind_size(&next.oid, &next.value);
                if used + size > budget {
                    // a truncated bulk answer is still a valid one
                    break 'rounds;
                }
                used += size;
                out.push(next);
            }
        }
        Pdu::response(pdu.request_id, ErrorStatus::NoError, 0, out)
    }

    fn validate_local(&self, vb: &Varbind) -> Result<(), ErrorStatus> {
        match self.reg.lookup(&vb.oid) {
            Lookup::Scalar(obj) => match obj.writer() {
                None => Err(ErrorStatus::NotWritable),
                Some(w) => (w.validate)(&vb.value),
            },
            Lookup::Cell(t, col, idx) => {
                if col.access != Access::ReadWrite {
                    return Err(ErrorStatus::NotWritable);
                }
                if t.source.read(&col.name, &idx).is_none() {
                    return Err(ErrorStatus::NoSuchName);
                }
                check_syntax(&col.syntax, &vb.value)?;
                t.source.validate(&col.name, &idx, &vb.value)
            }
            Lookup::NoSuchInstance | Lookup::NoSuchObject => Err(ErrorStatus::NoSuchName),
        }
    }

    fn commit_local(&self, vb: &Varbind) {
        match self.reg.lookup(&vb.oid) {
            Lookup::Scalar(obj) => {
                if let Some(w) = obj.writer() {
                    (w.commit)(&vb.value)
                }
            }
            Lookup::Cell(t, col, idx) => t.source.commit(&col.name, &idx, &vb.value),
            Lookup::NoSuchInstance | Lookup::NoSuchObject => {}
        }
    }

    /// Two-phase SET. Local varbinds are all validated before anything is
    /// sent to a sub-agent, and committed only after every sub-agent
    /// accepted its share. Atomicity across sub-agents is not provided.
    pub fn set(&self, pdu: &Pdu) -> Pdu {
        let groups = self.partition(&pdu.varbinds);
        let local = groups.get(&None).cloned().unwrap_or_default();
        for &i in &local {
            if let Err(s) = self.validate_local(&pdu.varbinds[i]) {
                return respond(pdu, Some((s, i)), pdu.varbinds.clone());
            }
        }
        for (route, positions) in &groups {
            let Some(r) = *route else { continue };
            let vbs = positions.iter().map(|&i| pdu.varbinds[i].clone()).collect();
            match self.forward(r, PduKind::Set, vbs) {
                Ok(resp) if resp.error_status == 0 => {}
                Ok(resp) => {
                    let at = remote_position(&resp, positions);
                    return respond(pdu, Some((remote_status(&resp), at)), pdu.varbinds.clone());
                }
                Err(e) => {
                    log::warn!("sub-agent {} failed: {e}", self.routes[r].target);
                    return respond(pdu, Some((ErrorStatus::GenErr, positions[0])), pdu.varbinds.clone());
                }
            }
        }
        for &i in &local {
            self.commit_local(&pdu.varbinds[i]);
        }
        Pdu::response(pdu.request_id, ErrorStatus::NoError, 0, pdu.varbinds.clone())
    }
}

fn remote_status(resp: &Pdu) -> ErrorStatus {
    resp.status().filter(|s| *s != ErrorStatus::NoError).unwrap_or(ErrorStatus::GenErr)
}

/// Maps a sub-agent's 1-based error-index back to the original position.
fn remote_position(resp: &Pdu, positions: &[usize]) -> usize {
    let k = resp.error_index as usize;
    if k >= 1 && k <= positions.len() {
        positions[k - 1]
    } else {
        positions[0]
    }
}

/// `error` holds a 0-based position; the wire error-index is 1-based.
fn respond(pdu: &Pdu, error: Option<(ErrorStatus, usize)>, varbinds: Vec<Varbind>) -> Pdu {
    match error {
        None => Pdu::response(pdu.request_id, ErrorStatus::NoError, 0, varbinds),
        Some((s, pos)) => Pdu::response(pdu.request_id, s, pos + 1, varbinds),
    }
}
