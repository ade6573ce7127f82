use std::collections::BTreeSet;
use std::net::UdpSocket;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use marf_core::agent::{
    Agent, AgentConfig, AgentError, AgentServer, ManagedObject, MemoryTable, TrapEvent, Writer, SNMP_TRAP_OID,
    SYS_UPTIME,
};
use marf_core::codec::{
    counter_inc, decode_message, encode_message, BerValue, ErrorStatus, Pdu, PduKind, SnmpMessage, Varbind,
};
use marf_core::smi::{Mib, Syntax};
use marf_core::{oid, Oid};
use proptest::prelude::*;

fn ask(agent: &Agent, community: &str, pdu: Pdu) -> Option<Pdu> {
    agent.route_or_serve(&SnmpMessage::new(community, pdu)).map(|m| m.pdu)
}

fn get(agent: &Agent, oids: &[Oid]) -> Pdu {
    let vbs = oids.iter().cloned().map(Varbind::null).collect();
    ask(agent, "public", Pdu::request(PduKind::Get, 7, vbs)).unwrap()
}

fn next(agent: &Agent, q: &Oid) -> Varbind {
    let resp = ask(agent, "public", Pdu::request(PduKind::GetNext, 7, vec![Varbind::null(q.clone())])).unwrap();
    assert_eq!(resp.error_status, 0, "{resp:?}");
    resp.varbinds.into_iter().next().unwrap()
}

fn set(agent: &Agent, vbs: Vec<Varbind>) -> Pdu {
    ask(agent, "private", Pdu::request(PduKind::Set, 9, vbs)).unwrap()
}

/// Every instance reachable by chained GETNEXT from `0.0`.
fn walk(agent: &Agent) -> Vec<Varbind> {
    let mut out = Vec::new();
    let mut cur = oid![0, 0];
    loop {
        let vb = next(agent, &cur);
        if vb.value == BerValue::EndOfMibView {
            return out;
        }
        assert!(vb.oid > cur, "GETNEXT went backwards: {} after {}", vb.oid, cur);
        cur = vb.oid.clone();
        out.push(vb);
    }
}

fn walk_bytes(agent: &Agent) -> Vec<u8> {
    let pdu = Pdu::response(0, ErrorStatus::NoError, 0, walk(agent));
    encode_message(&SnmpMessage::new("x", pdu)).unwrap()
}

fn agent() -> Arc<Agent> {
    Agent::new("test", AgentConfig::default())
}

fn service_rows(rows: &[u32]) -> Arc<MemoryTable> {
    let t = Arc::new(MemoryTable::new());
    for &i in rows {
        t.set(&[i], "serviceIndex", BerValue::Integer(i as i64));
        t.set(&[i], "serviceName", BerValue::string(format!("svc-{i}")));
        t.set(&[i], "serviceType", BerValue::Integer(2));
        t.set(&[i], "serviceStatus", BerValue::Integer(1));
        t.set(&[i], "serviceUptime", BerValue::TimeTicks(i * 100));
        t.set(&[i], "serviceInRequests", BerValue::Counter32(0));
        t.set(&[i], "serviceOutErrors", BerValue::Counter32(0));
    }
    t
}

fn arb_instance() -> impl Strategy<Value = Oid> {
    prop::collection::vec(0u32..6, 1..5).prop_map(|tail| oid![1, 3, 6, 1, 4, 1, 99].extend(&tail))
}

/// Registered instances must not be prefixes of one another: an OID names
/// either an instance or an interior node, never both.
fn prefix_free(oids: BTreeSet<Oid>) -> Vec<Oid> {
    let mut kept: Vec<Oid> = Vec::new();
    for o in oids {
        if !kept.iter().any(|k| o.starts_with(k)) {
            kept.push(o);
        }
    }
    kept
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn getnext_enumerates_random_registries(oids in prop::collection::btree_set(arb_instance(), 0..500)) {
        let a = agent();
        let oids = prefix_free(oids);
        for (i, o) in oids.iter().enumerate() {
            a.register(ManagedObject::constant(o.clone(), BerValue::Integer(i as i64))).unwrap();
        }
        let walked: Vec<Oid> = walk(&a).into_iter().map(|vb| vb.oid).collect();
        prop_assert_eq!(&walked, &oids);
        let dumped: Vec<Oid> = a.dump().into_iter().map(|vb| vb.oid).collect();
        prop_assert_eq!(&walked, &dumped);
    }

    #[test]
    fn getnext_is_a_strict_successor(
        oids in prop::collection::btree_set(arb_instance(), 1..200),
        queries in prop::collection::vec(prop::collection::vec(0u32..7, 0..6), 1..20),
    ) {
        let a = agent();
        let oids = prefix_free(oids);
        for o in &oids {
            a.register(ManagedObject::constant(o.clone(), BerValue::Null)).unwrap();
        }
        for tail in queries {
            let q = oid![1, 3, 6, 1, 4, 1, 99].extend(&tail);
            let expected = oids.iter().find(|o| **o > q);
            let got = next(&a, &q);
            match expected {
                Some(o) => prop_assert_eq!(&got.oid, o),
                None => prop_assert_eq!(got.value, BerValue::EndOfMibView),
            }
        }
    }

    #[test]
    fn failed_sets_leave_walks_unchanged(
        writes in prop::collection::vec((0usize..8, -5i64..40, any::<bool>()), 1..6),
    ) {
        let (a, targets) = writable_fixture();
        let before = walk_bytes(&a);
        let vbs: Vec<Varbind> = writes
            .iter()
            .map(|&(t, v, as_text)| {
                let value = if as_text { BerValue::string(v.to_string()) } else { BerValue::Integer(v) };
                Varbind::new(targets[t].clone(), value)
            })
            .collect();
        let resp = set(&a, vbs);
        if resp.error_status != 0 {
            prop_assert!(resp.error_index >= 1);
            prop_assert_eq!(walk_bytes(&a), before);
        }
    }

    #[test]
    fn getbulk_equals_chained_getnext(
        rows in prop::collection::btree_set(1u32..50, 0..8),
        starts in prop::collection::vec(0usize..6, 1..4),
        k in 0usize..40,
    ) {
        let a = agent();
        let mib = Mib::bundled();
        let rows: Vec<u32> = rows.into_iter().collect();
        a.register_table(mib.table("serviceTable").unwrap(), service_rows(&rows)).unwrap();
        let st = mib.table("serviceTable").unwrap();
        let anchors = [oid![1, 3], st.table_oid.clone(), st.entry_oid.clone(), st.effective_columns[2].oid.clone(),
            st.effective_columns[6].oid.extend(&[3]), oid![1, 3, 6, 1, 4, 1, 28218, 9]];
        let start: Vec<Oid> = starts.iter().map(|&s| anchors[s].clone()).collect();
        let bulk = ask(&a, "public", Pdu::get_bulk(1, 0, k as i32, start.iter().cloned().map(Varbind::null).collect()))
            .unwrap();
        prop_assert_eq!(bulk.error_status, 0);

        let mut expected = Vec::new();
        let mut cursors = start.clone();
        let mut done = vec![false; cursors.len()];
        for _ in 0..k {
            if done.iter().all(|d| *d) {
                break;
            }
            for (j, cur) in cursors.iter_mut().enumerate() {
                if done[j] {
                    expected.push(Varbind::new(cur.clone(), BerValue::EndOfMibView));
                    continue;
                }
                let vb = next(&a, cur);
                if vb.value == BerValue::EndOfMibView {
                    done[j] = true;
                    expected.push(Varbind::new(cur.clone(), BerValue::EndOfMibView));
                } else {
                    *cur = vb.oid.clone();
                    expected.push(vb);
                }
            }
        }
        prop_assert_eq!(bulk.varbinds, expected);
    }
}

/// Scalars and table cells of every write flavor, for SET tests. Returns the
/// agent and eight target OIDs: valid, read-only, missing and mistyped ones.
fn writable_fixture() -> (Arc<Agent>, Vec<Oid>) {
    let a = agent();
    let mib = Mib::bundled();
    let base = oid![1, 3, 6, 1, 4, 1, 99];
    for i in 0..3u32 {
        let cell = Arc::new(Mutex::new(BerValue::Integer(i as i64)));
        let (r, w) = (cell.clone(), cell.clone());
        let writer = Writer::for_syntax(Syntax::Integer(Some(marf_core::smi::Range { min: 0, max: 20 })), move |v| {
            *w.lock().unwrap() = v.clone()
        });
        a.register(ManagedObject::read_write(base.extend(&[i, 0]), move || r.lock().unwrap().clone(), writer)).unwrap();
    }
    a.register(ManagedObject::constant(base.extend(&[3, 0]), BerValue::Integer(5))).unwrap();
    a.register_table(mib.table("serviceTable").unwrap(), service_rows(&[1, 2])).unwrap();
    let lpc = Arc::new(MemoryTable::new());
    for i in [1u32, 2] {
        lpc.set(&[i], "iPoles", BerValue::Integer(8));
        lpc.set(&[i], "iWindowLen", BerValue::Integer(256));
    }
    a.register_table(mib.table("lpcServiceTable").unwrap(), lpc).unwrap();
    let col = |t: &str, c: &str| mib.table(t).unwrap().column(c).unwrap().oid.clone();
    let targets = vec![
        base.extend(&[0, 0]),
        base.extend(&[1, 0]),
        base.extend(&[2, 0]),
        base.extend(&[3, 0]),                        // read-only scalar
        base.extend(&[9, 0]),                        // nothing there
        col("lpcServiceTable", "iPoles").child(1),   // 1..128
        col("lpcServiceTable", "iPoles").child(7),   // missing row
        col("serviceTable", "serviceName").child(1), // read-only column
    ];
    (a, targets)
}

#[test]
fn scalar_get_and_duplicates() {
    let a = agent();
    let x = oid![1, 3, 6, 1, 4, 1, 99, 1, 0];
    a.register(ManagedObject::constant(x.clone(), BerValue::Integer(42))).unwrap();
    assert_eq!(get(&a, std::slice::from_ref(&x)).varbinds[0].value, BerValue::Integer(42));
    assert!(matches!(
        a.register(ManagedObject::constant(x.clone(), BerValue::Null)),
        Err(AgentError::DuplicateRegistration(o)) if o == x
    ));
    // x.1 is an unknown instance of a known object, y.0 an unknown object
    let resp = get(&a, &[x.extend(&[]).child(1), oid![1, 3, 6, 1, 4, 1, 99, 2, 0]]);
    assert_eq!(resp.error_status, 0);
    assert_eq!(resp.varbinds[1].value, BerValue::NoSuchObject);
    let past = next(&a, &x);
    assert_eq!((past.oid, past.value), (x, BerValue::EndOfMibView));

    // a table registration may not cover a registered scalar
    let mib = Mib::bundled();
    let b = agent();
    let column = mib.table("serviceTable").unwrap().column("serviceName").unwrap().oid.clone();
    b.register(ManagedObject::constant(column.child(1), BerValue::Null)).unwrap();
    assert!(b.register_table(mib.table("serviceTable").unwrap(), service_rows(&[1])).is_err());
}

#[test]
fn service_table_with_five_rows_has_35_instances() {
    let a = agent();
    let mib = Mib::bundled();
    a.register_table(mib.table("serviceTable").unwrap(), service_rows(&[1, 2, 3, 4, 5])).unwrap();
    let all = walk(&a);
    assert_eq!(all.len(), 5 * 7);
    let first = next(&a, &oid![1, 3, 6, 1, 4, 1, 28218]);
    assert_eq!(mib.name_of(&first.oid), "serviceIndex.1");
    assert_eq!(first.value, BerValue::Integer(1));
    // column-major order: every serviceIndex before any serviceName
    assert_eq!(mib.name_of(&all[5].oid), "serviceName.1");
    assert_eq!(all.last().unwrap().oid, mib.parse_oid("serviceOutErrors.5").unwrap());
}

#[test]
fn set_is_two_phase() {
    let (a, t) = writable_fixture();
    let ok = set(
        &a,
        vec![Varbind::new(t[0].clone(), BerValue::Integer(11)), Varbind::new(t[5].clone(), BerValue::Integer(12))],
    );
    assert_eq!(ok.status(), Some(ErrorStatus::NoError));
    let now = get(&a, &[t[0].clone(), t[5].clone()]);
    assert_eq!(now.varbinds[0].value, BerValue::Integer(11));
    assert_eq!(now.varbinds[1].value, BerValue::Integer(12));

    let before = walk_bytes(&a);
    let bad = set(
        &a,
        vec![Varbind::new(t[1].clone(), BerValue::Integer(3)), Varbind::new(t[3].clone(), BerValue::Integer(3))],
    );
    assert_eq!((bad.status(), bad.error_index), (Some(ErrorStatus::NotWritable), 2));
    assert_eq!(get(&a, &[t[1].clone()]).varbinds[0].value, BerValue::Integer(1));
    assert_eq!(walk_bytes(&a), before);

    let cases = [
        (t[4].clone(), BerValue::Integer(1), ErrorStatus::NoSuchName),
        (t[6].clone(), BerValue::Integer(1), ErrorStatus::NoSuchName),
        (t[7].clone(), BerValue::string("x"), ErrorStatus::NotWritable),
        (t[5].clone(), BerValue::string("8"), ErrorStatus::WrongType),
        (t[5].clone(), BerValue::Integer(0), ErrorStatus::WrongValue),
        (t[0].clone(), BerValue::Integer(21), ErrorStatus::WrongValue),
    ];
    for (o, v, status) in cases {
        let resp = set(&a, vec![Varbind::new(t[2].clone(), BerValue::Integer(4)), Varbind::new(o, v)]);
        assert_eq!((resp.status(), resp.error_index), (Some(status), 2));
        assert_eq!(walk_bytes(&a), before);
    }
}

#[test]
fn community_policy() {
    let (a, t) = writable_fixture();
    let g = Pdu::request(PduKind::Get, 1, vec![Varbind::null(t[0].clone())]);
    assert!(ask(&a, "wrong", g.clone()).is_none());
    assert!(ask(&a, "private", g.clone()).is_some());
    let s = Pdu::request(PduKind::Set, 1, vec![Varbind::new(t[0].clone(), BerValue::Integer(2))]);
    let resp = ask(&a, "public", s).unwrap();
    assert_eq!((resp.status(), resp.error_index), (Some(ErrorStatus::NoAccess), 0));
    assert_eq!(get(&a, &[t[0].clone()]).varbinds[0].value, BerValue::Integer(0));
    assert!(ask(&a, "public", Pdu::response(1, ErrorStatus::NoError, 0, vec![])).is_none());
    assert_eq!(a.stats().bad_community.load(Ordering::Relaxed), 2);

    let chatty = Agent::new("c", AgentConfig { respond_to_bad_community: true, ..AgentConfig::default() });
    let resp = ask(&chatty, "wrong", g).unwrap();
    assert_eq!(resp.status(), Some(ErrorStatus::NoAccess));
}

#[test]
fn counters_never_decrease_except_by_wrap() {
    let a = agent();
    let c = Arc::new(AtomicU32::new(u32::MAX - 500));
    let reader = c.clone();
    let x = oid![1, 3, 6, 1, 4, 1, 99, 5, 0];
    a.register(ManagedObject::read_only(x.clone(), move || BerValue::Counter32(reader.load(Ordering::SeqCst))))
        .unwrap();
    let bump = {
        let c = c.clone();
        std::thread::spawn(move || {
            for _ in 0..2000 {
                let _ = c.fetch_update(Ordering::SeqCst, Ordering::SeqCst, |v| Some(counter_inc(v, 1)));
            }
        })
    };
    let mut first = None;
    let mut last: Option<u32> = None;
    let mut total: u64 = 0;
    loop {
        let finished = bump.is_finished();
        let BerValue::Counter32(v) = get(&a, std::slice::from_ref(&x)).varbinds[0].value else { panic!() };
        if let Some(prev) = last {
            let delta = v.wrapping_sub(prev);
            assert!(delta < 1 << 31, "counter went back from {prev} to {v}");
            total += delta as u64;
        }
        first.get_or_insert(v);
        last = Some(v);
        if finished {
            break;
        }
    }
    bump.join().unwrap();
    // the wrap happened somewhere in the run; observed deltas still add up
    assert_eq!(last, Some(counter_inc(u32::MAX - 500, 2000)));
    assert_eq!(total, last.unwrap().wrapping_sub(first.unwrap()) as u64);
}

fn lpc_agent(rows: &[u32]) -> Arc<Agent> {
    let a = Agent::new("lpc", AgentConfig::default());
    let mib = Mib::bundled();
    let lpc = Arc::new(MemoryTable::new());
    for &i in rows {
        lpc.set(&[i], "iPoles", BerValue::Integer(8 + i as i64));
        lpc.set(&[i], "iWindowLen", BerValue::Integer(256));
    }
    a.register_table(mib.table("lpcServiceTable").unwrap(), lpc).unwrap();
    a
}

fn fast_config() -> AgentConfig {
    AgentConfig { subagent_timeout: Duration::from_millis(200), subagent_retries: 0, ..AgentConfig::default() }
}

#[test]
fn master_forwards_routed_subtrees() {
    let mib = Mib::bundled();
    let sub = AgentServer::spawn(lpc_agent(&[3, 4]), "127.0.0.1:0").unwrap();
    let master = Agent::new("fe", fast_config());
    master.register_table(mib.table("serviceTable").unwrap(), service_rows(&[3, 4])).unwrap();
    let fe = Arc::new(MemoryTable::new());
    for i in [3u32, 4] {
        fe.set(&[i], "adFeaturesLength", BerValue::Integer(0));
        fe.set(&[i], "oFeatureSetSize", BerValue::Integer(0));
    }
    master.register_table(mib.table("featureextractionServiceTable").unwrap(), fe).unwrap();
    let lpc_subtree = mib.table("lpcServiceTable").unwrap().table_oid.clone();

    // without a route the lpc columns are unknown here
    let i_poles = mib.parse_oid("iPoles.3").unwrap();
    assert_eq!(get(&master, std::slice::from_ref(&i_poles)).varbinds[0].value, BerValue::NoSuchObject);
    let local_walk = walk(&master);
    let plain = master
        .handle_pdu(&SnmpMessage::new("public", Pdu::request(PduKind::GetNext, 3, vec![Varbind::null(oid![1, 3])])));
    assert_eq!(
        plain,
        master.route_or_serve(&SnmpMessage::new(
            "public",
            Pdu::request(PduKind::GetNext, 3, vec![Varbind::null(oid![1, 3])])
        ))
    );

    master.add_route(lpc_subtree.clone(), sub.local_addr()).unwrap();
    assert!(matches!(master.add_route(lpc_subtree.clone(), sub.local_addr()), Err(AgentError::DuplicateRoute(_))));
    let name = mib.parse_oid("serviceName.3").unwrap();
    let resp = get(&master, &[name.clone(), i_poles.clone()]);
    assert_eq!(resp.error_status, 0);
    assert_eq!(resp.varbinds[0].value, BerValue::string("svc-3"));
    assert_eq!(resp.varbinds[1].value, BerValue::Integer(11));

    // the merged walk is the union of both registries, in order
    let mut union: Vec<Varbind> = local_walk.into_iter().chain(sub.agent().dump()).collect();
    union.sort_by(|x, y| x.oid.cmp(&y.oid));
    assert_eq!(walk(&master), union);

    let ok = set(&master, vec![Varbind::new(i_poles.clone(), BerValue::Integer(12))]);
    assert_eq!(ok.status(), Some(ErrorStatus::NoError));
    assert_eq!(get(&master, std::slice::from_ref(&i_poles)).varbinds[0].value, BerValue::Integer(12));
    let bad = set(
        &master,
        vec![Varbind::new(name.clone(), BerValue::string("x")), Varbind::new(i_poles.clone(), BerValue::Integer(0))],
    );
    assert_eq!((bad.status(), bad.error_index), (Some(ErrorStatus::NotWritable), 1));
    let bad = set(&master, vec![Varbind::new(i_poles.clone(), BerValue::Integer(500))]);
    assert_eq!((bad.status(), bad.error_index), (Some(ErrorStatus::WrongValue), 1));

    // sub-agent gone: its varbinds fail with genErr, local ones still answer
    sub.shutdown();
    let resp = get(&master, &[name.clone(), i_poles.clone()]);
    assert_eq!((resp.status(), resp.error_index), (Some(ErrorStatus::GenErr), 2));
    assert_eq!(resp.varbinds[0].value, BerValue::string("svc-3"));
    let nx = ask(&master, "public", Pdu::request(PduKind::GetNext, 1, vec![Varbind::null(lpc_subtree)])).unwrap();
    assert_eq!(nx.status(), Some(ErrorStatus::GenErr));
}

#[test]
fn nested_routes_prefer_the_longest_prefix() {
    let mib = Mib::bundled();
    let inner = AgentServer::spawn(lpc_agent(&[1]), "127.0.0.1:0").unwrap();
    let outer_agent = Agent::new("outer", AgentConfig::default());
    let fe = Arc::new(MemoryTable::new());
    fe.set(&[1], "adFeaturesLength", BerValue::Integer(5));
    fe.set(&[1], "oFeatureSetSize", BerValue::Integer(6));
    outer_agent.register_table(mib.table("featureextractionServiceTable").unwrap(), fe).unwrap();
    let outer = AgentServer::spawn(outer_agent, "127.0.0.1:0").unwrap();

    let master = Agent::new("m", fast_config());
    let fe_root = mib.oid_of("featureextractionService").unwrap();
    master.add_route(fe_root, outer.local_addr()).unwrap();
    master.add_route(mib.table("lpcServiceTable").unwrap().table_oid.clone(), inner.local_addr()).unwrap();
    let resp = get(
        &master,
        &[mib.parse_oid("iPoles.1").unwrap(), mib.parse_oid("MARF-feature-extraction::adFeaturesLength.1").unwrap()],
    );
    assert_eq!(resp.varbinds[0].value, BerValue::Integer(9));
    assert_eq!(resp.varbinds[1].value, BerValue::Integer(5));
    let all: Vec<String> = walk(&master).iter().map(|vb| mib.name_of(&vb.oid)).collect();
    // adFeaturesLength also exists in the classification module, so it is qualified
    assert_eq!(all, ["MARF-feature-extraction::adFeaturesLength.1", "oFeatureSetSize.1", "iPoles.1", "iWindowLen.1"]);
}

#[test]
fn served_over_udp() {
    let (a, t) = writable_fixture();
    let server = AgentServer::spawn(a, "127.0.0.1:0").unwrap();
    let client = marf_core::client::Client::new(server.local_addr()).unwrap();
    let resp = client.request(b"public", Pdu::request(PduKind::Get, 0, vec![Varbind::null(t[0].clone())])).unwrap();
    assert_eq!(resp.varbinds[0].value, BerValue::Integer(0));

    // garbage is counted, not answered
    let raw = UdpSocket::bind("127.0.0.1:0").unwrap();
    raw.send_to(&[0x30, 0x03, 0x02, 0x01], server.local_addr()).unwrap();
    raw.set_read_timeout(Some(Duration::from_millis(200))).unwrap();
    assert!(raw.recv_from(&mut [0u8; 64]).is_err());
    assert_eq!(server.agent().stats().decode_errors.load(Ordering::Relaxed), 1);

    // a wrong community is dropped, so the client times out
    let quick = marf_core::client::Client::new(server.local_addr())
        .unwrap()
        .with_timeout(Duration::from_millis(100))
        .with_retries(0);
    let err = quick.request(b"nope", Pdu::request(PduKind::Get, 0, vec![Varbind::null(t[0].clone())])).unwrap_err();
    assert!(matches!(err, marf_core::client::ClientError::Timeout { attempts: 1, .. }), "{err}");
}

#[test]
fn traps_reach_every_sink() {
    let a = agent();
    let notification = oid![1, 3, 6, 1, 4, 1, 28218, 3, 0, 1];
    assert_eq!(a.emit_trap(notification.clone(), vec![]), 0);
    assert_eq!(a.stats().traps_sent.load(Ordering::Relaxed), 0);

    let sinks: Vec<UdpSocket> = (0..2).map(|_| UdpSocket::bind("127.0.0.1:0").unwrap()).collect();
    a.set_trap_sinks(sinks.iter().map(|s| s.local_addr().unwrap()).collect());
    let payload = vec![
        Varbind::new(oid![1, 3, 6, 1, 4, 1, 28218, 3, 1, 1, 1, 2], BerValue::Integer(2)),
        Varbind::new(oid![1, 3, 6, 1, 4, 1, 28218, 3, 1, 1, 4, 2], BerValue::Integer(2)),
    ];
    assert_eq!(a.emit_trap(notification.clone(), payload.clone()), 2);
    assert_eq!(a.stats().traps_sent.load(Ordering::Relaxed), 2);

    let mut got = Vec::new();
    for s in &sinks {
        s.set_read_timeout(Some(Duration::from_secs(2))).unwrap();
        let mut buf = [0u8; 1500];
        let (n, _) = s.recv_from(&mut buf).unwrap();
        got.push(buf[..n].to_vec());
    }
    assert_eq!(got[0], got[1]);
    let msg = decode_message(&got[0]).unwrap();
    assert_eq!(msg.pdu.kind, PduKind::Trap);
    assert_eq!(msg.pdu.varbinds[0].oid.as_slice(), SYS_UPTIME);
    assert_eq!(msg.pdu.varbinds[1].oid.as_slice(), SNMP_TRAP_OID);
    let event = TrapEvent::from_pdu(&msg.pdu).unwrap();
    assert_eq!(event.notification, notification);
    assert_eq!(event.varbinds, payload);
}
