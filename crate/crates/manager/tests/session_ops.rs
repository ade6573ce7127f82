mod common;

use common::{dead_session, mib, oid, session, topology};
use marf_core::codec::{BerValue, ErrorStatus, Varbind};
use marf_manager::render::{format_varbind, parse_assignment};
use marf_manager::ManagerError;
use marf_pipeline::TopologyConfig;

#[test]
fn get_reads_through_the_master() {
    let t = topology(TopologyConfig::default());
    let s = session(t.master_addr());
    let vbs = s.get(&[oid("serviceName.1"), oid("serviceStatus.3"), oid("serviceName.9")]).unwrap();
    assert_eq!(vbs[0].value, BerValue::string("sample-loading"));
    assert_eq!(vbs[1].value, BerValue::Integer(1));
    assert!(vbs[2].value.is_exception());
    assert_eq!(format_varbind(mib(), &vbs[0]), "serviceName.1 = STRING: \"sample-loading\"");
    assert_eq!(format_varbind(mib(), &vbs[1]), "serviceStatus.3 = INTEGER: up(1)");
}

#[test]
fn set_round_trips_and_respects_communities() {
    let t = topology(TopologyConfig::default());
    let s = session(t.master_addr());
    let vb = parse_assignment(mib(), "iPoles.3=12").unwrap();
    assert_eq!(vb, Varbind::new(oid("iPoles.3"), BerValue::Integer(12)));
    assert_eq!(s.set(vec![vb]).unwrap()[0].value, BerValue::Integer(12));
    assert_eq!(s.get_one(&oid("iPoles.3")).unwrap(), BerValue::Integer(12));
    assert_eq!(t.feature_extraction.kind(), marf_pipeline::features::FeatureKind::lpc(12, 256));

    // the read community may not write
    let mut ro = s.target().clone();
    ro.write_community = ro.read_community.clone();
    let ro = marf_manager::Session::open(ro).unwrap();
    let err = ro.set(vec![Varbind::new(oid("iPoles.3"), BerValue::Integer(9))]).unwrap_err();
    assert!(matches!(err, ManagerError::ErrorResponse { status: ErrorStatus::NoAccess, .. }), "{err:?}");
    assert_eq!(s.get_one(&oid("iPoles.3")).unwrap(), BerValue::Integer(12));
}

#[test]
fn enum_labels_parse_as_their_values() {
    let vb = parse_assignment(mib(), "serviceStatus.2=down").unwrap();
    assert_eq!(vb.value, BerValue::Integer(2));
    assert_eq!(parse_assignment(mib(), "serviceName.2=s:7").unwrap().value, BerValue::string("7"));
    assert!(parse_assignment(mib(), "iPoles.3").is_err());
}

#[test]
fn walk_of_service_table_sees_every_instance_once() {
    let t = topology(TopologyConfig::default());
    let s = session(t.master_addr());
    let vbs = s.walk(&oid("serviceTable")).unwrap();
    // 5 rows of 7 columns
    assert_eq!(vbs.len(), 35);
    assert!(vbs.windows(2).all(|w| w[0].oid < w[1].oid));
    assert!(s.walk(&oid("serviceTable").child(99)).unwrap().is_empty());
}

#[test]
fn master_walk_agrees_with_each_agent() {
    let t = topology(TopologyConfig::default());
    let s = session(t.master_addr());
    let whole = s.walk(&oid("marf")).unwrap();
    let per_table: Vec<Varbind> = [
        "storageTable",
        "serviceTable",
        "sampleLoadingServiceTable",
        "preprocessingServiceTable",
        "featureextractionServiceTable",
        "lpcServiceTable",
        "classificationServiceTable",
        "appTable",
    ]
    .iter()
    .flat_map(|n| s.walk(&mib().table(n).unwrap().table_oid).unwrap())
    .collect();
    let mut sorted = per_table.clone();
    sorted.sort_by(|a, b| a.oid.cmp(&b.oid));
    assert_eq!(whole, sorted);

    // each stage agent's own view matches the same instances seen via the master
    for i in 1..=4 {
        let direct = session(t.agent_addr(i)).walk(&oid("marf")).unwrap();
        let oids: Vec<_> = direct.iter().map(|vb| vb.oid.clone()).collect();
        let dump: Vec<_> = t.agent(i).dump().into_iter().map(|vb| vb.oid).collect();
        assert_eq!(oids, dump, "agent {i}");
        for vb in &direct {
            if vb.oid.starts_with(&oid("serviceUptime")) {
                continue;
            }
            assert!(whole.iter().any(|w| w == vb), "{} missing from master walk", vb.oid);
        }
    }
}

#[test]
fn getbulk_returns_successors() {
    let t = topology(TopologyConfig::default());
    let s = session(t.master_addr());
    let vbs = s.getbulk(0, 5, &[oid("serviceName")]).unwrap();
    let names: Vec<_> = vbs.iter().map(|vb| vb.oid.clone()).collect();
    assert_eq!(names, (1..=5).map(|i| oid(&format!("serviceName.{i}"))).collect::<Vec<_>>());
}

#[test]
fn unreachable_target_times_out() {
    let err = dead_session().get(&[oid("serviceName.1")]).unwrap_err();
    assert!(matches!(err, ManagerError::Timeout(_)), "{err:?}");
}
