mod common;

use std::time::Duration;

use chrono::{TimeZone, Utc};
use common::{dead_session, oid, session, topology};
use marf_core::codec::BerValue;
use marf_manager::stats::{counter_delta, poll_once, poll_stats, read_csv, write_csv, PollError};
use marf_manager::StatSeries;
use marf_pipeline::TopologyConfig;
use proptest::prelude::*;

fn at(secs: i64, nanos: u32) -> chrono::DateTime<Utc> {
    Utc.timestamp_opt(1_700_000_000 + secs, nanos).unwrap()
}

#[test]
fn constant_counter_has_zero_rate() {
    let mut s = StatSeries::new("t", "c");
    for i in 0..4 {
        s.record(at(i, 0), Some(&BerValue::Counter32(42)));
    }
    let rates: Vec<_> = s.samples.iter().map(|p| p.rate).collect();
    assert_eq!(rates, vec![None, Some(0.0), Some(0.0), Some(0.0)]);
}

#[test]
fn rate_is_delta_over_elapsed_seconds() {
    let mut s = StatSeries::new("t", "c");
    s.record(at(0, 0), Some(&BerValue::Counter32(100)));
    s.record(at(1, 0), Some(&BerValue::Counter32(110)));
    s.record(at(1, 500_000_000), Some(&BerValue::Counter32(120)));
    assert_eq!(s.samples[1].rate, Some(10.0));
    assert_eq!(s.samples[2].rate, Some(20.0));
}

#[test]
fn wrap_counts_the_distance_through_zero() {
    assert_eq!(counter_delta(4_294_967_290, 4), 10);
    let mut s = StatSeries::new("t", "c");
    s.record(at(0, 0), Some(&BerValue::Counter32(4_294_967_290)));
    s.record(at(1, 0), Some(&BerValue::Counter32(4)));
    assert_eq!(s.samples[1].rate, Some(10.0));
}

#[test]
fn gauges_and_gaps_have_no_rate() {
    let mut s = StatSeries::new("t", "c");
    s.record(at(0, 0), Some(&BerValue::Integer(5)));
    s.record(at(1, 0), Some(&BerValue::Integer(9)));
    s.record(at(2, 0), Some(&BerValue::Counter32(1)));
    s.record(at(3, 0), None);
    s.record(at(4, 0), Some(&BerValue::Counter32(3)));
    s.record(at(5, 0), Some(&BerValue::Counter32(4)));
    let got: Vec<_> = s.samples.iter().map(|p| (p.value, p.rate)).collect();
    assert_eq!(
        got,
        vec![(Some(5), None), (Some(9), None), (Some(1), None), (None, None), (Some(3), None), (Some(4), Some(1.0))]
    );
}

#[test]
fn timestamps_never_repeat() {
    let mut s = StatSeries::new("t", "c");
    s.record(at(0, 0), Some(&BerValue::Counter32(1)));
    s.record(at(0, 0), Some(&BerValue::Counter32(2)));
    assert!(s.samples[1].time > s.samples[0].time);
    assert!(s.samples[1].rate.unwrap().is_finite());
}

#[test]
fn interval_floor_is_enforced() {
    let t = topology(TopologyConfig::default());
    let s = session(t.master_addr());
    let r = poll_stats(
        &[("m".into(), &s)],
        &[("x".into(), oid("serviceInRequests.1"))],
        Duration::from_millis(50),
        Duration::from_secs(1),
    );
    assert!(matches!(r, Err(PollError::IntervalTooShort)));
}

#[test]
fn polling_a_live_agent_tracks_requests() {
    let t = topology(TopologyConfig::default());
    let s = session(t.agent_addr(1));
    let series = poll_stats(
        &[("stage1".into(), &s)],
        &[("serviceInRequests.1".into(), oid("serviceInRequests.1")), ("serviceName.1".into(), oid("serviceName.1"))],
        Duration::from_millis(100),
        Duration::from_millis(300),
    )
    .unwrap();
    assert_eq!(series.len(), 2);
    assert_eq!(series[0].samples.len(), 4);
    assert!(series[0].samples.iter().skip(1).all(|p| p.rate == Some(0.0)));
    // not numeric: recorded as gaps
    assert!(series[1].samples.iter().all(|p| p.value.is_none()));
}

#[test]
fn timeouts_become_gaps_and_polling_continues() {
    let t = topology(TopologyConfig::default());
    let live = session(t.master_addr());
    let dead = dead_session();
    let oids = [oid("serviceInRequests.1")];
    let mut series = vec![StatSeries::new("m", "serviceInRequests.1")];
    poll_once(&live, &oids, &mut series).unwrap();
    poll_once(&dead, &oids, &mut series).unwrap();
    poll_once(&live, &oids, &mut series).unwrap();
    poll_once(&live, &oids, &mut series).unwrap();
    let p = &series[0].samples;
    assert_eq!(p.len(), 4);
    assert!(p[1].value.is_none() && p[1].rate.is_none());
    assert!(p[2].value.is_some() && p[2].rate.is_none());
    assert!(p[3].rate.is_some());
}

#[test]
fn csv_has_the_documented_header() {
    let mut s = StatSeries::new("127.0.0.1:161", "serviceInRequests.1");
    s.record(at(0, 5), Some(&BerValue::Counter32(1)));
    let mut out = Vec::new();
    write_csv(&[s], &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iso-time,target,oid-name,value,rate"));
    assert_eq!(lines.next(), Some("2023-11-14T22:13:20.000000005Z,127.0.0.1:161,serviceInRequests.1,1,"));
}

fn value_strategy() -> impl Strategy<Value = Option<BerValue>> {
    prop_oneof![
        Just(None),
        any::<u32>().prop_map(|v| Some(BerValue::Counter32(v))),
        any::<u32>().prop_map(|v| Some(BerValue::TimeTicks(v))),
        any::<i32>().prop_map(|v| Some(BerValue::Integer(v as i64))),
    ]
}

proptest! {
    #[test]
    fn csv_round_trip_is_exact(
        plan in prop::collection::vec(prop::collection::vec((0u32..5_000_000, value_strategy()), 0..12), 1..4)
    ) {
        let series: Vec<StatSeries> = plan
            .iter()
            .enumerate()
            .map(|(i, points)| {
                let mut s = StatSeries::new(format!("10.0.0.{i}:161"), format!("col,\"{i}\""));
                let mut t = at(0, 0);
                for (step_us, v) in points {
                    t += chrono::Duration::microseconds(*step_us as i64) + chrono::Duration::nanoseconds(i as i64 + 1);
                    s.record(t, v.as_ref());
                }
                s
            })
            .filter(|s| !s.samples.is_empty())
            .collect();
        let mut buf = Vec::new();
        write_csv(&series, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        let mut expect = series.clone();
        // read_csv orders series by first appearance in time
        expect.sort_by_key(|s| s.samples[0].time);
        let mut got = back;
        got.sort_by_key(|s| s.samples[0].time);
        prop_assert_eq!(got, expect);
    }
}
