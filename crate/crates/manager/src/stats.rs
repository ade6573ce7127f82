//! Periodic counter polling, wrap-aware rates, and CSV export/import.

use std::io::{Read, Write};
use std::time::{Duration, Instant};

use chrono::{DateTime, SecondsFormat, Utc};
use marf_core::codec::BerValue;
use marf_core::Oid;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::session::{ManagerError, Session};

pub const MIN_INTERVAL: Duration = Duration::from_millis(100);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatSample {
    pub time: DateTime<Utc>,
    /// None marks a gap: the poll timed out or the instance was missing.
    pub value: Option<i64>,
    /// Per second, against the previous sample; only for Counter32 and
    /// TimeTicks values with no gap in between.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatSeries {
    pub target: String,
    pub oid_name: String,
    pub samples: Vec<StatSample>,
    #[serde(skip)]
    last_counter: Option<u32>,
}

/// Equal when target, name and samples agree; the wrap-tracking state is
/// not part of a series' identity.
impl PartialEq for StatSeries {
    fn eq(&self, other: &Self) -> bool {
        self.target == other.target && self.oid_name == other.oid_name && self.samples == other.samples
    }
}

impl StatSeries {
    pub fn new(target: impl Into<String>, oid_name: impl Into<String>) -> StatSeries {
        StatSeries { target: target.into(), oid_name: oid_name.into(), samples: Vec::new(), last_counter: None }
    }

    /// Appends a sample. Times are forced strictly increasing.
    pub fn record(&mut self, time: DateTime<Utc>, value: Option<&BerValue>) {
        let time = match self.samples.last() {
            Some(prev) if time <= prev.time => prev.time + chrono::Duration::microseconds(1),
            _ => time,
        };
        let counter = match value {
            Some(BerValue::Counter32(c) | BerValue::TimeTicks(c)) => Some(*c),
            _ => None,
        };
        let rate = match (self.samples.last(), self.last_counter, counter) {
            (Some(prev), Some(a), Some(b)) => {
                let secs = (time - prev.time).num_nanoseconds().unwrap_or(i64::MAX) as f64 / 1e9;
                Some(counter_delta(a, b) as f64 / secs)
            }
            _ => None,
        };
        let value = match value {
            Some(BerValue::Integer(n)) => Some(*n),
            Some(BerValue::Counter32(n) | BerValue::TimeTicks(n)) => Some(*n as i64),
            _ => None,
        };
        self.last_counter = counter;
        self.samples.push(StatSample { time, value, rate });
    }

    /// Keeps only the newest `n` samples.
    pub fn truncate_front(&mut self, n: usize) {
        if self.samples.len() > n {
            self.samples.drain(..self.samples.len() - n);
        }
    }
}

/// Increase of a 32-bit counter that may have wrapped once.
pub fn counter_delta(prev: u32, cur: u32) -> u32 {
    cur.wrapping_sub(prev)
}

/// One GET of every OID; a timeout records a gap in each series.
pub fn poll_once(session: &Session, oids: &[Oid], series: &mut [StatSeries]) -> Result<(), ManagerError> {
    debug_assert_eq!(oids.len(), series.len());
    let now = Utc::now();
    match session.get(oids) {
        Ok(vbs) => {
            for (s, vb) in series.iter_mut().zip(&vbs) {
                s.record(now, (!vb.value.is_exception()).then_some(&vb.value));
            }
            Ok(())
        }
        Err(e) => {
            for s in series.iter_mut() {
                s.record(now, None);
            }
            match e {
                ManagerError::Timeout(_) => Ok(()),
                e => Err(e),
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum PollError {
    #[error("interval must be at least {} ms", MIN_INTERVAL.as_millis())]
    IntervalTooShort,
    #[error(transparent)]
    Manager(#[from] ManagerError),
}

/// Polls `oids` (name, oid) on every session each `interval` for
/// `duration`. Timeouts become gaps; other failures abort.
pub fn poll_stats(
    sessions: &[(String, &Session)],
    oids: &[(String, Oid)],
    interval: Duration,
    duration: Duration,
) -> Result<Vec<StatSeries>, PollError> {
    if interval < MIN_INTERVAL {
        return Err(PollError::IntervalTooShort);
    }
    let only_oids: Vec<Oid> = oids.iter().map(|(_, o)| o.clone()).collect();
    let mut per_target: Vec<Vec<StatSeries>> = sessions
        .iter()
        .map(|(label, _)| oids.iter().map(|(name, _)| StatSeries::new(label.clone(), name.clone())).collect())
        .collect();
    let start = Instant::now();
    let mut tick = 0u32;
    loop {
        for ((_, s), series) in sessions.iter().zip(per_target.iter_mut()) {
            poll_once(s, &only_oids, series)?;
        }
        tick += 1;
        let next = interval * tick;
        if next > duration {
            break;
        }
        std::thread::sleep(next.saturating_sub(start.elapsed()));
    }
    Ok(per_target.into_iter().flatten().collect())
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    #[serde(rename = "iso-time")]
    time: String,
    target: String,
    #[serde(rename = "oid-name")]
    oid_name: String,
    value: Option<i64>,
    rate: Option<f64>,
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("bad timestamp {0:?}")]
    Time(String),
}

/// All samples in time order; ties keep series order.
pub fn write_csv(series: &[StatSeries], w: impl Write) -> Result<(), CsvError> {
    let mut rows: Vec<(&DateTime<Utc>, usize, CsvRow)> = Vec::new();
    for (i, s) in series.iter().enumerate() {
        for p in &s.samples {
            rows.push((
                &p.time,
                i,
                CsvRow {
                    time: p.time.to_rfc3339_opts(SecondsFormat::Nanos, true),
                    target: s.target.clone(),
                    oid_name: s.oid_name.clone(),
                    value: p.value,
                    rate: p.rate,
                },
            ));
        }
    }
    rows.sort_by(|a, b| a.0.cmp(b.0).then(a.1.cmp(&b.1)));
    let mut out = csv::Writer::from_writer(w);
    for (_, _, r) in rows {
        out.serialize(r)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Inverse of [`write_csv`]: one series per (target, oid-name), in order of
/// first appearance.
pub fn read_csv(r: impl Read) -> Result<Vec<StatSeries>, CsvError> {
    let mut out: Vec<StatSeries> = Vec::new();
    for row in csv::Reader::from_reader(r).deserialize() {
        let row: CsvRow = row?;
        let time =
            DateTime::parse_from_rfc3339(&row.time).map_err(|_| CsvError::Time(row.time.clone()))?.with_timezone(&Utc);
        let pos = match out.iter().position(|s| s.target == row.target && s.oid_name == row.oid_name) {
            Some(p) => p,
            None => {
                out.push(StatSeries::new(row.target.clone(), row.oid_name.clone()));
                out.len() - 1
            }
        };
        out[pos].samples.push(StatSample { time, value: row.value, rate: row.rate });
    }
    Ok(out)
}
