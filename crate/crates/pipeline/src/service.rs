//! State shared by every service: identity, status, counters, and the
//! serviceTable row its agent serves.

use std::sync::atomic::{AtomicU32, AtomicU8, Ordering};
use std::sync::{Arc, Mutex, Weak};
use std::time::Instant;

use marf_core::agent::{Agent, AgentError, RowSource};
use marf_core::codec::{counter_inc, BerValue, ErrorStatus, Varbind};
use marf_core::smi::Mib;
use marf_core::Oid;

use crate::StageError;

/// serviceType values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServiceKind {
    Application = 1,
    Marf = 2,
    SampleLoading = 3,
    Preprocessing = 4,
    FeatureExtraction = 5,
    Classification = 6,
}

/// serviceStatus values. Starting and stopping are transient and never
/// accepted from a manager.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Up = 1,
    Down = 2,
    Starting = 3,
    Stopping = 4,
}

impl Status {
    pub fn from_code(c: i64) -> Option<Status> {
        [Status::Up, Status::Down, Status::Starting, Status::Stopping].into_iter().find(|s| *s as i64 == c)
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Up => "up",
            Status::Down => "down",
            Status::Starting => "starting",
            Status::Stopping => "stopping",
        }
    }
}

/// OIDs a status-change notification needs.
#[derive(Debug, Clone)]
struct TrapOids {
    notification: Oid,
    index_col: Oid,
    status_col: Oid,
}

pub struct ServiceCore {
    index: u32,
    name: String,
    kind: ServiceKind,
    status: AtomicU8,
    up_since: Mutex<Option<Instant>>,
    in_requests: AtomicU32,
    out_errors: AtomicU32,
    /// One pipeline request at a time.
    serial: Mutex<()>,
    agent: Weak<Agent>,
    trap: TrapOids,
}

impl std::fmt::Debug for ServiceCore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ServiceCore").field("index", &self.index).field("name", &self.name).finish_non_exhaustive()
    }
}

impl ServiceCore {
    /// Creates an up service and registers its serviceTable row on `agent`.
    pub fn new(
        index: u32,
        name: &str,
        kind: ServiceKind,
        agent: &Arc<Agent>,
        mib: &Mib,
    ) -> Result<Arc<ServiceCore>, AgentError> {
        let table = mib.table("serviceTable").expect("bundled MIB has serviceTable");
        let col = |n: &str| table.column(n).expect("serviceTable column").oid.clone();
        let core = Arc::new(ServiceCore {
            index,
            name: name.to_string(),
            kind,
            status: AtomicU8::new(Status::Up as u8),
            up_since: Mutex::new(Some(Instant::now())),
            in_requests: AtomicU32::new(0),
            out_errors: AtomicU32::new(0),
            serial: Mutex::new(()),
            agent: Arc::downgrade(agent),
            trap: TrapOids {
                notification: mib.oid_of("serviceStatusChange").expect("bundled MIB has serviceStatusChange"),
                index_col: col("serviceIndex"),
                status_col: col("serviceStatus"),
            },
        });
        agent.register_table(table, Arc::new(ServiceRow(core.clone())))?;
        Ok(core)
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ServiceKind {
        self.kind
    }

    pub fn status(&self) -> Status {
        Status::from_code(self.status.load(Ordering::SeqCst) as i64).expect("only valid codes are stored")
    }

    pub fn in_requests(&self) -> u32 {
        self.in_requests.load(Ordering::SeqCst)
    }

    pub fn out_errors(&self) -> u32 {
        self.out_errors.load(Ordering::SeqCst)
    }

    /// Hundredths of a second since the service last came up; 0 unless up.
    pub fn uptime_ticks(&self) -> u32 {
        match *self.up_since.lock().unwrap() {
            Some(t) if self.status() == Status::Up => (t.elapsed().as_millis() / 10) as u32,
            _ => 0,
        }
    }

    fn set_status(&self, s: Status) {
        let old = self.status.swap(s as u8, Ordering::SeqCst);
        if old == s as u8 {
            return;
        }
        *self.up_since.lock().unwrap() = (s == Status::Up).then(Instant::now);
        log::info!("service {} ({}) is now {}", self.index, self.name, s.label());
        if matches!(s, Status::Up | Status::Down) {
            self.notify(s);
        }
    }

    fn notify(&self, s: Status) {
        let Some(agent) = self.agent.upgrade() else { return };
        let varbinds = vec![
            Varbind::new(self.trap.index_col.child(self.index), BerValue::Integer(self.index as i64)),
            Varbind::new(self.trap.status_col.child(self.index), BerValue::Integer(s as i64)),
        ];
        agent.emit_trap(self.trap.notification.clone(), varbinds);
    }

    /// Waits for any request in progress, then marks the service down.
    pub fn stop(&self) {
        if self.status() == Status::Down {
            return;
        }
        self.set_status(Status::Stopping);
        let _idle = self.serial.lock().unwrap();
        self.set_status(Status::Down);
    }

    pub fn start(&self) {
        if self.status() == Status::Up {
            return;
        }
        self.set_status(Status::Starting);
        self.set_status(Status::Up);
    }

    /// Runs one pipeline request: refuses unless up, serializes with other
    /// requests, and maintains serviceInRequests/serviceOutErrors.
    pub fn serve<T, E: From<StageError>>(&self, work: impl FnOnce() -> Result<T, E>) -> Result<T, E> {
        let _one = self.serial.lock().unwrap();
        if self.status() != Status::Up {
            return Err(StageError::Unavailable(self.index).into());
        }
        bump(&self.in_requests);
        let r = work();
        if r.is_err() {
            bump(&self.out_errors);
        }
        r
    }
}

pub(crate) fn bump(c: &AtomicU32) {
    let _ = c.fetch_update(Ordering::SeqCst, Ordering::SeqCst, |v| Some(counter_inc(v, 1)));
}

/// Stores `v` as micro-units, saturating at the Integer32 range.
pub(crate) fn micro(v: f64) -> i64 {
    (v * 1e6).round().clamp(i32::MIN as f64, i32::MAX as f64) as i64
}

/// The single serviceTable row of one service.
struct ServiceRow(Arc<ServiceCore>);

impl RowSource for ServiceRow {
    fn rows(&self) -> Vec<Vec<u32>> {
        vec![vec![self.0.index]]
    }

    fn read(&self, column: &str, index: &[u32]) -> Option<BerValue> {
        let s = &self.0;
        if index != [s.index] {
            return None;
        }
        Some(match column {
            "serviceIndex" => BerValue::Integer(s.index as i64),
            "serviceName" => BerValue::string(s.name.clone()),
            "serviceType" => BerValue::Integer(s.kind as i64),
            "serviceStatus" => BerValue::Integer(s.status() as i64),
            "serviceUptime" => BerValue::TimeTicks(s.uptime_ticks()),
            "serviceInRequests" => BerValue::Counter32(s.in_requests()),
            "serviceOutErrors" => BerValue::Counter32(s.out_errors()),
            _ => return None,
        })
    }

    fn validate(&self, column: &str, _index: &[u32], value: &BerValue) -> Result<(), ErrorStatus> {
        match (column, value) {
            ("serviceStatus", BerValue::Integer(v)) if *v == Status::Up as i64 || *v == Status::Down as i64 => Ok(()),
            _ => Err(ErrorStatus::WrongValue),
        }
    }

    fn commit(&self, column: &str, _index: &[u32], value: &BerValue) {
        if let ("serviceStatus", BerValue::Integer(v)) = (column, value) {
            if *v == Status::Up as i64 {
                self.0.start();
            } else {
                self.0.stop();
            }
        }
    }
}
