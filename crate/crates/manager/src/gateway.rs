//! HTTP/JSON facade over SNMP for the console.
//!
//! Every response body is a JSON object carrying `schemaVersion`. Values are
//! the raw SNMP values of the instances they name; enumerations get a
//! separate `labels` object.

use std::collections::BTreeMap;
use std::io;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, RwLock};
use std::thread::JoinHandle;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use marf_core::codec::{BerValue, ErrorStatus, Varbind};
use marf_core::smi::{Mib, ResolvedTable, Syntax};
use marf_core::Oid;
use serde_json::{json, Map, Value};

use crate::render::{parse_value, printable, table_render};
use crate::session::{ManagerError, Session, TargetSpec};
use crate::stats::{poll_once, StatSeries};
use crate::traps::TrapListener;

pub const SCHEMA_VERSION: u32 = 1;

/// serviceTable columns sampled for /stats.
const SHUTDOWN_GRACE: Duration = Duration::from_millis(500);

pub const STAT_COLUMNS: [&str; 3] = ["serviceInRequests", "serviceOutErrors", "serviceUptime"];

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    /// Usually the master agent.
    pub target: TargetSpec,
    pub poll_interval: Duration,
    /// Samples kept per series.
    pub history: usize,
}

impl GatewayConfig {
    pub fn new(target: TargetSpec) -> GatewayConfig {
        GatewayConfig { target, poll_interval: Duration::from_secs(1), history: 300 }
    }
}

struct AppState {
    target: TargetSpec,
    mib: &'static Mib,
    traps: Option<Arc<TrapListener>>,
    /// service index → one series per STAT_COLUMNS entry
    stats: RwLock<BTreeMap<u32, Vec<StatSeries>>>,
}

type Shared = Arc<AppState>;

fn reply(status: StatusCode, mut body: Map<String, Value>) -> Response {
    body.insert("schemaVersion".into(), json!(SCHEMA_VERSION));
    (status, Json(Value::Object(body))).into_response()
}

fn error(status: StatusCode, error: &str, detail: impl Into<String>) -> Response {
    let mut m = Map::new();
    m.insert("error".into(), json!(error));
    m.insert("detail".into(), json!(detail.into()));
    reply(status, m)
}

fn manager_error(e: ManagerError) -> Response {
    match e {
        ManagerError::Timeout(a) => error(StatusCode::SERVICE_UNAVAILABLE, "timeout", format!("no response from {a}")),
        ManagerError::ErrorResponse { status, index } => {
            error(StatusCode::CONFLICT, status.name(), format!("error-index {index}"))
        }
        other => error(StatusCode::BAD_GATEWAY, "agentError", other.to_string()),
    }
}

pub fn value_json(v: &BerValue) -> Value {
    match v {
        BerValue::Integer(n) => json!(n),
        BerValue::Counter32(n) | BerValue::TimeTicks(n) => json!(n),
        BerValue::OctetString(b) => match printable(b) {
            Some(s) => json!(s),
            None => json!(b.iter().map(|x| format!("{x:02x}")).collect::<String>()),
        },
        BerValue::OidValue(o) => json!(o.to_string()),
        other => json!(other.type_name()),
    }
}

fn label(syntax: &Syntax, v: &BerValue) -> Option<String> {
    match (syntax, v) {
        (Syntax::Enum(ls), BerValue::Integer(n)) => ls.iter().find(|(_, x)| x == n).map(|(l, _)| l.clone()),
        _ => None,
    }
}

/// Tables whose rows extend serviceEntry, directly or through a chain.
fn extension_tables(mib: &Mib) -> impl Iterator<Item = &ResolvedTable> {
    mib.tables.iter().filter(|t| t.is_augmenting() && t.chain.first().map(String::as_str) == Some("serviceEntry"))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    tokio::task::spawn_blocking(f).await.expect("blocking task panicked")
}

fn services_body(st: &AppState) -> Result<Map<String, Value>, ManagerError> {
    let s = Session::open(st.target.clone())?;
    let service_table = st.mib.table("serviceTable").expect("bundled MIB");
    let base = table_render(&s.walk(&service_table.entry_oid)?, service_table);
    let mut ext = Vec::new();
    for t in extension_tables(st.mib) {
        ext.push((t, table_render(&s.walk(&t.entry_oid)?, t)));
    }
    let mut services = Vec::new();
    let mut all_up = !base.rows.is_empty();
    for (idx, cells) in &base.rows {
        let mut obj = Map::new();
        let mut labels = Map::new();
        obj.insert("index".into(), json!(idx.first().copied().unwrap_or(0)));
        for ((name, cell), col) in base.columns.iter().zip(cells).zip(&service_table.effective_columns) {
            if let Some(v) = cell {
                obj.insert(name.clone(), value_json(v));
                if let Some(l) = label(&col.syntax, v) {
                    labels.insert(name.clone(), json!(l));
                }
            }
        }
        all_up &= base.cell(idx, "serviceStatus") == Some(&BerValue::Integer(1));
        let mut extensions = Map::new();
        for (t, rendered) in &ext {
            let Some((_, row)) = rendered.rows.iter().find(|(i, _)| i == idx) else { continue };
            let mut cols = Map::new();
            for ((name, cell), col) in rendered.columns.iter().zip(row).zip(&t.effective_columns) {
                let own = t.own_columns.iter().any(|c| c.oid == col.oid);
                if let (true, Some(v)) = (own, cell) {
                    cols.insert(name.clone(), value_json(v));
                    if let Some(l) = label(&col.syntax, v) {
                        labels.insert(format!("{}.{name}", t.name), json!(l));
                    }
                }
            }
            extensions.insert(t.name.clone(), Value::Object(cols));
        }
        obj.insert("labels".into(), Value::Object(labels));
        obj.insert("extensions".into(), Value::Object(extensions));
        services.push(Value::Object(obj));
    }
    let mut body = Map::new();
    // not a MIB object: up iff every service row reports up(1)
    body.insert("pipelineStatus".into(), json!(if all_up { "up" } else { "down" }));
    body.insert("services".into(), Value::Array(services));
    Ok(body)
}

async fn list_services(State(st): State<Shared>) -> Response {
    match blocking(move || services_body(&st)).await {
        Ok(b) => reply(StatusCode::OK, b),
        Err(e) => manager_error(e),
    }
}

async fn service_stats(State(st): State<Shared>, Path(index): Path<u32>) -> Response {
    let stats = st.stats.read().unwrap();
    let Some(series) = stats.get(&index) else {
        return error(StatusCode::NOT_FOUND, "unknownService", format!("no service {index}"));
    };
    let mut b = Map::new();
    b.insert("index".into(), json!(index));
    b.insert("series".into(), serde_json::to_value(series).expect("series serialize"));
    reply(StatusCode::OK, b)
}

/// The writable-looking column named `name` in serviceTable or an extension
/// table.
fn find_column<'m>(mib: &'m Mib, name: &str) -> Option<&'m marf_core::smi::ColumnDef> {
    let base = mib.table("serviceTable")?;
    std::iter::once(base).chain(extension_tables(mib)).flat_map(|t| t.own_columns.iter()).find(|c| c.name == name)
}

fn configure(st: &AppState, index: u32, body: &[u8]) -> Response {
    let Ok(Value::Object(req)) = serde_json::from_slice::<Value>(body) else {
        return error(StatusCode::BAD_REQUEST, "badRequest", "body must be a JSON object of column to value");
    };
    if req.is_empty() {
        return error(StatusCode::BAD_REQUEST, "badRequest", "no columns given");
    }
    let mut varbinds = Vec::new();
    let mut names = Vec::new();
    for (name, v) in &req {
        let Some(col) = find_column(st.mib, name) else {
            return error(StatusCode::BAD_REQUEST, "unknownColumn", name.clone());
        };
        let raw = match v {
            Value::Number(n) => n.to_string(),
            Value::String(s) => s.clone(),
            Value::Bool(b) => if *b { "1" } else { "2" }.to_string(),
            _ => return error(StatusCode::BAD_REQUEST, "badValue", format!("{name}: unsupported JSON value")),
        };
        let value = match parse_value(st.mib, Some(&col.syntax), &raw) {
            Ok(v) => v,
            Err(e) => return error(StatusCode::BAD_REQUEST, "badValue", format!("{name}: {e}")),
        };
        varbinds.push(Varbind::new(col.oid.child(index), value));
        names.push(name.clone());
    }
    let session = match Session::open(st.target.clone()) {
        Ok(s) => s,
        Err(e) => return manager_error(e),
    };
    let status_oid = st.mib.oid_of("serviceStatus").expect("bundled MIB").child(index);
    match session.get_one(&status_oid) {
        Ok(v) if v.is_exception() => {
            return error(StatusCode::NOT_FOUND, "unknownService", format!("no service {index}"))
        }
        Ok(_) => {}
        Err(e) => return manager_error(e),
    }
    match session.set(varbinds) {
        Ok(vbs) => {
            let applied: Map<String, Value> =
                names.into_iter().zip(&vbs).map(|(n, vb)| (n, value_json(&vb.value))).collect();
            let mut b = Map::new();
            b.insert("index".into(), json!(index));
            b.insert("status".into(), json!(ErrorStatus::NoError.name()));
            b.insert("applied".into(), Value::Object(applied));
            reply(StatusCode::OK, b)
        }
        Err(ManagerError::ErrorResponse { status, index: ei }) => {
            let mut b = Map::new();
            b.insert("error".into(), json!(status.name()));
            b.insert("errorIndex".into(), json!(ei));
            if let Some(n) = ei.checked_sub(1).and_then(|i| names.get(i)) {
                b.insert("column".into(), json!(n));
            }
            reply(StatusCode::CONFLICT, b)
        }
        Err(e) => manager_error(e),
    }
}

async fn post_config(State(st): State<Shared>, Path(index): Path<u32>, body: Bytes) -> Response {
    blocking(move || configure(&st, index, &body)).await
}

async fn list_traps(State(st): State<Shared>) -> Response {
    let mut b = Map::new();
    let (events, malformed, received) = match &st.traps {
        Some(t) => (t.events(), t.malformed_count(), t.received_count()),
        None => (Vec::new(), 0, 0),
    };
    let events: Vec<Value> = events
        .iter()
        .rev()
        .map(|r| {
            let vbs: Vec<Value> = r
                .event
                .varbinds
                .iter()
                .map(|vb| json!({"oid": st.mib.name_of(&vb.oid), "value": value_json(&vb.value)}))
                .collect();
            json!({
                "seq": r.seq,
                "received": r.received.to_rfc3339(),
                "source": r.source.to_string(),
                "notification": st.mib.name_of(&r.event.notification),
                "uptime": r.event.timestamp,
                "varbinds": vbs,
            })
        })
        .collect();
    b.insert("listening".into(), json!(st.traps.is_some()));
    b.insert("received".into(), json!(received));
    b.insert("malformed".into(), json!(malformed));
    // newest first
    b.insert("events".into(), Value::Array(events));
    reply(StatusCode::OK, b)
}

fn router(state: Shared) -> Router {
    Router::new()
        .route("/api/services", get(list_services))
        .route("/api/services/{index}/stats", get(service_stats))
        .route("/api/services/{index}/config", post(post_config))
        .route("/api/traps", get(list_traps))
        .with_state(state)
}

/// One poll of every service row: discovers indexes from serviceStatus,
/// then samples STAT_COLUMNS for each.
fn poll_services(st: &AppState, history: usize, stop: &AtomicBool) {
    let Ok(s) = Session::open(st.target.clone()) else { return };
    let status = st.mib.oid_of("serviceStatus").expect("bundled MIB");
    let indexes: Vec<u32> = match s.walk(&status) {
        Ok(vbs) => vbs.iter().filter_map(|vb| vb.oid.as_slice().last().copied()).collect(),
        // keep polling known services so the outage shows up as gaps
        Err(_) => st.stats.read().unwrap().keys().copied().collect(),
    };
    for i in indexes {
        if stop.load(Ordering::SeqCst) {
            return;
        }
        let oids: Vec<Oid> = STAT_COLUMNS.iter().map(|c| st.mib.oid_of(c).expect("bundled MIB").child(i)).collect();
        let mut series = st.stats.read().unwrap().get(&i).cloned().unwrap_or_else(|| {
            STAT_COLUMNS.iter().map(|c| StatSeries::new(st.target.addr.to_string(), format!("{c}.{i}"))).collect()
        });
        if let Err(e) = poll_once(&s, &oids, &mut series) {
            log::debug!("stats poll of service {i}: {e}");
        }
        for x in &mut series {
            x.truncate_front(history);
        }
        st.stats.write().unwrap().insert(i, series);
    }
}

/// A gateway serving on its own runtime thread, plus its stats poller.
pub struct Gateway {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    shutdown: tokio::sync::watch::Sender<bool>,
    server: Option<JoinHandle<()>>,
    poller: Option<JoinHandle<()>>,
}

impl Gateway {
    pub fn spawn(
        cfg: GatewayConfig,
        mib: &'static Mib,
        traps: Option<Arc<TrapListener>>,
        bind: SocketAddr,
    ) -> io::Result<Gateway> {
        let listener = std::net::TcpListener::bind(bind)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let state = Arc::new(AppState { target: cfg.target.clone(), mib, traps, stats: RwLock::new(BTreeMap::new()) });
        let stop = Arc::new(AtomicBool::new(false));

        let poller = {
            let (st, stop) = (state.clone(), stop.clone());
            std::thread::Builder::new().name("gateway-poller".into()).spawn(move || {
                while !stop.load(Ordering::SeqCst) {
                    let started = std::time::Instant::now();
                    poll_services(&st, cfg.history, &stop);
                    let pause = cfg.poll_interval.saturating_sub(started.elapsed());
                    // sleep in slices so shutdown stays prompt
                    let until = std::time::Instant::now() + pause;
                    while !stop.load(Ordering::SeqCst) && std::time::Instant::now() < until {
                        std::thread::sleep(Duration::from_millis(20).min(pause));
                    }
                }
            })?
        };

        let (tx, rx) = tokio::sync::watch::channel(false);
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
        let server = std::thread::Builder::new().name("gateway".into()).spawn(move || {
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener).expect("listener in runtime");
                let mut graceful = rx.clone();
                let serve = axum::serve(listener, router(state)).with_graceful_shutdown(async move {
                    let _ = graceful.wait_for(|stop| *stop).await;
                });
                // idle keep-alive connections would otherwise hold shutdown open
                let mut forced = rx;
                let deadline = async move {
                    let _ = forced.wait_for(|stop| *stop).await;
                    tokio::time::sleep(SHUTDOWN_GRACE).await;
                };
                tokio::select! {
                    r = serve => if let Err(e) = r { log::error!("gateway: {e}") },
                    _ = deadline => log::debug!("gateway: dropping open connections"),
                }
            });
        })?;
        log::info!("gateway listening on http://{addr}");
        Ok(Gateway { addr, stop, shutdown: tx, server: Some(server), poller: Some(poller) })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Blocks until the server stops, which only happens on shutdown.
    pub fn wait(mut self) {
        if let Some(s) = self.server.take() {
            let _ = s.join();
        }
    }

    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = self.shutdown.send(true);
        for t in [self.server.take(), self.poller.take()].into_iter().flatten() {
            let _ = t.join();
        }
    }
}

impl Drop for Gateway {
    fn drop(&mut self) {
        self.stop_now();
    }
}
