//! Length-prefixed binary framing for calling a stage over TCP.
//!
//! A frame is a big-endian u32 length followed by that many bytes: one
//! opcode byte and its payload. Payload integers and floats are
//! little-endian; strings and byte blobs carry a u32 length prefix.
//!
//! ```text
//! 0x01 load        blob
//! 0x02 preprocess  sample
//! 0x03 extract     sample
//! 0x04 train       u32 subject, features
//! 0x05 classify    features
//! 0x81 sample      sample
//! 0x82 features    features
//! 0x83 trained     u32 records
//! 0x84 results     u32 n, n × (u32 subject, f64 distance)
//! 0xFF error       u8 code, code-specific fields
//!
//! sample   = i32 format, u32 rate, u32 n, n × f64
//! features = u8 algorithm, u32 poles, u32 window_len, u32 n, n × f64
//! ```

use std::io::{self, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use byteorder::{BigEndian, LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::features::{Algorithm, FeatureKind, FeatureVector};
use crate::stages::{Request, Response, Stage};
use crate::store::ResultSet;
use crate::wav::Sample;
use crate::StageError;

/// Frames above this size are refused without reading them.
pub const MAX_FRAME: usize = 64 << 20;

fn bad(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

pub fn write_frame(w: &mut impl Write, body: &[u8]) -> io::Result<()> {
    if body.len() > MAX_FRAME {
        return Err(bad(format!("frame of {} bytes exceeds limit", body.len())));
    }
    w.write_u32::<BigEndian>(body.len() as u32)?;
    w.write_all(body)?;
    w.flush()
}

pub fn read_frame(r: &mut impl Read) -> io::Result<Vec<u8>> {
    let n = r.read_u32::<BigEndian>()? as usize;
    if n > MAX_FRAME {
        return Err(bad(format!("frame of {n} bytes exceeds limit")));
    }
    let mut body = vec![0; n];
    r.read_exact(&mut body)?;
    Ok(body)
}

fn put_blob(out: &mut Vec<u8>, b: &[u8]) {
    out.write_u32::<LE>(b.len() as u32).unwrap();
    out.extend_from_slice(b);
}

fn put_floats(out: &mut Vec<u8>, xs: &[f64]) {
    out.write_u32::<LE>(xs.len() as u32).unwrap();
    for x in xs {
        out.write_f64::<LE>(*x).unwrap();
    }
}

fn put_sample(out: &mut Vec<u8>, s: &Sample) {
    out.write_i32::<LE>(s.format).unwrap();
    out.write_u32::<LE>(s.sample_rate).unwrap();
    put_floats(out, &s.data);
}

fn put_features(out: &mut Vec<u8>, fv: &FeatureVector) {
    out.push(fv.kind.algorithm.code());
    out.write_u32::<LE>(fv.kind.poles).unwrap();
    out.write_u32::<LE>(fv.kind.window_len).unwrap();
    put_floats(out, &fv.features);
}

/// Cursor over a received payload.
struct Reader<'a>(&'a [u8]);

impl Reader<'_> {
    fn len_prefix(&mut self, unit: usize) -> io::Result<usize> {
        let n = self.0.read_u32::<LE>()? as usize;
        if n.saturating_mul(unit) > self.0.len() {
            return Err(bad("length prefix exceeds payload"));
        }
        Ok(n)
    }

    fn blob(&mut self) -> io::Result<Vec<u8>> {
        let n = self.len_prefix(1)?;
        let (head, rest) = self.0.split_at(n);
        self.0 = rest;
        Ok(head.to_vec())
    }

    fn string(&mut self) -> io::Result<String> {
        String::from_utf8(self.blob()?).map_err(|_| bad("string is not UTF-8"))
    }

    fn floats(&mut self) -> io::Result<Vec<f64>> {
        let mut v = vec![0.0; self.len_prefix(8)?];
        self.0.read_f64_into::<LE>(&mut v)?;
        Ok(v)
    }

    fn sample(&mut self) -> io::Result<Sample> {
        let format = self.0.read_i32::<LE>()?;
        let sample_rate = self.0.read_u32::<LE>()?;
        Ok(Sample { format, sample_rate, data: self.floats()? })
    }

    fn features(&mut self) -> io::Result<FeatureVector> {
        let code = self.0.read_u8()?;
        let algorithm = Algorithm::from_code(code).ok_or_else(|| bad(format!("unknown algorithm {code}")))?;
        let poles = self.0.read_u32::<LE>()?;
        let window_len = self.0.read_u32::<LE>()?;
        Ok(FeatureVector { kind: FeatureKind { algorithm, poles, window_len }, features: self.floats()? })
    }

    fn u32(&mut self) -> io::Result<u32> {
        self.0.read_u32::<LE>()
    }

    fn finish<T>(self, v: T) -> io::Result<T> {
        if self.0.is_empty() {
            Ok(v)
        } else {
            Err(bad("trailing bytes in payload"))
        }
    }
}

pub fn encode_request(req: &Request) -> Vec<u8> {
    let mut out = Vec::new();
    match req {
        Request::Load(b) => {
            out.push(0x01);
            put_blob(&mut out, b);
        }
        Request::Preprocess(s) => {
            out.push(0x02);
            put_sample(&mut out, s);
        }
        Request::Extract(s) => {
            out.push(0x03);
            put_sample(&mut out, s);
        }
        Request::Train { subject, features } => {
            out.push(0x04);
            out.write_u32::<LE>(*subject).unwrap();
            put_features(&mut out, features);
        }
        Request::Classify(fv) => {
            out.push(0x05);
            put_features(&mut out, fv);
        }
    }
    out
}

pub fn decode_request(body: &[u8]) -> io::Result<Request> {
    let (&op, rest) = body.split_first().ok_or_else(|| bad("empty frame"))?;
    let mut r = Reader(rest);
    let req = match op {
        0x01 => Request::Load(r.blob()?),
        0x02 => Request::Preprocess(r.sample()?),
        0x03 => Request::Extract(r.sample()?),
        0x04 => {
            let subject = r.u32()?;
            Request::Train { subject, features: r.features()? }
        }
        0x05 => Request::Classify(r.features()?),
        _ => return Err(bad(format!("unknown request opcode 0x{op:02X}"))),
    };
    r.finish(req)
}

fn put_error(out: &mut Vec<u8>, e: &StageError) {
    out.push(0xFF);
    match e {
        StageError::UnsupportedFormat(s) => {
            out.push(1);
            put_blob(out, s.as_bytes());
        }
        StageError::MalformedWav(s) => {
            out.push(2);
            put_blob(out, s.as_bytes());
        }
        StageError::DegenerateSignal => out.push(3),
        StageError::InvalidParams(s) => {
            out.push(4);
            put_blob(out, s.as_bytes());
        }
        StageError::IncompatibleFeatures { expected, got } => {
            out.push(5);
            put_blob(out, expected.as_bytes());
            put_blob(out, got.as_bytes());
        }
        StageError::EmptyTrainingSet => out.push(6),
        StageError::Unavailable(i) => {
            out.push(7);
            out.write_u32::<LE>(*i).unwrap();
        }
        StageError::Storage(s) => {
            out.push(8);
            put_blob(out, s.as_bytes());
        }
        StageError::BadRequest(s) => {
            out.push(9);
            put_blob(out, s.as_bytes());
        }
        StageError::Transport(s) => {
            out.push(10);
            put_blob(out, s.as_bytes());
        }
    }
}

fn read_error(r: &mut Reader) -> io::Result<StageError> {
    Ok(match r.0.read_u8()? {
        1 => StageError::UnsupportedFormat(r.string()?),
        2 => StageError::MalformedWav(r.string()?),
        3 => StageError::DegenerateSignal,
        4 => StageError::InvalidParams(r.string()?),
        5 => StageError::IncompatibleFeatures { expected: r.string()?, got: r.string()? },
        6 => StageError::EmptyTrainingSet,
        7 => StageError::Unavailable(r.u32()?),
        8 => StageError::Storage(r.string()?),
        9 => StageError::BadRequest(r.string()?),
        10 => StageError::Transport(r.string()?),
        c => return Err(bad(format!("unknown error code {c}"))),
    })
}

pub fn encode_response(resp: &Result<Response, StageError>) -> Vec<u8> {
    let mut out = Vec::new();
    match resp {
        Ok(Response::Sample(s)) => {
            out.push(0x81);
            put_sample(&mut out, s);
        }
        Ok(Response::Features(fv)) => {
            out.push(0x82);
            put_features(&mut out, fv);
        }
        Ok(Response::Trained(n)) => {
            out.push(0x83);
            out.write_u32::<LE>(*n).unwrap();
        }
        Ok(Response::Results(rs)) => {
            out.push(0x84);
            out.write_u32::<LE>(rs.ranked.len() as u32).unwrap();
            for (id, d) in &rs.ranked {
                out.write_u32::<LE>(*id).unwrap();
                out.write_f64::<LE>(*d).unwrap();
            }
        }
        Err(e) => put_error(&mut out, e),
    }
    out
}

pub fn decode_response(body: &[u8]) -> io::Result<Result<Response, StageError>> {
    let (&op, rest) = body.split_first().ok_or_else(|| bad("empty frame"))?;
    let mut r = Reader(rest);
    let resp = match op {
        0x81 => Ok(Response::Sample(r.sample()?)),
        0x82 => Ok(Response::Features(r.features()?)),
        0x83 => Ok(Response::Trained(r.u32()?)),
        0x84 => {
            let n = r.len_prefix(12)?;
            let mut ranked = Vec::with_capacity(n);
            for _ in 0..n {
                ranked.push((r.u32()?, r.0.read_f64::<LE>()?));
            }
            Ok(Response::Results(ResultSet { ranked }))
        }
        0xFF => Err(read_error(&mut r)?),
        _ => return Err(bad(format!("unknown response opcode 0x{op:02X}"))),
    };
    r.finish(resp)
}

/// Serves one stage on a TCP port, one thread per connection.
pub struct StageServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    conns: Arc<Mutex<Vec<TcpStream>>>,
    accept: Option<JoinHandle<()>>,
}

impl StageServer {
    pub fn spawn(stage: Arc<dyn Stage>, bind: impl ToSocketAddrs) -> io::Result<StageServer> {
        let listener = TcpListener::bind(bind)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let conns = Arc::new(Mutex::new(Vec::new()));
        let (stop2, conns2) = (stop.clone(), conns.clone());
        let accept = thread::Builder::new().name(format!("stage-{addr}")).spawn(move || {
            for conn in listener.incoming() {
                if stop2.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(conn) = conn else { continue };
                if let Ok(c) = conn.try_clone() {
                    conns2.lock().unwrap().push(c);
                }
                let stage = stage.clone();
                thread::spawn(move || serve_connection(stage.as_ref(), conn));
            }
        })?;
        Ok(StageServer { addr, stop, conns, accept: Some(accept) })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the accept loop so it sees the flag
        let _ = TcpStream::connect_timeout(&self.addr, Duration::from_millis(200));
        for c in self.conns.lock().unwrap().drain(..) {
            let _ = c.shutdown(Shutdown::Both);
        }
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

impl Drop for StageServer {
    fn drop(&mut self) {
        if self.accept.is_some() {
            self.stop_now();
        }
    }
}

fn serve_connection(stage: &dyn Stage, mut conn: TcpStream) {
    loop {
        let body = match read_frame(&mut conn) {
            Ok(b) => b,
            Err(e) => {
                if e.kind() != io::ErrorKind::UnexpectedEof {
                    log::debug!("stage connection closed: {e}");
                }
                return;
            }
        };
        let resp = match decode_request(&body) {
            Ok(req) => stage.call(req),
            Err(e) => Err(StageError::BadRequest(e.to_string())),
        };
        if write_frame(&mut conn, &encode_response(&resp)).is_err() {
            return;
        }
    }
}

/// Client side of a [`StageServer`]. Keeps one connection open and
/// reconnects on the next call after a failure; a failed call is not
/// retried, since training is not idempotent.
pub struct TcpStage {
    addr: SocketAddr,
    timeout: Duration,
    conn: Mutex<Option<TcpStream>>,
}

impl TcpStage {
    pub fn new(addr: SocketAddr, timeout: Duration) -> TcpStage {
        TcpStage { addr, timeout, conn: Mutex::new(None) }
    }

    fn exchange(&self, conn: &mut Option<TcpStream>, body: &[u8]) -> io::Result<Vec<u8>> {
        if conn.is_none() {
            let c = TcpStream::connect_timeout(&self.addr, self.timeout)?;
            c.set_read_timeout(Some(self.timeout))?;
            c.set_write_timeout(Some(self.timeout))?;
            c.set_nodelay(true)?;
            *conn = Some(c);
        }
        let c = conn.as_mut().unwrap();
        write_frame(c, body)?;
        read_frame(c)
    }
}

impl Stage for TcpStage {
    fn call(&self, req: Request) -> Result<Response, StageError> {
        let mut conn = self.conn.lock().unwrap();
        let result = self.exchange(&mut conn, &encode_request(&req)).and_then(|b| decode_response(&b));
        result.unwrap_or_else(|e| {
            *conn = None;
            Err(StageError::Transport(format!("{}: {e}", self.addr)))
        })
    }
}
