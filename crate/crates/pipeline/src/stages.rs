//! The four pipeline stages and the MIB extension rows they instrument.

use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicI32, AtomicI64, AtomicU32, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use marf_core::agent::{Agent, AgentError, RowSource};
use marf_core::codec::BerValue;
use marf_core::smi::Mib;

use crate::dsp::{self, PreprocessingConfig};
use crate::features::{self, Algorithm, FeatureKind, FeatureVector};
use crate::service::{bump, ServiceCore, ServiceKind};
use crate::store::{ResultSet, TrainingSet};
use crate::wav::{self, Sample, FORMAT_WAV_PCM16};
use crate::StageError;

#[derive(Debug, Clone, PartialEq)]
pub enum Request {
    /// WAV bytes, read with the loader's configured iFormat.
    Load(Vec<u8>),
    Preprocess(Sample),
    Extract(Sample),
    Train {
        subject: u32,
        features: FeatureVector,
    },
    Classify(FeatureVector),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    Sample(Sample),
    Features(FeatureVector),
    /// Records in the training set after the update.
    Trained(u32),
    Results(ResultSet),
}

/// Something that answers pipeline requests: a local service or a remote
/// endpoint.
pub trait Stage: Send + Sync {
    fn call(&self, req: Request) -> Result<Response, StageError>;
}

fn wrong(req: &Request, service: &str) -> StageError {
    let op = match req {
        Request::Load(_) => "load",
        Request::Preprocess(_) => "preprocess",
        Request::Extract(_) => "extract",
        Request::Train { .. } => "train",
        Request::Classify(_) => "classify",
    };
    StageError::BadRequest(format!("{service} does not handle {op}"))
}

/// Serves the single extension row `index` of a service from `read`, with
/// optional write support.
struct ExtRow<S> {
    index: u32,
    state: Arc<S>,
    read: fn(&S, &str) -> Option<BerValue>,
    write: Option<fn(&S, &str, &BerValue)>,
}

impl<S: Send + Sync> RowSource for ExtRow<S> {
    fn rows(&self) -> Vec<Vec<u32>> {
        vec![vec![self.index]]
    }

    fn read(&self, column: &str, index: &[u32]) -> Option<BerValue> {
        if index != [self.index] {
            return None;
        }
        (self.read)(&self.state, column)
    }

    fn commit(&self, column: &str, _index: &[u32], value: &BerValue) {
        if let Some(w) = self.write {
            w(&self.state, column, value)
        }
    }
}

fn register<S: Send + Sync + 'static>(agent: &Agent, mib: &Mib, table: &str, row: ExtRow<S>) -> Result<(), AgentError> {
    agent.register_table(mib.table(table).expect("bundled MIB table"), Arc::new(row))
}

fn int(v: &BerValue) -> i64 {
    match v {
        BerValue::Integer(n) => *n,
        _ => unreachable!("column syntax was checked before commit"),
    }
}

fn truth(b: bool) -> BerValue {
    BerValue::Integer(if b { 1 } else { 2 })
}

fn gauge(n: impl TryInto<i32>) -> BerValue {
    BerValue::Integer(n.try_into().unwrap_or(i32::MAX) as i64)
}

pub struct SampleLoadingService {
    core: Arc<ServiceCore>,
    format: AtomicI32,
    last_len: AtomicU32,
}

impl SampleLoadingService {
    pub fn new(index: u32, agent: &Arc<Agent>, mib: &Mib) -> Result<Arc<Self>, AgentError> {
        let core = ServiceCore::new(index, "sample-loading", ServiceKind::SampleLoading, agent, mib)?;
        let s = Arc::new(SampleLoadingService {
            core,
            format: AtomicI32::new(FORMAT_WAV_PCM16),
            last_len: AtomicU32::new(0),
        });
        let row = ExtRow {
            index,
            state: s.clone(),
            read: |s: &Self, c| match c {
                "iFormat" => Some(BerValue::Integer(s.format.load(Ordering::SeqCst) as i64)),
                "adSampleLength" => Some(gauge(s.last_len.load(Ordering::SeqCst))),
                _ => None,
            },
            write: Some(|s: &Self, c, v| {
                if c == "iFormat" {
                    s.format.store(int(v) as i32, Ordering::SeqCst)
                }
            }),
        };
        register(agent, mib, "sampleLoadingServiceTable", row)?;
        Ok(s)
    }

    pub fn core(&self) -> &Arc<ServiceCore> {
        &self.core
    }

    pub fn load(&self, bytes: &[u8]) -> Result<Sample, StageError> {
        self.core.serve(|| {
            let s = wav::load_sample(bytes, self.format.load(Ordering::SeqCst))?;
            self.last_len.store(s.data.len() as u32, Ordering::SeqCst);
            Ok(s)
        })
    }
}

impl Stage for SampleLoadingService {
    fn call(&self, req: Request) -> Result<Response, StageError> {
        match req {
            Request::Load(bytes) => self.load(&bytes).map(Response::Sample),
            other => Err(wrong(&other, "sample loading")),
        }
    }
}

pub struct PreprocessingService {
    core: Arc<ServiceCore>,
    threshold_micro: AtomicI32,
    remove_noise: AtomicBool,
    remove_silence: AtomicBool,
}

impl PreprocessingService {
    pub fn new(index: u32, agent: &Arc<Agent>, mib: &Mib) -> Result<Arc<Self>, AgentError> {
        let core = ServiceCore::new(index, "preprocessing", ServiceKind::Preprocessing, agent, mib)?;
        let d = PreprocessingConfig::default();
        let s = Arc::new(PreprocessingService {
            core,
            threshold_micro: AtomicI32::new((d.silence_threshold * 1e6).round() as i32),
            remove_noise: AtomicBool::new(d.remove_noise),
            remove_silence: AtomicBool::new(d.remove_silence),
        });
        let row = ExtRow {
            index,
            state: s.clone(),
            read: |s: &Self, c| match c {
                "dSilenceThresholdMicro" => Some(BerValue::Integer(s.threshold_micro.load(Ordering::SeqCst) as i64)),
                "bRemoveNoise" => Some(truth(s.remove_noise.load(Ordering::SeqCst))),
                "bRemoveSilence" => Some(truth(s.remove_silence.load(Ordering::SeqCst))),
                _ => None,
            },
            write: Some(|s: &Self, c, v| match c {
                "dSilenceThresholdMicro" => s.threshold_micro.store(int(v) as i32, Ordering::SeqCst),
                "bRemoveNoise" => s.remove_noise.store(int(v) == 1, Ordering::SeqCst),
                "bRemoveSilence" => s.remove_silence.store(int(v) == 1, Ordering::SeqCst),
                _ => {}
            }),
        };
        register(agent, mib, "preprocessingServiceTable", row)?;
        Ok(s)
    }

    pub fn core(&self) -> &Arc<ServiceCore> {
        &self.core
    }

    /// Current settings, read field by field.
    pub fn config(&self) -> PreprocessingConfig {
        PreprocessingConfig {
            silence_threshold: self.threshold_micro.load(Ordering::SeqCst) as f64 / 1e6,
            remove_noise: self.remove_noise.load(Ordering::SeqCst),
            remove_silence: self.remove_silence.load(Ordering::SeqCst),
        }
    }

    pub fn set_config(&self, cfg: PreprocessingConfig) {
        self.threshold_micro.store((cfg.silence_threshold * 1e6).round() as i32, Ordering::SeqCst);
        self.remove_noise.store(cfg.remove_noise, Ordering::SeqCst);
        self.remove_silence.store(cfg.remove_silence, Ordering::SeqCst);
    }

    pub fn preprocess(&self, sample: Sample) -> Result<Sample, StageError> {
        self.core.serve(|| {
            let cfg = self.config();
            let data = dsp::preprocess(&sample.data, &cfg)?;
            Ok(Sample { data, ..sample })
        })
    }
}

impl Stage for PreprocessingService {
    fn call(&self, req: Request) -> Result<Response, StageError> {
        match req {
            Request::Preprocess(s) => self.preprocess(s).map(Response::Sample),
            other => Err(wrong(&other, "preprocessing")),
        }
    }
}

pub struct FeatureExtractionService {
    core: Arc<ServiceCore>,
    algorithm: Algorithm,
    poles: AtomicU32,
    window_len: AtomicU32,
    last_len: AtomicU32,
    extracted: AtomicU32,
}

pub const DEFAULT_POLES: u32 = 8;
pub const DEFAULT_WINDOW_LEN: u32 = 256;

impl FeatureExtractionService {
    pub fn new(index: u32, algorithm: Algorithm, agent: &Arc<Agent>, mib: &Mib) -> Result<Arc<Self>, AgentError> {
        let core = ServiceCore::new(index, "feature-extraction", ServiceKind::FeatureExtraction, agent, mib)?;
        let s = Arc::new(FeatureExtractionService {
            core,
            algorithm,
            poles: AtomicU32::new(DEFAULT_POLES),
            window_len: AtomicU32::new(DEFAULT_WINDOW_LEN),
            last_len: AtomicU32::new(0),
            extracted: AtomicU32::new(0),
        });
        let row = ExtRow {
            index,
            state: s.clone(),
            read: |s: &Self, c| match c {
                "adFeaturesLength" => Some(gauge(s.last_len.load(Ordering::SeqCst))),
                "oFeatureSetSize" => Some(gauge(s.extracted.load(Ordering::SeqCst))),
                _ => None,
            },
            write: None,
        };
        register(agent, mib, "featureextractionServiceTable", row)?;
        let lpc = ExtRow {
            index,
            state: s.clone(),
            read: |s: &Self, c| match c {
                "iPoles" => Some(gauge(s.poles.load(Ordering::SeqCst))),
                "iWindowLen" => Some(gauge(s.window_len.load(Ordering::SeqCst))),
                _ => None,
            },
            write: Some(|s: &Self, c, v| match c {
                "iPoles" => s.poles.store(int(v) as u32, Ordering::SeqCst),
                "iWindowLen" => s.window_len.store(int(v) as u32, Ordering::SeqCst),
                _ => {}
            }),
        };
        register(agent, mib, "lpcServiceTable", lpc)?;
        Ok(s)
    }

    pub fn core(&self) -> &Arc<ServiceCore> {
        &self.core
    }

    pub fn kind(&self) -> FeatureKind {
        let (p, w) = (self.poles.load(Ordering::SeqCst), self.window_len.load(Ordering::SeqCst));
        match self.algorithm {
            Algorithm::Lpc => FeatureKind::lpc(p, w),
            Algorithm::Fft => FeatureKind::fft(w),
            Algorithm::MinMax => FeatureKind::minmax(),
        }
    }

    pub fn set_params(&self, poles: u32, window_len: u32) {
        self.poles.store(poles, Ordering::SeqCst);
        self.window_len.store(window_len, Ordering::SeqCst);
    }

    pub fn extract(&self, sample: &Sample) -> Result<FeatureVector, StageError> {
        self.core.serve(|| {
            let fv = features::extract(&sample.data, self.kind())?;
            self.last_len.store(fv.features.len() as u32, Ordering::SeqCst);
            bump(&self.extracted);
            Ok(fv)
        })
    }
}

impl Stage for FeatureExtractionService {
    fn call(&self, req: Request) -> Result<Response, StageError> {
        match req {
            Request::Extract(s) => self.extract(&s).map(Response::Features),
            other => Err(wrong(&other, "feature extraction")),
        }
    }
}

pub struct ClassificationService {
    core: Arc<ServiceCore>,
    store: Mutex<TrainingSet>,
    path: Option<PathBuf>,
    size_bytes: AtomicU64,
    records: AtomicU32,
    last_len: AtomicU32,
    result_size: AtomicU32,
    top_id: AtomicI64,
}

impl ClassificationService {
    /// Opens the training set at `path` when it exists; without a path the
    /// set lives in memory only.
    pub fn new(index: u32, path: Option<PathBuf>, agent: &Arc<Agent>, mib: &Mib) -> Result<Arc<Self>, AgentError> {
        let core = ServiceCore::new(index, "classification", ServiceKind::Classification, agent, mib)?;
        let (store, size) = match &path {
            Some(p) if p.exists() => match TrainingSet::load(p) {
                Ok(s) => {
                    let size = std::fs::metadata(p).map(|m| m.len()).unwrap_or(0);
                    (s, size)
                }
                Err(e) => {
                    log::warn!("ignoring unreadable training set {}: {e}", p.display());
                    (TrainingSet::new(), 0)
                }
            },
            _ => (TrainingSet::new(), 0),
        };
        let s = Arc::new(ClassificationService {
            core,
            records: AtomicU32::new(store.record_count() as u32),
            store: Mutex::new(store),
            path,
            size_bytes: AtomicU64::new(size),
            last_len: AtomicU32::new(0),
            result_size: AtomicU32::new(0),
            top_id: AtomicI64::new(0),
        });
        let row = ExtRow {
            index,
            state: s.clone(),
            read: |s: &Self, c| match c {
                "adFeaturesLength" => Some(gauge(s.last_len.load(Ordering::SeqCst))),
                "oResultSetSize" => Some(gauge(s.result_size.load(Ordering::SeqCst))),
                "oResultSetTopId" => Some(BerValue::Integer(s.top_id.load(Ordering::SeqCst))),
                _ => None,
            },
            write: None,
        };
        register(agent, mib, "classificationServiceTable", row)?;
        // the training database is storage row 1
        let storage = ExtRow {
            index: 1,
            state: s.clone(),
            read: |s: &Self, c| match c {
                "storageIndex" => Some(BerValue::Integer(1)),
                "storagePath" => {
                    let p = s.path.as_ref().map_or(String::new(), |p| p.display().to_string());
                    Some(BerValue::string(p.chars().take(255).collect::<String>()))
                }
                "storageSizeBytes" => Some(gauge(s.size_bytes.load(Ordering::SeqCst))),
                "storageRecordCount" => Some(gauge(s.records.load(Ordering::SeqCst))),
                _ => None,
            },
            write: None,
        };
        register(agent, mib, "storageTable", storage)?;
        Ok(s)
    }

    pub fn core(&self) -> &Arc<ServiceCore> {
        &self.core
    }

    pub fn training_set(&self) -> TrainingSet {
        self.store.lock().unwrap().clone()
    }

    pub fn train(&self, subject: u32, fv: &FeatureVector) -> Result<u32, StageError> {
        self.core.serve(|| {
            let mut store = self.store.lock().unwrap();
            let mut next = store.clone();
            next.train(subject, fv)?;
            if let Some(p) = &self.path {
                let size = next.save(p).map_err(|e| StageError::Storage(e.to_string()))?;
                self.size_bytes.store(size, Ordering::SeqCst);
            } else {
                self.size_bytes.store(next.to_bytes().len() as u64, Ordering::SeqCst);
            }
            *store = next;
            let n = store.record_count() as u32;
            self.records.store(n, Ordering::SeqCst);
            self.last_len.store(fv.features.len() as u32, Ordering::SeqCst);
            Ok(n)
        })
    }

    pub fn classify(&self, fv: &FeatureVector) -> Result<ResultSet, StageError> {
        self.core.serve(|| {
            let r = self.store.lock().unwrap().classify(fv)?;
            self.last_len.store(fv.features.len() as u32, Ordering::SeqCst);
            self.result_size.store(r.ranked.len() as u32, Ordering::SeqCst);
            if let Some((id, _)) = r.top() {
                self.top_id.store(id as i64, Ordering::SeqCst);
            }
            Ok(r)
        })
    }
}

impl Stage for ClassificationService {
    fn call(&self, req: Request) -> Result<Response, StageError> {
        match req {
            Request::Train { subject, features } => self.train(subject, &features).map(Response::Trained),
            Request::Classify(fv) => self.classify(&fv).map(Response::Results),
            other => Err(wrong(&other, "classification")),
        }
    }
}
