//! SpeakerIdentApp: drives a request through the four stages, acting as an
//! SNMP manager toward them before it does.

use std::sync::atomic::{AtomicI64, AtomicU32, Ordering};
use std::sync::Arc;

use marf_core::agent::{Agent, AgentError, RowSource};
use marf_core::client::Client;
use marf_core::codec::{BerValue, Pdu, PduKind, SnmpMessage, Varbind};
use marf_core::smi::Mib;
use marf_core::Oid;
use thiserror::Error;

use crate::features::FeatureVector;
use crate::index;
use crate::service::{bump, micro, ServiceCore, ServiceKind, Status};
use crate::stages::{Request, Response, Stage};
use crate::StageError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("service {0} is not up")]
    ServiceDown(u32),
    #[error("service {service} failed: {error}")]
    Stage { service: u32, error: StageError },
    #[error("cannot reach a stage: {0}")]
    Transport(String),
}

impl From<StageError> for PipelineError {
    fn from(e: StageError) -> Self {
        match e {
            StageError::Unavailable(i) => PipelineError::ServiceDown(i),
            StageError::Transport(t) => PipelineError::Transport(t),
            error => PipelineError::Stage { service: index::SPEAKER_IDENT_APP, error },
        }
    }
}

/// How the app reads a stage's serviceStatus.
pub enum Probe {
    /// Straight into an agent in this process.
    Agent(Arc<Agent>),
    /// Over UDP, as any manager would.
    Udp(Client),
}

pub struct StageLink {
    pub index: u32,
    pub endpoint: Arc<dyn Stage>,
    pub probe: Probe,
}

pub struct SpeakerIdentApp {
    core: Arc<ServiceCore>,
    links: Vec<StageLink>,
    community: Vec<u8>,
    status_col: Oid,
    requests: AtomicU32,
    last_speaker: AtomicI64,
    last_distance_micro: AtomicI64,
}

impl SpeakerIdentApp {
    /// `links` must name the four stages in pipeline order. `community` is
    /// used for the status probes.
    pub fn new(
        agent: &Arc<Agent>,
        mib: &Mib,
        links: Vec<StageLink>,
        community: &[u8],
    ) -> Result<Arc<SpeakerIdentApp>, AgentError> {
        assert_eq!(links.iter().map(|l| l.index).collect::<Vec<_>>(), index::STAGES, "stage links out of order");
        let core =
            ServiceCore::new(index::SPEAKER_IDENT_APP, "speaker-ident-app", ServiceKind::Application, agent, mib)?;
        let status_col =
            mib.table("serviceTable").and_then(|t| t.column("serviceStatus")).expect("bundled MIB").oid.clone();
        let app = Arc::new(SpeakerIdentApp {
            core,
            links,
            community: community.to_vec(),
            status_col,
            requests: AtomicU32::new(0),
            last_speaker: AtomicI64::new(0),
            last_distance_micro: AtomicI64::new(0),
        });
        agent.register_table(mib.table("appTable").expect("bundled MIB"), Arc::new(AppRow(app.clone())))?;
        Ok(app)
    }

    pub fn core(&self) -> &Arc<ServiceCore> {
        &self.core
    }

    pub fn requests(&self) -> u32 {
        self.requests.load(Ordering::SeqCst)
    }

    /// serviceStatus of stage `link`, or None when it cannot be read.
    fn probe(&self, link: &StageLink) -> Option<Status> {
        let oid = self.status_col.child(link.index);
        let pdu = Pdu::request(PduKind::Get, 1, vec![Varbind::null(oid)]);
        let resp = match &link.probe {
            Probe::Agent(a) => a.handle_pdu(&SnmpMessage::new(self.community.clone(), pdu))?.pdu,
            Probe::Udp(c) => c.request(&self.community, pdu).ok()?,
        };
        match resp.varbinds.first().map(|vb| &vb.value) {
            Some(BerValue::Integer(v)) if resp.status().is_some_and(|s| s.code() == 0) => Status::from_code(*v),
            _ => None,
        }
    }

    /// Refuses unless every stage reports up.
    fn check_stages(&self) -> Result<(), PipelineError> {
        for link in &self.links {
            if self.probe(link) != Some(Status::Up) {
                return Err(PipelineError::ServiceDown(link.index));
            }
        }
        Ok(())
    }

    fn call(&self, stage: usize, req: Request) -> Result<Response, PipelineError> {
        let link = &self.links[stage];
        link.endpoint.call(req).map_err(|e| match e {
            StageError::Unavailable(i) => PipelineError::ServiceDown(i),
            StageError::Transport(t) => PipelineError::Transport(t),
            error => PipelineError::Stage { service: link.index, error },
        })
    }

    fn unexpected(&self, stage: usize) -> PipelineError {
        PipelineError::Transport(format!("service {} sent a response of the wrong kind", self.links[stage].index))
    }

    /// load, preprocess, extract.
    fn features(&self, bytes: &[u8]) -> Result<FeatureVector, PipelineError> {
        let Response::Sample(s) = self.call(0, Request::Load(bytes.to_vec()))? else { return Err(self.unexpected(0)) };
        let Response::Sample(s) = self.call(1, Request::Preprocess(s))? else { return Err(self.unexpected(1)) };
        let Response::Features(fv) = self.call(2, Request::Extract(s))? else { return Err(self.unexpected(2)) };
        Ok(fv)
    }

    /// Runs the full pipeline on a WAV clip; returns the nearest subject and
    /// its distance.
    pub fn identify(&self, bytes: &[u8]) -> Result<(u32, f64), PipelineError> {
        self.core.serve(|| {
            bump(&self.requests);
            self.check_stages()?;
            let fv = self.features(bytes)?;
            let Response::Results(r) = self.call(3, Request::Classify(fv))? else { return Err(self.unexpected(3)) };
            let (id, d) = r
                .top()
                .ok_or(PipelineError::Stage { service: index::CLASSIFICATION, error: StageError::EmptyTrainingSet })?;
            self.last_speaker.store(id as i64, Ordering::SeqCst);
            self.last_distance_micro.store(micro(d), Ordering::SeqCst);
            Ok((id, d))
        })
    }

    /// Adds one clip of `subject` to the training set; returns the record
    /// count afterwards.
    pub fn train(&self, subject: u32, bytes: &[u8]) -> Result<u32, PipelineError> {
        self.core.serve(|| {
            self.check_stages()?;
            let fv = self.features(bytes)?;
            match self.call(3, Request::Train { subject, features: fv })? {
                Response::Trained(n) => Ok(n),
                _ => Err(self.unexpected(3)),
            }
        })
    }
}

struct AppRow(Arc<SpeakerIdentApp>);

impl RowSource for AppRow {
    fn rows(&self) -> Vec<Vec<u32>> {
        vec![vec![1]]
    }

    fn read(&self, column: &str, index: &[u32]) -> Option<BerValue> {
        if index != [1] {
            return None;
        }
        let a = &self.0;
        Some(match column {
            "appRequests" => BerValue::Counter32(a.requests()),
            "appLastSpeakerId" => BerValue::Integer(a.last_speaker.load(Ordering::SeqCst)),
            "appLastDistanceMicro" => BerValue::Integer(a.last_distance_micro.load(Ordering::SeqCst)),
            _ => return None,
        })
    }
}
