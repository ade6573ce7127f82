//! The five-agent demo topology: four stage services, each with its own
//! agent, and the SpeakerIdentApp whose agent is the master that routes the
//! stage subtrees.

use std::io;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use marf_core::agent::{Agent, AgentConfig, AgentError, AgentServer};
use marf_core::client::Client;
use marf_core::smi::Mib;
use marf_core::Oid;
use thiserror::Error;

use crate::app::{Probe, SpeakerIdentApp, StageLink};
use crate::features::Algorithm;
use crate::index;
use crate::service::ServiceCore;
use crate::stages::{
    ClassificationService, FeatureExtractionService, PreprocessingService, SampleLoadingService, Stage,
};
use crate::wire::{StageServer, TcpStage};

/// How pipeline data travels between the app and the stages. SNMP always
/// goes over UDP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransportMode {
    #[default]
    InProcess,
    Tcp,
}

#[derive(Debug, Clone)]
pub struct TopologyConfig {
    pub host: IpAddr,
    /// Service i listens on base_port + i (UDP for SNMP, TCP for stage
    /// calls). None picks free ports.
    pub base_port: Option<u16>,
    pub transport: TransportMode,
    pub algorithm: Algorithm,
    /// Training-set file; None keeps it in memory.
    pub store_path: Option<PathBuf>,
    pub trap_sinks: Vec<SocketAddr>,
    pub agent: AgentConfig,
    /// Timeout of the app's status probes and TCP stage calls.
    pub probe_timeout: Duration,
}

pub const DEMO_BASE_PORT: u16 = 16100;

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            host: IpAddr::V4(Ipv4Addr::LOCALHOST),
            base_port: None,
            transport: TransportMode::InProcess,
            algorithm: Algorithm::Lpc,
            store_path: None,
            trap_sinks: Vec::new(),
            agent: AgentConfig::default(),
            probe_timeout: Duration::from_millis(500),
        }
    }
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub struct Topology {
    pub sample_loading: Arc<SampleLoadingService>,
    pub preprocessing: Arc<PreprocessingService>,
    pub feature_extraction: Arc<FeatureExtractionService>,
    pub classification: Arc<ClassificationService>,
    pub app: Arc<SpeakerIdentApp>,
    /// Stage agents by service index 1..=4, then the master.
    agents: Vec<AgentServer>,
    stage_servers: Vec<StageServer>,
}

impl Topology {
    pub fn start(cfg: TopologyConfig) -> Result<Topology, TopologyError> {
        let mib = Mib::bundled();
        let bind = |i: u32| SocketAddr::new(cfg.host, cfg.base_port.map_or(0, |b| b + i as u16));
        let new_agent = |name: &str| {
            let a = Agent::new(name, cfg.agent.clone());
            a.set_trap_sinks(cfg.trap_sinks.clone());
            a
        };

        let agents: Vec<Arc<Agent>> =
            ["sample-loading", "preprocessing", "feature-extraction", "classification"].map(new_agent).into();
        let sample_loading = SampleLoadingService::new(index::SAMPLE_LOADING, &agents[0], mib)?;
        let preprocessing = PreprocessingService::new(index::PREPROCESSING, &agents[1], mib)?;
        let feature_extraction =
            FeatureExtractionService::new(index::FEATURE_EXTRACTION, cfg.algorithm, &agents[2], mib)?;
        let classification =
            ClassificationService::new(index::CLASSIFICATION, cfg.store_path.clone(), &agents[3], mib)?;

        let mut servers = Vec::new();
        for (a, i) in agents.iter().zip(index::STAGES) {
            servers.push(AgentServer::spawn(a.clone(), bind(i))?);
        }

        let stages: [Arc<dyn Stage>; 4] =
            [sample_loading.clone(), preprocessing.clone(), feature_extraction.clone(), classification.clone()];
        let mut stage_servers = Vec::new();
        let mut endpoints = Vec::new();
        for (stage, i) in stages.into_iter().zip(index::STAGES) {
            let endpoint: Arc<dyn Stage> = match cfg.transport {
                TransportMode::InProcess => stage,
                TransportMode::Tcp => {
                    let s = StageServer::spawn(stage, bind(i))?;
                    let client = TcpStage::new(s.local_addr(), cfg.probe_timeout.max(Duration::from_secs(5)));
                    stage_servers.push(s);
                    Arc::new(client)
                }
            };
            endpoints.push(endpoint);
        }

        let mut links = Vec::new();
        for ((endpoint, server), i) in endpoints.into_iter().zip(&servers).zip(index::STAGES) {
            let client = Client::new(server.local_addr())?.with_timeout(cfg.probe_timeout).with_retries(1);
            links.push(StageLink { index: i, endpoint, probe: Probe::Udp(client) });
        }

        let master = new_agent("speaker-ident-app");
        let community = cfg.agent.read_community.clone();
        let app = SpeakerIdentApp::new(&master, mib, links, &community)?;
        for (route, target) in routes(mib, &servers) {
            master.add_route(route, target)?;
        }
        servers.push(AgentServer::spawn(master, bind(index::SPEAKER_IDENT_APP))?);

        Ok(Topology {
            sample_loading,
            preprocessing,
            feature_extraction,
            classification,
            app,
            agents: servers,
            stage_servers,
        })
    }

    /// Address of the master agent, which answers for the whole MIB.
    pub fn master_addr(&self) -> SocketAddr {
        self.agents[4].local_addr()
    }

    /// SNMP address of the agent embedded in service `index`.
    pub fn agent_addr(&self, index: u32) -> SocketAddr {
        self.agents[index as usize - 1].local_addr()
    }

    pub fn agent(&self, index: u32) -> &Arc<Agent> {
        self.agents[index as usize - 1].agent()
    }

    /// TCP address of stage `index` in TCP transport mode.
    pub fn stage_addr(&self, index: u32) -> Option<SocketAddr> {
        self.stage_servers.get(index as usize - 1).map(StageServer::local_addr)
    }

    pub fn core(&self, index: u32) -> &Arc<ServiceCore> {
        match index {
            index::SAMPLE_LOADING => self.sample_loading.core(),
            index::PREPROCESSING => self.preprocessing.core(),
            index::FEATURE_EXTRACTION => self.feature_extraction.core(),
            index::CLASSIFICATION => self.classification.core(),
            index::SPEAKER_IDENT_APP => self.app.core(),
            _ => panic!("no service {index}"),
        }
    }

    /// Stops every listener; services stay usable in-process.
    pub fn shutdown(self) {
        for s in self.stage_servers {
            s.shutdown();
        }
        for a in self.agents {
            a.shutdown();
        }
    }
}

/// Subtrees the master forwards: each stage's serviceTable cells and the
/// subtree of its extension MIB. Storage lives with classification.
fn routes(mib: &Mib, stage_agents: &[AgentServer]) -> Vec<(Oid, SocketAddr)> {
    let service_table = mib.table("serviceTable").expect("bundled MIB");
    let mut out = Vec::new();
    for (server, i) in stage_agents.iter().zip(index::STAGES) {
        for c in &service_table.effective_columns {
            out.push((c.oid.child(i), server.local_addr()));
        }
    }
    let subtrees = [
        ("sampleLoadingService", index::SAMPLE_LOADING),
        ("preprocessingService", index::PREPROCESSING),
        ("featureextractionService", index::FEATURE_EXTRACTION),
        ("classificationService", index::CLASSIFICATION),
        ("marfStorage", index::CLASSIFICATION),
    ];
    for (name, i) in subtrees {
        let oid = mib.oid_of(name).expect("bundled MIB");
        out.push((oid, stage_agents[i as usize - 1].local_addr()));
    }
    out
}
