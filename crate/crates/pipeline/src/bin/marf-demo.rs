use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::time::Duration;

use clap::{Parser, ValueEnum};
use marf_core::agent::AgentConfig;
use marf_pipeline::fixtures;
use marf_pipeline::topology::DEMO_BASE_PORT;
use marf_pipeline::{Algorithm, Topology, TopologyConfig, TransportMode};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Transport {
    InProcess,
    Tcp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Features {
    Lpc,
    Fft,
    Minmax,
}

/// Runs the four pipeline services and SpeakerIdentApp, each with its own
/// SNMP agent. The app's agent is the master.
#[derive(Debug, Parser)]
#[command(name = "marf-demo", version)]
struct Args {
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// Service i listens on base-port + i; the master is service 5.
    #[arg(long, default_value_t = DEMO_BASE_PORT)]
    base_port: u16,
    #[arg(long, value_enum, default_value = "in-process")]
    transport: Transport,
    #[arg(long, value_enum, default_value = "lpc")]
    features: Features,
    /// Training-set file, created on first training.
    #[arg(long)]
    store: Option<PathBuf>,
    /// Where to send traps; repeatable.
    #[arg(long = "trap-sink")]
    trap_sinks: Vec<SocketAddr>,
    #[arg(long, default_value = "public")]
    community: String,
    #[arg(long, default_value = "private")]
    write_community: String,
    /// Train the two synthetic fixture speakers at startup.
    #[arg(long)]
    train_fixtures: bool,
    /// Identify one fixture clip every this many milliseconds; 0 disables.
    #[arg(long, default_value_t = 0)]
    traffic_ms: u64,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let cfg = TopologyConfig {
        host: args.host,
        base_port: Some(args.base_port),
        transport: match args.transport {
            Transport::InProcess => TransportMode::InProcess,
            Transport::Tcp => TransportMode::Tcp,
        },
        algorithm: match args.features {
            Features::Lpc => Algorithm::Lpc,
            Features::Fft => Algorithm::Fft,
            Features::Minmax => Algorithm::MinMax,
        },
        store_path: args.store,
        trap_sinks: args.trap_sinks,
        agent: AgentConfig {
            read_community: args.community.into_bytes(),
            write_community: args.write_community.into_bytes(),
            ..AgentConfig::default()
        },
        ..TopologyConfig::default()
    };
    let topo = match Topology::start(cfg) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("marf-demo: {e}");
            std::process::exit(1);
        }
    };
    println!("master agent on udp://{}", topo.master_addr());
    for i in marf_pipeline::index::STAGES {
        println!("service {i} agent on udp://{}", topo.agent_addr(i));
    }

    if args.train_fixtures {
        for speaker in [1, 2] {
            for take in 0..3 {
                if let Err(e) = topo.app.train(speaker, &fixtures::speaker_wav(speaker, take)) {
                    eprintln!("marf-demo: training speaker {speaker} failed: {e}");
                }
            }
        }
        println!("trained fixture speakers 1 and 2");
    }

    let mut n = 0u32;
    loop {
        if args.traffic_ms == 0 {
            std::thread::park();
            continue;
        }
        std::thread::sleep(Duration::from_millis(args.traffic_ms));
        let speaker = 1 + n % 2;
        match topo.app.identify(&fixtures::speaker_wav(speaker, 100 + n)) {
            Ok((id, d)) => log::info!("clip of speaker {speaker} identified as {id} at distance {d:.4}"),
            Err(e) => log::warn!("identify failed: {e}"),
        }
        n = n.wrapping_add(1);
    }
}
