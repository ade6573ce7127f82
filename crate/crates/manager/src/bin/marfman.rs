use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};
use marf_core::smi::{Mib, Strictness};
use marf_core::Oid;
use marf_manager::render::{fetch_table, format_varbind, parse_assignment};
use marf_manager::stats::{poll_stats, write_csv};
use marf_manager::{Gateway, GatewayConfig, Session, TargetSpec, TrapListener};

/// Command-line SNMP manager for MARF agents.
#[derive(Debug, Parser)]
#[command(name = "marfman", version)]
struct Args {
    /// Agent to talk to, host:port. Usually the master agent.
    #[arg(long, global = true, default_value = "127.0.0.1:16105")]
    target: String,
    #[arg(long, global = true, default_value = "public")]
    community: String,
    #[arg(long, global = true, default_value = "private")]
    write_community: String,
    /// Per attempt, in milliseconds.
    #[arg(long, global = true, default_value_t = 2000)]
    timeout: u64,
    #[arg(long, global = true, default_value_t = 1)]
    retries: u32,
    /// Load MIB modules from this directory instead of the bundled set.
    #[arg(long, global = true, env = "MARFMAN_MIB_DIR")]
    mib_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    Get {
        oids: Vec<String>,
    },
    Getnext {
        oids: Vec<String>,
    },
    Getbulk {
        #[arg(long, default_value_t = 0)]
        non_repeaters: i32,
        #[arg(long, default_value_t = 10)]
        max_repetitions: i32,
        oids: Vec<String>,
    },
    /// NAME=VALUE assignments, sent in one request. Values may carry an
    /// i:, c:, t:, s: or o: type prefix.
    Set {
        assignments: Vec<String>,
    },
    Walk {
        root: String,
    },
    /// Walks a table and prints it with inherited columns filled in.
    Table {
        name: String,
    },
    /// Prints notifications as they arrive.
    Traps {
        #[arg(long, default_value = "0.0.0.0:16162")]
        listen: SocketAddr,
        /// Stop after this many; 0 runs forever.
        #[arg(long, default_value_t = 0)]
        count: usize,
    },
    /// Samples counters and writes CSV.
    Poll {
        oids: Vec<String>,
        #[arg(long, default_value_t = 1000)]
        interval_ms: u64,
        #[arg(long, default_value_t = 10)]
        duration_s: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Runs the HTTP/JSON gateway.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        /// Also receive traps here and expose them at /api/traps.
        #[arg(long)]
        trap_listen: Option<SocketAddr>,
        #[arg(long, default_value_t = 1000)]
        poll_ms: u64,
    },
}

fn load_mib(dir: Option<&PathBuf>) -> Result<&'static Mib, String> {
    match dir {
        None => Ok(Mib::bundled()),
        Some(d) => {
            let mib = Mib::load_dir(d, Strictness::Lenient).map_err(|e| e.to_string())?;
            for w in &mib.warnings {
                log::warn!("{w}");
            }
            // lives for the whole process
            Ok(Box::leak(Box::new(mib)))
        }
    }
}

fn oids(mib: &Mib, names: &[String]) -> Result<Vec<Oid>, String> {
    if names.is_empty() {
        return Err("no OIDs given".into());
    }
    names.iter().map(|n| mib.parse_oid(n).map_err(|e| format!("{n}: {e}"))).collect()
}

fn run(args: Args) -> Result<(), String> {
    let mib = load_mib(args.mib_dir.as_ref())?;
    let mut target = TargetSpec::parse(&args.target).map_err(|e| e.to_string())?;
    target.read_community = args.community.into_bytes();
    target.write_community = args.write_community.into_bytes();
    target.timeout = Duration::from_millis(args.timeout.max(1));
    target.retries = args.retries;
    let session = || Session::open(target.clone()).map_err(|e| e.to_string());
    let print = |vbs: &[marf_core::codec::Varbind]| {
        for vb in vbs {
            println!("{}", format_varbind(mib, vb));
        }
    };
    match args.cmd {
        Cmd::Get { oids: names } => print(&session()?.get(&oids(mib, &names)?).map_err(|e| e.to_string())?),
        Cmd::Getnext { oids: names } => print(&session()?.getnext(&oids(mib, &names)?).map_err(|e| e.to_string())?),
        Cmd::Getbulk { non_repeaters, max_repetitions, oids: names } => {
            print(&session()?.getbulk(non_repeaters, max_repetitions, &oids(mib, &names)?).map_err(|e| e.to_string())?)
        }
        Cmd::Set { assignments } => {
            if assignments.is_empty() {
                return Err("no assignments given".into());
            }
            let vbs = assignments.iter().map(|a| parse_assignment(mib, a)).collect::<Result<Vec<_>, _>>()?;
            print(&session()?.set(vbs).map_err(|e| e.to_string())?)
        }
        Cmd::Walk { root } => {
            let root = mib.parse_oid(&root).map_err(|e| e.to_string())?;
            print(&session()?.walk(&root).map_err(|e| e.to_string())?)
        }
        Cmd::Table { name } => {
            let table = mib.table(&name).ok_or_else(|| format!("no table {name}"))?;
            print!("{}", fetch_table(&session()?, mib, table).map_err(|e| e.to_string())?);
        }
        Cmd::Traps { listen, count } => {
            let listener = TrapListener::bind(listen).map_err(|e| e.to_string())?;
            eprintln!("listening on {}", listener.local_addr());
            let rx = listener.subscribe();
            for (n, rec) in rx.iter().enumerate() {
                println!(
                    "#{} {} from {} {}",
                    rec.seq,
                    rec.received.to_rfc3339(),
                    rec.source,
                    mib.name_of(&rec.event.notification)
                );
                print(&rec.event.varbinds);
                if count != 0 && n + 1 == count {
                    break;
                }
            }
        }
        Cmd::Poll { oids: names, interval_ms, duration_s, csv } => {
            let oids = oids(mib, &names)?;
            let named: Vec<(String, Oid)> = oids.iter().map(|o| (mib.name_of(o), o.clone())).collect();
            let s = session()?;
            let series = poll_stats(
                &[(target.addr.to_string(), &s)],
                &named,
                Duration::from_millis(interval_ms),
                Duration::from_secs(duration_s),
            )
            .map_err(|e| e.to_string())?;
            match csv {
                Some(p) => {
                    let f = std::fs::File::create(&p).map_err(|e| format!("{}: {e}", p.display()))?;
                    write_csv(&series, f).map_err(|e| e.to_string())?;
                }
                None => write_csv(&series, std::io::stdout().lock()).map_err(|e| e.to_string())?,
            }
        }
        Cmd::Serve { listen, trap_listen, poll_ms } => {
            let traps = match trap_listen {
                Some(a) => Some(Arc::new(TrapListener::bind(a).map_err(|e| e.to_string())?)),
                None => None,
            };
            let mut cfg = GatewayConfig::new(target);
            cfg.poll_interval = Duration::from_millis(poll_ms.max(100));
            let gw = Gateway::spawn(cfg, mib, traps, listen).map_err(|e| e.to_string())?;
            eprintln!("gateway on http://{}", gw.local_addr());
            gw.wait();
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("marfman: {e}");
            ExitCode::FAILURE
        }
    }
}
