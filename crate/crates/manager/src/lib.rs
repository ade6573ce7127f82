//! SNMP manager for MARF agents: sessions, rendering, trap reception,
//! statistics polling, and the HTTP/JSON gateway used by the console.

pub mod gateway;
pub mod render;
pub mod session;
pub mod stats;
pub mod traps;

pub use gateway::{Gateway, GatewayConfig};
pub use session::{ManagerError, Session, TargetSpec};
pub use stats::{StatSample, StatSeries};
pub use traps::{TrapListener, TrapRecord};
