//! Desk-scale CAD flow for 3D FPGAs.
//!
//! Pipeline: BLIF ingestion → BLE packing → circuit graph → simulated-annealing
//! tier partitioning → per-tier simulated-annealing placement → negotiated-congestion
//! routing over a 3D routing-resource graph with restricted TSV sites →
//! minimum-channel-width search → static timing analysis → metrics report.

pub mod arch;
pub mod blif;
pub mod flow;
pub mod graph;
pub mod metrics;
pub mod pack;
pub mod partition;
pub mod place;
pub mod route;
pub mod rrg;
pub mod sa;
pub mod timing;
