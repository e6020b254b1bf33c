//! Placement and sizing of PV, wind-turbine and fuel-cell generation on a
//! radial distribution feeder.
//!
//! The pipeline is: [`network`] and [`profile`] load the feeder and its
//! 24-hour series, [`dg`] turns unit ratings into hourly injections,
//! [`powerflow`] solves each hour by backward/forward sweep, [`objective`]
//! scores a candidate placement, and [`optim`] searches for the best one
//! with the Lightning Search Algorithm or a PSO baseline. [`runner`] wires
//! everything into scenario runs and reports.

// `!(x >= 0.0)` style checks are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dg;
pub mod error;
pub mod network;
pub mod objective;
pub mod optim;
pub mod powerflow;
pub mod profile;
pub mod runner;

pub use error::{Error, Result};
pub use network::NetworkModel;
pub use profile::{HourlySeries, SeriesKind};
