//! Two-way decomposition of multivariate daily time-series panels.
//!
//! * [`wavelet`] and [`multifractal`]: dyadic multiresolution analysis and the
//!   wavelet multifractal spectrum of each series.
//! * [`dmd`]: exact dynamic mode decomposition of the whole panel, with modes
//!   ranked by power and converted to daily frequencies and cycle lengths.
//!
//! [`ingest`] loads panels, [`stats`] summarizes them, [`synth`] plants known
//! structure for testing, and [`report`] with [`pipeline`] write the tables
//! and plot data.

pub mod config;
pub mod dmd;
pub mod error;
pub mod ingest;
mod linalg;
pub mod multifractal;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod synth;
pub mod wavelet;

pub use error::{Error, Result};
pub use ingest::Panel;
