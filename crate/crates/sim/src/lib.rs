//! Scenario runner, file formats and command-line front end for
//! [`pseudolat_core`].
//!
//! - [`config`]: versioned JSON configs with field-path error reporting.
//! - [`scenario`]: closed-loop measure/solve/relocate runs and their metrics.
//! - [`compare`]: paired OFDM/OTFS ranging-error trials.
//! - [`output`]: CSV/JSON artifacts and the measurement-matrix dataset.
//!
//! Runs and trials are parallel over rayon; each uses its own seed
//! (`base_seed + index`) and results are gathered in index order, so
//! outputs do not depend on the thread count.

pub mod compare;
pub mod config;
pub mod crlb;
mod error;
pub mod output;
pub mod scenario;
pub mod stats;

pub use compare::{compare_waveforms, WaveformComparison};
pub use config::{ScenarioConfig, WaveformStudyConfig};
pub use crlb::{scenario_crlb, CrlbReport};
pub use error::{Result, SimError};
pub use scenario::{collect_dataset, run_scenario, MetricsReport};
