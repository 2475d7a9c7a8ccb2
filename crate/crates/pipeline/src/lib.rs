//! Two-worker streaming pipeline over the cuestream core engine.
//!
//! The inference worker drives the synthetic world through the propagation
//! engine and pushes every refreshed frame result into a bounded queue; the
//! post-processing worker consumes strictly in order, builds kinematic
//! tracks, and judges goal/collision/rebound events with overwrite
//! semantics. File formats, the parameter-sweep bench and the CLI live here
//! too.

pub mod bench;
pub mod config;
pub mod consumer;
pub mod queue;
pub mod report;
pub mod run;
pub mod scenarios;

pub use config::{ConfigFileError, PipelineConfig};
pub use queue::{QueueItem, VideoSegments};
pub use run::{run, run_with_backend, PipelineError, PocketSource, RunOutput};
