//! Configuration, presets, run manifests and experiment pipelines for the
//! `kickshift` command.
//!
//! A run resolves a preset or config file into a [`Config`], executes one
//! pipeline into a run directory and indexes every file it wrote in a
//! [`RunManifest`] with its SHA-256 checksum.

pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod presets;
pub mod units;

pub use config::{Config, Pipeline};
pub use error::{CliError, Result};
pub use manifest::{RunManifest, MANIFEST_FILE, SCHEMA, SCHEMA_ID};
pub use pipeline::{estimate, export_checkpoint, run_config, run_preset, Estimate};
pub use presets::{load_preset, preset_text, PRESETS};
