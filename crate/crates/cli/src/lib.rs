//! Command layer over the `aquaped` library: configuration, provenance
//! manifests, run summaries and the pipeline commands.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod summary;
