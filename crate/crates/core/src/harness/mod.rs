//! Run configuration, presets and the commands behind the `lsm` binary.

pub mod commands;
pub mod config;
pub mod presets;

pub use commands::{
    cmd_forward, cmd_gallery, cmd_invert, cmd_pipeline, configure_threads, resolve_config, ForwardReport,
    InvertReport, Overrides, PipelineReport, DATASET_FILE,
};
pub use config::{emit_config, load_config, parse_config, RunConfig};
pub use presets::Preset;
