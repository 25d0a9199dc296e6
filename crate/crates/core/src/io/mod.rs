//! File formats, SVG rendering and the command implementations.

pub mod commands;
pub mod formats;
pub mod svg;

pub use commands::{cmd_eval, cmd_render, cmd_run, cmd_synth, CliError, Mode, RenderFormat, RunManifest};
