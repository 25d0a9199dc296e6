use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bevmap::io::{cmd_eval, cmd_render, cmd_run, cmd_synth, Mode, RenderFormat, RunManifest};
use bevmap::synth::{EvalThresholds, NoiseSpec};

#[derive(Parser)]
#[command(name = "bevmap", version, about = "Fisheye detections to a bird's-eye-view vector map")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Camera calibration (TOML); the shipped rig when omitted.
    #[arg(long)]
    calib: Option<PathBuf>,
    /// Vehicle type catalog (TOML); the shipped catalog when omitted.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Pipeline config (TOML).
    #[arg(long, env = "BEVMAP_CONFIG")]
    config: Option<PathBuf>,
    /// Input file; repeat for several.
    #[arg(long = "in", required = true)]
    inputs: Vec<PathBuf>,
    /// Output file or directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn manifest(self, mode: Mode) -> RunManifest {
        RunManifest {
            mode,
            calibration: self.calib,
            catalog: self.catalog,
            config: self.config,
            inputs: self.inputs,
            output: self.out,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Svg,
}

#[derive(Subcommand)]
enum Command {
    /// Detection stream(s) to a BEV map.
    Run(Common),
    /// Scene file to a detection stream and truth sidecar.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Gaussian pixel noise, standard deviation.
        #[arg(long, default_value_t = 0.0)]
        noise_px: f64,
        /// Round box coordinates to whole pixels.
        #[arg(long)]
        quantize: bool,
        #[arg(long, default_value_t = 0.0)]
        drop_prob: f64,
        /// Ground gradient along ego x, e.g. 0.05 for 5%.
        #[arg(long, default_value_t = 0.0)]
        slope: f64,
    },
    /// BEV map and truth sidecar to an error report.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.25)]
        gate_x: f64,
        #[arg(long, default_value_t = 0.20)]
        gate_y0: f64,
        #[arg(long, default_value_t = 0.40)]
        gate_y1: f64,
        #[arg(long, default_value_t = 0.50)]
        gate_y2: f64,
    },
    /// BEV map to text or per-frame SVG.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = match Cli::parse().command {
        Command::Run(common) => cmd_run(&common.manifest(Mode::Run)),
        Command::Synth { common, seed, noise_px, quantize, drop_prob, slope } => {
            let noise = NoiseSpec { pixel_sigma: noise_px, quantize, drop_probability: drop_prob, slope_gradient: slope, seed };
            cmd_synth(&common.manifest(Mode::Synth), &noise)
        }
        Command::Eval { common, gate_x, gate_y0, gate_y1, gate_y2 } => {
            let thresholds = EvalThresholds { gate_x, gate_y: [gate_y0, gate_y1, gate_y2], ..Default::default() };
            cmd_eval(&common.manifest(Mode::Eval), &thresholds)
        }
        Command::Render { common, format } => {
            let format = match format {
                Format::Text => RenderFormat::Text,
                Format::Svg => RenderFormat::Svg,
            };
            cmd_render(&common.manifest(Mode::Render), format)
        }
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("bevmap: {e}");
            ExitCode::FAILURE
        }
    }
}
