//! Frame-by-frame orchestration: branch adapters per camera, per-camera ids,
//! cross-camera merge, then BEV boxes.
//!
//! Failures are contained: a bad record skips its camera, a target whose pose
//! cannot be recovered is reported and skipped, and the rest of the frame goes on.

use std::path::Path;
use std::time::Instant;

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bev::{self, PoseCase};
use crate::camera::{CameraRig, Channel};
use crate::detection::{self, AdapterConfig, DetectionRecord};
use crate::reid::{self, FusionConfig, IdAllocator};
use crate::vehicle::{BevBox, MultidimensionalVector, TypeCatalog};

pub const PIPELINE_CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("records carry frame ids {found:?} but frame {expected} was requested")]
    MismatchedFrameIds { expected: u64, found: Vec<u64> },
    #[error("two records for the {0} camera in one frame")]
    DuplicateChannel(Channel),
    #[error("cannot read pipeline config {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("pipeline config parse error: {0}")]
    Parse(String),
    #[error("unsupported pipeline config version {0}")]
    UnsupportedVersion(u32),
    #[error(transparent)]
    Fusion(#[from] reid::FusionError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub version: u32,
    #[serde(default)]
    pub adapter: AdapterConfig,
    #[serde(default)]
    pub fusion: FusionConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { version: PIPELINE_CONFIG_VERSION, adapter: AdapterConfig::default(), fusion: FusionConfig::default() }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(document: &str) -> Result<Self, PipelineError> {
        let cfg: PipelineConfig = toml::from_str(document).map_err(|e| PipelineError::Parse(e.to_string()))?;
        if cfg.version != PIPELINE_CONFIG_VERSION {
            return Err(PipelineError::UnsupportedVersion(cfg.version));
        }
        cfg.fusion.validate()?;
        if !(0.0..=1.0).contains(&cfg.adapter.score_threshold) {
            return Err(PipelineError::Parse(format!(
                "adapter.score_threshold {} outside [0, 1]",
                cfg.adapter.score_threshold
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Io { path: path.display().to_string(), reason: e.to_string() })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// State carried between frames.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineState {
    pub ids: IdAllocator,
    /// Fused targets of the previous frame, for id carry-over.
    pub prior: Vec<MultidimensionalVector>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub adapters_us: u64,
    pub channel_ids_us: u64,
    pub merge_us: u64,
    pub bev_us: u64,
    pub total_us: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetIssue {
    pub obj_id: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameDiagnostics {
    pub dropped_parts: usize,
    pub dropped_points: usize,
    pub skipped_channels: Vec<String>,
    pub unresolved: Vec<TargetIssue>,
    pub messages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub frame_id: u64,
    pub bev_boxes: Vec<BevBox>,
    pub vectors: Vec<MultidimensionalVector>,
    pub pose_cases: Vec<(u64, PoseCase)>,
    pub stage_timings: StageTimings,
    pub diagnostics: FrameDiagnostics,
}

/// Calibration, catalog and tuning bundled for processing.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub rig: CameraRig,
    pub catalog: TypeCatalog,
    pub config: PipelineConfig,
}

fn micros(t: Instant) -> u64 {
    t.elapsed().as_micros() as u64
}

impl Pipeline {
    pub fn new(rig: CameraRig, catalog: TypeCatalog, config: PipelineConfig) -> Self {
        Self { rig, catalog, config }
    }

    /// Shipped rig, catalog and default tuning.
    pub fn with_defaults() -> Self {
        Self::new(CameraRig::default_rig(), TypeCatalog::default(), PipelineConfig::default())
    }

    /// Processes every camera's record for one frame. Cameras without a record
    /// simply contribute nothing.
    pub fn process_frame(
        &self,
        frame_id: u64,
        records: &[DetectionRecord],
        state: &mut PipelineState,
    ) -> Result<FrameResult, PipelineError> {
        let start = Instant::now();
        let mut found: Vec<u64> = records.iter().map(|r| r.frame_id).filter(|&f| f != frame_id).collect();
        if !found.is_empty() {
            found.sort_unstable();
            found.dedup();
            return Err(PipelineError::MismatchedFrameIds { expected: frame_id, found });
        }
        let mut ordered: Vec<&DetectionRecord> = records.iter().collect();
        ordered.sort_by_key(|r| r.channel);
        if let Some(w) = ordered.windows(2).find(|w| w[0].channel == w[1].channel) {
            return Err(PipelineError::DuplicateChannel(w[0].channel));
        }

        let mut diagnostics = FrameDiagnostics::default();
        let mut timings = StageTimings::default();

        let t = Instant::now();
        let mut per_channel = Vec::new();
        for record in ordered {
            let camera = self.rig.camera(record.channel);
            match detection::assemble_channel_vectors(record, camera, &self.catalog, &self.config.adapter) {
                Ok(cv) => {
                    diagnostics.dropped_parts += cv.diagnostics.dropped_parts;
                    diagnostics.dropped_points += cv.diagnostics.dropped_points;
                    diagnostics.messages.extend(cv.diagnostics.messages);
                    per_channel.push(cv.vectors);
                }
                Err(e) => {
                    warn!("frame {frame_id}: skipping {} camera: {e}", record.channel);
                    diagnostics.skipped_channels.push(format!("{}: {e}", record.channel));
                }
            }
        }
        timings.adapters_us = micros(t);

        let t = Instant::now();
        let fusion = &self.config.fusion;
        let mut identified = Vec::new();
        for vectors in &per_channel {
            identified.extend(reid::assign_channel_ids(vectors, &state.prior, fusion, &mut state.ids));
        }
        timings.channel_ids_us = micros(t);

        let t = Instant::now();
        let mut targets = reid::merge_bev_targets(&identified, fusion, &mut state.ids);
        timings.merge_us = micros(t);

        let t = Instant::now();
        let mut bev_boxes = Vec::new();
        let mut pose_cases = Vec::new();
        for v in &mut targets {
            let id = v.obj_id.expect("merged targets carry ids");
            let pose = bev::estimate_pose(v);
            match pose.and_then(|p| bev::generate_bev_vector(v).map(|b| (p, b))) {
                Ok((p, b)) => {
                    if p.case_used != PoseCase::BumperOnly {
                        v.heading_geometric = Some(p.heading);
                    }
                    pose_cases.push((id, p.case_used));
                    bev_boxes.push(b);
                }
                Err(e) => {
                    debug!("frame {frame_id}: target {id} unresolved: {e}");
                    diagnostics.unresolved.push(TargetIssue { obj_id: id, reason: e.to_string() });
                }
            }
        }
        timings.bev_us = micros(t);
        timings.total_us = micros(start);

        state.prior = targets.clone();
        Ok(FrameResult { frame_id, bev_boxes, vectors: targets, pose_cases, stage_timings: timings, diagnostics })
    }
}
