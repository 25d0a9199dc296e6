//! The four commands behind the `bevmap` binary, callable as library functions.
//!
//! Each returns the text meant for stdout; files are written to the paths in
//! the manifest. Output files never contain timings, so identical inputs give
//! identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use thiserror::Error;

use crate::camera::{CalibrationError, CameraRig};
use crate::detection::DetectionRecord;
use crate::io::formats::{self, BevFrame, FormatError, ReportFile, Scene, TruthFile, TruthRecord};
use crate::io::svg::{self, SvgStyle};
use crate::pipeline::{Pipeline, PipelineConfig, PipelineError, PipelineState};
use crate::synth::{self, EvalThresholds, NoiseSpec, SynthError};
use crate::vehicle::{DomainError, TypeCatalog};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Format { path: String, source: FormatError },
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{0}")]
    Usage(String),
    #[error("frame ids differ: BEV map has {map:?}, truth has {truth:?}")]
    FrameMismatch { map: Vec<u64>, truth: Vec<u64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Run,
    Synth,
    Eval,
    Render,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RenderFormat {
    #[default]
    Text,
    Svg,
}

/// Paths one command invocation works with.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub mode: Mode,
    /// Shipped rig when absent.
    pub calibration: Option<PathBuf>,
    /// Shipped catalog when absent.
    pub catalog: Option<PathBuf>,
    /// Built-in defaults when absent.
    pub config: Option<PathBuf>,
    pub inputs: Vec<PathBuf>,
    /// Stdout when absent, where the command allows it.
    pub output: Option<PathBuf>,
}

impl RunManifest {
    pub fn new(mode: Mode) -> Self {
        Self { mode, calibration: None, catalog: None, config: None, inputs: Vec::new(), output: None }
    }

    /// Checks that every referenced file exists and that the input count fits the mode.
    pub fn validate(&self) -> Result<(), CliError> {
        let wanted = match self.mode {
            Mode::Run => None,
            Mode::Synth | Mode::Render => Some(1),
            Mode::Eval => Some(2),
        };
        if let Some(n) = wanted {
            if self.inputs.len() != n {
                return Err(CliError::Usage(format!("{:?} takes {n} input file(s), got {}", self.mode, self.inputs.len())));
            }
        } else if self.inputs.is_empty() {
            return Err(CliError::Usage("run needs at least one --in stream".into()));
        }
        let named = [&self.calibration, &self.catalog, &self.config].into_iter().flatten();
        for p in named.chain(self.inputs.iter()) {
            if !p.is_file() {
                return Err(CliError::Read {
                    path: p.display().to_string(),
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
                });
            }
        }
        Ok(())
    }

    fn rig(&self) -> Result<CameraRig, CliError> {
        Ok(match &self.calibration {
            Some(p) => CameraRig::load(p)?,
            None => CameraRig::default_rig(),
        })
    }

    fn type_catalog(&self) -> Result<TypeCatalog, CliError> {
        Ok(match &self.catalog {
            Some(p) => TypeCatalog::load(p)?,
            None => TypeCatalog::default(),
        })
    }

    fn pipeline_config(&self) -> Result<PipelineConfig, CliError> {
        Ok(match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        })
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read { path: path.display().to_string(), source })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.display().to_string(), source })?;
    }
    fs::write(path, text).map_err(|source| CliError::Write { path: path.display().to_string(), source })
}

fn format_err(path: &Path) -> impl FnOnce(FormatError) -> CliError + '_ {
    move |source| CliError::Format { path: path.display().to_string(), source }
}

/// Writes to the manifest output, or returns the text for stdout.
fn emit(manifest: &RunManifest, text: String, note: String) -> Result<String, CliError> {
    match &manifest.output {
        Some(p) => {
            write(p, &text)?;
            Ok(note)
        }
        None => Ok(text),
    }
}

/// Sidecar path next to a detection stream: `frames.jsonl` → `frames.truth.jsonl`.
pub fn truth_sidecar_path(stream: &Path) -> PathBuf {
    let stem = stream.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "stream".into());
    stream.with_file_name(format!("{stem}.truth.jsonl"))
}

/// Runs the pipeline over one or more detection streams (for example one
/// file per camera) and writes the BEV map.
pub fn cmd_run(manifest: &RunManifest) -> Result<String, CliError> {
    manifest.validate()?;
    let pipeline = Pipeline::new(manifest.rig()?, manifest.type_catalog()?, manifest.pipeline_config()?);
    let mut frames: BTreeMap<u64, Vec<DetectionRecord>> = BTreeMap::new();
    for path in &manifest.inputs {
        for (id, records) in formats::read_detection_stream(&read(path)?).map_err(format_err(path))? {
            frames.entry(id).or_default().extend(records);
        }
    }
    let mut state = PipelineState::default();
    let mut out = Vec::with_capacity(frames.len());
    let mut total_us = 0;
    for (id, records) in &frames {
        let result = pipeline.process_frame(*id, records, &mut state)?;
        total_us += result.stage_timings.total_us;
        out.push(BevFrame::from_result(&result));
    }
    let boxes: usize = out.iter().map(|f| f.boxes.len()).sum();
    info!("processed {} frames in {total_us} us", out.len());
    let note = format!("{} frames, {boxes} boxes\n", out.len());
    emit(manifest, formats::write_bev_map(&out), note)
}

/// Renders a scene into a detection stream plus its truth sidecar.
pub fn cmd_synth(manifest: &RunManifest, noise: &NoiseSpec) -> Result<String, CliError> {
    manifest.validate()?;
    let out_path = manifest
        .output
        .as_ref()
        .ok_or_else(|| CliError::Usage("synth needs --out for the stream and its truth sidecar".into()))?;
    let rig = manifest.rig()?;
    let catalog = manifest.type_catalog()?;
    let scene_path = &manifest.inputs[0];
    let scene = Scene::from_toml_str(&read(scene_path)?, &catalog).map_err(format_err(scene_path))?;

    let mut stream = Vec::new();
    let mut truth = TruthFile { noise: noise.clone(), records: Vec::new() };
    for frame in 0..scene.frames {
        let vehicles = scene.at_frame(frame);
        let rendered = synth::render_detections(frame, &vehicles, &rig, &catalog, noise)?;
        for (v, vis) in vehicles.iter().zip(&rendered.visibility) {
            truth.records.push(TruthRecord {
                frame_id: frame,
                id: v.id,
                x: v.center.x,
                y: v.center.y,
                heading_deg: v.heading.to_degrees(),
                type_name: v.type_name.clone(),
                visible: vis.visible,
            });
        }
        stream.push((frame, rendered.records));
    }
    let sidecar = truth_sidecar_path(out_path);
    write(out_path, &formats::write_detection_stream(&stream))?;
    write(&sidecar, &formats::write_truth(&truth))?;
    let visible = truth.records.iter().filter(|r| r.visible).count();
    Ok(format!(
        "{} frames, {visible}/{} vehicle observations visible\nstream {}\ntruth  {}\n",
        scene.frames,
        truth.records.len(),
        out_path.display(),
        sidecar.display()
    ))
}

/// Scores a BEV map against a truth sidecar. Inputs: map, then sidecar.
/// Only vehicles marked visible count as expected detections.
pub fn cmd_eval(manifest: &RunManifest, thresholds: &EvalThresholds) -> Result<String, CliError> {
    manifest.validate()?;
    let (map_path, truth_path) = (&manifest.inputs[0], &manifest.inputs[1]);
    let map = formats::read_bev_map(&read(map_path)?).map_err(format_err(map_path))?;
    let truth = formats::read_truth(&read(truth_path)?).map_err(format_err(truth_path))?;
    let map_ids: Vec<u64> = map.iter().map(|f| f.frame_id).collect();
    let truth_ids: Vec<u64> = truth.frame_ids().into_iter().collect();
    if map_ids != truth_ids {
        return Err(CliError::FrameMismatch { map: map_ids, truth: truth_ids });
    }
    let mut per_frame = Vec::new();
    for frame in &map {
        let boxes: Vec<_> = frame.boxes.iter().map(|b| b.to_box()).collect();
        let expected: Vec<_> =
            truth.records.iter().filter(|r| r.frame_id == frame.frame_id && r.visible).map(TruthRecord::vehicle).collect();
        per_frame.push((frame.frame_id, synth::evaluate(&boxes, &expected, thresholds)));
    }
    let report = ReportFile::from_frames(thresholds, &per_frame);
    let table = formats::format_report_table(&report);
    match &manifest.output {
        Some(p) => {
            write(p, &formats::write_report(&report))?;
            Ok(table)
        }
        None => Ok(format!("{table}\n{}", formats::write_report(&report))),
    }
}

/// Draws every frame of a BEV map: a text listing, or one SVG per frame in
/// the output directory.
pub fn cmd_render(manifest: &RunManifest, format: RenderFormat) -> Result<String, CliError> {
    manifest.validate()?;
    let map_path = &manifest.inputs[0];
    let map = formats::read_bev_map(&read(map_path)?).map_err(format_err(map_path))?;
    match format {
        RenderFormat::Text => {
            let text: String = map.iter().map(svg::render_text).collect();
            emit(manifest, text, format!("{} frames\n", map.len()))
        }
        RenderFormat::Svg => {
            let dir = manifest
                .output
                .as_ref()
                .ok_or_else(|| CliError::Usage("svg rendering needs --out <directory>".into()))?;
            let style = SvgStyle::default();
            let mut written = String::new();
            for frame in &map {
                let path = dir.join(svg_file_name(frame.frame_id));
                write(&path, &svg::render_svg(frame, &style))?;
                written.push_str(&format!("{}\n", path.display()));
            }
            Ok(written)
        }
    }
}

pub fn svg_file_name(frame_id: u64) -> String {
    format!("frame_{frame_id:06}.svg")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_sits_next_to_the_stream() {
        assert_eq!(truth_sidecar_path(Path::new("out/frames.jsonl")), PathBuf::from("out/frames.truth.jsonl"));
    }

    #[test]
    fn missing_calibration_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let stream = dir.path().join("s.jsonl");
        fs::write(&stream, formats::write_detection_stream(&[])).unwrap();
        let mut m = RunManifest::new(Mode::Run);
        m.calibration = Some(dir.path().join("nope.toml"));
        m.inputs.push(stream);
        let err = cmd_run(&m).unwrap_err().to_string();
        assert!(err.contains("nope.toml"), "{err}");
    }

    #[test]
    fn empty_stream_gives_empty_map() {
        let dir = tempfile::tempdir().unwrap();
        let stream = dir.path().join("s.jsonl");
        fs::write(&stream, formats::write_detection_stream(&[])).unwrap();
        let mut m = RunManifest::new(Mode::Run);
        m.inputs.push(stream);
        let out = cmd_run(&m).unwrap();
        assert!(formats::read_bev_map(&out).unwrap().is_empty());
    }

    #[test]
    fn eval_rejects_frame_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let map = dir.path().join("m.jsonl");
        let truth = dir.path().join("t.jsonl");
        fs::write(&map, formats::write_bev_map(&[BevFrame { frame_id: 1, boxes: vec![], unresolved: vec![] }])).unwrap();
        fs::write(&truth, formats::write_truth(&TruthFile { noise: NoiseSpec::default(), records: vec![] })).unwrap();
        let mut m = RunManifest::new(Mode::Eval);
        m.inputs = vec![map, truth];
        assert!(matches!(cmd_eval(&m, &EvalThresholds::default()), Err(CliError::FrameMismatch { .. })));
    }
}
