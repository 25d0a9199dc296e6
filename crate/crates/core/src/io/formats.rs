//! Line-delimited JSON formats with a versioned header line, and the TOML
//! scene format.
//!
//! | file            | header `format`       | body lines                          |
//! |-----------------|-----------------------|-------------------------------------|
//! | detection stream| `bevmap-detections`   | one [`DetectionRecord`] per camera and frame |
//! | truth sidecar   | `bevmap-truth`        | one [`TruthRecord`] per vehicle and frame |
//! | BEV map         | `bevmap-bev`          | one [`BevFrame`] per frame          |
//! | error report    | `bevmap-report`       | [`ReportLine`]: targets, then one summary |
//!
//! Angles are degrees in every file. Parsers reject unknown fields, unknown
//! formats and unsupported versions.

use std::collections::BTreeSet;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle;
use crate::camera::GroundPoint;
use crate::detection::DetectionRecord;
use crate::pipeline::{FrameResult, TargetIssue};
use crate::synth::{ErrorReport, EvalThresholds, GroundTruthVehicle, IntervalStat, NoiseSpec, TargetError};
use crate::vehicle::{BevBox, TypeCatalog};

pub const FORMAT_VERSION: u32 = 1;
pub const DETECTIONS_FORMAT: &str = "bevmap-detections";
pub const TRUTH_FORMAT: &str = "bevmap-truth";
pub const BEV_FORMAT: &str = "bevmap-bev";
pub const REPORT_FORMAT: &str = "bevmap-report";
/// Stated in every header so a reader never has to guess.
pub const UNITS: &str = "metres, degrees";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("missing header line")]
    MissingHeader,
    #[error("expected a {expected} file, found {found:?}")]
    WrongFormat { expected: &'static str, found: String },
    #[error("unsupported {format} version {version}")]
    UnsupportedVersion { format: String, version: u32 },
    #[error("line {line}: {reason}")]
    Invalid { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlainHeader {
    format: String,
    version: u32,
    units: String,
}

fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty())
}

fn parse_line<T: DeserializeOwned>(line: usize, s: &str) -> Result<T, FormatError> {
    serde_json::from_str(s).map_err(|e| FormatError::Syntax { line, reason: e.to_string() })
}

fn to_line<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("format types serialize")
}

/// Reads the header as a generic value, checks format and version, then
/// parses it strictly as `H`.
fn parse_header<H: DeserializeOwned>(
    lines: &mut dyn Iterator<Item = (usize, &str)>,
    expected: &'static str,
) -> Result<H, FormatError> {
    let (n, first) = lines.next().ok_or(FormatError::MissingHeader)?;
    let raw: serde_json::Value = parse_line(n, first)?;
    let format = raw.get("format").and_then(|f| f.as_str()).unwrap_or_default().to_string();
    if format != expected {
        return Err(FormatError::WrongFormat { expected, found: format });
    }
    let version = raw.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion { format, version });
    }
    parse_line(n, first)
}

fn plain_header(format: &str) -> String {
    to_line(&PlainHeader { format: format.into(), version: FORMAT_VERSION, units: UNITS.into() })
}

/// Rounds to a micrometre (or micro-degree) and clears negative zero, so
/// output bytes do not depend on last-bit noise.
pub fn round6(x: f64) -> f64 {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn point6(p: GroundPoint) -> [f64; 2] {
    [round6(p.x), round6(p.y)]
}

// ---------------------------------------------------------------- detections

/// Detection stream: frames in order, each with its records.
pub type DetectionFrames = Vec<(u64, Vec<DetectionRecord>)>;

/// Parses a detection stream; records of one frame must be contiguous and
/// frame ids strictly increasing.
pub fn read_detection_stream(text: &str) -> Result<DetectionFrames, FormatError> {
    let mut lines = numbered_lines(text);
    let _: PlainHeader = parse_header(&mut lines, DETECTIONS_FORMAT)?;
    let mut frames: DetectionFrames = Vec::new();
    for (n, line) in lines {
        let record: DetectionRecord = parse_line(n, line)?;
        record.validate().map_err(|e| FormatError::Invalid { line: n, reason: e.to_string() })?;
        match frames.last_mut() {
            Some((id, records)) if *id == record.frame_id => {
                if records.iter().any(|r| r.channel == record.channel) {
                    return Err(FormatError::Invalid {
                        line: n,
                        reason: format!("second {} record in frame {id}", record.channel),
                    });
                }
                records.push(record);
            }
            Some((id, _)) if *id > record.frame_id => {
                return Err(FormatError::Invalid {
                    line: n,
                    reason: format!("frame {} after frame {id}", record.frame_id),
                });
            }
            _ => frames.push((record.frame_id, vec![record])),
        }
    }
    Ok(frames)
}

pub fn write_detection_stream(frames: &[(u64, Vec<DetectionRecord>)]) -> String {
    let mut out = plain_header(DETECTIONS_FORMAT);
    out.push('\n');
    for (_, records) in frames {
        for r in records {
            out.push_str(&to_line(r));
            out.push('\n');
        }
    }
    out
}

// ---------------------------------------------------------------- truth

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthHeader {
    pub format: String,
    pub version: u32,
    pub units: String,
    pub noise: NoiseSpec,
}

/// One vehicle in one frame, as written by `synth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthRecord {
    pub frame_id: u64,
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub heading_deg: f64,
    pub type_name: String,
    /// The parts that reached the detector support a pose.
    pub visible: bool,
}

impl TruthRecord {
    pub fn vehicle(&self) -> GroundTruthVehicle {
        GroundTruthVehicle {
            id: self.id,
            center: GroundPoint::new(self.x, self.y),
            heading: angle::wrap(self.heading_deg.to_radians()),
            type_name: self.type_name.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthFile {
    pub noise: NoiseSpec,
    pub records: Vec<TruthRecord>,
}

impl TruthFile {
    pub fn frame_ids(&self) -> BTreeSet<u64> {
        self.records.iter().map(|r| r.frame_id).collect()
    }
}

pub fn read_truth(text: &str) -> Result<TruthFile, FormatError> {
    let mut lines = numbered_lines(text);
    let header: TruthHeader = parse_header(&mut lines, TRUTH_FORMAT)?;
    let records = lines.map(|(n, l)| parse_line(n, l)).collect::<Result<_, _>>()?;
    Ok(TruthFile { noise: header.noise, records })
}

pub fn write_truth(truth: &TruthFile) -> String {
    let header = TruthHeader {
        format: TRUTH_FORMAT.into(),
        version: FORMAT_VERSION,
        units: UNITS.into(),
        noise: truth.noise.clone(),
    };
    let mut out = to_line(&header);
    out.push('\n');
    for r in &truth.records {
        out.push_str(&to_line(r));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------- BEV map

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxRecord {
    pub obj_id: u64,
    pub type_name: String,
    pub center: [f64; 2],
    pub heading_deg: f64,
    /// Left-front, left-rear, right-front, right-rear.
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub c: [f64; 2],
    pub d: [f64; 2],
}

impl BoxRecord {
    pub fn from_box(b: &BevBox) -> Self {
        Self {
            obj_id: b.obj_id,
            type_name: b.type_name.clone(),
            center: point6(b.center),
            heading_deg: round6(b.heading.to_degrees()),
            a: point6(b.a),
            b: point6(b.b),
            c: point6(b.c),
            d: point6(b.d),
        }
    }

    pub fn to_box(&self) -> BevBox {
        let p = |v: [f64; 2]| GroundPoint::new(v[0], v[1]);
        BevBox {
            obj_id: self.obj_id,
            type_name: self.type_name.clone(),
            center: p(self.center),
            heading: angle::wrap(self.heading_deg.to_radians()),
            a: p(self.a),
            b: p(self.b),
            c: p(self.c),
            d: p(self.d),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BevFrame {
    pub frame_id: u64,
    pub boxes: Vec<BoxRecord>,
    /// Targets that were tracked but whose pose could not be recovered.
    #[serde(default)]
    pub unresolved: Vec<TargetIssue>,
}

impl BevFrame {
    pub fn from_result(r: &FrameResult) -> Self {
        Self {
            frame_id: r.frame_id,
            boxes: r.bev_boxes.iter().map(BoxRecord::from_box).collect(),
            unresolved: r.diagnostics.unresolved.clone(),
        }
    }
}

pub fn read_bev_map(text: &str) -> Result<Vec<BevFrame>, FormatError> {
    let mut lines = numbered_lines(text);
    let _: PlainHeader = parse_header(&mut lines, BEV_FORMAT)?;
    let mut frames: Vec<BevFrame> = Vec::new();
    for (n, line) in lines {
        let f: BevFrame = parse_line(n, line)?;
        if frames.last().is_some_and(|p| p.frame_id >= f.frame_id) {
            return Err(FormatError::Invalid { line: n, reason: format!("frame {} out of order", f.frame_id) });
        }
        frames.push(f);
    }
    Ok(frames)
}

pub fn write_bev_map(frames: &[BevFrame]) -> String {
    let mut out = plain_header(BEV_FORMAT);
    out.push('\n');
    for f in frames {
        out.push_str(&to_line(f));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------- report

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportHeader {
    pub format: String,
    pub version: u32,
    pub units: String,
    pub thresholds: EvalThresholds,
}

/// A target line as written: angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetLine {
    pub frame_id: u64,
    pub truth_id: u64,
    pub obj_id: u64,
    pub distance: f64,
    pub interval: Option<usize>,
    pub dx: f64,
    pub dy: f64,
    pub center_error: f64,
    pub heading_error_deg: f64,
    pub x_ok: bool,
    pub y_ok: Option<bool>,
}

impl TargetLine {
    pub fn new(frame_id: u64, t: &TargetError) -> Self {
        Self {
            frame_id,
            truth_id: t.truth_id,
            obj_id: t.obj_id,
            distance: round6(t.distance),
            interval: t.interval,
            dx: round6(t.dx),
            dy: round6(t.dy),
            center_error: round6(t.center_error),
            heading_error_deg: round6(t.heading_error.to_degrees()),
            x_ok: t.x_ok,
            y_ok: t.y_ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryLine {
    pub matched: usize,
    pub misses: Vec<(u64, u64)>,
    pub false_positives: Vec<(u64, u64)>,
    pub x: IntervalStat,
    pub y: [IntervalStat; 3],
    pub x_rate: Option<f64>,
    pub y_rate: [Option<f64>; 3],
    pub max_center_error: f64,
    pub max_heading_error_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ReportLine {
    Target(TargetLine),
    Summary(SummaryLine),
}

/// An evaluation over several frames, ready to write.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportFile {
    pub thresholds: EvalThresholds,
    pub targets: Vec<TargetLine>,
    pub summary: SummaryLine,
}

impl ReportFile {
    /// Collects per-frame reports; misses and false positives are tagged `(frame, id)`.
    pub fn from_frames(thresholds: &EvalThresholds, frames: &[(u64, ErrorReport)]) -> Self {
        let mut targets = Vec::new();
        let mut total = ErrorReport::default();
        let (mut misses, mut fps) = (Vec::new(), Vec::new());
        for (frame, r) in frames {
            targets.extend(r.targets.iter().map(|t| TargetLine::new(*frame, t)));
            misses.extend(r.misses.iter().map(|m| (*frame, *m)));
            fps.extend(r.false_positives.iter().map(|m| (*frame, *m)));
            total.absorb(r.clone());
        }
        let rate = |s: &IntervalStat| s.rate().map(round6);
        let summary = SummaryLine {
            matched: total.x.count,
            misses,
            false_positives: fps,
            x_rate: rate(&total.x),
            y_rate: [rate(&total.y[0]), rate(&total.y[1]), rate(&total.y[2])],
            x: total.x,
            y: total.y,
            max_center_error: round6(total.max_center_error),
            max_heading_error_deg: round6(total.max_heading_error.to_degrees()),
        };
        Self { thresholds: thresholds.clone(), targets, summary }
    }
}

pub fn write_report(report: &ReportFile) -> String {
    let header = ReportHeader {
        format: REPORT_FORMAT.into(),
        version: FORMAT_VERSION,
        units: UNITS.into(),
        thresholds: report.thresholds.clone(),
    };
    let mut out = to_line(&header);
    out.push('\n');
    for t in &report.targets {
        out.push_str(&to_line(&ReportLine::Target(t.clone())));
        out.push('\n');
    }
    out.push_str(&to_line(&ReportLine::Summary(report.summary.clone())));
    out.push('\n');
    out
}

pub fn read_report(text: &str) -> Result<ReportFile, FormatError> {
    let mut lines = numbered_lines(text);
    let header: ReportHeader = parse_header(&mut lines, REPORT_FORMAT)?;
    let mut targets = Vec::new();
    let mut summary = None;
    for (n, line) in lines {
        if summary.is_some() {
            return Err(FormatError::Invalid { line: n, reason: "content after summary".into() });
        }
        match parse_line(n, line)? {
            ReportLine::Target(t) => targets.push(t),
            ReportLine::Summary(s) => summary = Some(s),
        }
    }
    let summary = summary.ok_or(FormatError::Invalid { line: 0, reason: "missing summary line".into() })?;
    Ok(ReportFile { thresholds: header.thresholds, targets, summary })
}

fn pct(r: Option<f64>) -> String {
    r.map_or_else(|| "    n/a".into(), |r| format!("{:6.2}%", 100.0 * r))
}

/// Human-readable table of a report.
pub fn format_report_table(report: &ReportFile) -> String {
    use std::fmt::Write;
    let th = &report.thresholds;
    let e = &th.interval_edges;
    let mut s = String::new();
    let _ = writeln!(s, "{:>6} {:>6} {:>6} {:>8} {:>9} {:>9} {:>9} {:>4} {:>4}", "frame", "truth", "obj", "dist", "dx", "dy", "dhead", "x", "y");
    for t in &report.targets {
        let y = match t.y_ok {
            Some(true) => "ok",
            Some(false) => "FAIL",
            None => "-",
        };
        let x = if t.x_ok { "ok" } else { "FAIL" };
        let _ = writeln!(
            s,
            "{:>6} {:>6} {:>6} {:>8.3} {:>9.4} {:>9.4} {:>9.4} {:>4} {:>4}",
            t.frame_id, t.truth_id, t.obj_id, t.distance, t.dx, t.dy, t.heading_error_deg, x, y
        );
    }
    let sm = &report.summary;
    let _ = writeln!(s);
    let _ = writeln!(s, "matched {}  missed {}  false positives {}", sm.matched, sm.misses.len(), sm.false_positives.len());
    let _ = writeln!(s, "x  |dx| <= {:.2} m          {}  ({}/{})", th.gate_x, pct(sm.x_rate), sm.x.qualified, sm.x.count);
    for i in 0..3 {
        let _ = writeln!(
            s,
            "y  |dy| <= {:.2} m, {:.0}-{:.0} m  {}  ({}/{})",
            th.gate_y[i],
            e[i],
            e[i + 1],
            pct(sm.y_rate[i]),
            sm.y[i].qualified,
            sm.y[i].count
        );
    }
    let _ = writeln!(s, "max center error {:.6} m, max heading error {:.6} deg", sm.max_center_error, sm.max_heading_error_deg);
    s
}

// ---------------------------------------------------------------- scene

pub const SCENE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneVehicle {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub heading_deg: f64,
    pub type_name: String,
    /// Metres per frame in the ego frame.
    #[serde(default)]
    pub velocity: [f64; 2],
}

/// A static or uniformly moving set of vehicles rendered over `frames` frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub version: u32,
    #[serde(default = "one")]
    pub frames: u64,
    #[serde(default, rename = "vehicle")]
    pub vehicles: Vec<SceneVehicle>,
}

fn one() -> u64 {
    1
}

impl Scene {
    pub fn from_toml_str(text: &str, catalog: &TypeCatalog) -> Result<Self, FormatError> {
        let scene: Scene = toml::from_str(text).map_err(|e| FormatError::Syntax { line: 0, reason: e.to_string() })?;
        if scene.version != SCENE_VERSION {
            return Err(FormatError::UnsupportedVersion { format: "scene".into(), version: scene.version });
        }
        let mut ids = BTreeSet::new();
        for v in &scene.vehicles {
            let invalid = |reason: String| FormatError::Invalid { line: 0, reason: format!("vehicle {}: {reason}", v.id) };
            if !ids.insert(v.id) {
                return Err(invalid("duplicate id".into()));
            }
            if ![v.x, v.y, v.heading_deg, v.velocity[0], v.velocity[1]].iter().all(|f| f.is_finite()) {
                return Err(invalid("non-finite value".into()));
            }
            catalog.lookup_type_attrs(&v.type_name).map_err(|e| invalid(e.to_string()))?;
        }
        Ok(scene)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scene serializes")
    }

    /// Vehicle poses at a frame.
    pub fn at_frame(&self, frame: u64) -> Vec<GroundTruthVehicle> {
        self.vehicles
            .iter()
            .map(|v| GroundTruthVehicle {
                id: v.id,
                center: GroundPoint::new(v.x + v.velocity[0] * frame as f64, v.y + v.velocity[1] * frame as f64),
                heading: angle::wrap(v.heading_deg.to_radians()),
                type_name: v.type_name.clone(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::Channel;
    use crate::detection::{BoxClass, DetectedBox, HeadingEstimate};
    use crate::vehicle::BBox;

    #[test]
    fn rounding_clears_negative_zero() {
        assert_eq!(round6(-1e-9).to_bits(), 0.0f64.to_bits());
        assert_eq!(round6(1.23456789), 1.234568);
        assert_eq!(round6(round6(0.1 + 0.2)), round6(0.1 + 0.2));
    }

    #[test]
    fn detection_stream_round_trip() {
        let mut r = DetectionRecord::empty(Channel::Left, 4);
        let bbox = BBox::new(10.25, 20.0, 30.0, 40.5);
        r.boxes.push(DetectedBox { class: BoxClass::Vehicle, bbox, score: 0.8 });
        r.heading_estimates.push(HeadingEstimate { vehicle_bbox: bbox, heading_deg: 33.3, score: 0.7 });
        let frames = vec![(4, vec![r, DetectionRecord::empty(Channel::Front, 4)])];
        let text = write_detection_stream(&frames);
        let back = read_detection_stream(&text).unwrap();
        assert_eq!(back, vec![(4, vec![frames[0].1[0].clone(), frames[0].1[1].clone()])]);
        assert_eq!(write_detection_stream(&back), text);
    }

    #[test]
    fn empty_stream_is_just_a_header() {
        let text = write_detection_stream(&[]);
        assert_eq!(text.lines().count(), 1);
        assert!(read_detection_stream(&text).unwrap().is_empty());
    }

    #[test]
    fn wrong_format_and_version_are_rejected() {
        let text = write_bev_map(&[]);
        assert!(matches!(read_detection_stream(&text), Err(FormatError::WrongFormat { .. })));
        let text = text.replace("\"version\":1", "\"version\":9");
        assert!(matches!(read_bev_map(&text), Err(FormatError::UnsupportedVersion { version: 9, .. })));
        assert!(matches!(read_bev_map(""), Err(FormatError::MissingHeader)));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut text = write_detection_stream(&[(0, vec![DetectionRecord::empty(Channel::Rear, 0)])]);
        text = text.replace("\"frame_id\":0", "\"frame_id\":0,\"extra\":1");
        assert!(matches!(read_detection_stream(&text), Err(FormatError::Syntax { line: 2, .. })));
    }

    #[test]
    fn frames_must_increase() {
        let frames = vec![
            (3, vec![DetectionRecord::empty(Channel::Front, 3)]),
            (2, vec![DetectionRecord::empty(Channel::Front, 2)]),
        ];
        assert!(read_detection_stream(&write_detection_stream(&frames)).is_err());
    }

    #[test]
    fn scene_validation() {
        let cat = TypeCatalog::default();
        let ok = "version = 1\n[[vehicle]]\nid = 1\nx = 2.0\ny = 3.0\nheading_deg = 90.0\ntype_name = \"suv\"\n";
        let scene = Scene::from_toml_str(ok, &cat).unwrap();
        assert_eq!(scene.frames, 1);
        assert_eq!(Scene::from_toml_str(&scene.to_toml_string(), &cat).unwrap(), scene);
        assert!(Scene::from_toml_str(&ok.replace("suv", "tank"), &cat).is_err());
        assert!(Scene::from_toml_str(&format!("{ok}{}", &ok[12..]), &cat).is_err());
    }
}
