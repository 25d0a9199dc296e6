//! Detection records from the neural branches and their conversion into
//! per-branch multidimensional vectors.
//!
//! A record carries, for one camera and one frame, the boxes of vehicles and
//! their parts (wheels, bumpers), the type labels and the regressed headings.
//! Parts are attached to vehicles by containment, each part's bottom-edge
//! midpoint is mapped to the ground, and the three branches are fused on
//! identical vehicle boxes.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use log::debug;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{Channel, FisheyeCamera, GroundPoint, PixelPoint};
use crate::reid::{self, FusionError};
use crate::vehicle::{
    BBox, ContactPoint, ContactPointKind, MultidimensionalVector, TypeCatalog, VectorFlag,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxClass {
    Vehicle,
    FrontWheel,
    RearWheel,
    FrontBumper,
    RearBumper,
}

impl BoxClass {
    pub fn contact_kind(self) -> Option<ContactPointKind> {
        match self {
            BoxClass::Vehicle => None,
            BoxClass::FrontWheel => Some(ContactPointKind::FrontWheel),
            BoxClass::RearWheel => Some(ContactPointKind::RearWheel),
            BoxClass::FrontBumper => Some(ContactPointKind::FrontBumper),
            BoxClass::RearBumper => Some(ContactPointKind::RearBumper),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectedBox {
    pub class: BoxClass,
    pub bbox: BBox,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeLabel {
    pub vehicle_bbox: BBox,
    pub type_name: String,
    pub score: f64,
}

/// Regressed heading as emitted by the detector, in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadingEstimate {
    pub vehicle_bbox: BBox,
    pub heading_deg: f64,
    pub score: f64,
}

impl HeadingEstimate {
    pub fn heading(&self) -> f64 {
        crate::angle::wrap(self.heading_deg.to_radians())
    }
}

/// Everything the detector reported for one camera in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionRecord {
    pub channel: Channel,
    pub frame_id: u64,
    #[serde(default)]
    pub boxes: Vec<DetectedBox>,
    #[serde(default)]
    pub type_labels: Vec<TypeLabel>,
    #[serde(default)]
    pub heading_estimates: Vec<HeadingEstimate>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecordError {
    #[error("{channel} frame {frame_id}: {reason}")]
    Invalid { channel: Channel, frame_id: u64, reason: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdapterError {
    #[error("record is for the {record} camera but the {camera} camera was supplied")]
    ChannelMismatch { record: Channel, camera: Channel },
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
}

impl DetectionRecord {
    pub fn empty(channel: Channel, frame_id: u64) -> Self {
        Self { channel, frame_id, boxes: Vec::new(), type_labels: Vec::new(), heading_estimates: Vec::new() }
    }

    /// Checks box sizes, score ranges, and that every label references a vehicle box.
    pub fn validate(&self) -> Result<(), RecordError> {
        let fail = |reason: String| {
            Err(RecordError::Invalid { channel: self.channel, frame_id: self.frame_id, reason })
        };
        let score_ok = |s: f64| (0.0..=1.0).contains(&s);
        for (i, b) in self.boxes.iter().enumerate() {
            if !b.bbox.is_valid() {
                return fail(format!("box {i} has invalid geometry {:?}", b.bbox));
            }
            if !score_ok(b.score) {
                return fail(format!("box {i} score {} outside [0, 1]", b.score));
            }
        }
        let is_vehicle = |bb: &BBox| self.boxes.iter().any(|b| b.class == BoxClass::Vehicle && b.bbox == *bb);
        for (i, t) in self.type_labels.iter().enumerate() {
            if !score_ok(t.score) {
                return fail(format!("type label {i} score {} outside [0, 1]", t.score));
            }
            if !is_vehicle(&t.vehicle_bbox) {
                return fail(format!("type label {i} references no vehicle box"));
            }
        }
        for (i, h) in self.heading_estimates.iter().enumerate() {
            if !score_ok(h.score) {
                return fail(format!("heading estimate {i} score {} outside [0, 1]", h.score));
            }
            if !h.heading_deg.is_finite() {
                return fail(format!("heading estimate {i} is not finite"));
            }
            if !is_vehicle(&h.vehicle_bbox) {
                return fail(format!("heading estimate {i} references no vehicle box"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdapterConfig {
    /// Boxes and labels scoring below this are ignored.
    pub score_threshold: f64,
    /// Untyped vehicles are flagged and skipped instead of bound to the fallback type.
    pub strict_types: bool,
    /// Derive a bumper point from the vehicle box when no bumper box was detected.
    pub synthesize_bumpers: bool,
}

impl Default for AdapterConfig {
    fn default() -> Self {
        Self { score_threshold: 0.3, strict_types: false, synthesize_bumpers: false }
    }
}

/// Midpoint of the bottom edge of a top-left-origin box.
pub fn contact_point_from_bbox(bbox: &BBox) -> PixelPoint {
    PixelPoint::new(bbox.x + 0.5 * bbox.w, bbox.y + bbox.l)
}

/// Canonical box order: X, then Y, then size.
pub fn bbox_order(a: &BBox, b: &BBox) -> Ordering {
    a.x.total_cmp(&b.x)
        .then(a.y.total_cmp(&b.y))
        .then(a.w.total_cmp(&b.w))
        .then(a.l.total_cmp(&b.l))
}

/// A vehicle box with at most one part box per contact kind.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParts {
    pub vehicle: DetectedBox,
    pub parts: BTreeMap<ContactPointKind, DetectedBox>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Association {
    pub vehicles: Vec<VehicleParts>,
    /// Part boxes that fell below the score threshold, matched no vehicle, or
    /// lost to a higher-scoring part of the same kind.
    pub dropped_parts: usize,
}

/// Attaches each part box to the vehicle box that contains its center.
///
/// Among several containing vehicles the one covering the largest share of the
/// part box wins; ties go to the higher vehicle score, then the smaller X.
pub fn associate_parts(record: &DetectionRecord, score_threshold: f64) -> Association {
    let mut vehicles: Vec<VehicleParts> = record
        .boxes
        .iter()
        .filter(|b| b.class == BoxClass::Vehicle && b.score >= score_threshold)
        .map(|b| VehicleParts { vehicle: b.clone(), parts: BTreeMap::new() })
        .collect();
    vehicles.sort_by(|a, b| bbox_order(&a.vehicle.bbox, &b.vehicle.bbox));

    let mut dropped = 0;
    for part in record.boxes.iter() {
        let Some(kind) = part.class.contact_kind() else { continue };
        if part.score < score_threshold {
            dropped += 1;
            continue;
        }
        let center = part.bbox.center();
        let area = part.bbox.area();
        let best = vehicles
            .iter()
            .enumerate()
            .filter(|(_, v)| v.vehicle.bbox.contains(&center))
            .max_by(|(_, a), (_, b)| {
                let ra = a.vehicle.bbox.intersection_area(&part.bbox) / area;
                let rb = b.vehicle.bbox.intersection_area(&part.bbox) / area;
                ra.total_cmp(&rb)
                    .then(a.vehicle.score.total_cmp(&b.vehicle.score))
                    // smaller X wins, so it must compare greater
                    .then(bbox_order(&b.vehicle.bbox, &a.vehicle.bbox))
            })
            .map(|(i, _)| i);
        let Some(idx) = best else {
            debug!("{} frame {}: {kind} box matches no vehicle", record.channel, record.frame_id);
            dropped += 1;
            continue;
        };
        let slot = &mut vehicles[idx].parts;
        match slot.get(&kind) {
            Some(existing)
                if existing.score > part.score
                    || (existing.score == part.score
                        && bbox_order(&existing.bbox, &part.bbox) != Ordering::Greater) =>
            {
                dropped += 1;
            }
            Some(_) => {
                slot.insert(kind, part.clone());
                dropped += 1;
            }
            None => {
                slot.insert(kind, part.clone());
            }
        }
    }
    Association { vehicles, dropped_parts: dropped }
}

/// Vectors from the three branches for one record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BranchVectors {
    pub contact: Vec<MultidimensionalVector>,
    pub vehicle_type: Vec<MultidimensionalVector>,
    pub heading: Vec<MultidimensionalVector>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdapterDiagnostics {
    pub dropped_parts: usize,
    pub dropped_points: usize,
    pub messages: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChannelVectors {
    pub vectors: Vec<MultidimensionalVector>,
    pub diagnostics: AdapterDiagnostics,
}

fn best_label<'a, T>(items: impl Iterator<Item = &'a T>, score: impl Fn(&T) -> f64) -> Option<&'a T>
where
    T: 'a,
{
    items.fold(None, |best: Option<&T>, item| match best {
        Some(b) if score(b) >= score(item) => Some(b),
        _ => Some(item),
    })
}

/// Splits a record into contact, type and heading branch vectors.
pub fn branch_vectors(
    record: &DetectionRecord,
    camera: &FisheyeCamera,
    catalog: &TypeCatalog,
    config: &AdapterConfig,
    diagnostics: &mut AdapterDiagnostics,
) -> Result<BranchVectors, AdapterError> {
    if record.channel != camera.channel() {
        return Err(AdapterError::ChannelMismatch { record: record.channel, camera: camera.channel() });
    }
    record.validate()?;
    let assoc = associate_parts(record, config.score_threshold);
    diagnostics.dropped_parts += assoc.dropped_parts;
    let mut out = BranchVectors::default();

    for vp in &assoc.vehicles {
        let bbox = vp.vehicle.bbox;
        let mut v = MultidimensionalVector::new(record.channel, bbox, vp.vehicle.score);
        for (&kind, part) in &vp.parts {
            let pixel = contact_point_from_bbox(&part.bbox);
            match camera.pixel_to_ground(&pixel) {
                Ok(physical) => {
                    let point = ContactPoint { kind, pixel, physical, source_channel: record.channel };
                    v.contact_points.insert(point).expect("one part per kind after association");
                }
                Err(e) => {
                    diagnostics.dropped_points += 1;
                    let msg = format!("{} frame {}: {kind} at {pixel:?} dropped: {e}", record.channel, record.frame_id);
                    debug!("{msg}");
                    diagnostics.messages.push(msg);
                }
            }
        }
        out.contact.push(v);

        let accepted = |s: f64| s >= config.score_threshold;
        let label = best_label(
            record.type_labels.iter().filter(|t| t.vehicle_bbox == bbox && accepted(t.score)),
            |t| t.score,
        );
        if let Some(label) = label {
            match catalog.lookup_type_attrs(&label.type_name) {
                Ok(spec) => {
                    let mut tv = MultidimensionalVector::new(record.channel, bbox, label.score);
                    tv.bind_type(spec);
                    out.vehicle_type.push(tv);
                }
                Err(e) => diagnostics.messages.push(format!("{} frame {}: {e}", record.channel, record.frame_id)),
            }
        }
        let heading = best_label(
            record.heading_estimates.iter().filter(|h| h.vehicle_bbox == bbox && accepted(h.score)),
            |h| h.score,
        );
        if let Some(h) = heading {
            let mut hv = MultidimensionalVector::new(record.channel, bbox, h.score);
            hv.heading_regressed = Some(h.heading());
            out.heading.push(hv);
        }
    }
    Ok(out)
}

/// Bumper point from the vehicle box's bottom edge; front or rear by which end
/// faces the camera under the regressed heading.
fn synthesize_bumper(v: &mut MultidimensionalVector, camera: &FisheyeCamera) -> Result<(), String> {
    if v.contact_points.contains(ContactPointKind::FrontBumper)
        || v.contact_points.contains(ContactPointKind::RearBumper)
    {
        return Ok(());
    }
    let Some(heading) = v.heading_regressed else { return Ok(()) };
    let pixel = contact_point_from_bbox(&v.bbox);
    let physical = camera.pixel_to_ground(&pixel).map_err(|e| e.to_string())?;
    let toward_camera = camera.ground_position() - physical;
    let kind = if toward_camera.dot(&GroundPoint::unit(heading)) > 0.0 {
        ContactPointKind::FrontBumper
    } else {
        ContactPointKind::RearBumper
    };
    v.contact_points.replace(ContactPoint { kind, pixel, physical, source_channel: v.channel });
    Ok(())
}

/// Full per-channel conversion: branch vectors, bbox fusion, type fallback and azimuth.
/// Output is sorted by vehicle box X, then Y.
pub fn assemble_channel_vectors(
    record: &DetectionRecord,
    camera: &FisheyeCamera,
    catalog: &TypeCatalog,
    config: &AdapterConfig,
) -> Result<ChannelVectors, AdapterError> {
    let mut diagnostics = AdapterDiagnostics::default();
    let branches = branch_vectors(record, camera, catalog, config, &mut diagnostics)?;
    let mut vectors = reid::fuse_branches(&[branches.contact, branches.vehicle_type, branches.heading])?;
    for v in &mut vectors {
        if config.synthesize_bumpers {
            if let Err(e) = synthesize_bumper(v, camera) {
                diagnostics.dropped_points += 1;
                diagnostics.messages.push(format!("{} frame {}: synthesized bumper dropped: {e}", record.channel, record.frame_id));
            }
        }
        if v.vehicle_type.is_none() {
            if config.strict_types {
                v.flags.insert(VectorFlag::Untyped);
            } else {
                v.bind_type(catalog.fallback());
                v.flags.insert(VectorFlag::FallbackType);
            }
        }
        if v.contact_points.is_empty() && v.heading_regressed.is_none() {
            v.flags.insert(VectorFlag::NoGeometry);
        }
        v.refresh_azimuth();
    }
    vectors.sort_by(|a, b| bbox_order(&a.bbox, &b.bbox));
    Ok(ChannelVectors { vectors, diagnostics })
}
