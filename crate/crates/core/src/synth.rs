//! Synthetic scenes with known ground truth, rendered into detection records
//! through the same camera model the pipeline inverts.
//!
//! Parts are only emitted when a real camera could plausibly see them: a side's
//! wheels need that side to face both the camera and the ego origin, a bumper
//! needs its end face to do the same. A part whose box center falls inside
//! another vehicle's box is treated as occluded and dropped, and parts beyond
//! about 12.5 m from the camera are too small to detect.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle;
use crate::bev::VisibleSide;
use crate::camera::{CameraRig, Channel, FisheyeCamera, GroundPoint, PixelPoint};
use crate::detection::{BoxClass, DetectedBox, DetectionRecord, HeadingEstimate, TypeLabel};
use crate::vehicle::{BBox, BevBox, ContactPointKind, DomainError, TypeCatalog, VehicleTypeSpec};

/// Ground footprint of the ego vehicle in its own frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoFootprint {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for EgoFootprint {
    fn default() -> Self {
        Self { x_min: -1.0, x_max: 3.7, y_min: -0.95, y_max: 0.95 }
    }
}

impl EgoFootprint {
    /// Distance from the footprint rectangle to a point, zero inside.
    pub fn distance(&self, p: &GroundPoint) -> f64 {
        let dx = (self.x_min - p.x).max(p.x - self.x_max).max(0.0);
        let dy = (self.y_min - p.y).max(p.y - self.y_max).max(0.0);
        dx.hypot(dy)
    }

    pub fn polygon(&self) -> [GroundPoint; 4] {
        [
            GroundPoint::new(self.x_max, self.y_max),
            GroundPoint::new(self.x_min, self.y_max),
            GroundPoint::new(self.x_min, self.y_min),
            GroundPoint::new(self.x_max, self.y_min),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthVehicle {
    pub id: u64,
    pub center: GroundPoint,
    /// Radians.
    pub heading: f64,
    pub type_name: String,
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("invalid noise spec: {0}")]
    InvalidNoise(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    /// Standard deviation of Gaussian noise on each contact pixel coordinate.
    pub pixel_sigma: f64,
    /// Round box coordinates to whole pixels.
    pub quantize: bool,
    /// Probability that any single part box is not reported.
    pub drop_probability: f64,
    /// Ground height grows by this much per metre of ego x; the pipeline still assumes flat ground.
    pub slope_gradient: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { pixel_sigma: 0.0, quantize: false, drop_probability: 0.0, slope_gradient: 0.0, seed: 0 }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.pixel_sigma.is_finite() && self.pixel_sigma >= 0.0) {
            return Err(SynthError::InvalidNoise(format!("pixel_sigma {} must be >= 0", self.pixel_sigma)));
        }
        if !(0.0..=1.0).contains(&self.drop_probability) {
            return Err(SynthError::InvalidNoise(format!("drop_probability {} outside [0, 1]", self.drop_probability)));
        }
        if !self.slope_gradient.is_finite() {
            return Err(SynthError::InvalidNoise("slope_gradient must be finite".into()));
        }
        Ok(())
    }
}

/// Ground contact points of a vehicle, both sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueContactPoints {
    pub front_wheel_left: GroundPoint,
    pub front_wheel_right: GroundPoint,
    pub rear_wheel_left: GroundPoint,
    pub rear_wheel_right: GroundPoint,
    pub front_bumper: GroundPoint,
    pub rear_bumper: GroundPoint,
}

impl TrueContactPoints {
    pub fn get(&self, kind: ContactPointKind, side: VisibleSide) -> GroundPoint {
        use ContactPointKind::*;
        match (kind, side) {
            (FrontWheel, VisibleSide::Left) => self.front_wheel_left,
            (FrontWheel, VisibleSide::Right) => self.front_wheel_right,
            (RearWheel, VisibleSide::Left) => self.rear_wheel_left,
            (RearWheel, VisibleSide::Right) => self.rear_wheel_right,
            (FrontBumper, _) => self.front_bumper,
            (RearBumper, _) => self.rear_bumper,
        }
    }
}

pub fn true_contact_points(v: &GroundTruthVehicle, spec: &VehicleTypeSpec) -> TrueContactPoints {
    let fwd = GroundPoint::unit(v.heading);
    let left = GroundPoint::unit(v.heading + FRAC_PI_2);
    let p = v.center;
    let half_w = left * (0.5 * spec.w);
    let front_axle = p + fwd * (0.5 * spec.l - spec.fo);
    let rear_axle = p - fwd * (0.5 * spec.l - spec.ro);
    TrueContactPoints {
        front_wheel_left: front_axle + half_w,
        front_wheel_right: front_axle - half_w,
        rear_wheel_left: rear_axle + half_w,
        rear_wheel_right: rear_axle - half_w,
        front_bumper: p + fwd * (0.5 * spec.l),
        rear_bumper: p - fwd * (0.5 * spec.l),
    }
}

/// Ground rectangle of a vehicle, counter-clockwise.
pub fn footprint(v: &GroundTruthVehicle, spec: &VehicleTypeSpec) -> [GroundPoint; 4] {
    let f = GroundPoint::unit(v.heading) * (0.5 * spec.l);
    let l = GroundPoint::unit(v.heading + FRAC_PI_2) * (0.5 * spec.w);
    let p = v.center;
    [p + f + l, p - f + l, p - f - l, p + f - l]
}

fn point_segment_distance(p: GroundPoint, a: GroundPoint, b: GroundPoint) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.dot(&ab)).clamp(0.0, 1.0);
    p.distance(&(a + ab * t))
}

fn overlaps(a: &[GroundPoint; 4], b: &[GroundPoint; 4]) -> bool {
    // separating axis test over both rectangles' edge normals
    for poly in [a, b] {
        for i in 0..4 {
            let e = poly[(i + 1) % 4] - poly[i];
            let n = GroundPoint::new(-e.y, e.x);
            let span = |q: &[GroundPoint; 4]| {
                q.iter().map(|p| p.dot(&n)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)))
            };
            let (a0, a1) = span(a);
            let (b0, b1) = span(b);
            if a1 < b0 || b1 < a0 {
                return false;
            }
        }
    }
    true
}

/// Gap between two convex quadrilaterals, zero when they overlap.
pub fn polygon_gap(a: &[GroundPoint; 4], b: &[GroundPoint; 4]) -> f64 {
    if overlaps(a, b) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for (p, q) in [(a, b), (b, a)] {
        for v in p.iter() {
            for i in 0..4 {
                best = best.min(point_segment_distance(*v, q[i], q[(i + 1) % 4]));
            }
        }
    }
    best
}

/// Placement rules for random scenes.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneLimits {
    pub ego: EgoFootprint,
    /// Largest allowed distance from the ego footprint to a target center.
    pub max_distance: f64,
    /// Smallest gap between any two vehicles, ego included.
    pub clearance: f64,
    pub attempts_per_vehicle: usize,
}

impl Default for SceneLimits {
    fn default() -> Self {
        Self { ego: EgoFootprint::default(), max_distance: 5.0, clearance: 0.6, attempts_per_vehicle: 400 }
    }
}

/// Places up to `count` vehicles of random type and heading around the ego.
/// Vehicles that cannot be placed within the attempt budget are skipped.
pub fn random_scene(
    rng: &mut impl Rng,
    count: usize,
    catalog: &TypeCatalog,
    limits: &SceneLimits,
) -> Vec<GroundTruthVehicle> {
    let ego = limits.ego.polygon();
    let mut placed: Vec<(GroundTruthVehicle, [GroundPoint; 4])> = Vec::new();
    let reach = limits.max_distance;
    for _ in 0..count {
        for _ in 0..limits.attempts_per_vehicle {
            let spec = &catalog.types()[rng.random_range(0..catalog.len())];
            let center = GroundPoint::new(
                rng.random_range(limits.ego.x_min - reach..limits.ego.x_max + reach),
                rng.random_range(limits.ego.y_min - reach..limits.ego.y_max + reach),
            );
            let heading = angle::wrap(rng.random_range(-PI..PI));
            if limits.ego.distance(&center) > reach {
                continue;
            }
            let v = GroundTruthVehicle { id: placed.len() as u64 + 1, center, heading, type_name: spec.type_name.clone() };
            let poly = footprint(&v, spec);
            if polygon_gap(&poly, &ego) < limits.clearance {
                continue;
            }
            if placed.iter().any(|(_, q)| polygon_gap(&poly, q) < limits.clearance) {
                continue;
            }
            placed.push((v, poly));
            break;
        }
    }
    placed.into_iter().map(|(v, _)| v).collect()
}

/// Which parts of one vehicle reached the detector, over all cameras.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Visibility {
    pub id: u64,
    pub kinds: Vec<ContactPointKind>,
    pub channels: Vec<Channel>,
    /// The emitted parts are enough to recover a pose.
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFrame {
    pub records: Vec<DetectionRecord>,
    pub visibility: Vec<Visibility>,
}

/// Whether the observed kinds, together with a regressed heading, support a pose.
pub fn supports_pose(kinds: &[ContactPointKind]) -> bool {
    use ContactPointKind::*;
    let has = |k| kinds.contains(&k);
    (has(FrontWheel) && has(RearWheel)) || has(RearBumper) || has(FrontBumper)
}

const WHEEL_SIZE: (f64, f64) = (40.0, 40.0);
const BUMPER_SIZE: (f64, f64) = (120.0, 30.0);
const VEHICLE_PAD: f64 = 12.0;
/// Part boxes scale with `NOMINAL_RANGE / range`; below `MIN_PART_SCALE` the
/// part is too small for the detector and is not reported.
const NOMINAL_RANGE: f64 = 2.5;
const MIN_PART_SCALE: f64 = 0.2;
const MAX_PART_SCALE: f64 = 1.5;

struct RenderedPart {
    kind: ContactPointKind,
    bbox: BBox,
}

/// Parts of `v` that `camera` may see: its own side's wheels and the end faces
/// that face both the camera and the ego origin.
fn candidate_parts(
    v: &GroundTruthVehicle,
    spec: &VehicleTypeSpec,
    camera: &FisheyeCamera,
) -> Vec<(ContactPointKind, GroundPoint)> {
    use ContactPointKind::*;
    let fwd = GroundPoint::unit(v.heading);
    let left = GroundPoint::unit(v.heading + FRAC_PI_2);
    let eyes = [camera.ground_position(), GroundPoint::ORIGIN];
    let along = |q: &GroundPoint| (*q - v.center).dot(&fwd);
    let across = |q: &GroundPoint| (*q - v.center).dot(&left);
    let half_l = 0.5 * spec.l;
    let half_w = 0.5 * spec.w;
    let truth = true_contact_points(v, spec);
    let mut out = Vec::new();
    let side = if eyes.iter().all(|q| across(q) > half_w) {
        Some(VisibleSide::Left)
    } else if eyes.iter().all(|q| across(q) < -half_w) {
        Some(VisibleSide::Right)
    } else {
        None
    };
    if let Some(s) = side {
        out.push((RearWheel, truth.get(RearWheel, s)));
        out.push((FrontWheel, truth.get(FrontWheel, s)));
    }
    if eyes.iter().all(|q| along(q) < -half_l) {
        out.push((RearBumper, truth.rear_bumper));
    }
    if eyes.iter().all(|q| along(q) > half_l) {
        out.push((FrontBumper, truth.front_bumper));
    }
    out
}

fn class_of(kind: ContactPointKind) -> BoxClass {
    match kind {
        ContactPointKind::RearWheel => BoxClass::RearWheel,
        ContactPointKind::FrontWheel => BoxClass::FrontWheel,
        ContactPointKind::RearBumper => BoxClass::RearBumper,
        ContactPointKind::FrontBumper => BoxClass::FrontBumper,
    }
}

fn hull(parts: &[RenderedPart]) -> Option<BBox> {
    let first = parts.first()?.bbox;
    let b = parts.iter().skip(1).fold(first, |acc, p| acc.union(&p.bbox));
    Some(BBox::new(b.x - VEHICLE_PAD, b.y - VEHICLE_PAD, b.w + 2.0 * VEHICLE_PAD, b.l + 2.0 * VEHICLE_PAD))
}

/// Per-frame random stream derived from the noise seed.
pub fn frame_rng(seed: u64, frame_id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ frame_id.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Renders one frame of detection records, one per camera in canonical order.
pub fn render_detections(
    frame_id: u64,
    scene: &[GroundTruthVehicle],
    rig: &CameraRig,
    catalog: &TypeCatalog,
    noise: &NoiseSpec,
) -> Result<RenderedFrame, SynthError> {
    noise.validate()?;
    let mut rng = frame_rng(noise.seed, frame_id);
    let gauss = Normal::new(0.0, noise.pixel_sigma.max(f64::MIN_POSITIVE)).expect("sigma is valid");
    let specs: Vec<&VehicleTypeSpec> =
        scene.iter().map(|v| catalog.lookup_type_attrs(&v.type_name)).collect::<Result<_, _>>()?;
    let mut seen: Vec<(Vec<ContactPointKind>, Vec<Channel>)> = vec![(Vec::new(), Vec::new()); scene.len()];
    let mut records = Vec::new();

    for camera in rig.cameras() {
        let mut per_vehicle: Vec<Vec<RenderedPart>> = Vec::with_capacity(scene.len());
        for (v, spec) in scene.iter().zip(&specs) {
            let mut parts = Vec::new();
            for (kind, ground) in candidate_parts(v, spec, camera) {
                let (nx, ny, dropped) = (gauss.sample(&mut rng), gauss.sample(&mut rng), rng.random::<f64>());
                let world = Vector3::new(ground.x, ground.y, noise.slope_gradient * ground.x);
                let Ok(px) = camera.project_point(&world) else { continue };
                if dropped < noise.drop_probability {
                    continue;
                }
                let (mut u, mut vv) = (px.u, px.v);
                if noise.pixel_sigma > 0.0 {
                    u += nx;
                    vv += ny;
                }
                let range = (world - camera.translation()).norm();
                let scale = NOMINAL_RANGE / range;
                if scale < MIN_PART_SCALE {
                    continue;
                }
                let scale = scale.min(MAX_PART_SCALE);
                let (bw, bl) = if kind.is_wheel() { WHEEL_SIZE } else { BUMPER_SIZE };
                let (mut w, mut l) = (bw * scale, bl * scale);
                if noise.quantize {
                    u = u.round();
                    vv = vv.round();
                    w = (0.5 * w).round().max(1.0) * 2.0;
                    l = l.round().max(1.0);
                }
                parts.push(RenderedPart { kind, bbox: BBox::new(u - 0.5 * w, vv - l, w, l) });
            }
            per_vehicle.push(parts);
        }

        // occlusion proxy: drop parts whose box center lands in another vehicle's box
        let hulls: Vec<Option<BBox>> = per_vehicle.iter().map(|p| hull(p)).collect();
        for (i, parts) in per_vehicle.iter_mut().enumerate() {
            parts.retain(|p| {
                let c = p.bbox.center();
                !hulls.iter().enumerate().any(|(j, h)| j != i && h.is_some_and(|h| h.contains(&c)))
            });
        }

        let mut record = DetectionRecord::empty(camera.channel(), frame_id);
        for (i, parts) in per_vehicle.iter().enumerate() {
            let Some(mut vbox) = hull(parts) else { continue };
            if noise.quantize {
                vbox = BBox::new(vbox.x.floor(), vbox.y.floor(), vbox.w.ceil() + 1.0, vbox.l.ceil() + 1.0);
            }
            let vscore = rng.random_range(0.5..=1.0);
            record.boxes.push(DetectedBox { class: BoxClass::Vehicle, bbox: vbox, score: vscore });
            for p in parts {
                let score = rng.random_range(0.5..=1.0);
                record.boxes.push(DetectedBox { class: class_of(p.kind), bbox: p.bbox, score });
                let (kinds, channels) = &mut seen[i];
                if !kinds.contains(&p.kind) {
                    kinds.push(p.kind);
                }
                if !channels.contains(&camera.channel()) {
                    channels.push(camera.channel());
                }
            }
            record.type_labels.push(TypeLabel {
                vehicle_bbox: vbox,
                type_name: scene[i].type_name.clone(),
                score: rng.random_range(0.5..=1.0),
            });
            record.heading_estimates.push(HeadingEstimate {
                vehicle_bbox: vbox,
                heading_deg: scene[i].heading.to_degrees(),
                score: rng.random_range(0.5..=1.0),
            });
        }
        records.push(record);
    }

    let visibility = scene
        .iter()
        .zip(seen)
        .map(|(v, (mut kinds, channels))| {
            kinds.sort();
            Visibility { id: v.id, visible: supports_pose(&kinds), kinds, channels }
        })
        .collect();
    Ok(RenderedFrame { records, visibility })
}

/// Gates used to score BEV boxes against ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalThresholds {
    pub gate_x: f64,
    /// Lateral gates for the distance intervals `[edges[i], edges[i + 1])`.
    pub gate_y: [f64; 3],
    pub interval_edges: [f64; 4],
    /// Estimates further than this from every truth center are unmatched.
    pub match_gate: f64,
    pub ego: EgoFootprint,
}

impl Default for EvalThresholds {
    fn default() -> Self {
        Self {
            gate_x: 0.25,
            gate_y: [0.20, 0.40, 0.50],
            interval_edges: [0.0, 2.0, 3.0, 5.0],
            match_gate: 2.0,
            ego: EgoFootprint::default(),
        }
    }
}

impl EvalThresholds {
    /// Distance interval index for a target center, if within the last edge.
    pub fn interval(&self, center: &GroundPoint) -> Option<usize> {
        let d = self.ego.distance(center);
        let e = &self.interval_edges;
        (0..3).find(|&i| d >= e[i] && (d < e[i + 1] || (i == 2 && d <= e[3])))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetError {
    pub truth_id: u64,
    pub obj_id: u64,
    pub distance: f64,
    pub interval: Option<usize>,
    pub dx: f64,
    pub dy: f64,
    pub center_error: f64,
    /// Radians.
    pub heading_error: f64,
    pub x_ok: bool,
    pub y_ok: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalStat {
    pub count: usize,
    pub qualified: usize,
}

impl IntervalStat {
    pub fn rate(&self) -> Option<f64> {
        (self.count > 0).then(|| self.qualified as f64 / self.count as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub targets: Vec<TargetError>,
    pub misses: Vec<u64>,
    pub false_positives: Vec<u64>,
    pub x: IntervalStat,
    pub y: [IntervalStat; 3],
    pub max_center_error: f64,
    pub max_heading_error: f64,
}

impl ErrorReport {
    /// Adds another report's targets and counts to this one.
    pub fn absorb(&mut self, other: ErrorReport) {
        self.x.count += other.x.count;
        self.x.qualified += other.x.qualified;
        for (a, b) in self.y.iter_mut().zip(other.y) {
            a.count += b.count;
            a.qualified += b.qualified;
        }
        self.max_center_error = self.max_center_error.max(other.max_center_error);
        self.max_heading_error = self.max_heading_error.max(other.max_heading_error);
        self.targets.extend(other.targets);
        self.misses.extend(other.misses);
        self.false_positives.extend(other.false_positives);
    }
}

/// Matches estimates to truth by nearest center (greedy, closest pair first)
/// and scores longitudinal and lateral errors in the ego frame.
pub fn evaluate(estimates: &[BevBox], truth: &[GroundTruthVehicle], thresholds: &EvalThresholds) -> ErrorReport {
    let mut pairs = Vec::new();
    for (i, e) in estimates.iter().enumerate() {
        for (j, t) in truth.iter().enumerate() {
            let d = e.center.distance(&t.center);
            if d <= thresholds.match_gate {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut est_used = vec![false; estimates.len()];
    let mut truth_used = vec![false; truth.len()];
    let mut report = ErrorReport::default();
    for (d, i, j) in pairs {
        if est_used[i] || truth_used[j] {
            continue;
        }
        est_used[i] = true;
        truth_used[j] = true;
        let (e, t) = (&estimates[i], &truth[j]);
        let dx = e.center.x - t.center.x;
        let dy = e.center.y - t.center.y;
        let interval = thresholds.interval(&t.center);
        let x_ok = dx.abs() <= thresholds.gate_x;
        let y_ok = interval.map(|k| dy.abs() <= thresholds.gate_y[k]);
        let heading_error = angle::diff(e.heading, t.heading).abs();
        report.x.count += 1;
        report.x.qualified += x_ok as usize;
        if let (Some(k), Some(ok)) = (interval, y_ok) {
            report.y[k].count += 1;
            report.y[k].qualified += ok as usize;
        }
        report.max_center_error = report.max_center_error.max(d);
        report.max_heading_error = report.max_heading_error.max(heading_error);
        report.targets.push(TargetError {
            truth_id: t.id,
            obj_id: e.obj_id,
            distance: thresholds.ego.distance(&t.center),
            interval,
            dx,
            dy,
            center_error: d,
            heading_error,
            x_ok,
            y_ok,
        });
    }
    report.misses = truth.iter().zip(&truth_used).filter(|(_, u)| !**u).map(|(t, _)| t.id).collect();
    report.false_positives = estimates.iter().zip(&est_used).filter(|(_, u)| !**u).map(|(e, _)| e.obj_id).collect();
    report
}

/// Pixel of a ground point in one camera, ignoring visibility rules.
pub fn project_truth(camera: &FisheyeCamera, p: &GroundPoint) -> Option<PixelPoint> {
    camera.project_ground_to_pixel(p).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn car(center: GroundPoint, heading: f64) -> GroundTruthVehicle {
        GroundTruthVehicle { id: 1, center, heading, type_name: "car".into() }
    }

    #[test]
    fn contact_points_follow_the_type() {
        let cat = TypeCatalog::default();
        let spec = cat.lookup_type_attrs("car").unwrap();
        let t = true_contact_points(&car(GroundPoint::new(0.0, 5.0), 0.0), spec);
        assert!((t.front_bumper.x - 2.3).abs() < 1e-12);
        assert!((t.rear_wheel_right.x + 1.3).abs() < 1e-12 && (t.rear_wheel_right.y - 4.1).abs() < 1e-12);
        assert!((t.front_wheel_left.x - 1.4).abs() < 1e-12 && (t.front_wheel_left.y - 5.9).abs() < 1e-12);
    }

    #[test]
    fn footprint_distance() {
        let e = EgoFootprint::default();
        assert_eq!(e.distance(&GroundPoint::new(0.0, 0.0)), 0.0);
        assert!((e.distance(&GroundPoint::new(0.0, 2.95)) - 2.0).abs() < 1e-12);
        assert!((e.distance(&GroundPoint::new(6.7, 4.95)) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn gap_between_rectangles() {
        let sq = |x: f64| {
            [
                GroundPoint::new(x + 1.0, 1.0),
                GroundPoint::new(x, 1.0),
                GroundPoint::new(x, 0.0),
                GroundPoint::new(x + 1.0, 0.0),
            ]
        };
        assert_eq!(polygon_gap(&sq(0.0), &sq(0.5)), 0.0);
        assert!((polygon_gap(&sq(0.0), &sq(1.75)) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn scenes_respect_clearance_and_reach() {
        let cat = TypeCatalog::default();
        let limits = SceneLimits::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let scene = random_scene(&mut rng, 8, &cat, &limits);
            assert!(!scene.is_empty());
            let polys: Vec<_> =
                scene.iter().map(|v| footprint(v, cat.lookup_type_attrs(&v.type_name).unwrap())).collect();
            for (i, p) in polys.iter().enumerate() {
                assert!(limits.ego.distance(&scene[i].center) <= limits.max_distance);
                assert!(polygon_gap(p, &limits.ego.polygon()) >= limits.clearance);
                for q in &polys[i + 1..] {
                    assert!(polygon_gap(p, q) >= limits.clearance);
                }
            }
        }
    }

    #[test]
    fn car_beside_ego_shows_its_near_side() {
        let rig = CameraRig::default_rig();
        let cat = TypeCatalog::default();
        let scene = vec![car(GroundPoint::new(1.35, 3.5), 0.0)];
        let frame = render_detections(0, &scene, &rig, &cat, &NoiseSpec::default()).unwrap();
        let left = frame.records.iter().find(|r| r.channel == Channel::Left).unwrap();
        let classes: Vec<_> = left.boxes.iter().map(|b| b.class).collect();
        assert!(classes.contains(&BoxClass::FrontWheel) && classes.contains(&BoxClass::RearWheel));
        assert!(!classes.contains(&BoxClass::FrontBumper));
        assert!(frame.visibility[0].visible);
        let right = frame.records.iter().find(|r| r.channel == Channel::Right).unwrap();
        assert!(right.boxes.is_empty());
    }

    #[test]
    fn rendering_is_deterministic() {
        let rig = CameraRig::default_rig();
        let cat = TypeCatalog::default();
        let scene = vec![car(GroundPoint::new(7.0, 0.5), 0.4), car(GroundPoint::new(-4.0, -3.0), 2.0)];
        let noise = NoiseSpec { pixel_sigma: 1.0, quantize: true, seed: 3, ..Default::default() };
        let a = render_detections(5, &scene, &rig, &cat, &noise).unwrap();
        let b = render_detections(5, &scene, &rig, &cat, &noise).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn evaluation_gates() {
        let truth = vec![car(GroundPoint::new(1.0, 2.5), 0.0)];
        let est = BevBox {
            obj_id: 9,
            type_name: "car".into(),
            center: GroundPoint::new(1.2, 2.8),
            heading: 0.1,
            a: GroundPoint::ORIGIN,
            b: GroundPoint::ORIGIN,
            c: GroundPoint::ORIGIN,
            d: GroundPoint::ORIGIN,
        };
        let r = evaluate(&[est], &truth, &EvalThresholds::default());
        assert_eq!(r.targets.len(), 1);
        let t = &r.targets[0];
        assert!(t.x_ok);
        assert_eq!(t.interval, Some(0));
        assert_eq!(t.y_ok, Some(false));
        assert!(r.misses.is_empty() && r.false_positives.is_empty());
    }
}
