//! Center and heading recovery from ground contact points, and the BEV box
//! built from them.
//!
//! Three situations are handled, tried in this order:
//!
//! 1. Two wheels on the visible side: the heading is the direction from the
//!    rear wheel to the front wheel. The overhangs push the wheel points out to
//!    the corners on that side, and half the width moves their midpoint
//!    inward to the center.
//! 2. One wheel and the bumper at the same end: the bumper-to-wheel segment
//!    leans away from the vehicle axis by `atan((w/2) / overhang)`, which is
//!    removed to get the heading. The center lies half a length in from the
//!    bumper.
//! 3. A bumper alone: the regressed heading is taken as is and the center lies
//!    half a length in from the bumper.
//!
//! The visible side decides the sign of every lateral offset. It comes from
//! `sin(heading - azimuth)`: positive means the observer is on the vehicle's
//! left.

use std::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

use crate::angle;
use crate::camera::GroundPoint;
use crate::vehicle::{
    BevBox, ContactPoint, ContactPointKind, MultidimensionalVector, VectorFlag, VehicleTypeSpec,
};

/// Two contact points closer than this cannot define a direction (meters).
pub const MIN_POINT_SEPARATION: f64 = 0.1;
/// `|sin(heading - azimuth)|` below this leaves the visible side undecided.
pub const SIDE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VisibleSide {
    Left,
    Right,
}

impl VisibleSide {
    /// +1 for left, -1 for right.
    pub fn sign(self) -> f64 {
        match self {
            VisibleSide::Left => 1.0,
            VisibleSide::Right => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            VisibleSide::Left => VisibleSide::Right,
            VisibleSide::Right => VisibleSide::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PoseCase {
    TwoWheels,
    WheelPlusBumper,
    BumperOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseEstimate {
    pub center: GroundPoint,
    pub heading: f64,
    pub case_used: PoseCase,
    pub side: Option<VisibleSide>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PoseError {
    #[error("visible side is undecided: target is aligned with the line of sight")]
    DegenerateSide,
    #[error("wheel contact points are only {0:.3} m apart")]
    WheelsCoincident(f64),
    #[error("wheel and bumper contact points are only {0:.3} m apart")]
    PointsCoincident(f64),
    #[error("bumper-only pose needs a regressed heading")]
    MissingRegressedHeading,
    #[error("expected a bumper contact point, got {0}")]
    NotABumper(ContactPointKind),
    #[error("no pose case applies to the available contact points")]
    InsufficientGeometry,
    #[error("vector has no bound vehicle type")]
    MissingTypeAttributes,
    #[error("vector is untyped under strict typing")]
    Untyped,
    #[error("vector has no object id")]
    MissingObjectId,
    #[error("non-finite input")]
    NonFinite,
}

fn dir(angle: f64) -> GroundPoint {
    GroundPoint::unit(angle)
}

/// Visible side of a target with heading `heading` seen at bearing `azimuth`.
pub fn visible_side(heading: f64, azimuth: f64) -> Result<VisibleSide, PoseError> {
    if !(heading.is_finite() && azimuth.is_finite()) {
        return Err(PoseError::NonFinite);
    }
    let s = (heading - azimuth).sin();
    if s.abs() < SIDE_EPS {
        Err(PoseError::DegenerateSide)
    } else if s > 0.0 {
        Ok(VisibleSide::Left)
    } else {
        Ok(VisibleSide::Right)
    }
}

/// Direction of the line from the rear wheel to the front wheel.
pub fn heading_from_two_wheels(fw: GroundPoint, rw: GroundPoint) -> Result<f64, PoseError> {
    let d = fw.distance(&rw);
    if !d.is_finite() {
        return Err(PoseError::NonFinite);
    }
    if d <= MIN_POINT_SEPARATION {
        return Err(PoseError::WheelsCoincident(d));
    }
    Ok(angle::wrap((fw.y - rw.y).atan2(fw.x - rw.x)))
}

/// Two visible wheels on one side.
pub fn pose_case1(
    fw: GroundPoint,
    rw: GroundPoint,
    spec: &VehicleTypeSpec,
    side: VisibleSide,
) -> Result<PoseEstimate, PoseError> {
    let heading = heading_from_two_wheels(fw, rw)?;
    let forward = dir(heading);
    // corners on the visible side
    let front_corner = fw + forward * spec.fo;
    let rear_corner = rw - forward * spec.ro;
    let mid = front_corner.midpoint(&rear_corner);
    // step inward: a quarter turn clockwise from the heading for the left side
    let inward = dir(heading - side.sign() * FRAC_PI_2);
    Ok(PoseEstimate {
        center: mid + inward * (0.5 * spec.w),
        heading,
        case_used: PoseCase::TwoWheels,
        side: Some(side),
    })
}

/// Rear wheel plus rear bumper.
pub fn pose_case2(
    rw: GroundPoint,
    rb: GroundPoint,
    spec: &VehicleTypeSpec,
    side: VisibleSide,
) -> Result<PoseEstimate, PoseError> {
    let d = rw.distance(&rb);
    if !d.is_finite() {
        return Err(PoseError::NonFinite);
    }
    if d <= MIN_POINT_SEPARATION {
        return Err(PoseError::PointsCoincident(d));
    }
    let gamma = (rw.y - rb.y).atan2(rw.x - rb.x);
    let offset = (0.5 * spec.w).atan2(spec.ro);
    let heading = angle::wrap(gamma - side.sign() * offset);
    Ok(PoseEstimate {
        center: rb + dir(heading) * (0.5 * spec.l),
        heading,
        case_used: PoseCase::WheelPlusBumper,
        side: Some(side),
    })
}

/// Front wheel plus front bumper; the mirror image of [`pose_case2`].
pub fn pose_case2_front(
    fw: GroundPoint,
    fb: GroundPoint,
    spec: &VehicleTypeSpec,
    side: VisibleSide,
) -> Result<PoseEstimate, PoseError> {
    let d = fw.distance(&fb);
    if !d.is_finite() {
        return Err(PoseError::NonFinite);
    }
    if d <= MIN_POINT_SEPARATION {
        return Err(PoseError::PointsCoincident(d));
    }
    // FW - FB = -fo·forward ± (w/2)·left
    let gamma = (fw.y - fb.y).atan2(fw.x - fb.x);
    let offset = (0.5 * spec.w).atan2(spec.fo);
    let heading = angle::wrap(gamma - PI + side.sign() * offset);
    Ok(PoseEstimate {
        center: fb - dir(heading) * (0.5 * spec.l),
        heading,
        case_used: PoseCase::WheelPlusBumper,
        side: Some(side),
    })
}

/// A single bumper with the regressed heading.
pub fn pose_case3(
    bumper: &ContactPoint,
    heading_regressed: Option<f64>,
    spec: &VehicleTypeSpec,
) -> Result<PoseEstimate, PoseError> {
    let heading = heading_regressed.ok_or(PoseError::MissingRegressedHeading)?;
    if !heading.is_finite() {
        return Err(PoseError::NonFinite);
    }
    let heading = angle::wrap(heading);
    let half = dir(heading) * (0.5 * spec.l);
    let center = match bumper.kind {
        ContactPointKind::RearBumper => bumper.physical + half,
        ContactPointKind::FrontBumper => bumper.physical - half,
        other => return Err(PoseError::NotABumper(other)),
    };
    Ok(PoseEstimate { center, heading, case_used: PoseCase::BumperOnly, side: None })
}

/// Rectangle of the type's length and width around a pose.
pub fn corners_from_pose(pose: &PoseEstimate, spec: &VehicleTypeSpec, obj_id: u64) -> BevBox {
    let fwd = dir(pose.heading) * (0.5 * spec.l);
    let left = dir(pose.heading + FRAC_PI_2) * (0.5 * spec.w);
    let p = pose.center;
    BevBox {
        obj_id,
        type_name: spec.type_name.clone(),
        center: p,
        heading: pose.heading,
        a: p + fwd + left,
        b: p - fwd + left,
        c: p + fwd - left,
        d: p - fwd - left,
    }
}

/// Side for a bumper-plus-wheel pair when no heading is known: seen from the
/// ego origin, the visible-side wheel lies counter-clockwise of the rear bumper
/// (clockwise of the front bumper) exactly when the left side is visible.
fn side_from_ordering(bumper: GroundPoint, wheel: GroundPoint, rear: bool) -> Result<VisibleSide, PoseError> {
    let c = bumper.cross(&wheel);
    if c.abs() < SIDE_EPS {
        return Err(PoseError::DegenerateSide);
    }
    let ccw = c > 0.0;
    Ok(if ccw == rear { VisibleSide::Left } else { VisibleSide::Right })
}

fn wheel_bumper_side(
    v: &MultidimensionalVector,
    wheel: GroundPoint,
    bumper: GroundPoint,
    rear: bool,
) -> Result<VisibleSide, PoseError> {
    match v.heading_regressed {
        Some(h) => visible_side(h, wheel.azimuth()),
        None => side_from_ordering(bumper, wheel, rear),
    }
}

/// Picks the most informative applicable case and returns its pose.
pub fn estimate_pose(v: &MultidimensionalVector) -> Result<PoseEstimate, PoseError> {
    if v.flags.contains(&VectorFlag::Untyped) {
        return Err(PoseError::Untyped);
    }
    let spec = v.type_spec().ok_or(PoseError::MissingTypeAttributes)?;
    estimate_pose_with(v, &spec)
}

pub(crate) fn estimate_pose_with(
    v: &MultidimensionalVector,
    spec: &VehicleTypeSpec,
) -> Result<PoseEstimate, PoseError> {
    use ContactPointKind::*;
    let fw = v.point(FrontWheel);
    let rw = v.point(RearWheel);
    let fb = v.point(FrontBumper);
    let rb = v.point(RearBumper);
    let mut first_err = None;
    let mut note = |e: PoseError| {
        if first_err.is_none() {
            first_err = Some(e);
        }
    };

    if let (Some(fw), Some(rw)) = (fw, rw) {
        let attempt = heading_from_two_wheels(fw, rw)
            .and_then(|h| visible_side(h, rw.azimuth()))
            .and_then(|side| pose_case1(fw, rw, spec, side));
        match attempt {
            Ok(p) => return Ok(p),
            Err(e) => note(e),
        }
    }
    if let (Some(rw), Some(rb)) = (rw, rb) {
        match wheel_bumper_side(v, rw, rb, true).and_then(|s| pose_case2(rw, rb, spec, s)) {
            Ok(p) => return Ok(p),
            Err(e) => note(e),
        }
    }
    if let (Some(fw), Some(fb)) = (fw, fb) {
        match wheel_bumper_side(v, fw, fb, false).and_then(|s| pose_case2_front(fw, fb, spec, s)) {
            Ok(p) => return Ok(p),
            Err(e) => note(e),
        }
    }
    let bumper = v.contact_points.get(RearBumper).or_else(|| v.contact_points.get(FrontBumper));
    if let (Some(b), Some(_)) = (bumper, v.heading_regressed) {
        match pose_case3(b, v.heading_regressed, spec) {
            Ok(p) => return Ok(p),
            Err(e) => note(e),
        }
    }
    Err(first_err.unwrap_or(PoseError::InsufficientGeometry))
}

/// Pose plus rectangle for one fused, identified vector.
pub fn generate_bev_vector(v: &MultidimensionalVector) -> Result<BevBox, PoseError> {
    let id = v.obj_id.ok_or(PoseError::MissingObjectId)?;
    let pose = estimate_pose(v)?;
    let spec = v.type_spec().ok_or(PoseError::MissingTypeAttributes)?;
    let bev = corners_from_pose(&pose, &spec, id);
    debug_assert!(bev.check_rectangle(spec.l, spec.w, 1e-9).is_ok());
    Ok(bev)
}
