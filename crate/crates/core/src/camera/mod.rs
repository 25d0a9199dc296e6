//! Fisheye camera model and ground-plane inverse perspective mapping.
//!
//! Frames:
//!
//! * ego: x forward, y left, z up; origin on the ground under the rear-axle center.
//! * camera: z along the optical axis, x toward increasing `u`, y toward increasing `v`.
//! * pixels: origin at the top-left image corner.
//!
//! The extrinsic pair `(R, t)` maps camera coordinates into the ego frame:
//! `p_ego = R · p_cam + t`, so `t` is the camera center in the ego frame.

mod distortion;
mod rig;

pub use distortion::{DistortionError, RadialDistortion, RadialModel, RadialTable};
pub use rig::{load_calibration, CalibrationError, CameraRig, CALIBRATION_VERSION, EGO_FRAME};

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Orthonormality tolerance on `RᵀR - I` (max abs entry).
pub const ROTATION_TOLERANCE: f64 = 1e-9;
/// Rays whose vertical component is below this are treated as parallel to the ground.
const PARALLEL_EPS: f64 = 1e-9;

/// One of the four surround-view cameras. The derived order is the canonical
/// channel order used wherever ties need breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Front,
    Rear,
    Left,
    Right,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::Front, Channel::Rear, Channel::Left, Channel::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Front => "front",
            Channel::Rear => "rear",
            Channel::Left => "left",
            Channel::Right => "right",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

/// A point on the ground plane in the ego frame. Height is zero by construction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundPoint {
    pub x: f64,
    pub y: f64,
}

impl GroundPoint {
    pub const ORIGIN: GroundPoint = GroundPoint { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at `angle` from the ego x-axis.
    pub fn unit(angle: f64) -> Self {
        Self { x: angle.cos(), y: angle.sin() }
    }

    pub fn z(&self) -> f64 {
        0.0
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(&self, other: &GroundPoint) -> f64 {
        (*self - *other).norm()
    }

    /// Bearing from the ego origin.
    pub fn azimuth(&self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn cross(&self, other: &GroundPoint) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn dot(&self, other: &GroundPoint) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Rotation by `angle` about the ego origin.
    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { x: c * self.x - s * self.y, y: s * self.x + c * self.y }
    }

    pub fn midpoint(&self, other: &GroundPoint) -> Self {
        GroundPoint::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    pub fn to_vector3(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, 0.0)
    }
}

impl Add for GroundPoint {
    type Output = GroundPoint;
    fn add(self, rhs: GroundPoint) -> GroundPoint {
        GroundPoint::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for GroundPoint {
    type Output = GroundPoint;
    fn sub(self, rhs: GroundPoint) -> GroundPoint {
        GroundPoint::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for GroundPoint {
    type Output = GroundPoint;
    fn mul(self, k: f64) -> GroundPoint {
        GroundPoint::new(self.x * k, self.y * k)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("incidence angle {angle:.6} rad exceeds the {fov:.6} rad field of view")]
    AngleOutOfFov { angle: f64, fov: f64 },
    #[error("image radius {radius:.3} px exceeds the field-of-view radius {max:.3} px")]
    RadiusOutOfRange { radius: f64, max: f64 },
    #[error("point lies behind the camera")]
    BehindCamera,
    #[error("point at incidence {angle:.6} rad is outside the {fov:.6} rad field of view")]
    OutOfFov { angle: f64, fov: f64 },
    #[error("pixel ray does not descend toward the ground")]
    RayParallelToGround,
    #[error("pixel ray meets the ground plane behind the camera")]
    RayHitsAboveHorizon,
    #[error("non-finite input")]
    NonFinite,
}

/// Rotation whose optical axis points at `yaw` (from ego +x, counter-clockwise)
/// and `pitch_down` below the horizon, with image rows pointing downward.
pub fn look_rotation(yaw: f64, pitch_down: f64) -> Matrix3<f64> {
    let (sy, cy) = yaw.sin_cos();
    let (sp, cp) = pitch_down.sin_cos();
    let z = Vector3::new(cp * cy, cp * sy, -sp);
    let x = Vector3::new(sy, -cy, 0.0);
    let y = z.cross(&x);
    Matrix3::from_columns(&[x, y, z])
}

/// Max abs entry of `RᵀR - I`, plus the determinant.
pub fn rotation_defect(r: &Matrix3<f64>) -> (f64, f64) {
    let e = r.transpose() * r - Matrix3::identity();
    (e.amax(), r.determinant())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FisheyeCamera {
    channel: Channel,
    focal: [f64; 2],
    principal_point: PixelPoint,
    distortion: RadialDistortion,
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl FisheyeCamera {
    /// Builds a camera and checks its invariants.
    pub fn new(
        channel: Channel,
        focal: [f64; 2],
        principal_point: PixelPoint,
        model: RadialModel,
        fov_half_angle: f64,
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
    ) -> Result<Self, CalibrationError> {
        let invalid = |reason: String| CalibrationError::InvalidCamera { channel, reason };
        if !(focal.iter().all(|f| f.is_finite() && *f > 0.0)) {
            return Err(invalid(format!("focal lengths must be positive, got {focal:?}")));
        }
        if !(principal_point.u.is_finite() && principal_point.v.is_finite()) {
            return Err(invalid("principal point must be finite".into()));
        }
        if !(fov_half_angle > 0.0 && fov_half_angle < std::f64::consts::PI) {
            return Err(invalid(format!("fov half angle {fov_half_angle} outside (0, π)")));
        }
        let (deviation, det) = rotation_defect(&rotation);
        if !(deviation <= ROTATION_TOLERANCE && det > 0.0) {
            return Err(CalibrationError::NonOrthonormalRotation { channel, deviation, determinant: det });
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(invalid("translation must be finite".into()));
        }
        if translation.z <= 0.0 {
            return Err(invalid(format!("camera height {} m must be above ground", translation.z)));
        }
        let distortion = RadialDistortion::new(model, fov_half_angle).map_err(|e| match e {
            DistortionError::NonMonotone(detail) => {
                CalibrationError::NonMonotoneDistortion { channel, detail }
            }
            other => invalid(other.to_string()),
        })?;
        Ok(Self { channel, focal, principal_point, distortion, rotation, translation })
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn focal(&self) -> [f64; 2] {
        self.focal
    }

    pub fn principal_point(&self) -> PixelPoint {
        self.principal_point
    }

    pub fn distortion(&self) -> &RadialDistortion {
        &self.distortion
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn fov_half_angle(&self) -> f64 {
        self.distortion.max_angle()
    }

    /// Camera center projected onto the ground.
    pub fn ground_position(&self) -> GroundPoint {
        GroundPoint::new(self.translation.x, self.translation.y)
    }

    pub fn height(&self) -> f64 {
        self.translation.z
    }

    /// Image radius in pixels (x-focal scale) for an incidence angle.
    pub fn distort(&self, incidence: f64) -> Result<f64, GeometryError> {
        if !incidence.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        self.distortion
            .radius(incidence)
            .map(|r| r * self.focal[0])
            .ok_or(GeometryError::AngleOutOfFov { angle: incidence, fov: self.fov_half_angle() })
    }

    /// Incidence angle for an image radius in pixels (x-focal scale).
    pub fn undistort(&self, radius_px: f64) -> Result<f64, GeometryError> {
        if !radius_px.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        self.distortion.angle(radius_px / self.focal[0]).ok_or(GeometryError::RadiusOutOfRange {
            radius: radius_px,
            max: self.distortion.max_radius() * self.focal[0],
        })
    }

    /// Projects an arbitrary ego-frame point.
    pub fn project_point(&self, p: &Vector3<f64>) -> Result<PixelPoint, GeometryError> {
        if !p.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let pc = self.rotation.transpose() * (p - self.translation);
        let lateral = pc.x.hypot(pc.y);
        if lateral == 0.0 && pc.z <= 0.0 {
            return Err(GeometryError::BehindCamera);
        }
        let incidence = lateral.atan2(pc.z);
        let fov = self.fov_half_angle();
        if incidence > fov {
            return Err(if pc.z <= 0.0 {
                GeometryError::BehindCamera
            } else {
                GeometryError::OutOfFov { angle: incidence, fov }
            });
        }
        let r = self.distortion.radius(incidence).expect("incidence checked against fov");
        let (cu, cv) = if lateral > 0.0 { (pc.x / lateral, pc.y / lateral) } else { (0.0, 0.0) };
        Ok(PixelPoint {
            u: self.principal_point.u + self.focal[0] * r * cu,
            v: self.principal_point.v + self.focal[1] * r * cv,
        })
    }

    pub fn project_ground_to_pixel(&self, p: &GroundPoint) -> Result<PixelPoint, GeometryError> {
        self.project_point(&p.to_vector3())
    }

    /// Unit ray in the ego frame for a pixel.
    pub fn pixel_ray(&self, px: &PixelPoint) -> Result<Vector3<f64>, GeometryError> {
        if !(px.u.is_finite() && px.v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        // pixel -> distorted plane
        let xd = (px.u - self.principal_point.u) / self.focal[0];
        let yd = (px.v - self.principal_point.v) / self.focal[1];
        let rd = xd.hypot(yd);
        // distorted plane -> incidence angle
        let incidence = self.distortion.angle(rd).ok_or(GeometryError::RadiusOutOfRange {
            radius: rd * self.focal[0],
            max: self.distortion.max_radius() * self.focal[0],
        })?;
        let (s, c) = incidence.sin_cos();
        let ray_cam = if rd > 0.0 {
            Vector3::new(s * xd / rd, s * yd / rd, c)
        } else {
            Vector3::new(0.0, 0.0, 1.0)
        };
        Ok(self.rotation * ray_cam)
    }

    /// Inverse perspective mapping: intersects the pixel's ray with z = 0.
    pub fn pixel_to_ground(&self, px: &PixelPoint) -> Result<GroundPoint, GeometryError> {
        let ray = self.pixel_ray(px)?;
        if ray.z.abs() < PARALLEL_EPS {
            return Err(GeometryError::RayParallelToGround);
        }
        if ray.z > 0.0 {
            return Err(GeometryError::RayHitsAboveHorizon);
        }
        let s = -self.translation.z / ray.z;
        Ok(GroundPoint::new(self.translation.x + s * ray.x, self.translation.y + s * ray.y))
    }
}
