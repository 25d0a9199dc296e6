//! Four-camera rig and its calibration document.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::Deserialize;
use thiserror::Error;

use super::{Channel, FisheyeCamera, PixelPoint, RadialDistortion, RadialModel, RadialTable};

pub const CALIBRATION_VERSION: u32 = 1;
/// The only ego-frame convention the pipeline understands.
pub const EGO_FRAME: &str = "x-forward y-left z-up, origin on ground under rear axle";

const DEFAULT_RIG: &str = include_str!("../../config/default_rig.toml");

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("cannot read calibration {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("calibration parse error: {0}")]
    Parse(String),
    #[error("unsupported calibration version {0} (expected {CALIBRATION_VERSION})")]
    UnsupportedVersion(u32),
    #[error("unknown ego frame {0:?}")]
    UnknownEgoFrame(String),
    #[error("calibration has no {0} camera")]
    MissingChannel(Channel),
    #[error("calibration lists the {0} camera twice")]
    DuplicateChannel(Channel),
    #[error("{channel} rotation is not a proper rotation (|RᵀR - I| = {deviation:.3e}, det = {determinant:.6})")]
    NonOrthonormalRotation { channel: Channel, deviation: f64, determinant: f64 },
    #[error("{channel} distortion is not monotone: {detail}")]
    NonMonotoneDistortion { channel: Channel, detail: String },
    #[error("{channel} camera is invalid: {reason}")]
    InvalidCamera { channel: Channel, reason: String },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RigDocument {
    version: u32,
    ego_frame: String,
    camera: Vec<CameraDocument>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraDocument {
    channel: Channel,
    focal: [f64; 2],
    principal_point: [f64; 2],
    distortion: DistortionDocument,
    rotation: [f64; 9],
    translation: [f64; 3],
    fov_half_angle_deg: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
enum DistortionKind {
    Equidistant,
    Polynomial,
    Table,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistortionDocument {
    kind: DistortionKind,
    #[serde(default)]
    coefficients: Option<Vec<f64>>,
    #[serde(default)]
    table: Option<TableDocument>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableDocument {
    angles_deg: Vec<f64>,
    radii_px: Vec<f64>,
    /// Allowed disagreement with `coefficients` at each knot, in pixels.
    #[serde(default)]
    tolerance_px: Option<f64>,
}

impl CameraDocument {
    fn into_camera(self) -> Result<FisheyeCamera, CalibrationError> {
        let channel = self.channel;
        let invalid = |reason: String| CalibrationError::InvalidCamera { channel, reason };
        let fx = self.focal[0];
        let polynomial = self.coefficients_model();
        let model = match self.distortion.kind {
            DistortionKind::Equidistant => RadialModel::Equidistant,
            DistortionKind::Polynomial => {
                polynomial.clone().ok_or_else(|| invalid("polynomial distortion needs coefficients".into()))?
            }
            DistortionKind::Table => {
                let doc = self
                    .distortion
                    .table
                    .as_ref()
                    .ok_or_else(|| invalid("table distortion needs a table".into()))?;
                if !(fx.is_finite() && fx > 0.0) {
                    return Err(invalid("focal lengths must be positive".into()));
                }
                let angles = doc.angles_deg.iter().map(|a| a.to_radians()).collect();
                let radii = doc.radii_px.iter().map(|r| r / fx).collect();
                let table = RadialTable::new(angles, radii).map_err(|e| match e {
                    super::DistortionError::NonMonotone(detail) => {
                        CalibrationError::NonMonotoneDistortion { channel, detail }
                    }
                    other => invalid(other.to_string()),
                })?;
                if let Some(reference) = &polynomial {
                    let tolerance = doc.tolerance_px.unwrap_or(0.5) / fx;
                    RadialDistortion::check_table_against(&table, reference, tolerance)
                        .map_err(|e| invalid(e.to_string()))?;
                }
                RadialModel::Table(table)
            }
        };
        let r = &self.rotation;
        let rotation = Matrix3::new(r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8]);
        FisheyeCamera::new(
            channel,
            self.focal,
            PixelPoint::new(self.principal_point[0], self.principal_point[1]),
            model,
            self.fov_half_angle_deg.to_radians(),
            rotation,
            Vector3::from_column_slice(&self.translation),
        )
    }

    fn coefficients_model(&self) -> Option<RadialModel> {
        self.distortion.coefficients.as_ref().map(|k| RadialModel::Polynomial(k.clone()))
    }
}

/// Exactly one validated camera per channel, stored in canonical channel order.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraRig {
    cameras: Vec<FisheyeCamera>,
}

impl CameraRig {
    pub fn new(mut cameras: Vec<FisheyeCamera>) -> Result<Self, CalibrationError> {
        cameras.sort_by_key(|c| c.channel());
        for pair in cameras.windows(2) {
            if pair[0].channel() == pair[1].channel() {
                return Err(CalibrationError::DuplicateChannel(pair[0].channel()));
            }
        }
        for ch in Channel::ALL {
            if !cameras.iter().any(|c| c.channel() == ch) {
                return Err(CalibrationError::MissingChannel(ch));
            }
        }
        Ok(Self { cameras })
    }

    /// Parses and validates a calibration document.
    pub fn from_toml_str(document: &str) -> Result<Self, CalibrationError> {
        let doc: RigDocument =
            toml::from_str(document).map_err(|e| CalibrationError::Parse(e.to_string()))?;
        if doc.version != CALIBRATION_VERSION {
            return Err(CalibrationError::UnsupportedVersion(doc.version));
        }
        if doc.ego_frame != EGO_FRAME {
            return Err(CalibrationError::UnknownEgoFrame(doc.ego_frame));
        }
        let cameras = doc
            .camera
            .into_iter()
            .map(CameraDocument::into_camera)
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(cameras)
    }

    pub fn load(path: &Path) -> Result<Self, CalibrationError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CalibrationError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    /// The rig shipped in `config/default_rig.toml`.
    pub fn default_rig() -> Self {
        Self::from_toml_str(DEFAULT_RIG).expect("shipped rig is valid")
    }

    pub fn camera(&self, channel: Channel) -> &FisheyeCamera {
        self.cameras.iter().find(|c| c.channel() == channel).expect("rig has every channel")
    }

    pub fn cameras(&self) -> &[FisheyeCamera] {
        &self.cameras
    }
}

/// Alias matching the operation name used in the docs.
pub fn load_calibration(document: &str) -> Result<CameraRig, CalibrationError> {
    CameraRig::from_toml_str(document)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc_with(front_rotation: &str, front_distortion: &str) -> String {
        let base = DEFAULT_RIG.to_string();
        let mut out = String::new();
        let mut in_front = false;
        for line in base.lines() {
            if line.starts_with("channel = ") {
                in_front = line.contains("\"front\"");
            }
            if in_front && line.starts_with("rotation = ") && !front_rotation.is_empty() {
                out.push_str(front_rotation);
            } else if in_front && line.starts_with("coefficients = ") && !front_distortion.is_empty() {
                out.push_str(front_distortion);
            } else {
                out.push_str(line);
            }
            out.push('\n');
        }
        out
    }

    #[test]
    fn default_rig_has_four_cameras() {
        let rig = CameraRig::default_rig();
        assert_eq!(rig.cameras().len(), 4);
        for (cam, ch) in rig.cameras().iter().zip(Channel::ALL) {
            assert_eq!(cam.channel(), ch);
            assert!(cam.height() > 0.0);
        }
    }

    #[test]
    fn loading_is_pure() {
        let a = CameraRig::from_toml_str(DEFAULT_RIG).unwrap();
        let b = CameraRig::from_toml_str(DEFAULT_RIG).unwrap();
        assert_eq!(a, b);
        for (ca, cb) in a.cameras().iter().zip(b.cameras()) {
            for (x, y) in ca.rotation().iter().zip(cb.rotation().iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn reflection_is_rejected() {
        let doc = doc_with("rotation = [0.0, 0.42261826174069944, 0.9063077870366499, -1.0, 0.0, 0.0, 0.0, 0.9063077870366499, -0.42261826174069944]", "");
        let err = CameraRig::from_toml_str(&doc).unwrap_err();
        assert!(matches!(err, CalibrationError::NonOrthonormalRotation { channel: Channel::Front, .. }), "{err}");
    }

    #[test]
    fn decreasing_table_is_rejected() {
        let doc = doc_with(
            "",
            "kind = \"table\"\n[camera.distortion.table]\nangles_deg = [0.0, 50.0, 100.0]\nradii_px = [0.0, 300.0, 200.0]",
        )
        .replace("kind = \"polynomial\"\nkind = \"table\"", "kind = \"table\"");
        let err = CameraRig::from_toml_str(&doc).unwrap_err();
        assert!(matches!(err, CalibrationError::NonMonotoneDistortion { channel: Channel::Front, .. }), "{err}");
    }

    #[test]
    fn missing_channel_is_rejected() {
        let doc: String = DEFAULT_RIG.split("[[camera]]").take(4).collect::<Vec<_>>().join("[[camera]]");
        let err = CameraRig::from_toml_str(&doc).unwrap_err();
        assert!(matches!(err, CalibrationError::MissingChannel(Channel::Right)), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let doc = DEFAULT_RIG.replacen("fov_half_angle_deg", "skew = 0.0\nfov_half_angle_deg", 1);
        assert!(matches!(CameraRig::from_toml_str(&doc), Err(CalibrationError::Parse(_))));
    }
}
