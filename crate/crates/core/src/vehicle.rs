//! Per-target records: contact points, the vehicle-type catalog, the
//! multidimensional vector that accumulates everything known about one target,
//! and the BEV box emitted for it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle;
use crate::camera::{Channel, GroundPoint, PixelPoint};

const DEFAULT_CATALOG: &str = include_str!("../config/vehicle_types.toml");
pub const CATALOG_VERSION: u32 = 1;

/// Ground contact point kinds. The derived order is also the azimuth-anchor
/// priority: rear wheel first, front bumper last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ContactPointKind {
    #[serde(rename = "rw")]
    RearWheel,
    #[serde(rename = "fw")]
    FrontWheel,
    #[serde(rename = "rb")]
    RearBumper,
    #[serde(rename = "fb")]
    FrontBumper,
}

impl ContactPointKind {
    pub const ALL: [ContactPointKind; 4] = [
        ContactPointKind::RearWheel,
        ContactPointKind::FrontWheel,
        ContactPointKind::RearBumper,
        ContactPointKind::FrontBumper,
    ];

    pub fn is_wheel(self) -> bool {
        matches!(self, ContactPointKind::FrontWheel | ContactPointKind::RearWheel)
    }

    pub fn short_name(self) -> &'static str {
        match self {
            ContactPointKind::FrontWheel => "FW",
            ContactPointKind::RearWheel => "RW",
            ContactPointKind::FrontBumper => "FB",
            ContactPointKind::RearBumper => "RB",
        }
    }
}

impl fmt::Display for ContactPointKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactPoint {
    pub kind: ContactPointKind,
    /// Bottom-edge midpoint of the part box in the source image.
    pub pixel: PixelPoint,
    pub physical: GroundPoint,
    pub source_channel: Channel,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("unknown vehicle type {0:?}")]
    UnknownVehicleType(String),
    #[error("invalid vehicle type {name:?}: {reason}")]
    InvalidTypeSpec { name: String, reason: String },
    #[error("catalog parse error: {0}")]
    Parse(String),
    #[error("cannot read catalog {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("vector already has a {0} contact point")]
    DuplicateContactPoint(ContactPointKind),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleTypeSpec {
    #[serde(rename = "name")]
    pub type_name: String,
    pub l: f64,
    pub w: f64,
    pub h: f64,
    pub fo: f64,
    pub ro: f64,
}

impl VehicleTypeSpec {
    pub fn validate(&self) -> Result<(), DomainError> {
        let bad = |reason: &str| {
            Err(DomainError::InvalidTypeSpec { name: self.type_name.clone(), reason: reason.to_string() })
        };
        if ![self.l, self.w, self.h, self.fo, self.ro].iter().all(|v| v.is_finite()) {
            return bad("non-finite dimension");
        }
        if !(self.w > 0.0 && self.w < self.l) {
            return bad("need 0 < w < l");
        }
        if self.fo < 0.0 || self.ro < 0.0 {
            return bad("overhangs must be non-negative");
        }
        if !(self.fo + self.ro > 0.0 && self.fo + self.ro < self.l) {
            return bad("need 0 < fo + ro < l");
        }
        if self.h <= 0.0 {
            return bad("need h > 0");
        }
        Ok(())
    }

    pub fn dims(&self) -> Dims {
        Dims { l: self.l, w: self.w, h: self.h }
    }

    pub fn overhangs(&self) -> Overhangs {
        Overhangs { fo: self.fo, ro: self.ro }
    }

    /// Distance between the front and rear wheel contact points.
    pub fn wheelbase(&self) -> f64 {
        self.l - self.fo - self.ro
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogDocument {
    version: u32,
    fallback: String,
    vehicle_type: Vec<VehicleTypeSpec>,
}

/// Vehicle types in file order plus the label used for untyped detections.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeCatalog {
    types: Vec<VehicleTypeSpec>,
    fallback: String,
}

impl TypeCatalog {
    pub fn new(types: Vec<VehicleTypeSpec>, fallback: impl Into<String>) -> Result<Self, DomainError> {
        let fallback = fallback.into();
        if types.is_empty() {
            return Err(DomainError::Parse("catalog needs at least one vehicle type".into()));
        }
        let mut seen = BTreeSet::new();
        for t in &types {
            t.validate()?;
            if !seen.insert(t.type_name.as_str()) {
                return Err(DomainError::InvalidTypeSpec {
                    name: t.type_name.clone(),
                    reason: "listed twice".into(),
                });
            }
        }
        if !seen.contains(fallback.as_str()) {
            return Err(DomainError::UnknownVehicleType(fallback));
        }
        Ok(Self { types, fallback })
    }

    pub fn from_toml_str(document: &str) -> Result<Self, DomainError> {
        let doc: CatalogDocument = toml::from_str(document).map_err(|e| DomainError::Parse(e.to_string()))?;
        if doc.version != CATALOG_VERSION {
            return Err(DomainError::Parse(format!("unsupported catalog version {}", doc.version)));
        }
        Self::new(doc.vehicle_type, doc.fallback)
    }

    pub fn load(path: &Path) -> Result<Self, DomainError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DomainError::Io { path: path.display().to_string(), reason: e.to_string() })?;
        Self::from_toml_str(&text)
    }

    pub fn lookup_type_attrs(&self, type_name: &str) -> Result<&VehicleTypeSpec, DomainError> {
        self.types
            .iter()
            .find(|t| t.type_name == type_name)
            .ok_or_else(|| DomainError::UnknownVehicleType(type_name.to_string()))
    }

    pub fn fallback(&self) -> &VehicleTypeSpec {
        self.lookup_type_attrs(&self.fallback).expect("fallback checked at construction")
    }

    pub fn types(&self) -> &[VehicleTypeSpec] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }
}

impl Default for TypeCatalog {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_CATALOG).expect("shipped catalog is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dims {
    pub l: f64,
    pub w: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overhangs {
    pub fo: f64,
    pub ro: f64,
}

/// Pixel box `(X, Y, W, L)`: top-left corner, width, height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub l: f64,
}

impl From<[f64; 4]> for BBox {
    fn from(a: [f64; 4]) -> Self {
        BBox { x: a[0], y: a[1], w: a[2], l: a[3] }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x, b.y, b.w, b.l]
    }
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, l: f64) -> Self {
        Self { x, y, w, l }
    }

    pub fn is_valid(&self) -> bool {
        [self.x, self.y, self.w, self.l].iter().all(|v| v.is_finite()) && self.w > 0.0 && self.l > 0.0
    }

    pub fn center(&self) -> PixelPoint {
        PixelPoint::new(self.x + 0.5 * self.w, self.y + 0.5 * self.l)
    }

    pub fn area(&self) -> f64 {
        self.w * self.l
    }

    pub fn contains(&self, p: &PixelPoint) -> bool {
        p.u >= self.x && p.u <= self.x + self.w && p.v >= self.y && p.v <= self.y + self.l
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = (self.x + self.w).min(other.x + other.w) - self.x.max(other.x);
        let h = (self.y + self.l).min(other.y + other.l) - self.y.max(other.y);
        if w > 0.0 && h > 0.0 {
            w * h
        } else {
            0.0
        }
    }

    /// Smallest box covering both.
    pub fn union(&self, other: &BBox) -> BBox {
        let x0 = self.x.min(other.x);
        let y0 = self.y.min(other.y);
        let x1 = (self.x + self.w).max(other.x + other.w);
        let y1 = (self.y + self.l).max(other.y + other.l);
        BBox::new(x0, y0, x1 - x0, y1 - y0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorFlag {
    /// No type label was detected; the catalog fallback was bound.
    FallbackType,
    /// No type label and strict typing is on; no BEV box will be emitted.
    Untyped,
    /// Neither a contact point nor a regressed heading could be resolved.
    NoGeometry,
}

/// Contact points keyed by kind, at most one each.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContactSet(BTreeMap<ContactPointKind, ContactPoint>);

impl ContactSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a point; a second point of the same kind is refused.
    pub fn insert(&mut self, point: ContactPoint) -> Result<(), DomainError> {
        if self.0.contains_key(&point.kind) {
            return Err(DomainError::DuplicateContactPoint(point.kind));
        }
        self.0.insert(point.kind, point);
        Ok(())
    }

    pub fn replace(&mut self, point: ContactPoint) {
        self.0.insert(point.kind, point);
    }

    pub fn get(&self, kind: ContactPointKind) -> Option<&ContactPoint> {
        self.0.get(&kind)
    }

    pub fn physical(&self, kind: ContactPointKind) -> Option<GroundPoint> {
        self.0.get(&kind).map(|c| c.physical)
    }

    pub fn contains(&self, kind: ContactPointKind) -> bool {
        self.0.contains_key(&kind)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ContactPoint> {
        self.0.values()
    }

    pub fn kinds(&self) -> impl Iterator<Item = ContactPointKind> + '_ {
        self.0.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Bearing from the ego origin of the highest-priority point (RW > FW > RB > FB).
    pub fn anchor_azimuth(&self) -> Option<f64> {
        self.0.values().next().map(|c| c.physical.azimuth())
    }

    pub fn centroid(&self) -> Option<GroundPoint> {
        if self.0.is_empty() {
            return None;
        }
        let sum = self.0.values().fold(GroundPoint::ORIGIN, |acc, c| acc + c.physical);
        Some(sum * (1.0 / self.0.len() as f64))
    }
}

/// Everything known about one target.
#[derive(Debug, Clone, PartialEq)]
pub struct MultidimensionalVector {
    pub obj_id: Option<u64>,
    pub channel: Channel,
    pub bbox: BBox,
    /// Confidence of the vehicle box.
    pub score: f64,
    pub vehicle_type: Option<String>,
    pub dims: Option<Dims>,
    pub overhangs: Option<Overhangs>,
    pub heading_regressed: Option<f64>,
    pub heading_geometric: Option<f64>,
    pub azimuth: Option<f64>,
    pub contact_points: ContactSet,
    pub flags: BTreeSet<VectorFlag>,
}

impl MultidimensionalVector {
    pub fn new(channel: Channel, bbox: BBox, score: f64) -> Self {
        Self {
            obj_id: None,
            channel,
            bbox,
            score,
            vehicle_type: None,
            dims: None,
            overhangs: None,
            heading_regressed: None,
            heading_geometric: None,
            azimuth: None,
            contact_points: ContactSet::new(),
            flags: BTreeSet::new(),
        }
    }

    pub fn bind_type(&mut self, spec: &VehicleTypeSpec) {
        self.vehicle_type = Some(spec.type_name.clone());
        self.dims = Some(spec.dims());
        self.overhangs = Some(spec.overhangs());
    }

    /// The bound type's attributes, if complete.
    pub fn type_spec(&self) -> Option<VehicleTypeSpec> {
        let (name, d, o) = (self.vehicle_type.as_ref()?, self.dims?, self.overhangs?);
        Some(VehicleTypeSpec { type_name: name.clone(), l: d.l, w: d.w, h: d.h, fo: o.fo, ro: o.ro })
    }

    pub fn refresh_azimuth(&mut self) {
        self.azimuth = self.contact_points.anchor_azimuth();
    }

    pub fn point(&self, kind: ContactPointKind) -> Option<GroundPoint> {
        self.contact_points.physical(kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DimsMissing,
    OverhangsMissing,
    InvalidDims(String),
    AngleOutOfRange(&'static str),
    ScoreOutOfRange,
    InvalidBBox,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DimsMissing => f.write_str("dims missing for typed vehicle"),
            Violation::OverhangsMissing => f.write_str("overhangs missing for typed vehicle"),
            Violation::InvalidDims(r) => write!(f, "invalid dims: {r}"),
            Violation::AngleOutOfRange(which) => write!(f, "{which} outside (-pi, pi]"),
            Violation::ScoreOutOfRange => f.write_str("score outside [0, 1]"),
            Violation::InvalidBBox => f.write_str("bbox has non-positive size"),
        }
    }
}

/// Lists every broken invariant of `v`; empty means valid.
pub fn validate_vector(v: &MultidimensionalVector) -> Vec<Violation> {
    let mut out = Vec::new();
    if !v.bbox.is_valid() {
        out.push(Violation::InvalidBBox);
    }
    if !(0.0..=1.0).contains(&v.score) {
        out.push(Violation::ScoreOutOfRange);
    }
    if v.vehicle_type.is_some() {
        if v.dims.is_none() {
            out.push(Violation::DimsMissing);
        }
        if v.overhangs.is_none() {
            out.push(Violation::OverhangsMissing);
        }
        if let Some(spec) = v.type_spec() {
            if let Err(e) = spec.validate() {
                out.push(Violation::InvalidDims(e.to_string()));
            }
        }
    }
    for (name, value) in [
        ("heading_regressed", v.heading_regressed),
        ("heading_geometric", v.heading_geometric),
        ("azimuth", v.azimuth),
    ] {
        if let Some(a) = value {
            if !angle::in_range(a) {
                out.push(Violation::AngleOutOfRange(name));
            }
        }
    }
    out
}

/// Recovered pose as a rectangle. Corners follow the vehicle's own frame:
/// A left-front, B left-rear, C right-front, D right-rear.
#[derive(Debug, Clone, PartialEq)]
pub struct BevBox {
    pub obj_id: u64,
    pub type_name: String,
    pub center: GroundPoint,
    pub heading: f64,
    pub a: GroundPoint,
    pub b: GroundPoint,
    pub c: GroundPoint,
    pub d: GroundPoint,
}

impl BevBox {
    pub fn corners(&self) -> [GroundPoint; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Checks the rectangle invariants against the type's length and width.
    pub fn check_rectangle(&self, l: f64, w: f64, tol: f64) -> Result<(), String> {
        let checks = [
            ("|AB| = l", self.a.distance(&self.b), l),
            ("|CD| = l", self.c.distance(&self.d), l),
            ("|AC| = w", self.a.distance(&self.c), w),
            ("|BD| = w", self.b.distance(&self.d), w),
            ("|AD| = diag", self.a.distance(&self.d), l.hypot(w)),
            ("|BC| = diag", self.b.distance(&self.c), l.hypot(w)),
        ];
        for (name, got, want) in checks {
            if (got - want).abs() > tol {
                return Err(format!("{name}: {got} vs {want}"));
            }
        }
        let mid = (self.a + self.b + self.c + self.d) * 0.25;
        if mid.distance(&self.center) > tol {
            return Err(format!("corner midpoint {mid:?} != center {:?}", self.center));
        }
        // A must sit left of the heading direction relative to C
        let left = GroundPoint::unit(self.heading + std::f64::consts::FRAC_PI_2);
        if (self.a - self.c).dot(&left) <= 0.0 {
            return Err("corner labels are mirrored".into());
        }
        let fwd = GroundPoint::unit(self.heading);
        if (self.a - self.b).dot(&fwd) <= 0.0 {
            return Err("corner labels are reversed front-to-back".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(kind: ContactPointKind, x: f64, y: f64) -> ContactPoint {
        ContactPoint {
            kind,
            pixel: PixelPoint::new(0.0, 0.0),
            physical: GroundPoint::new(x, y),
            source_channel: Channel::Front,
        }
    }

    #[test]
    fn default_catalog_ships_eight_valid_types() {
        let cat = TypeCatalog::default();
        assert_eq!(cat.len(), 8);
        for t in cat.types() {
            t.validate().unwrap();
            assert!(t.fo + t.ro > 0.0 && t.fo + t.ro < t.l, "{t:?}");
        }
        assert_eq!(cat.fallback().type_name, "car");
    }

    #[test]
    fn lookup_echoes_configured_spec() {
        let cat = TypeCatalog::default();
        let car = cat.lookup_type_attrs("car").unwrap();
        assert_eq!(car, &cat.types()[0]);
        assert_eq!(
            cat.lookup_type_attrs("tank"),
            Err(DomainError::UnknownVehicleType("tank".into()))
        );
    }

    #[test]
    fn catalog_rejects_bad_overhangs() {
        let bad = VehicleTypeSpec { type_name: "x".into(), l: 2.0, w: 1.0, h: 1.0, fo: 1.0, ro: 1.0 };
        assert!(TypeCatalog::new(vec![bad], "x").is_err());
        let ok = VehicleTypeSpec { type_name: "x".into(), l: 3.0, w: 1.0, h: 1.0, fo: 1.0, ro: 1.0 };
        assert!(TypeCatalog::new(vec![ok.clone()], "y").is_err());
        assert!(TypeCatalog::new(vec![ok], "x").is_ok());
    }

    #[test]
    fn contact_set_refuses_duplicates() {
        let mut set = ContactSet::new();
        set.insert(point(ContactPointKind::FrontWheel, 1.0, 0.0)).unwrap();
        assert_eq!(
            set.insert(point(ContactPointKind::FrontWheel, 2.0, 0.0)),
            Err(DomainError::DuplicateContactPoint(ContactPointKind::FrontWheel))
        );
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn azimuth_prefers_rear_wheel() {
        let mut set = ContactSet::new();
        set.insert(point(ContactPointKind::FrontBumper, 0.0, 1.0)).unwrap();
        assert!((set.anchor_azimuth().unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        set.insert(point(ContactPointKind::FrontWheel, 1.0, 1.0)).unwrap();
        assert!((set.anchor_azimuth().unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        set.insert(point(ContactPointKind::RearWheel, 1.0, 0.0)).unwrap();
        assert_eq!(set.anchor_azimuth().unwrap(), 0.0);
    }

    #[test]
    fn validate_reports_missing_dims() {
        let cat = TypeCatalog::default();
        let mut v = MultidimensionalVector::new(Channel::Left, BBox::new(0.0, 0.0, 10.0, 10.0), 0.9);
        v.bind_type(cat.lookup_type_attrs("suv").unwrap());
        v.heading_regressed = Some(0.3);
        v.contact_points.insert(point(ContactPointKind::RearWheel, 1.0, 2.0)).unwrap();
        v.refresh_azimuth();
        assert!(validate_vector(&v).is_empty());

        v.dims = None;
        let violations = validate_vector(&v);
        assert_eq!(violations, vec![Violation::DimsMissing]);
        assert_eq!(violations[0].to_string(), "dims missing for typed vehicle");

        v.dims = Some(cat.lookup_type_attrs("suv").unwrap().dims());
        v.heading_regressed = Some(4.0);
        assert_eq!(validate_vector(&v), vec![Violation::AngleOutOfRange("heading_regressed")]);
    }

    #[test]
    fn bbox_geometry() {
        let a = BBox::new(0.0, 0.0, 10.0, 10.0);
        let b = BBox::new(5.0, 5.0, 10.0, 10.0);
        assert_eq!(a.intersection_area(&b), 25.0);
        assert_eq!(a.union(&b), BBox::new(0.0, 0.0, 15.0, 15.0));
        assert!(a.contains(&PixelPoint::new(10.0, 10.0)));
        assert!(!BBox::new(0.0, 0.0, 0.0, 5.0).is_valid());
    }
}
