//! Re-identification and fusion of multidimensional vectors.
//!
//! Three stages share one notion of proximity between vectors:
//!
//! 1. [`fuse_branches`] joins branch outputs describing the same vehicle box.
//! 2. [`assign_channel_ids`] clusters one camera's vectors and carries ids over
//!    from the previous frame.
//! 3. [`merge_bev_targets`] clusters across cameras and fuses each cluster into
//!    a single target, averaging overlapping contact points with channel weights.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bev::{self, VisibleSide};
use crate::camera::{Channel, GroundPoint};
use crate::detection::bbox_order;
use crate::vehicle::{ContactPoint, ContactPointKind, MultidimensionalVector, VectorFlag, VehicleTypeSpec};

/// Two branch observations of the same kind further apart than this are a conflict.
pub const BRANCH_CONFLICT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("branches disagree on the {kind} contact point by {distance:.3e} m")]
    ConflictingGeometry { kind: ContactPointKind, distance: f64 },
    #[error("invalid fusion config: {0}")]
    InvalidConfig(String),
}

/// Weights for one specific channel pair; `alpha` applies to `first`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairWeight {
    pub first: Channel,
    pub second: Channel,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionConfig {
    /// Vectors whose contact points come closer than this (metres) are the same target.
    pub proximity_gate: f64,
    /// Weight of the first channel, in canonical order, of an overlapping pair.
    pub alpha: f64,
    /// Weight of each further channel.
    pub beta: f64,
    /// Clusters never grow wider than this (metres, between anchors).
    pub max_cluster_diameter: f64,
    #[serde(rename = "pair_weight")]
    pub pair_weights: Vec<PairWeight>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self { proximity_gate: 0.5, alpha: 0.5, beta: 0.5, max_cluster_diameter: 2.0, pair_weights: Vec::new() }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), FusionError> {
        let bad = |m: String| Err(FusionError::InvalidConfig(m));
        if !(self.proximity_gate.is_finite() && self.proximity_gate > 0.0) {
            return bad(format!("proximity_gate must be positive, got {}", self.proximity_gate));
        }
        if !(self.max_cluster_diameter.is_finite() && self.max_cluster_diameter > 0.0) {
            return bad(format!("max_cluster_diameter must be positive, got {}", self.max_cluster_diameter));
        }
        let weights = std::iter::once((self.alpha, self.beta, "default".to_string())).chain(
            self.pair_weights.iter().map(|p| (p.alpha, p.beta, format!("{}/{}", p.first, p.second))),
        );
        for (a, b, name) in weights {
            if !((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) && (a + b - 1.0).abs() <= 1e-9) {
                return bad(format!("{name} weights must lie in [0, 1] and sum to 1, got {a} and {b}"));
            }
        }
        for p in &self.pair_weights {
            if p.first >= p.second {
                return bad(format!("pair {}/{} must list channels in canonical order", p.first, p.second));
            }
        }
        Ok(())
    }

    fn pair(&self, first: Channel, second: Channel) -> (f64, f64) {
        self.pair_weights
            .iter()
            .find(|p| p.first == first && p.second == second)
            .map_or((self.alpha, self.beta), |p| (p.alpha, p.beta))
    }
}

/// Monotone source of fresh object ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdAllocator {
    next: u64,
}

impl Default for IdAllocator {
    fn default() -> Self {
        Self { next: 1 }
    }
}

impl IdAllocator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_id(&mut self) -> u64 {
        let id = self.next;
        self.next += 1;
        id
    }

    pub fn peek(&self) -> u64 {
        self.next
    }

    /// Makes sure no future id collides with `id`.
    pub fn reserve(&mut self, id: u64) {
        self.next = self.next.max(id + 1);
    }
}

fn merge_optional<T: Clone>(base: &mut Option<T>, other: &Option<T>) {
    if base.is_none() {
        base.clone_from(other);
    }
}

/// Joins vectors sharing an identical vehicle box. Branches are listed in
/// priority order; the earlier branch wins on scalar conflicts, while contact
/// points of one kind must agree.
pub fn fuse_branches(branches: &[Vec<MultidimensionalVector>]) -> Result<Vec<MultidimensionalVector>, FusionError> {
    let mut out: Vec<MultidimensionalVector> = Vec::new();
    for v in branches.iter().flatten() {
        let Some(base) = out.iter_mut().find(|o| o.bbox == v.bbox && o.channel == v.channel) else {
            out.push(v.clone());
            continue;
        };
        for p in v.contact_points.iter() {
            match base.contact_points.get(p.kind) {
                Some(existing) => {
                    let d = existing.physical.distance(&p.physical);
                    if !(d <= BRANCH_CONFLICT_TOLERANCE) {
                        return Err(FusionError::ConflictingGeometry { kind: p.kind, distance: d });
                    }
                }
                None => base.contact_points.replace(p.clone()),
            }
        }
        if base.vehicle_type.is_none() && v.vehicle_type.is_some() {
            base.vehicle_type.clone_from(&v.vehicle_type);
            base.dims = v.dims;
            base.overhangs = v.overhangs;
        }
        merge_optional(&mut base.heading_regressed, &v.heading_regressed);
        merge_optional(&mut base.heading_geometric, &v.heading_geometric);
        merge_optional(&mut base.obj_id, &v.obj_id);
        base.flags.extend(v.flags.iter().copied());
    }
    for v in &mut out {
        v.refresh_azimuth();
    }
    out.sort_by(|a, b| a.channel.cmp(&b.channel).then(bbox_order(&a.bbox, &b.bbox)));
    Ok(out)
}

/// Contact points a vector's geometry implies, including unobserved ones.
///
/// Uses the full pose when one is computable; otherwise a single wheel plus a
/// regressed heading still pins the target down well enough for association.
pub fn predicted_points(v: &MultidimensionalVector) -> Option<(GroundPoint, BTreeMap<ContactPointKind, GroundPoint>)> {
    if v.flags.contains(&VectorFlag::Untyped) {
        return None;
    }
    let spec = v.type_spec()?;
    if let Ok(pose) = bev::estimate_pose_with(v, &spec) {
        let side = match pose.side {
            Some(s) => Some(s),
            None => v.azimuth.and_then(|az| bev::visible_side(pose.heading, az).ok()),
        };
        return Some((pose.center, points_from_pose(pose.center, pose.heading, side, &spec)));
    }
    let heading = v.heading_regressed?;
    let (kind, wheel) = [ContactPointKind::RearWheel, ContactPointKind::FrontWheel]
        .into_iter()
        .find_map(|k| v.point(k).map(|p| (k, p)))?;
    let side = bev::visible_side(heading, wheel.azimuth()).ok()?;
    let fwd = GroundPoint::unit(heading);
    let left = GroundPoint::unit(heading + FRAC_PI_2);
    let along = match kind {
        ContactPointKind::FrontWheel => 0.5 * spec.l - spec.fo,
        _ => -(0.5 * spec.l - spec.ro),
    };
    let center = wheel - fwd * along - left * (side.sign() * 0.5 * spec.w);
    Some((center, points_from_pose(center, heading, Some(side), &spec)))
}

fn points_from_pose(
    center: GroundPoint,
    heading: f64,
    side: Option<VisibleSide>,
    spec: &VehicleTypeSpec,
) -> BTreeMap<ContactPointKind, GroundPoint> {
    let fwd = GroundPoint::unit(heading);
    let left = GroundPoint::unit(heading + FRAC_PI_2);
    let mut m = BTreeMap::new();
    m.insert(ContactPointKind::FrontBumper, center + fwd * (0.5 * spec.l));
    m.insert(ContactPointKind::RearBumper, center - fwd * (0.5 * spec.l));
    if let Some(s) = side {
        let lateral = left * (s.sign() * 0.5 * spec.w);
        m.insert(ContactPointKind::FrontWheel, center + fwd * (0.5 * spec.l - spec.fo) + lateral);
        m.insert(ContactPointKind::RearWheel, center - fwd * (0.5 * spec.l - spec.ro) + lateral);
    }
    m
}

/// Proximity of two vectors in metres, `None` if either has no contact points.
///
/// Shared kinds are compared directly. Without a shared kind, observed points
/// are compared with the points the other vector's geometry predicts; failing
/// that, the closest pair of any kinds is used.
pub fn contact_distance(a: &MultidimensionalVector, b: &MultidimensionalVector) -> Option<f64> {
    contact_distance_with(a, b, &predicted_points(a), &predicted_points(b))
}

type Prediction = Option<(GroundPoint, BTreeMap<ContactPointKind, GroundPoint>)>;

fn contact_distance_with(
    a: &MultidimensionalVector,
    b: &MultidimensionalVector,
    pa: &Prediction,
    pb: &Prediction,
) -> Option<f64> {
    if a.contact_points.is_empty() || b.contact_points.is_empty() {
        return None;
    }
    let min = |it: &mut dyn Iterator<Item = f64>| it.fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.min(d))));
    let shared = min(&mut a
        .contact_points
        .iter()
        .filter_map(|p| b.point(p.kind).map(|q| p.physical.distance(&q))));
    if shared.is_some() {
        return shared;
    }
    let cross = |pred: &Prediction, obs: &MultidimensionalVector| -> Vec<f64> {
        pred.as_ref()
            .map(|(_, pts)| obs.contact_points.iter().filter_map(|o| pts.get(&o.kind).map(|p| p.distance(&o.physical))).collect())
            .unwrap_or_default()
    };
    let mut predicted = cross(pa, b);
    predicted.extend(cross(pb, a));
    if let Some(d) = min(&mut predicted.into_iter()) {
        return Some(d);
    }
    min(&mut a.contact_points.iter().flat_map(|p| b.contact_points.iter().map(move |q| p.physical.distance(&q.physical))))
}

fn anchor(v: &MultidimensionalVector, pred: &Prediction) -> Option<GroundPoint> {
    pred.as_ref().map(|(c, _)| *c).or_else(|| v.contact_points.centroid())
}

/// Groups vectors whose contact distance is under the gate, closest pairs
/// first, refusing merges that would make a group wider than the diameter cap.
/// Returns groups of indices, each sorted, ordered by their first index.
pub fn cluster(vectors: &[MultidimensionalVector], config: &FusionConfig) -> Vec<Vec<usize>> {
    let preds: Vec<Prediction> = vectors.iter().map(predicted_points).collect();
    let anchors: Vec<Option<GroundPoint>> = vectors.iter().zip(&preds).map(|(v, p)| anchor(v, p)).collect();
    let mut edges = Vec::new();
    for i in 0..vectors.len() {
        for j in i + 1..vectors.len() {
            if let Some(d) = contact_distance_with(&vectors[i], &vectors[j], &preds[i], &preds[j]) {
                if d < config.proximity_gate {
                    edges.push((d, i, j));
                }
            }
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut group: Vec<usize> = (0..vectors.len()).collect();
    let mut members: Vec<Vec<usize>> = (0..vectors.len()).map(|i| vec![i]).collect();
    for (_, i, j) in edges {
        let (gi, gj) = (group[i], group[j]);
        if gi == gj {
            continue;
        }
        let too_wide = members[gi].iter().any(|&m| {
            members[gj].iter().any(|&n| match (anchors[m], anchors[n]) {
                (Some(p), Some(q)) => p.distance(&q) > config.max_cluster_diameter,
                _ => false,
            })
        });
        if too_wide {
            continue;
        }
        let (keep, gone) = (gi.min(gj), gi.max(gj));
        let moved = std::mem::take(&mut members[gone]);
        for &m in &moved {
            group[m] = keep;
        }
        members[keep].extend(moved);
    }
    let mut out: Vec<Vec<usize>> = members.into_iter().filter(|m| !m.is_empty()).collect();
    for m in &mut out {
        m.sort_unstable();
    }
    out.sort_by_key(|m| m[0]);
    out
}

/// Clusters one camera's vectors and gives each cluster an id, reusing the id
/// of the nearest previous-frame target within the gate when there is one.
pub fn assign_channel_ids(
    vectors: &[MultidimensionalVector],
    prior: &[MultidimensionalVector],
    config: &FusionConfig,
    ids: &mut IdAllocator,
) -> Vec<MultidimensionalVector> {
    let mut out = vectors.to_vec();
    for v in &mut out {
        v.obj_id = None;
    }
    let clusters = cluster(&out, config);
    let prior_preds: Vec<Prediction> = prior.iter().map(predicted_points).collect();
    let preds: Vec<Prediction> = out.iter().map(predicted_points).collect();

    let mut candidates = Vec::new();
    for (ci, members) in clusters.iter().enumerate() {
        for (pi, p) in prior.iter().enumerate() {
            let Some(pid) = p.obj_id else { continue };
            let best = members
                .iter()
                .filter_map(|&m| contact_distance_with(&out[m], p, &preds[m], &prior_preds[pi]))
                .fold(f64::INFINITY, f64::min);
            if best < config.proximity_gate {
                candidates.push((best, ci, pid));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut cluster_id: Vec<Option<u64>> = vec![None; clusters.len()];
    let mut taken = BTreeSet::new();
    for (_, ci, pid) in candidates {
        if cluster_id[ci].is_none() && !taken.contains(&pid) {
            cluster_id[ci] = Some(pid);
            taken.insert(pid);
        }
    }
    for (ci, members) in clusters.iter().enumerate() {
        let id = match cluster_id[ci] {
            Some(id) => {
                ids.reserve(id);
                id
            }
            None => ids.next_id(),
        };
        for &m in members {
            out[m].obj_id = Some(id);
        }
    }
    out
}

/// Channel-weighted combination of per-channel positions, channels in canonical order.
fn weighted_position(per_channel: &[(Channel, GroundPoint)], config: &FusionConfig) -> GroundPoint {
    match per_channel {
        [] => unreachable!("at least one observation"),
        [(_, p)] => *p,
        [(c1, p1), (c2, p2)] => {
            let (a, b) = config.pair(*c1, *c2);
            GroundPoint::new(a * p1.x + b * p2.x, a * p1.y + b * p2.y)
        }
        many => {
            let total = config.alpha + config.beta * (many.len() - 1) as f64;
            let mut acc = GroundPoint::ORIGIN;
            for (i, (_, p)) in many.iter().enumerate() {
                let w = if i == 0 { config.alpha } else { config.beta } / total;
                acc = acc + *p * w;
            }
            acc
        }
    }
}

fn mean(points: &[GroundPoint]) -> GroundPoint {
    let sum = points.iter().fold(GroundPoint::ORIGIN, |acc, p| acc + *p);
    sum * (1.0 / points.len() as f64)
}

fn best_by_score<'a>(members: &[&'a MultidimensionalVector]) -> &'a MultidimensionalVector {
    members.iter().copied().fold(members[0], |best, m| if m.score > best.score { m } else { best })
}

/// Fuses one cluster (members in canonical order) into one target.
fn merge_group(members: &[&MultidimensionalVector], config: &FusionConfig) -> MultidimensionalVector {
    let primary = best_by_score(members);
    let mut out = MultidimensionalVector::new(primary.channel, primary.bbox, primary.score);

    for kind in ContactPointKind::ALL {
        let obs: Vec<&ContactPoint> = members.iter().filter_map(|m| m.contact_points.get(kind)).collect();
        let Some(first) = obs.first() else { continue };
        let mut by_channel: BTreeMap<Channel, Vec<GroundPoint>> = BTreeMap::new();
        for p in &obs {
            by_channel.entry(p.source_channel).or_default().push(p.physical);
        }
        let per_channel: Vec<(Channel, GroundPoint)> = by_channel.into_iter().map(|(c, ps)| (c, mean(&ps))).collect();
        let physical = weighted_position(&per_channel, config);
        out.contact_points.replace(ContactPoint { physical, ..(*first).clone() });
    }

    // a real type label beats the fallback binding
    let typed: Vec<&MultidimensionalVector> = members.iter().copied().filter(|m| m.vehicle_type.is_some()).collect();
    let labelled: Vec<&MultidimensionalVector> =
        typed.iter().copied().filter(|m| !m.flags.contains(&VectorFlag::FallbackType)).collect();
    let source = if !labelled.is_empty() { Some(labelled) } else if !typed.is_empty() { Some(typed) } else { None };
    match source {
        Some(src) => {
            let names: BTreeSet<&String> = src.iter().filter_map(|m| m.vehicle_type.as_ref()).collect();
            let chosen = if names.len() == 1 { src[0] } else { best_by_score(&src) };
            out.vehicle_type.clone_from(&chosen.vehicle_type);
            out.dims = chosen.dims;
            out.overhangs = chosen.overhangs;
            if chosen.flags.contains(&VectorFlag::FallbackType) {
                out.flags.insert(VectorFlag::FallbackType);
            }
        }
        None => {
            if members.iter().any(|m| m.flags.contains(&VectorFlag::Untyped)) {
                out.flags.insert(VectorFlag::Untyped);
            }
        }
    }

    let scalar = |get: fn(&MultidimensionalVector) -> Option<f64>| -> Option<f64> {
        let with: Vec<&MultidimensionalVector> = members.iter().copied().filter(|m| get(m).is_some()).collect();
        if with.is_empty() { None } else { get(best_by_score(&with)) }
    };
    out.heading_regressed = scalar(|m| m.heading_regressed);
    out.heading_geometric = scalar(|m| m.heading_geometric);
    if out.contact_points.is_empty() && out.heading_regressed.is_none() {
        out.flags.insert(VectorFlag::NoGeometry);
    }
    out.refresh_azimuth();
    out
}

fn canonical_order(a: &MultidimensionalVector, b: &MultidimensionalVector) -> std::cmp::Ordering {
    a.channel.cmp(&b.channel).then(bbox_order(&a.bbox, &b.bbox)).then(a.obj_id.cmp(&b.obj_id))
}

/// Fuses every camera's identified vectors into one list of targets.
///
/// Each target keeps the smallest id among its members; a target whose
/// smallest id is already taken gets a fresh one. Output is sorted by id.
pub fn merge_bev_targets(
    vectors: &[MultidimensionalVector],
    config: &FusionConfig,
    ids: &mut IdAllocator,
) -> Vec<MultidimensionalVector> {
    let mut sorted = vectors.to_vec();
    sorted.sort_by(canonical_order);
    let mut used = BTreeSet::new();
    let mut out = Vec::new();
    for members in cluster(&sorted, config) {
        let group: Vec<&MultidimensionalVector> = members.iter().map(|&i| &sorted[i]).collect();
        let mut merged = merge_group(&group, config);
        let id = match group.iter().filter_map(|m| m.obj_id).min() {
            Some(id) if !used.contains(&id) => {
                ids.reserve(id);
                id
            }
            _ => ids.next_id(),
        };
        used.insert(id);
        merged.obj_id = Some(id);
        out.push(merged);
    }
    out.sort_by_key(|v| v.obj_id);
    out
}
