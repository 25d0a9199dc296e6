//! Helpers shared by the integration tests. The contact-point oracle here is
//! written from plain trigonometry and does not call into the library's
//! geometry, so it can check it.

#![allow(dead_code)]

use std::path::PathBuf;

use bevmap::camera::{Channel, GroundPoint, PixelPoint};
use bevmap::vehicle::{BBox, ContactPoint, ContactPointKind, MultidimensionalVector, VehicleTypeSpec};
use bevmap::VisibleSide;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("config").join(name)
}

/// Ground contact points of a vehicle at `(cx, cy)` heading `phi`, for one side.
pub fn oracle_point(
    kind: ContactPointKind,
    side: VisibleSide,
    (cx, cy): (f64, f64),
    phi: f64,
    spec: &VehicleTypeSpec,
) -> GroundPoint {
    let (s, c) = phi.sin_cos();
    // vehicle frame: u along the heading, v to its left
    let (u, v) = match kind {
        ContactPointKind::FrontWheel => (spec.l / 2.0 - spec.fo, spec.w / 2.0),
        ContactPointKind::RearWheel => (spec.ro - spec.l / 2.0, spec.w / 2.0),
        ContactPointKind::FrontBumper => (spec.l / 2.0, 0.0),
        ContactPointKind::RearBumper => (-spec.l / 2.0, 0.0),
    };
    let v = if side == VisibleSide::Left { v } else { -v };
    GroundPoint::new(cx + u * c - v * s, cy + u * s + v * c)
}

/// The side of the target that faces the ego origin, if the origin is clear
/// of the target's long edges by `margin`.
pub fn side_facing_origin((cx, cy): (f64, f64), phi: f64, spec: &VehicleTypeSpec, margin: f64) -> Option<VisibleSide> {
    // lateral coordinate of O in the vehicle frame
    let lat = -cx * (-phi.sin()) - cy * phi.cos();
    if lat > spec.w / 2.0 + margin {
        Some(VisibleSide::Left)
    } else if lat < -(spec.w / 2.0 + margin) {
        Some(VisibleSide::Right)
    } else {
        None
    }
}

pub fn vector_with(
    spec: &VehicleTypeSpec,
    points: &[(ContactPointKind, GroundPoint)],
    heading: Option<f64>,
    channel: Channel,
) -> MultidimensionalVector {
    let mut v = MultidimensionalVector::new(channel, BBox::new(100.0, 100.0, 200.0, 120.0), 0.9);
    v.obj_id = Some(1);
    v.bind_type(spec);
    v.heading_regressed = heading;
    for &(kind, physical) in points {
        v.contact_points
            .insert(ContactPoint { kind, pixel: PixelPoint::new(0.0, 0.0), physical, source_channel: channel })
            .unwrap();
    }
    v.refresh_azimuth();
    v
}

pub fn wrap(a: f64) -> f64 {
    let r = a.rem_euclid(std::f64::consts::TAU);
    if r > std::f64::consts::PI {
        r - std::f64::consts::TAU
    } else {
        r
    }
}

pub fn angle_gap(a: f64, b: f64) -> f64 {
    wrap(a - b).abs()
}

pub mod golden {
    use std::fs;
    use std::path::Path;

    use bevmap::io::{cmd_eval, cmd_render, cmd_run, cmd_synth, Mode, RenderFormat, RunManifest};
    use bevmap::synth::{EvalThresholds, NoiseSpec};

    use super::fixture;

    /// Noise used when the frozen stream was generated from the frozen scene.
    pub fn fixture_noise() -> NoiseSpec {
        NoiseSpec { pixel_sigma: 0.5, quantize: true, seed: 7, ..Default::default() }
    }

    fn manifest(mode: Mode, inputs: &[&Path], output: Option<&Path>) -> RunManifest {
        RunManifest {
            inputs: inputs.iter().map(|p| p.to_path_buf()).collect(),
            output: output.map(Path::to_path_buf),
            ..RunManifest::new(mode)
        }
    }

    fn same(label: &str, got: &str, frozen: &Path) -> Result<(), String> {
        let want = fs::read_to_string(frozen).map_err(|e| format!("{}: {e}", frozen.display()))?;
        if got == want {
            Ok(())
        } else {
            Err(format!("{label} differs from {}", frozen.display()))
        }
    }

    /// The frozen detection stream, run twice, gives the frozen BEV map both times.
    pub fn run_matches() -> Result<(), String> {
        let m = manifest(Mode::Run, &[&fixture("detections.jsonl")], None);
        let first = cmd_run(&m).map_err(|e| e.to_string())?;
        let second = cmd_run(&m).map_err(|e| e.to_string())?;
        if first != second {
            return Err("two runs differ".into());
        }
        same("run output", &first, &fixture("bev.jsonl"))
    }

    /// The frozen BEV map, rendered twice, gives the frozen SVG files both times.
    pub fn render_matches() -> Result<(), String> {
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let m = manifest(Mode::Render, &[&fixture("bev.jsonl")], Some(dir.path()));
            cmd_render(&m, RenderFormat::Svg).map_err(|e| e.to_string())?;
            let mut names: Vec<_> = fs::read_dir(fixture("svg")).map_err(|e| e.to_string())?.flatten().map(|e| e.file_name()).collect();
            names.sort();
            let produced = fs::read_dir(dir.path()).map_err(|e| e.to_string())?.count();
            if produced != names.len() {
                return Err(format!("{produced} svg files, {} frozen", names.len()));
            }
            let mut texts = Vec::new();
            for n in names {
                let got = fs::read_to_string(dir.path().join(&n)).map_err(|e| e.to_string())?;
                same("svg", &got, &fixture("svg").join(&n))?;
                texts.push(got);
            }
            outputs.push(texts);
        }
        if outputs[0] != outputs[1] {
            return Err("two renders differ".into());
        }
        Ok(())
    }

    /// Re-synthesizing the frozen scene reproduces the frozen stream and sidecar.
    pub fn synth_matches() -> Result<(), String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let out = dir.path().join("detections.jsonl");
        let m = manifest(Mode::Synth, &[&fixture("scene.toml")], Some(&out));
        cmd_synth(&m, &fixture_noise()).map_err(|e| e.to_string())?;
        same("stream", &fs::read_to_string(&out).map_err(|e| e.to_string())?, &fixture("detections.jsonl"))?;
        let sidecar = dir.path().join("detections.truth.jsonl");
        same("sidecar", &fs::read_to_string(sidecar).map_err(|e| e.to_string())?, &fixture("detections.truth.jsonl"))
    }

    /// Scoring the frozen map against the frozen sidecar reproduces the frozen report.
    pub fn eval_matches() -> Result<(), String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let out = dir.path().join("report.jsonl");
        let m = manifest(Mode::Eval, &[&fixture("bev.jsonl"), &fixture("detections.truth.jsonl")], Some(&out));
        cmd_eval(&m, &EvalThresholds::default()).map_err(|e| e.to_string())?;
        same("report", &fs::read_to_string(&out).map_err(|e| e.to_string())?, &fixture("report.jsonl"))
    }
}
