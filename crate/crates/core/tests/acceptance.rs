//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use bevmap::bev::{estimate_pose, pose_case1, pose_case2, pose_case2_front};
use bevmap::camera::{CameraRig, Channel, GroundPoint};
use bevmap::reid::{merge_bev_targets, FusionConfig, IdAllocator};
use bevmap::synth::{
    evaluate, random_scene, render_detections, EvalThresholds, GroundTruthVehicle, NoiseSpec, SceneLimits,
};
use bevmap::vehicle::{ContactPointKind, TypeCatalog, VehicleTypeSpec};
use bevmap::{Pipeline, PipelineState, VisibleSide};
use common::{angle_gap, golden, oracle_point, side_facing_origin, vector_with};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ContactPointKind::*;

struct Outcome {
    pass: Option<bool>,
    detail: String,
}

impl Outcome {
    fn check(pass: bool, detail: String) -> Self {
        Self { pass: Some(pass), detail }
    }
}

struct Bench {
    rig: CameraRig,
    catalog: TypeCatalog,
    pipeline: Pipeline,
}

impl Bench {
    fn new() -> Self {
        Self { rig: CameraRig::default_rig(), catalog: TypeCatalog::default(), pipeline: Pipeline::with_defaults() }
    }

    /// Renders and processes one frame; returns the visible truth and the boxes.
    fn run(&self, scene: &[GroundTruthVehicle], noise: &NoiseSpec) -> (Vec<GroundTruthVehicle>, Vec<bevmap::BevBox>) {
        let frame = render_detections(0, scene, &self.rig, &self.catalog, noise).expect("valid scene");
        let visible = scene
            .iter()
            .zip(&frame.visibility)
            .filter(|(_, v)| v.visible)
            .map(|(t, _)| t.clone())
            .collect();
        let result = self.pipeline.process_frame(0, &frame.records, &mut PipelineState::default()).expect("frame runs");
        (visible, result.bev_boxes)
    }
}

fn pct(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        100.0 * n as f64 / d as f64
    }
}

// 1. zero-noise closure
fn oracle_closure(b: &Bench) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let limits = SceneLimits::default();
    let (mut visible, mut boxes, mut bad_scenes) = (0, 0, 0);
    let (mut max_c, mut max_h) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let count = rng.random_range(1..=12);
        let scene = random_scene(&mut rng, count, &b.catalog, &limits);
        let (truth, est) = b.run(&scene, &NoiseSpec::default());
        let report = evaluate(&est, &truth, &EvalThresholds::default());
        visible += truth.len();
        boxes += est.len();
        if est.len() != truth.len() || !report.misses.is_empty() || !report.false_positives.is_empty() {
            bad_scenes += 1;
        }
        max_c = max_c.max(report.max_center_error);
        max_h = max_h.max(report.max_heading_error);
    }
    Outcome::check(
        bad_scenes == 0 && max_c < 1e-6 && max_h < 1e-6,
        format!(
            "1000 scenes, {visible} visible vehicles, {boxes} boxes, {bad_scenes} scenes with a count mismatch; \
             max center error {max_c:.2e} m, max heading error {max_h:.2e} rad"
        ),
    )
}

/// Qualification tallies for criteria 2 and 3. Missed targets count as failures.
struct Budget {
    x: (usize, usize),
    y: [(usize, usize); 3],
    targets: usize,
    misses: usize,
    elapsed: Duration,
}

fn positioning_budget(b: &Bench) -> Budget {
    let start = Instant::now();
    let thresholds = EvalThresholds::default();
    let limits = SceneLimits::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut out = Budget { x: (0, 0), y: [(0, 0); 3], targets: 0, misses: 0, elapsed: Duration::ZERO };
    let mut scene_no = 0u64;
    while out.targets < 5000 {
        let count = rng.random_range(1..=12);
        let scene = random_scene(&mut rng, count, &b.catalog, &limits);
        let noise = NoiseSpec { pixel_sigma: 1.0, quantize: true, seed: scene_no, ..Default::default() };
        scene_no += 1;
        let (truth, est) = b.run(&scene, &noise);
        let report = evaluate(&est, &truth, &thresholds);
        out.targets += truth.len();
        out.misses += report.misses.len();
        out.x.0 += report.x.qualified;
        out.x.1 += report.x.count + report.misses.len();
        for k in 0..3 {
            out.y[k].0 += report.y[k].qualified;
            out.y[k].1 += report.y[k].count;
        }
        for id in &report.misses {
            let t = truth.iter().find(|t| t.id == *id).expect("missed id is in truth");
            if let Some(k) = thresholds.interval(&t.center) {
                out.y[k].1 += 1;
            }
        }
    }
    out.elapsed = start.elapsed();
    out
}

// 2. x budget
fn x_budget(r: &Budget) -> Outcome {
    let rate = pct(r.x.0, r.x.1);
    Outcome::check(
        rate >= 99.0 && r.elapsed < Duration::from_secs(60),
        format!(
            "{} targets (sigma 1 px, quantized), {} missed; {}/{} = {rate:.2}% within 0.25 m in x (need >= 99%); {:.1} s",
            r.targets,
            r.misses,
            r.x.0,
            r.x.1,
            r.elapsed.as_secs_f64()
        ),
    )
}

// 3. y budget by distance interval
fn y_budget(r: &Budget) -> Outcome {
    let gates = ["0-2 m @ 0.20", "2-3 m @ 0.40", "3-5 m @ 0.50"];
    let rates: Vec<f64> = r.y.iter().map(|(q, n)| pct(*q, *n)).collect();
    let detail = gates
        .iter()
        .zip(&r.y)
        .zip(&rates)
        .map(|((g, (q, n)), p)| format!("{g}: {q}/{n} = {p:.2}%"))
        .collect::<Vec<_>>()
        .join("; ");
    Outcome::check(r.y.iter().all(|(_, n)| *n > 0) && rates.iter().all(|p| *p >= 99.0), format!("{detail} (need >= 99% each)"))
}

/// One target beside the ego at longitudinal `x` and lateral footprint gap `gap`.
fn beside(catalog: &TypeCatalog, rng: &mut ChaCha8Rng, id: u64, x: f64, gap: f64) -> GroundTruthVehicle {
    let ego = EvalThresholds::default().ego;
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let heading = if rng.random_bool(0.5) { 0.0 } else { PI };
    let spec = &catalog.types()[rng.random_range(0..catalog.len())];
    let y = if sign > 0.0 { ego.y_max + gap } else { ego.y_min - gap };
    GroundTruthVehicle { id, center: GroundPoint::new(x, y), heading, type_name: spec.type_name.clone() }
}

/// Slope errors `(dx, dy)` for twelve visible targets drawn by `place`.
fn slope_errors(b: &Bench, seed: u64, mut place: impl FnMut(&mut ChaCha8Rng, u64) -> GroundTruthVehicle) -> Vec<(GroundTruthVehicle, f64, f64)> {
    let noise = NoiseSpec { slope_gradient: 0.05, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut id = 1;
    while out.len() < 12 {
        let v = place(&mut rng, id);
        id += 1;
        let (truth, est) = b.run(std::slice::from_ref(&v), &noise);
        if truth.is_empty() {
            continue;
        }
        let report = evaluate(&est, &truth, &EvalThresholds::default());
        match report.targets.first() {
            Some(t) => out.push((v, t.dx, t.dy)),
            None => out.push((v, f64::INFINITY, f64::INFINITY)),
        }
    }
    out
}

// 4. slope robustness
fn slope_robustness(b: &Bench) -> Outcome {
    let cat = b.catalog.clone();
    let xs = slope_errors(b, 0, |rng, id| {
        let x = rng.random_range(-2.5..=2.5);
        let gap = rng.random_range(1.5..=3.5);
        beside(&cat, rng, id, x, gap)
    });
    let ys = slope_errors(b, 1, |rng, id| {
        let gap = rng.random_range(1.5..=3.5);
        beside(&cat, rng, id, 0.0, gap)
    });
    let worst_x = xs.iter().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap();
    let worst_y = ys.iter().max_by(|a, b| a.2.abs().total_cmp(&b.2.abs())).unwrap();
    let x_ok = xs.iter().all(|(_, dx, _)| dx.abs() < 0.30);
    let y_ok = ys.iter().all(|(_, _, dy)| dy.abs() < 0.20);
    let over: Vec<String> = xs
        .iter()
        .filter(|(_, dx, _)| dx.abs() >= 0.30)
        .map(|(v, dx, _)| format!("{} at ({:.2}, {:.2}) dx {:.3}", v.type_name, v.center.x, v.center.y, dx))
        .collect();
    let mut detail = format!(
        "5% slope, 12 targets along x in [-2.5, 2.5]: max |dx| {:.3} m (need < 0.30); \
         12 targets at 1.5-3.5 m lateral: max |dy| {:.3} m (need < 0.20)",
        worst_x.1.abs(),
        worst_y.2.abs()
    );
    if !over.is_empty() {
        detail.push_str(&format!("; over the x gate: {}", over.join(", ")));
    }
    Outcome::check(x_ok && y_ok, detail)
}

// 5. ReID merging and fusion midpoint
fn reid(b: &Bench) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let limits = SceneLimits::default();
    let (mut scenes, mut merged, mut draws) = (0, 0, 0);
    while scenes < 500 {
        draws += 1;
        let scene = random_scene(&mut rng, 1, &b.catalog, &limits);
        let frame = render_detections(0, &scene, &b.rig, &b.catalog, &NoiseSpec::default()).unwrap();
        let vis = &frame.visibility[0];
        if vis.channels.len() < 2 || !vis.visible {
            continue;
        }
        scenes += 1;
        let result = b.pipeline.process_frame(0, &frame.records, &mut PipelineState::default()).unwrap();
        let report = evaluate(&result.bev_boxes, &scene, &EvalThresholds::default());
        if result.bev_boxes.len() == 1 && report.targets.len() == 1 && report.max_center_error < 1e-6 {
            merged += 1;
        }
    }

    let config = FusionConfig { alpha: 0.5, beta: 0.5, ..Default::default() };
    let spec = b.catalog.lookup_type_attrs("car").unwrap().clone();
    let mut worst_mid = 0.0f64;
    for _ in 0..500 {
        let p = GroundPoint::new(rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0));
        let q = p + GroundPoint::unit(rng.random_range(-PI..PI)) * rng.random_range(0.0..0.45);
        let h = Some(rng.random_range(-PI..PI));
        let mut a = vector_with(&spec, &[(RearBumper, p)], h, Channel::Rear);
        let mut c = vector_with(&spec, &[(RearBumper, q)], h, Channel::Left);
        a.obj_id = Some(1);
        c.obj_id = Some(2);
        let out = merge_bev_targets(&[a, c], &config, &mut IdAllocator::new());
        let got = if out.len() == 1 { out[0].point(RearBumper).unwrap() } else { GroundPoint::new(f64::NAN, f64::NAN) };
        let err = got.distance(&GroundPoint::new(0.5 * (p.x + q.x), 0.5 * (p.y + q.y)));
        worst_mid = if err.is_nan() { f64::INFINITY } else { worst_mid.max(err) };
    }
    Outcome::check(
        merged == scenes && worst_mid <= 1e-12,
        format!(
            "{merged}/{scenes} two-camera scenes gave exactly one box ({draws} draws); \
             alpha = beta = 0.5 midpoint error over 500 pairs <= {worst_mid:.1e} m"
        ),
    )
}

fn random_instance(rng: &mut ChaCha8Rng, catalog: &TypeCatalog) -> (VehicleTypeSpec, (f64, f64), f64, VisibleSide) {
    loop {
        let spec = catalog.types()[rng.random_range(0..catalog.len())].clone();
        let c = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let phi = rng.random_range(-PI..PI);
        if let Some(side) = side_facing_origin(c, phi, &spec, 0.05) {
            return (spec, c, phi, side);
        }
    }
}

// 6. case agreement and rigid-motion equivariance
fn invariants(b: &Bench) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut agree_fail, mut agree_worst) = (0, 0.0f64);
    for _ in 0..10_000 {
        let (spec, c, phi, side) = random_instance(&mut rng, &b.catalog);
        let pt = |k| oracle_point(k, side, c, phi, &spec);
        let one = pose_case1(pt(FrontWheel), pt(RearWheel), &spec, side).unwrap();
        let two = pose_case2(pt(RearWheel), pt(RearBumper), &spec, side).unwrap();
        let front = pose_case2_front(pt(FrontWheel), pt(FrontBumper), &spec, side).unwrap();
        let err = one
            .center
            .distance(&two.center)
            .max(one.center.distance(&front.center))
            .max(angle_gap(one.heading, two.heading))
            .max(angle_gap(one.heading, front.heading));
        agree_worst = agree_worst.max(err);
        agree_fail += (err >= 1e-9) as usize;
    }

    let (mut eq_fail, mut eq_worst) = (0, 0.0f64);
    for i in 0..10_000 {
        let (spec, c, phi, side) = random_instance(&mut rng, &b.catalog);
        let kinds: &[ContactPointKind] = match i % 3 {
            0 => &[RearWheel, FrontWheel],
            1 => &[RearWheel, RearBumper],
            _ => &[FrontBumper],
        };
        let pts: Vec<_> = kinds.iter().map(|&k| (k, oracle_point(k, side, c, phi, &spec))).collect();
        let rot = rng.random_range(-PI..PI);
        let shift = pts[0].1.rotated(rot) * rng.random_range(-0.5..2.0);
        let moved: Vec<_> = pts.iter().map(|&(k, p)| (k, p.rotated(rot) + shift)).collect();
        let before = estimate_pose(&vector_with(&spec, &pts, Some(phi), Channel::Left));
        let after = estimate_pose(&vector_with(&spec, &moved, Some(phi + rot), Channel::Left));
        let err = match (before, after) {
            (Ok(p), Ok(q)) if p.case_used == q.case_used => q
                .center
                .distance(&(p.center.rotated(rot) + shift))
                .max(angle_gap(q.heading, p.heading + rot)),
            _ => f64::INFINITY,
        };
        eq_worst = eq_worst.max(err);
        eq_fail += (err >= 1e-9) as usize;
    }
    Outcome::check(
        agree_fail == 0 && eq_fail == 0,
        format!(
            "case agreement: {agree_fail}/10000 over 1e-9 (worst {agree_worst:.1e}); \
             equivariance: {eq_fail}/10000 over 1e-9 (worst {eq_worst:.1e})"
        ),
    )
}

// 7. throughput tripwire
fn throughput(b: &Bench) -> Outcome {
    let limits = SceneLimits::default();
    let (scene, seed) = (0u64..)
        .map(|s| (random_scene(&mut ChaCha8Rng::seed_from_u64(s), 10, &b.catalog, &limits), s))
        .find(|(v, _)| v.len() == 10)
        .unwrap();
    let frame = render_detections(0, &scene, &b.rig, &b.catalog, &NoiseSpec { pixel_sigma: 1.0, ..Default::default() }).unwrap();
    let mut times: Vec<Duration> = (0..31)
        .map(|_| {
            let start = Instant::now();
            let r = b.pipeline.process_frame(0, &frame.records, &mut PipelineState::default()).unwrap();
            std::hint::black_box(r);
            start.elapsed()
        })
        .collect();
    times.sort();
    let median = times[times.len() / 2];
    let ms = |d: Duration| d.as_secs_f64() * 1e3;
    Outcome::check(
        median < Duration::from_millis(45),
        format!(
            "10 vehicles (scene seed {seed}), 4 cameras, 31 runs: median {:.3} ms, max {:.3} ms (need median < 45 ms)",
            ms(median),
            ms(*times.last().unwrap())
        ),
    )
}

// 9. golden files
fn golden_files() -> Outcome {
    let checks = [("run", golden::run_matches()), ("render", golden::render_matches())];
    let failed: Vec<String> = checks.iter().filter_map(|(n, r)| r.as_ref().err().map(|e| format!("{n}: {e}"))).collect();
    Outcome::check(
        failed.is_empty(),
        if failed.is_empty() {
            "run and render outputs byte-identical across two invocations and to the frozen fixtures".into()
        } else {
            failed.join("; ")
        },
    )
}

fn main() -> ExitCode {
    let bench = Bench::new();
    let budget = positioning_budget(&bench);
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("oracle closure", Box::new(|| oracle_closure(&bench))),
        ("x positioning budget", Box::new(|| x_budget(&budget))),
        ("y positioning budget", Box::new(|| y_budget(&budget))),
        ("slope robustness", Box::new(|| slope_robustness(&bench))),
        ("reid merging", Box::new(|| reid(&bench))),
        ("case agreement and equivariance", Box::new(|| invariants(&bench))),
        ("throughput tripwire", Box::new(|| throughput(&bench))),
        (
            "detector benchmark",
            Box::new(|| Outcome {
                pass: None,
                detail: "not reproduced: needs the external panorama dataset and trained detectors".into(),
            }),
        ),
        ("golden-file stability", Box::new(golden_files)),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        let tag = match outcome.pass {
            Some(true) => "PASS",
            Some(false) => {
                failures += 1;
                "FAIL"
            }
            None => "SKIP",
        };
        println!("[{tag}] criterion {} {name}: {}", i + 1, outcome.detail);
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criterion(s) failed");
        ExitCode::FAILURE
    }
}
