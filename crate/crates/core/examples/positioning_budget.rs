//! Qualification rates over many noisy synthetic targets, split by axis and
//! by distance from the ego footprint.
//!
//! `cargo run --release --example positioning_budget -- [targets] [noise_px]`

use bevmap::camera::CameraRig;
use bevmap::synth::{evaluate, random_scene, render_detections, ErrorReport, EvalThresholds, NoiseSpec, SceneLimits};
use bevmap::vehicle::TypeCatalog;
use bevmap::{Pipeline, PipelineState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let wanted: usize = args.first().map_or(Ok(5000), |s| s.parse())?;
    let sigma: f64 = args.get(1).map_or(Ok(1.0), |s| s.parse())?;

    let catalog = TypeCatalog::default();
    let rig = CameraRig::default_rig();
    let pipeline = Pipeline::with_defaults();
    let thresholds = EvalThresholds::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut total = ErrorReport::default();
    let mut seen = 0;
    let mut scene_no = 0;
    while seen < wanted {
        let count = rng.random_range(1..=12);
        let scene = random_scene(&mut rng, count, &catalog, &SceneLimits::default());
        let noise = NoiseSpec { pixel_sigma: sigma, quantize: true, seed: scene_no, ..Default::default() };
        scene_no += 1;
        let frame = render_detections(0, &scene, &rig, &catalog, &noise)?;
        let truth: Vec<_> = scene.iter().zip(&frame.visibility).filter(|(_, v)| v.visible).map(|(t, _)| t.clone()).collect();
        let result = pipeline.process_frame(0, &frame.records, &mut PipelineState::default())?;
        seen += truth.len();
        total.absorb(evaluate(&result.bev_boxes, &truth, &thresholds));
    }

    println!("{seen} targets in {scene_no} scenes, sigma {sigma} px, quantized");
    println!("misses {}, false positives {}", total.misses.len(), total.false_positives.len());
    let rate = |q: usize, n: usize| 100.0 * q as f64 / n.max(1) as f64;
    println!("x within {:.2} m: {:.2}%", thresholds.gate_x, rate(total.x.qualified, total.x.count));
    let e = thresholds.interval_edges;
    for k in 0..3 {
        let s = &total.y[k];
        println!(
            "y within {:.2} m for {}-{} m: {:.2}% of {}",
            thresholds.gate_y[k],
            e[k],
            e[k + 1],
            rate(s.qualified, s.count),
            s.count
        );
    }
    Ok(())
}
