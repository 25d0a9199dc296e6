//! Samples a random scene, renders it into detection records, runs the
//! pipeline and scores the result.
//!
//! `cargo run --example synthetic_scene -- [seed] [vehicles] [noise_px]`

use bevmap::camera::CameraRig;
use bevmap::synth::{evaluate, random_scene, render_detections, EvalThresholds, NoiseSpec, SceneLimits};
use bevmap::vehicle::TypeCatalog;
use bevmap::{Pipeline, PipelineState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed: u64 = args.first().map_or(Ok(42), |s| s.parse())?;
    let count: usize = args.get(1).map_or(Ok(8), |s| s.parse())?;
    let sigma: f64 = args.get(2).map_or(Ok(1.0), |s| s.parse())?;

    let catalog = TypeCatalog::default();
    let rig = CameraRig::default_rig();
    let scene = random_scene(&mut ChaCha8Rng::seed_from_u64(seed), count, &catalog, &SceneLimits::default());
    let noise = NoiseSpec { pixel_sigma: sigma, quantize: true, seed, ..Default::default() };
    let frame = render_detections(0, &scene, &rig, &catalog, &noise)?;
    for r in &frame.records {
        println!("{:<5}: {} boxes", r.channel.as_str(), r.boxes.len());
    }

    let result = Pipeline::with_defaults().process_frame(0, &frame.records, &mut PipelineState::default())?;
    let visible: Vec<_> = scene.iter().zip(&frame.visibility).filter(|(_, v)| v.visible).map(|(t, _)| t.clone()).collect();
    let report = evaluate(&result.bev_boxes, &visible, &EvalThresholds::default());
    println!("{} placed, {} visible, {} boxes", scene.len(), visible.len(), result.bev_boxes.len());
    for t in &report.targets {
        println!(
            "  truth {:>2} -> id {:>2}: dx {:+.3} dy {:+.3} m, heading error {:.2} deg",
            t.truth_id,
            t.obj_id,
            t.dx,
            t.dy,
            t.heading_error.to_degrees()
        );
    }
    println!("misses {:?}, false positives {:?}", report.misses, report.false_positives);
    Ok(())
}
