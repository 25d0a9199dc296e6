//! Per-stage timings for ten-vehicle frames.
//!
//! `cargo run --release --example latency -- [frames]`

use bevmap::camera::CameraRig;
use bevmap::synth::{random_scene, render_detections, NoiseSpec, SceneLimits};
use bevmap::vehicle::TypeCatalog;
use bevmap::{Pipeline, PipelineState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let frames: usize = std::env::args().nth(1).map_or(Ok(200), |s| s.parse())?;
    let catalog = TypeCatalog::default();
    let rig = CameraRig::default_rig();
    let pipeline = Pipeline::with_defaults();

    let mut totals = Vec::with_capacity(frames);
    let mut stages = [0u64; 4];
    let mut seed = 0;
    while totals.len() < frames {
        seed += 1;
        let scene = random_scene(&mut ChaCha8Rng::seed_from_u64(seed), 10, &catalog, &SceneLimits::default());
        if scene.len() < 10 {
            continue;
        }
        let noise = NoiseSpec { pixel_sigma: 1.0, seed, ..Default::default() };
        let records = render_detections(0, &scene, &rig, &catalog, &noise)?.records;
        let t = pipeline.process_frame(0, &records, &mut PipelineState::default())?.stage_timings;
        stages[0] += t.adapters_us;
        stages[1] += t.channel_ids_us;
        stages[2] += t.merge_us;
        stages[3] += t.bev_us;
        totals.push(t.total_us);
    }
    totals.sort_unstable();
    let n = totals.len() as f64;
    println!("{frames} frames of 10 vehicles over 4 cameras");
    for (name, us) in ["adapters", "channel ids", "merge", "bev"].iter().zip(stages) {
        println!("  {name:<12} mean {:8.1} us", us as f64 / n);
    }
    println!(
        "  total        median {} us, p99 {} us, max {} us (budget 45000 us)",
        totals[totals.len() / 2],
        totals[(totals.len() * 99 / 100).min(totals.len() - 1)],
        totals[totals.len() - 1]
    );
    Ok(())
}
