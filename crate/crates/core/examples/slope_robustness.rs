//! How a tilted ground plane biases a flat-ground pipeline: one car at a time
//! beside the ego, swept along x, for several gradients.

use bevmap::camera::{CameraRig, GroundPoint};
use bevmap::synth::{evaluate, render_detections, EvalThresholds, GroundTruthVehicle, NoiseSpec};
use bevmap::vehicle::TypeCatalog;
use bevmap::{Pipeline, PipelineState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let catalog = TypeCatalog::default();
    let rig = CameraRig::default_rig();
    let pipeline = Pipeline::with_defaults();
    let thresholds = EvalThresholds::default();
    let xs: Vec<f64> = (0..11).map(|i| -2.5 + 0.5 * i as f64).collect();

    print!("{:>7}", "slope");
    for x in &xs {
        print!(" {x:>6.1}");
    }
    println!("   (|dx| m for a car at y = 3.45, x as labelled)");
    for slope in [0.0, 0.01, 0.03, 0.05] {
        let noise = NoiseSpec { slope_gradient: slope, ..Default::default() };
        print!("{:>6.0}%", slope * 100.0);
        for &x in &xs {
            let car = GroundTruthVehicle { id: 1, center: GroundPoint::new(x, 3.45), heading: 0.0, type_name: "car".into() };
            let frame = render_detections(0, std::slice::from_ref(&car), &rig, &catalog, &noise)?;
            let result = pipeline.process_frame(0, &frame.records, &mut PipelineState::default())?;
            match evaluate(&result.bev_boxes, &[car], &thresholds).targets.first() {
                Some(t) => print!(" {:>6.3}", t.dx.abs()),
                None => print!(" {:>6}", "-"),
            }
        }
        println!();
    }
    Ok(())
}
