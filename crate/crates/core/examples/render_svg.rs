//! Runs one synthetic frame and draws it as SVG.
//!
//! `cargo run --example render_svg -- [out.svg]`

use std::path::PathBuf;

use bevmap::camera::CameraRig;
use bevmap::io::formats::BevFrame;
use bevmap::io::svg::{render_svg, render_text, SvgStyle};
use bevmap::synth::{random_scene, render_detections, NoiseSpec, SceneLimits};
use bevmap::vehicle::TypeCatalog;
use bevmap::{Pipeline, PipelineState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("bevmap_frame.svg"));
    let catalog = TypeCatalog::default();
    let scene = random_scene(&mut ChaCha8Rng::seed_from_u64(9), 9, &catalog, &SceneLimits::default());
    let frame = render_detections(0, &scene, &CameraRig::default_rig(), &catalog, &NoiseSpec::default())?;
    let result = Pipeline::with_defaults().process_frame(0, &frame.records, &mut PipelineState::default())?;

    let bev = BevFrame::from_result(&result);
    print!("{}", render_text(&bev));
    std::fs::write(&out, render_svg(&bev, &SvgStyle::default()))?;
    println!("wrote {}", out.display());
    Ok(())
}
