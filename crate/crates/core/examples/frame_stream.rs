//! A short moving scene written as a detection stream, run frame by frame
//! with persistent state, and written back out as a BEV map.
//!
//! `cargo run --example frame_stream -- [output_dir]`

use std::path::PathBuf;

use bevmap::camera::CameraRig;
use bevmap::io::formats::{read_detection_stream, write_bev_map, write_detection_stream, BevFrame, Scene, SceneVehicle};
use bevmap::synth::{render_detections, NoiseSpec};
use bevmap::vehicle::TypeCatalog;
use bevmap::{Pipeline, PipelineState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out_dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let catalog = TypeCatalog::default();
    let rig = CameraRig::default_rig();
    let scene = Scene {
        version: 1,
        frames: 5,
        vehicles: vec![
            SceneVehicle { id: 1, x: -6.5, y: 3.4, heading_deg: 0.0, type_name: "car".into(), velocity: [0.25, 0.0] },
            SceneVehicle { id: 2, x: 3.0, y: -3.6, heading_deg: 180.0, type_name: "van".into(), velocity: [-0.2, 0.0] },
            SceneVehicle { id: 3, x: 8.5, y: 0.3, heading_deg: 0.0, type_name: "suv".into(), velocity: [0.0, 0.0] },
        ],
    };

    let noise = NoiseSpec { pixel_sigma: 0.5, quantize: true, seed: 3, ..Default::default() };
    let mut stream = Vec::new();
    for frame in 0..scene.frames {
        let rendered = render_detections(frame, &scene.at_frame(frame), &rig, &catalog, &noise)?;
        stream.push((frame, rendered.records));
    }
    let stream_text = write_detection_stream(&stream);
    let stream_path = out_dir.join("bevmap_stream.jsonl");
    std::fs::write(&stream_path, &stream_text)?;

    let pipeline = Pipeline::with_defaults();
    let mut state = PipelineState::default();
    let mut map = Vec::new();
    for (frame, records) in read_detection_stream(&stream_text)? {
        let result = pipeline.process_frame(frame, &records, &mut state)?;
        let ids: Vec<String> = result
            .bev_boxes
            .iter()
            .map(|b| format!("{}@({:.2},{:.2})", b.obj_id, b.center.x, b.center.y))
            .collect();
        println!("frame {frame}: {}", ids.join("  "));
        map.push(BevFrame::from_result(&result));
    }
    let map_path = out_dir.join("bevmap_bev.jsonl");
    std::fs::write(&map_path, write_bev_map(&map))?;
    println!("wrote {} and {}", stream_path.display(), map_path.display());
    Ok(())
}
