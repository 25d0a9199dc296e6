//! Surround-view fisheye perception to a bird's-eye-view vector map.
//!
//! Four fisheye cameras report 2D boxes for vehicles and their wheels and
//! bumpers. Each part's bottom-edge midpoint is a ground contact point, which
//! inverse perspective mapping places on the ego ground plane. Contact points,
//! vehicle type and regressed heading form a multidimensional vector per
//! vehicle; vectors are re-identified across cameras and frames, and each
//! fused target becomes an oriented box of its type's length and width.
//!
//! ```no_run
//! use bevmap::pipeline::{Pipeline, PipelineState};
//! use bevmap::io::formats::read_detection_stream;
//!
//! let pipeline = Pipeline::with_defaults();
//! let mut state = PipelineState::default();
//! let text = std::fs::read_to_string("frames.jsonl").unwrap();
//! for (frame_id, records) in read_detection_stream(&text).unwrap() {
//!     let result = pipeline.process_frame(frame_id, &records, &mut state).unwrap();
//!     println!("frame {frame_id}: {} vehicles", result.bev_boxes.len());
//! }
//! ```
//!
//! The `examples/` directory has one runnable program per capability:
//! `fisheye_ipm`, `load_rig`, `bev_cases`, `reid_fusion`, `synthetic_scene`,
//! `positioning_budget`, `slope_robustness`, `frame_stream`, `render_svg` and
//! `latency`.

pub mod angle;
pub mod bev;
pub mod camera;
pub mod detection;
pub mod io;
pub mod pipeline;
pub mod reid;
pub mod synth;
pub mod vehicle;

pub use bev::{estimate_pose, generate_bev_vector, PoseCase, PoseEstimate, PoseError, VisibleSide};
pub use camera::{CameraRig, Channel, FisheyeCamera, GeometryError, GroundPoint, PixelPoint};
pub use detection::{assemble_channel_vectors, DetectionRecord};
pub use pipeline::{FrameResult, Pipeline, PipelineConfig, PipelineState};
pub use reid::{FusionConfig, IdAllocator};
pub use vehicle::{BevBox, ContactPointKind, MultidimensionalVector, TypeCatalog, VehicleTypeSpec};
