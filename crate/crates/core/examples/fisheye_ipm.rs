//! Projects ground points through each shipped fisheye camera and maps the
//! pixels back to the ground.

use bevmap::camera::{CameraRig, GroundPoint};

fn main() {
    let rig = CameraRig::default_rig();
    let probes = [
        GroundPoint::new(6.0, 0.5),
        GroundPoint::new(-4.0, -1.0),
        GroundPoint::new(1.5, 3.0),
        GroundPoint::new(2.5, -2.5),
    ];
    for cam in rig.cameras() {
        println!("{} camera, height {:.2} m:", cam.channel(), cam.height());
        for p in &probes {
            match cam.project_ground_to_pixel(p) {
                Ok(px) => {
                    let back = cam.pixel_to_ground(&px).expect("a projected pixel maps back");
                    println!(
                        "  ({:5.2}, {:5.2}) -> pixel ({:7.2}, {:7.2}) -> ({:5.2}, {:5.2})  error {:.1e} m",
                        p.x,
                        p.y,
                        px.u,
                        px.v,
                        back.x,
                        back.y,
                        back.distance(p)
                    );
                }
                Err(e) => println!("  ({:5.2}, {:5.2}) not imaged: {e}", p.x, p.y),
            }
        }
    }
}
