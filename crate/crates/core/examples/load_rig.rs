//! Loads a calibration file and a vehicle catalog, then shows a rejected rig.
//!
//! `cargo run --example load_rig -- [rig.toml] [catalog.toml]`

use std::path::PathBuf;

use bevmap::camera::CameraRig;
use bevmap::vehicle::TypeCatalog;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("config");
    let mut args = std::env::args().skip(1);
    let rig_path = args.next().map(PathBuf::from).unwrap_or_else(|| root.join("default_rig.toml"));
    let cat_path = args.next().map(PathBuf::from).unwrap_or_else(|| root.join("vehicle_types.toml"));

    let rig = CameraRig::load(&rig_path)?;
    println!("{}", rig_path.display());
    for cam in rig.cameras() {
        let t = cam.translation();
        println!(
            "  {:<5} at ({:5.2}, {:5.2}, {:4.2}) m, focal {:?}, half fov {:.1} deg",
            cam.channel().as_str(),
            t.x,
            t.y,
            t.z,
            cam.focal(),
            cam.fov_half_angle().to_degrees()
        );
    }

    let catalog = TypeCatalog::load(&cat_path)?;
    println!("{}: {} types, fallback {}", cat_path.display(), catalog.len(), catalog.fallback().type_name);
    for t in catalog.types() {
        println!("  {:<8} l {:.2} w {:.2} fo {:.2} ro {:.2}", t.type_name, t.l, t.w, t.fo, t.ro);
    }

    let broken = std::fs::read_to_string(&rig_path)?.replacen("0.65]", "-0.65]", 1);
    if let Err(e) = CameraRig::from_toml_str(&broken) {
        println!("a camera below the ground is rejected: {e}");
    }
    Ok(())
}
