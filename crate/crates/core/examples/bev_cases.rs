//! Recovers one vehicle's pose with each of the three contact-point cases.

use bevmap::bev::{corners_from_pose, pose_case1, pose_case2, pose_case3, visible_side};
use bevmap::camera::{Channel, GroundPoint, PixelPoint};
use bevmap::synth::{true_contact_points, GroundTruthVehicle};
use bevmap::vehicle::{ContactPoint, ContactPointKind, TypeCatalog};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let catalog = TypeCatalog::default();
    let spec = catalog.lookup_type_attrs("suv")?;
    let truth = GroundTruthVehicle {
        id: 1,
        center: GroundPoint::new(-3.0, 3.8),
        heading: 20f64.to_radians(),
        type_name: spec.type_name.clone(),
    };
    let pts = true_contact_points(&truth, spec);

    // the side that faces the ego origin
    let near = pts.rear_wheel_right;
    let side = visible_side(truth.heading, near.azimuth())?;
    println!("truth: center ({:.3}, {:.3}), heading {:.2} deg, visible side {side:?}", truth.center.x, truth.center.y, 20.0);

    let fw = pts.get(ContactPointKind::FrontWheel, side);
    let rw = pts.get(ContactPointKind::RearWheel, side);
    let rb = pts.rear_bumper;
    let bumper = ContactPoint {
        kind: ContactPointKind::RearBumper,
        pixel: PixelPoint::new(0.0, 0.0),
        physical: rb,
        source_channel: Channel::Rear,
    };
    let poses = [
        ("two wheels", pose_case1(fw, rw, spec, side)?),
        ("wheel + bumper", pose_case2(rw, rb, spec, side)?),
        ("bumper + heading", pose_case3(&bumper, Some(truth.heading), spec)?),
    ];
    for (name, pose) in poses {
        println!(
            "{name:>16}: center ({:.3}, {:.3}), heading {:.2} deg, error {:.1e} m",
            pose.center.x,
            pose.center.y,
            pose.heading.to_degrees(),
            pose.center.distance(&truth.center)
        );
    }
    let b = corners_from_pose(&poses[0].1, spec, truth.id);
    for (label, c) in [("A", b.a), ("B", b.b), ("C", b.c), ("D", b.d)] {
        println!("  corner {label}: ({:.3}, {:.3})", c.x, c.y);
    }
    Ok(())
}
