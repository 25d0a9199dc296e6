//! Two cameras see the same vehicle with slightly different contact points;
//! the ReID stages give one id and a weighted position.

use bevmap::camera::{Channel, GroundPoint, PixelPoint};
use bevmap::reid::{assign_channel_ids, merge_bev_targets, FusionConfig, IdAllocator};
use bevmap::vehicle::{BBox, ContactPoint, ContactPointKind, MultidimensionalVector, TypeCatalog};
use bevmap::generate_bev_vector;

fn observe(channel: Channel, points: &[(ContactPointKind, GroundPoint)]) -> MultidimensionalVector {
    let spec = TypeCatalog::default().lookup_type_attrs("car").unwrap().clone();
    let mut v = MultidimensionalVector::new(channel, BBox::new(300.0, 400.0, 180.0, 90.0), 0.8);
    v.bind_type(&spec);
    v.heading_regressed = Some(0.0);
    for &(kind, physical) in points {
        let cp = ContactPoint { kind, pixel: PixelPoint::new(0.0, 0.0), physical, source_channel: channel };
        v.contact_points.insert(cp).unwrap();
    }
    v.refresh_azimuth();
    v
}

fn main() {
    use ContactPointKind::*;
    // a car centered near (-3, 3): the left camera sees its right-hand wheels,
    // the rear camera its rear wheel and bumper
    let left = observe(Channel::Left, &[(RearWheel, GroundPoint::new(-4.35, 2.10)), (FrontWheel, GroundPoint::new(-1.65, 2.10))]);
    let rear = observe(Channel::Rear, &[(RearWheel, GroundPoint::new(-4.25, 2.12)), (RearBumper, GroundPoint::new(-5.30, 3.00))]);

    let config = FusionConfig::default();
    let mut ids = IdAllocator::new();
    let mut tagged = assign_channel_ids(&[left], &[], &config, &mut ids);
    tagged.extend(assign_channel_ids(&[rear], &[], &config, &mut ids));
    for v in &tagged {
        println!("{:<5} id {:?}: {} contact points", v.channel.as_str(), v.obj_id, v.contact_points.len());
    }

    let merged = merge_bev_targets(&tagged, &config, &mut ids);
    println!("{} target(s) after merging", merged.len());
    for v in &merged {
        let rw = v.point(RearWheel).unwrap();
        println!("id {:?}: fused rear wheel ({:.3}, {:.3}) with alpha = beta = {}", v.obj_id, rw.x, rw.y, config.alpha);
        match generate_bev_vector(v) {
            Ok(b) => println!("  box center ({:.3}, {:.3}), heading {:.2} deg", b.center.x, b.center.y, b.heading.to_degrees()),
            Err(e) => println!("  no box: {e}"),
        }
    }
}
