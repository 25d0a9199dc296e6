//! Angle helpers. Every heading and azimuth in the crate lives in (-π, π].

use std::f64::consts::PI;

/// Wraps an angle into (-π, π].
pub fn wrap(angle: f64) -> f64 {
    let mut a = angle % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Smallest signed difference `a - b`, wrapped.
pub fn diff(a: f64, b: f64) -> f64 {
    wrap(a - b)
}

pub fn in_range(angle: f64) -> bool {
    angle.is_finite() && angle > -PI && angle <= PI
}
