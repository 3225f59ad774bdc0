//! Angle helpers shared by the kinematics modules.

use std::f64::consts::PI;

/// Normalize an angle to `(-PI, PI]`. Angles already in range pass
/// through bit-exact.
pub fn normalize(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a - 2.0 * PI
    } else {
        a
    }
}

/// Degrees to radians.
pub fn deg(d: f64) -> f64 {
    d.to_radians()
}
