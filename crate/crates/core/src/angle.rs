//! Branch handling for angles.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

/// Reduce an angle to the principal branch `(-pi, pi]`.
pub fn wrap(angle: f64) -> f64 {
    let mut x = angle % TAU;
    if x > PI {
        x -= TAU;
    } else if x <= -PI {
        x += TAU;
    }
    x
}

/// `arg z` on `(-pi, pi]`; `atan2` returns `-pi` for a negative real with a `-0.0` imaginary part.
pub fn principal_arg(z: Complex64) -> f64 {
    let a = z.im.atan2(z.re);
    if a <= -PI {
        a + TAU
    } else {
        a
    }
}

/// Distance between two angles measured on the unit circle, `|e^{ia} - e^{ib}|`.
pub fn phasor_distance(a: f64, b: f64) -> f64 {
    (Complex64::from_polar(1.0, a) - Complex64::from_polar(1.0, b)).norm()
}
