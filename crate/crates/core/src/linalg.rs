//! Small vector helpers shared by the momentum-space code.

use nalgebra::Vector3;
use num_complex::Complex64;

pub type Vec3 = Vector3<f64>;
pub type CVec3 = Vector3<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn complexify(v: &Vec3) -> CVec3 {
    v.map(|x| Complex64::new(x, 0.0))
}

pub fn scale(v: &Vec3, s: Complex64) -> CVec3 {
    v.map(|x| s * x)
}

/// Sesquilinear pointwise pairing `conj(a) . b`.
pub fn dot_conj(a: &CVec3, b: &CVec3) -> Complex64 {
    a[0].conj() * b[0] + a[1].conj() * b[1] + a[2].conj() * b[2]
}

/// Bilinear pairing of a real vector with a complex one.
pub fn dot_rc(a: &Vec3, b: &CVec3) -> Complex64 {
    b[0] * a[0] + b[1] * a[1] + b[2] * a[2]
}

pub fn cross_rc(a: &Vec3, b: &CVec3) -> CVec3 {
    CVec3::new(
        b[2] * a[1] - b[1] * a[2],
        b[0] * a[2] - b[2] * a[0],
        b[1] * a[0] - b[0] * a[1],
    )
}

pub fn cnorm(a: &CVec3) -> f64 {
    (a[0].norm_sqr() + a[1].norm_sqr() + a[2].norm_sqr()).sqrt()
}

/// `(e^{ix} - 1) / x`, accurate for small `x`.
pub fn exprel_i(x: f64) -> Complex64 {
    if x.abs() < 1e-4 {
        // i - x/2 - i x^2/6 + x^3/24
        let x2 = x * x;
        Complex64::new(-x / 2.0 + x * x2 / 24.0, 1.0 - x2 / 6.0)
    } else {
        let half = 0.5 * x;
        let s = half.sin();
        Complex64::new(-2.0 * s * s, x.sin()) / x
    }
}

/// `sin(x) / x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}
