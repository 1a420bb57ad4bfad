//! Planar vector type and the handful of float functions the core needs
//! without `std`.

use core::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

pub const PI: f64 = core::f64::consts::PI;
pub const FRAC_PI_2: f64 = core::f64::consts::FRAC_PI_2;

/// Standard gravity, m/s².
pub const GRAVITY: f64 = 9.81;

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}
#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}
#[inline]
pub fn atanh(x: f64) -> f64 {
    libm::atanh(x)
}
#[inline]
pub fn log1p(x: f64) -> f64 {
    libm::log1p(x)
}
#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}
#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

/// `ceil(x)` as a count, at least 1.
#[inline]
pub fn ceil_usize(x: f64) -> usize {
    let c = libm::ceil(x);
    if c.is_nan() || c < 1.0 {
        1
    } else {
        c as usize
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        log1p(exp(x))
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut w = a - two_pi * floor((a + PI) / two_pi);
    if w <= -PI {
        w += two_pi;
    }
    w
}

#[inline]
pub fn deg(rad: f64) -> f64 {
    rad * 180.0 / PI
}

#[inline]
pub fn rad(deg: f64) -> f64 {
    deg * PI / 180.0
}

/// A vector in the world X-Z plane (or a body frame x-z plane).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub z: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, z: 0.0 };

    #[inline]
    pub const fn new(x: f64, z: f64) -> Self {
        Vec2 { x, z }
    }

    /// Unit vector at `angle` measured counter-clockwise from +X toward +Z.
    #[inline]
    pub fn from_angle(angle: f64) -> Self {
        Vec2::new(cos(angle), sin(angle))
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.z * o.z
    }

    /// Scalar planar cross product `self × o` (CCW positive).
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.z - self.z * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        sqrt(self.dot(self))
    }

    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }

    /// Rotates counter-clockwise by `angle`.
    #[inline]
    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = (sin(angle), cos(angle));
        Vec2::new(c * self.x - s * self.z, s * self.x + c * self.z)
    }

    /// Quarter turn counter-clockwise.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.z, self.x)
    }

    #[inline]
    pub fn angle(self) -> f64 {
        atan2(self.z, self.x)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.z + o.z)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.z += o.z;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.z - o.z)
    }
}

impl SubAssign for Vec2 {
    #[inline]
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.z -= o.z;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.z * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(0.5) - 0.5).abs() < 1e-15);
        assert!((wrap_angle(-2.5 * PI) + 0.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn rotation_quarter_turn() {
        let v = Vec2::new(1.0, 0.0).rotated(FRAC_PI_2);
        assert!(v.x.abs() < 1e-15 && (v.z - 1.0).abs() < 1e-15);
        assert_eq!(Vec2::new(2.0, 3.0).perp(), Vec2::new(-3.0, 2.0));
    }

    #[test]
    fn softplus_large_inputs() {
        assert_eq!(softplus(100.0), 100.0);
        assert!((softplus(0.0) - core::f64::consts::LN_2).abs() < 1e-15);
    }
}
