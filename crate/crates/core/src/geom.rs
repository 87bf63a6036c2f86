//! Minimal 2D geometry primitives shared by the planner and the localizer.

use core::ops::{Add, Mul, Sub};

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::angles::wrap_angle;

/// A point (or free vector) in field coordinates, metres.
///
/// The field frame has its origin at the centre mark, `+x` toward the
/// opponent goal and `+y` to the left when facing it.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (other - self).norm()
    }

    /// Angle of the vector `self -> other` in the field frame.
    pub fn angle_to(self, other: Point2) -> f64 {
        let d = other - self;
        d.y.atan2(d.x)
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Unit vector for a heading angle.
    pub fn from_angle(theta: f64) -> Self {
        Self::new(theta.cos(), theta.sin())
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

/// A planar robot pose: position plus heading, radians in (-pi, pi].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn position(self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// Bearing of `target` relative to the robot heading.
    pub fn bearing_to(self, target: Point2) -> f64 {
        wrap_angle(self.position().angle_to(target) - self.theta)
    }
}

/// Shortest distance from `p` to the segment `a..b`.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 <= f64::EPSILON {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bearing_is_relative_to_heading() {
        let pose = Pose::new(0.0, 0.0, core::f64::consts::FRAC_PI_2);
        let b = pose.bearing_to(Point2::new(0.0, 2.0));
        assert_relative_eq!(b, 0.0, epsilon = 1e-12);
        let b = pose.bearing_to(Point2::new(1.0, 0.0));
        assert_relative_eq!(b, -core::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn segment_distance_clamps_to_endpoints() {
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(1.0, 0.0);
        assert_relative_eq!(
            point_segment_distance(Point2::new(0.5, 1.0), a, b),
            1.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            point_segment_distance(Point2::new(-1.0, 0.0), a, b),
            1.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            point_segment_distance(Point2::new(2.0, 0.0), a, b),
            1.0,
            epsilon = 1e-12
        );
    }
}
