//! Small planar/box geometry used by the scene model and the simulator.
//!
//! Objects are oriented boxes: an oriented rectangle footprint in the
//! horizontal plane plus a vertical interval.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

/// Contact slack. Boxes that merely touch are not considered overlapping.
pub const CONTACT_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(&self, other: &Vec3) -> f64 {
        (*self - *other).norm()
    }

    pub fn xy(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn horizontal(&self) -> Vec3 {
        Vec3::new(self.x, self.y, 0.0)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(&self, o: &Vec2) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    pub fn dot(&self, o: &Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn lerp(&self, o: &Vec2, t: f64) -> Vec2 {
        Vec2::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r >= PI {
        r -= 2.0 * PI;
    }
    r
}

/// Oriented rectangle in the horizontal plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obb2 {
    pub center: Vec2,
    pub half: Vec2,
    pub yaw: f64,
}

impl Obb2 {
    pub fn new(center: Vec2, size: Vec2, yaw: f64) -> Self {
        Self { center, half: Vec2::new(size.x / 2.0, size.y / 2.0), yaw }
    }

    pub fn axes(&self) -> [Vec2; 2] {
        let (s, c) = self.yaw.sin_cos();
        [Vec2::new(c, s), Vec2::new(-s, c)]
    }

    /// Grows both half extents by `r`.
    pub fn inflate(&self, r: f64) -> Self {
        Self { center: self.center, half: Vec2::new(self.half.x + r, self.half.y + r), yaw: self.yaw }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.contains_with(p, 0.0)
    }

    /// Point containment with a signed margin (positive margin shrinks the box).
    pub fn contains_with(&self, p: Vec2, margin: f64) -> bool {
        let d = p - self.center;
        let [ax, ay] = self.axes();
        d.dot(&ax).abs() <= self.half.x - margin && d.dot(&ay).abs() <= self.half.y - margin
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let [ax, ay] = self.axes();
        let (hx, hy) = (self.half.x, self.half.y);
        [
            self.center + ax * hx + ay * hy,
            self.center - ax * hx + ay * hy,
            self.center - ax * hx - ay * hy,
            self.center + ax * hx - ay * hy,
        ]
    }

    /// World axis-aligned half extents.
    pub fn aabb_half(&self) -> Vec2 {
        let (s, c) = self.yaw.sin_cos();
        Vec2::new(
            self.half.x * c.abs() + self.half.y * s.abs(),
            self.half.x * s.abs() + self.half.y * c.abs(),
        )
    }

    pub fn aabb(&self) -> Aabb2 {
        let h = self.aabb_half();
        Aabb2 { min: self.center - h, max: self.center + h }
    }

    /// Minimum separating-axis overlap with another rectangle. Positive means
    /// the interiors intersect by that depth; zero or negative means they are
    /// touching or apart.
    pub fn penetration(&self, other: &Obb2) -> f64 {
        let mut depth = f64::INFINITY;
        for axis in self.axes().into_iter().chain(other.axes()) {
            let (a0, a1) = project(&self.corners(), axis);
            let (b0, b1) = project(&other.corners(), axis);
            let overlap = a1.min(b1) - a0.max(b0);
            depth = depth.min(overlap);
        }
        depth
    }
}

fn project(pts: &[Vec2; 4], axis: Vec2) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in pts {
        let v = p.dot(&axis);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb2 {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb2 {
    pub fn union(&self, o: &Aabb2) -> Aabb2 {
        Aabb2 {
            min: Vec2::new(self.min.x.min(o.min.x), self.min.y.min(o.min.y)),
            max: Vec2::new(self.max.x.max(o.max.x), self.max.y.max(o.max.y)),
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// Axis-aligned box in 3D.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb3 {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb3 {
    pub fn from_center_half(c: Vec3, h: Vec3) -> Self {
        Self { min: c - h, max: c + h }
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn union(&self, o: &Aabb3) -> Aabb3 {
        Aabb3 {
            min: Vec3::new(self.min.x.min(o.min.x), self.min.y.min(o.min.y), self.min.z.min(o.min.z)),
            max: Vec3::new(self.max.x.max(o.max.x), self.max.y.max(o.max.y), self.max.z.max(o.max.z)),
        }
    }

    pub fn translate(&self, d: Vec3) -> Aabb3 {
        Aabb3 { min: self.min + d, max: self.max + d }
    }

    /// Interiors intersect by more than `eps` along every axis.
    pub fn intersects(&self, o: &Aabb3, eps: f64) -> bool {
        self.min.x < o.max.x - eps
            && o.min.x < self.max.x - eps
            && self.min.y < o.max.y - eps
            && o.min.y < self.max.y - eps
            && self.min.z < o.max.z - eps
            && o.min.z < self.max.z - eps
    }

    /// Euclidean distance between two boxes (zero when they touch or overlap).
    pub fn distance(&self, o: &Aabb3) -> f64 {
        let gap = |a0: f64, a1: f64, b0: f64, b1: f64| (b0 - a1).max(a0 - b1).max(0.0);
        let dx = gap(self.min.x, self.max.x, o.min.x, o.max.x);
        let dy = gap(self.min.y, self.max.y, o.min.y, o.max.y);
        let dz = gap(self.min.z, self.max.z, o.min.z, o.max.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// Earliest fraction `t` in `[0, 1]` at which `self` translated by
    /// `t * d` starts to intersect `o`, or `None` if it never does.
    pub fn time_of_impact(&self, d: Vec3, o: &Aabb3, eps: f64) -> Option<f64> {
        let mut t_enter: f64 = 0.0;
        let mut t_exit: f64 = 1.0;
        let axes = [
            (self.min.x, self.max.x, o.min.x, o.max.x, d.x),
            (self.min.y, self.max.y, o.min.y, o.max.y, d.y),
            (self.min.z, self.max.z, o.min.z, o.max.z, d.z),
        ];
        for (a0, a1, b0, b1, v) in axes {
            // open interval overlap: a0 + v t < b1 - eps and b0 + eps < a1 + v t
            let lo = b0 + eps - a1;
            let hi = b1 - eps - a0;
            if v.abs() < 1e-15 {
                if !(0.0 > lo && 0.0 < hi) {
                    return None;
                }
                continue;
            }
            let (mut t0, mut t1) = (lo / v, hi / v);
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            t_enter = t_enter.max(t0);
            t_exit = t_exit.min(t1);
            if t_enter >= t_exit {
                return None;
            }
        }
        if t_enter < 1.0 {
            Some(t_enter.max(0.0))
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(PI) + PI).abs() < 1e-12);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_angle(0.0), 0.0);
    }

    #[test]
    fn rotated_aabb_swaps_extents() {
        let b = Obb2::new(Vec2::new(0.0, 0.0), Vec2::new(0.3, 0.2), PI / 2.0);
        let h = b.aabb_half();
        assert!((h.x - 0.1).abs() < 1e-12 && (h.y - 0.15).abs() < 1e-12);
    }

    #[test]
    fn penetration_touching_is_zero() {
        let a = Obb2::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), 0.0);
        let b = Obb2::new(Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), 0.0);
        assert!(a.penetration(&b).abs() < 1e-12);
        let c = Obb2::new(Vec2::new(0.9, 0.0), Vec2::new(1.0, 1.0), 0.0);
        assert!((a.penetration(&c) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn time_of_impact_sliding_box() {
        let a = Aabb3::from_center_half(Vec3::ZERO, Vec3::new(0.5, 0.5, 0.5));
        let b = Aabb3::from_center_half(Vec3::new(2.0, 0.0, 0.0), Vec3::new(0.5, 0.5, 0.5));
        let t = a.time_of_impact(Vec3::new(2.0, 0.0, 0.0), &b, CONTACT_EPS).unwrap();
        assert!((t - 0.5).abs() < 1e-5);
        assert!(a.time_of_impact(Vec3::new(0.0, 2.0, 0.0), &b, CONTACT_EPS).is_none());
        // already overlapping
        let c = Aabb3::from_center_half(Vec3::new(0.2, 0.0, 0.0), Vec3::new(0.5, 0.5, 0.5));
        assert_eq!(a.time_of_impact(Vec3::new(-1.0, 0.0, 0.0), &c, CONTACT_EPS), Some(0.0));
    }

    #[test]
    fn aabb_distance() {
        let a = Aabb3::from_center_half(Vec3::ZERO, Vec3::new(0.5, 0.5, 0.5));
        let b = Aabb3::from_center_half(Vec3::new(1.5, 0.0, 0.0), Vec3::new(0.5, 0.5, 0.5));
        assert!((a.distance(&b) - 0.5).abs() < 1e-12);
    }
}
