//! Points on the flat torus `[0,1)^2` and their planar lifts.

use serde::{Deserialize, Serialize};

/// A planar vector. Used both for lifts of torus points and for tangent vectors.
pub type Vec2 = [f64; 2];

/// Reduce a coordinate into `[0, 1)`.
pub fn wrap(v: f64) -> f64 {
    let r = v.rem_euclid(1.0);
    // rem_euclid of a tiny negative value rounds up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Signed difference `a - b` reduced to the nearest representative in `[-0.5, 0.5]`.
pub fn periodic_delta(a: f64, b: f64) -> f64 {
    let d = a - b;
    d - d.round()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub x: f64,
    pub y: f64,
}

impl TorusPoint {
    pub fn new(x: f64, y: f64) -> Self {
        TorusPoint {
            x: wrap(x),
            y: wrap(y),
        }
    }

    pub fn from_lift(p: Vec2) -> Self {
        Self::new(p[0], p[1])
    }

    pub fn as_lift(self) -> Vec2 {
        [self.x, self.y]
    }

    /// Flat torus distance.
    pub fn distance(self, other: TorusPoint) -> f64 {
        torus_distance(self.as_lift(), other.as_lift())
    }
}

/// Distance on the flat torus between the projections of two lifts.
pub fn torus_distance(a: Vec2, b: Vec2) -> f64 {
    periodic_delta(a[0], b[0]).hypot(periodic_delta(a[1], b[1]))
}

pub fn lift_distance(a: Vec2, b: Vec2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}
