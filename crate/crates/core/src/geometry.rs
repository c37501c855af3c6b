use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

/// Sub-pixel image coordinate or pixel displacement. `x` grows to the
/// right, `y` grows downward.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

/// Head orientation in degrees. Pan is positive toward image right, tilt
/// positive toward image bottom (head down), roll positive clockwise in the
/// image.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PoseAngles {
    pub pan: f64,
    pub tilt: f64,
    pub roll: f64,
}

impl PoseAngles {
    pub const FRONTAL: PoseAngles = PoseAngles::new(0.0, 0.0, 0.0);

    pub const fn new(pan: f64, tilt: f64, roll: f64) -> Self {
        Self { pan, tilt, roll }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.pan, self.tilt, self.roll]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Gaze direction offset in degrees (pan right, tilt down).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GazeAngles {
    pub pan: f64,
    pub tilt: f64,
}

impl GazeAngles {
    pub const fn new(pan: f64, tilt: f64) -> Self {
        Self { pan, tilt }
    }
}
