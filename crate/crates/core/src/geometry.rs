//! Geometric primitives over normalized layouts.
//!
//! Every box lives in the unit image square with its top-left corner at
//! `(x, y)`. All quantities returned here are dimensionless.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, LayoutError, Result};

/// Axis-aligned box `[x, y, w, h]` in normalized image coordinates.
///
/// Construction goes through [`BBox::new`], which rejects any box whose six
/// values `x, y, w, h, x+w, y+h` are not strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "[f64; 4]")]
pub struct BBox {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self, LayoutError> {
        if ![x, y, w, h].iter().all(|v| v.is_finite()) {
            return Err(LayoutError::NotFinite);
        }
        let open = |v: f64| v > 0.0 && v < 1.0;
        if !open(x) {
            return Err(LayoutError::X);
        }
        if !open(y) {
            return Err(LayoutError::Y);
        }
        if !open(w) {
            return Err(LayoutError::Width);
        }
        if !open(h) {
            return Err(LayoutError::Height);
        }
        if !open(x + w) {
            return Err(LayoutError::Right);
        }
        if !open(y + h) {
            return Err(LayoutError::Bottom);
        }
        Ok(Self { x, y, w, h })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self, LayoutError> {
        match values {
            [x, y, w, h] => Self::new(*x, *y, *w, *h),
            _ => Err(LayoutError::Arity(values.len())),
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x, self.y, self.w, self.h]
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    /// Shifts the box, failing if the result leaves the unit square.
    pub fn translate(&self, dx: f64, dy: f64) -> Result<Self, LayoutError> {
        Self::new(self.x + dx, self.y + dy, self.w, self.h)
    }
}

impl TryFrom<Vec<f64>> for BBox {
    type Error = LayoutError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::from_slice(&values)
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        b.to_array()
    }
}

impl fmt::Display for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}, {}]", self.x, self.y, self.w, self.h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(&self, other: &Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn is_zero(&self) -> bool {
        self.x == 0.0 && self.y == 0.0
    }
}

/// Centers closer than this are treated as coincident.
pub const CENTER_EPS: f64 = 1e-12;

pub fn area(b: &BBox) -> f64 {
    b.w * b.h
}

pub fn intersection_area(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.right().min(b.right()) - a.x.max(b.x)).max(0.0);
    let ih = (a.bottom().min(b.bottom()) - a.y.max(b.y)).max(0.0);
    iw * ih
}

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = intersection_area(a, b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = area(a) + area(b) - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Center-to-center distance scaled by the unit-square diagonal.
pub fn rel_dist(a: &BBox, b: &BBox) -> f64 {
    let (ca, cb) = (a.center(), b.center());
    (cb.x - ca.x).hypot(cb.y - ca.y) / std::f64::consts::SQRT_2
}

/// Unit vector from the center of `from` to the center of `to`, or the zero
/// vector when the centers coincide.
pub fn direction(from: &BBox, to: &BBox) -> Vec2 {
    let (cf, ct) = (from.center(), to.center());
    let d = Vec2::new(ct.x - cf.x, ct.y - cf.y);
    let n = d.norm();
    if n < CENTER_EPS {
        Vec2::ZERO
    } else {
        Vec2::new(d.x / n, d.y / n)
    }
}

/// Relative similarity of two non-negative scalars: `1 - |a - b| / max(a, b)`,
/// with `sim_score(0, 0) = 1`.
pub fn sim_score(a: f64, b: f64) -> Result<f64> {
    if !(a >= 0.0 && b >= 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Argument(format!(
            "sim_score needs finite non-negative operands, got ({a}, {b})"
        )));
    }
    let hi = a.max(b);
    if hi == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - (a - b).abs() / hi)
}
