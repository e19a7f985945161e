//! Small 2-D geometry helpers shared by the action encoding, the baseline
//! predictor and the simulator.
//!
//! Coordinates are in cell units: `x` runs along columns, `y` along rows,
//! and cell `(r, c)` has its center at `(c + 0.5, r + 0.5)`.

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Center of cell `(r, c)`.
    pub fn cell_center(r: usize, c: usize) -> Self {
        Self::new(c as f64 + 0.5, r as f64 + 0.5)
    }

    pub fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }

    pub fn dot(self, rhs: Vec2) -> f64 {
        self.x * rhs.x + self.y * rhs.y
    }

    pub fn cross(self, rhs: Vec2) -> f64 {
        self.x * rhs.y - self.y * rhs.x
    }

    pub fn norm(self) -> f64 {
        math::sqrt(self.dot(self))
    }

    pub fn dist(self, rhs: Vec2) -> f64 {
        self.sub(rhs).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Projection of a point onto a segment.
#[derive(Debug, Clone, Copy)]
pub struct Projection {
    /// Unclamped scalar projection parameter; 0 at the segment start,
    /// 1 at the end.
    pub t_raw: f64,
    /// Perpendicular distance to the infinite supporting line.
    pub perp_dist: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub fn new(a: Vec2, b: Vec2) -> Self {
        Self { a, b }
    }

    pub fn len(&self) -> f64 {
        self.a.dist(self.b)
    }

    /// Project `p` onto the segment. The segment must be non-degenerate.
    pub fn project(&self, p: Vec2) -> Projection {
        let d = self.b.sub(self.a);
        let len_sq = d.dot(d);
        debug_assert!(len_sq > 0.0, "degenerate segment");
        let rel = p.sub(self.a);
        let t_raw = rel.dot(d) / len_sq;
        let perp_dist = math::abs(d.cross(rel)) / math::sqrt(len_sq);
        Projection { t_raw, perp_dist }
    }

    /// Clamped projection parameter in `[0, 1]`.
    pub fn project_clamped(&self, p: Vec2) -> f64 {
        self.project(p).t_raw.clamp(0.0, 1.0)
    }
}
