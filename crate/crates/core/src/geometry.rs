//! Planar primitives in pixel space: boxes, segment clipping and closest points.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::PixelPoint;

/// Tolerance (pixels) for deciding that a point sits on a box boundary or that
/// two crossing points coincide.
pub const BOUNDARY_TOLERANCE_PX: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("InvalidBox: [{x_min}, {y_min}, {x_max}, {y_max}] must be finite with min < max")]
pub struct InvalidBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

/// Axis-aligned pixel rectangle. Serialized as `[x_min, y_min, x_max, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoundingBox {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, InvalidBox> {
        let ok = [x_min, y_min, x_max, y_max].iter().all(|x| x.is_finite())
            && x_min < x_max
            && y_min < y_max;
        if ok {
            Ok(Self {
                x_min,
                y_min,
                x_max,
                y_max,
            })
        } else {
            Err(InvalidBox {
                x_min,
                y_min,
                x_max,
                y_max,
            })
        }
    }

    /// Box of the given size centered on `c`.
    pub fn centered(c: PixelPoint, width: f64, height: f64) -> Result<Self, InvalidBox> {
        Self::new(
            c.u - width / 2.0,
            c.v - height / 2.0,
            c.u + width / 2.0,
            c.v + height / 2.0,
        )
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> PixelPoint {
        PixelPoint::new(
            (self.x_min + self.x_max) / 2.0,
            (self.y_min + self.y_max) / 2.0,
        )
    }

    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let w = (self.x_max.min(other.x_max) - self.x_min.max(other.x_min)).max(0.0);
        let h = (self.y_max.min(other.y_max) - self.y_min.max(other.y_min)).max(0.0);
        let inter = w * h;
        if inter <= 0.0 {
            return 0.0;
        }
        inter / (self.area() + other.area() - inter)
    }

    /// True when `p` lies inside the box and farther than the boundary
    /// tolerance from every edge.
    pub fn contains_strictly(&self, p: PixelPoint) -> bool {
        p.u - self.x_min > BOUNDARY_TOLERANCE_PX
            && self.x_max - p.u > BOUNDARY_TOLERANCE_PX
            && p.v - self.y_min > BOUNDARY_TOLERANCE_PX
            && self.y_max - p.v > BOUNDARY_TOLERANCE_PX
    }

    /// True when `p` lies in the closed box.
    pub fn contains(&self, p: PixelPoint) -> bool {
        p.u >= self.x_min && p.u <= self.x_max && p.v >= self.y_min && p.v <= self.y_max
    }

    /// Distance from `p` to the nearest point of the box boundary.
    pub fn boundary_distance(&self, p: PixelPoint) -> f64 {
        if self.contains(p) {
            (p.u - self.x_min)
                .min(self.x_max - p.u)
                .min(p.v - self.y_min)
                .min(self.y_max - p.v)
        } else {
            let du = (self.x_min - p.u).max(p.u - self.x_max).max(0.0);
            let dv = (self.y_min - p.v).max(p.v - self.y_max).max(0.0);
            du.hypot(dv)
        }
    }
}

impl TryFrom<[f64; 4]> for BoundingBox {
    type Error = InvalidBox;

    fn try_from(a: [f64; 4]) -> Result<Self, Self::Error> {
        BoundingBox::new(a[0], a[1], a[2], a[3])
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.x_min, b.y_min, b.x_max, b.y_max]
    }
}

/// Liang-Barsky clip of the segment `a -> b` against the closed box. Returns the
/// parameter interval `[t0, t1] ⊆ [0, 1]` that lies inside, if any.
pub fn clip_segment(a: PixelPoint, b: PixelPoint, bx: &BoundingBox) -> Option<(f64, f64)> {
    let du = b.u - a.u;
    let dv = b.v - a.v;
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    let checks = [
        (-du, a.u - bx.x_min),
        (du, bx.x_max - a.u),
        (-dv, a.v - bx.y_min),
        (dv, bx.y_max - a.v),
    ];
    for (p, q) in checks {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return None;
            }
        }
    }
    Some((t0, t1))
}

/// Points where the segment `a -> b` meets the box boundary, ordered from `a`.
///
/// An endpoint lying strictly inside the box is not a boundary point, so a
/// segment with one endpoint inside yields the single crossing. A segment that
/// only touches the boundary at one point yields that point once.
pub fn segment_box_crossings(a: PixelPoint, b: PixelPoint, bx: &BoundingBox) -> Vec<PixelPoint> {
    let Some((t0, t1)) = clip_segment(a, b, bx) else {
        return Vec::new();
    };
    let mut out = Vec::with_capacity(2);
    for t in [t0, t1] {
        let p = a.lerp(&b, t);
        if bx.contains_strictly(p) {
            continue;
        }
        if out
            .last()
            .is_some_and(|q: &PixelPoint| q.distance(&p) <= BOUNDARY_TOLERANCE_PX)
        {
            continue;
        }
        out.push(p);
    }
    out
}

/// Parameter of the orthogonal projection of `p` onto the line through `a, b`.
pub fn project_parameter(a: PixelPoint, b: PixelPoint, p: PixelPoint) -> f64 {
    let du = b.u - a.u;
    let dv = b.v - a.v;
    let len2 = du * du + dv * dv;
    if len2 == 0.0 {
        return 0.0;
    }
    ((p.u - a.u) * du + (p.v - a.v) * dv) / len2
}

/// Distance from `p` to the closest point of segment `a -> b`.
pub fn point_segment_distance(a: PixelPoint, b: PixelPoint, p: PixelPoint) -> f64 {
    let t = project_parameter(a, b, p).clamp(0.0, 1.0);
    a.lerp(&b, t).distance(&p)
}

fn cross(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    ax * by - ay * bx
}

/// Intersection of the infinite lines through `a1 -> a2` and `b1 -> b2`,
/// returned as the parameters `(s, t)` along each. `None` when parallel.
pub fn line_intersection_params(
    a1: PixelPoint,
    a2: PixelPoint,
    b1: PixelPoint,
    b2: PixelPoint,
) -> Option<(f64, f64)> {
    let (rx, ry) = (a2.u - a1.u, a2.v - a1.v);
    let (sx, sy) = (b2.u - b1.u, b2.v - b1.v);
    let denom = cross(rx, ry, sx, sy);
    let scale = rx.hypot(ry) * sx.hypot(sy);
    if scale == 0.0 || denom.abs() <= 1e-12 * scale {
        return None;
    }
    let (qx, qy) = (b1.u - a1.u, b1.v - a1.v);
    let s = cross(qx, qy, sx, sy) / denom;
    let t = cross(qx, qy, rx, ry) / denom;
    Some((s, t))
}

/// Closest pair of points between segments `a1 -> a2` and `b1 -> b2`.
///
/// For parallel segments whose projections overlap the pair is not unique; the
/// pair at the middle of the overlap is returned.
pub fn closest_points_between_segments(
    a1: PixelPoint,
    a2: PixelPoint,
    b1: PixelPoint,
    b2: PixelPoint,
) -> (PixelPoint, PixelPoint) {
    if line_intersection_params(a1, a2, b1, b2).is_none() {
        // parallel: overlap of b projected on a's parameter axis
        let t_b1 = project_parameter(a1, a2, b1);
        let t_b2 = project_parameter(a1, a2, b2);
        let lo = t_b1.min(t_b2).max(0.0);
        let hi = t_b1.max(t_b2).min(1.0);
        if lo <= hi {
            let pa = a1.lerp(&a2, (lo + hi) / 2.0);
            let tb = project_parameter(b1, b2, pa).clamp(0.0, 1.0);
            return (pa, b1.lerp(&b2, tb));
        }
    }
    // Non-overlapping or non-parallel: the minimum is attained either at an
    // interior crossing or with at least one endpoint involved.
    if let Some((s, t)) = line_intersection_params(a1, a2, b1, b2) {
        if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t) {
            let p = a1.lerp(&a2, s);
            return (p, p);
        }
    }
    let candidates = [
        (a1, {
            let t = project_parameter(b1, b2, a1).clamp(0.0, 1.0);
            b1.lerp(&b2, t)
        }),
        (a2, {
            let t = project_parameter(b1, b2, a2).clamp(0.0, 1.0);
            b1.lerp(&b2, t)
        }),
        (
            {
                let t = project_parameter(a1, a2, b1).clamp(0.0, 1.0);
                a1.lerp(&a2, t)
            },
            b1,
        ),
        (
            {
                let t = project_parameter(a1, a2, b2).clamp(0.0, 1.0);
                a1.lerp(&a2, t)
            },
            b2,
        ),
    ];
    let mut best = candidates[0];
    for c in &candidates[1..] {
        if c.0.distance(&c.1) < best.0.distance(&best.1) {
            best = *c;
        }
    }
    best
}
