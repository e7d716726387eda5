//! Pixel and geographic point types, great-circle distance and unit constants.

use serde::{Deserialize, Serialize};

/// IUGG mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Knots per meter/second.
pub const KNOTS_PER_MPS: f64 = 1.943_844_5;

/// Feet per meter.
pub const FEET_PER_METER: f64 = 3.280_840;

/// A location in image space. `u` grows to the right, `v` grows downwards.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    pub fn distance(&self, other: &PixelPoint) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }

    pub fn lerp(&self, other: &PixelPoint, t: f64) -> PixelPoint {
        PixelPoint::new(
            self.u + (other.u - self.u) * t,
            self.v + (other.v - self.v) * t,
        )
    }

    pub fn midpoint(&self, other: &PixelPoint) -> PixelPoint {
        self.lerp(other, 0.5)
    }
}

/// A geographic position in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub const fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }

    /// True when both coordinates are finite and inside their ranges.
    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }
}

/// Great-circle distance in meters between two points, by the haversine formula.
pub fn haversine_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let phi_a = a.lat.to_radians();
    let phi_b = b.lat.to_radians();
    let half_dphi = (b.lat - a.lat).to_radians() / 2.0;
    let half_dlambda = (b.lon - a.lon).to_radians() / 2.0;
    let h = half_dphi.sin().powi(2) + phi_a.cos() * phi_b.cos() * half_dlambda.sin().powi(2);
    // rounding can push h a hair above 1 for antipodal points
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

pub fn meters_to_feet(m: f64) -> f64 {
    m * FEET_PER_METER
}

pub fn mps_to_knots(v: f64) -> f64 {
    v * KNOTS_PER_MPS
}

pub fn knots_to_mps(kn: f64) -> f64 {
    kn / KNOTS_PER_MPS
}

/// Image-space bearing of the vector `from -> to`, in degrees within `[0, 360)`.
/// 0° points up the image and angles grow clockwise.
pub fn pixel_bearing(from: PixelPoint, to: PixelPoint) -> f64 {
    let du = to.u - from.u;
    let dv = to.v - from.v;
    normalize_degrees(du.atan2(-dv).to_degrees())
}

/// Wraps an angle into `[0, 360)`.
pub fn normalize_degrees(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    // rem_euclid(-tiny) may return exactly 360.0
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Smallest absolute difference between two angles, in `[0, 180]`.
pub fn angular_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}
