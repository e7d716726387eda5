//! Pinhole camera over a local east/north/up plane.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::FrameSize;
use crate::geo::{GeoPoint, PixelPoint, EARTH_RADIUS_M};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProjectionError {
    #[error("BehindCamera: point at depth {depth_m:.3} m")]
    BehindCamera { depth_m: f64 },
    #[error("AboveHorizon: pixel ({u:.1}, {v:.1}) does not see the plane at {plane_m} m")]
    AboveHorizon { u: f64, v: f64, plane_m: f64 },
}

/// Equirectangular east/north meters about a reference point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    origin: GeoPoint,
    cos_lat: f64,
}

impl LocalFrame {
    pub fn new(origin: GeoPoint) -> Self {
        Self {
            origin,
            cos_lat: origin.lat.to_radians().cos(),
        }
    }

    pub fn origin(&self) -> GeoPoint {
        self.origin
    }

    pub fn to_local(&self, g: GeoPoint) -> (f64, f64) {
        let east = (g.lon - self.origin.lon).to_radians() * EARTH_RADIUS_M * self.cos_lat;
        let north = (g.lat - self.origin.lat).to_radians() * EARTH_RADIUS_M;
        (east, north)
    }

    pub fn to_geo(&self, east: f64, north: f64) -> GeoPoint {
        GeoPoint::new(
            self.origin.lat + (north / EARTH_RADIUS_M).to_degrees(),
            self.origin.lon + (east / (EARTH_RADIUS_M * self.cos_lat)).to_degrees(),
        )
    }
}

type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Ideal pinhole camera standing above `position`. The local frame used by
/// the projection is centered on the camera's ground point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinholeCamera {
    pub lat: f64,
    pub lon: f64,
    pub height_m: f64,
    /// Azimuth of the optical axis, degrees clockwise from north.
    pub yaw_deg: f64,
    /// Depression of the optical axis below the horizon, degrees.
    pub pitch_deg: f64,
    pub focal_px: f64,
    pub width_px: u32,
    pub height_px: u32,
}

impl PinholeCamera {
    pub fn frame(&self) -> FrameSize {
        FrameSize {
            width: self.width_px,
            height: self.height_px,
        }
    }

    pub fn local_frame(&self) -> LocalFrame {
        LocalFrame::new(GeoPoint::new(self.lat, self.lon))
    }

    pub fn validate(&self) -> Result<(), String> {
        let finite = [
            self.lat,
            self.lon,
            self.height_m,
            self.yaw_deg,
            self.pitch_deg,
            self.focal_px,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err("camera parameters must be finite".into());
        }
        if !GeoPoint::new(self.lat, self.lon).is_valid() {
            return Err("camera position is not a valid coordinate".into());
        }
        if self.height_m <= 0.0 || self.focal_px <= 0.0 || self.width_px == 0 || self.height_px == 0
        {
            return Err("camera height, focal length and frame size must be positive".into());
        }
        if !(-89.0..=89.0).contains(&self.pitch_deg) {
            return Err("camera pitch must lie within ±89°".into());
        }
        Ok(())
    }

    /// Forward, right and image-down unit vectors in east/north/up.
    fn basis(&self) -> (Vec3, Vec3, Vec3) {
        let (sy, cy) = self.yaw_deg.to_radians().sin_cos();
        let (sp, cp) = self.pitch_deg.to_radians().sin_cos();
        let forward = [sy * cp, cy * cp, -sp];
        let right = [cy, -sy, 0.0];
        let down = cross(forward, right);
        (forward, right, down)
    }

    fn principal_point(&self) -> (f64, f64) {
        (self.width_px as f64 / 2.0, self.height_px as f64 / 2.0)
    }

    /// Projects a point given in local meters (`up` above ground).
    pub fn project_local(
        &self,
        east: f64,
        north: f64,
        up: f64,
    ) -> Result<PixelPoint, ProjectionError> {
        let (f, r, d) = self.basis();
        let p = [east, north, up - self.height_m];
        let depth = dot(p, f);
        if depth <= 1e-6 {
            return Err(ProjectionError::BehindCamera { depth_m: depth });
        }
        let (cx, cy) = self.principal_point();
        Ok(PixelPoint::new(
            cx + self.focal_px * dot(p, r) / depth,
            cy + self.focal_px * dot(p, d) / depth,
        ))
    }

    /// Intersects the viewing ray of a pixel with the horizontal plane at
    /// `plane_m` above ground; returns local east/north meters.
    pub fn unproject_to_plane(
        &self,
        p: PixelPoint,
        plane_m: f64,
    ) -> Result<(f64, f64), ProjectionError> {
        let (f, r, d) = self.basis();
        let (cx, cy) = self.principal_point();
        let a = (p.u - cx) / self.focal_px;
        let b = (p.v - cy) / self.focal_px;
        let ray = [
            f[0] + a * r[0] + b * d[0],
            f[1] + a * r[1] + b * d[1],
            f[2] + a * r[2] + b * d[2],
        ];
        let s = (plane_m - self.height_m) / ray[2];
        if !s.is_finite() || s <= 0.0 {
            return Err(ProjectionError::AboveHorizon {
                u: p.u,
                v: p.v,
                plane_m,
            });
        }
        Ok((s * ray[0], s * ray[1]))
    }

    /// Ground meters covered by one pixel step along u and along v at `p`,
    /// measured on the plane at `plane_m`.
    pub fn ground_sample_distance(
        &self,
        p: PixelPoint,
        plane_m: f64,
    ) -> Result<(f64, f64), ProjectionError> {
        let h = 0.5;
        let step = |a: PixelPoint, b: PixelPoint| -> Result<f64, ProjectionError> {
            let (ea, na) = self.unproject_to_plane(a, plane_m)?;
            let (eb, nb) = self.unproject_to_plane(b, plane_m)?;
            Ok((ea - eb).hypot(na - nb) / (2.0 * h))
        };
        Ok((
            step(PixelPoint::new(p.u + h, p.v), PixelPoint::new(p.u - h, p.v))?,
            step(PixelPoint::new(p.u, p.v + h), PixelPoint::new(p.u, p.v - h))?,
        ))
    }
}

/// Projects a geographic point `height_m` above ground into the image.
pub fn project(
    camera: &PinholeCamera,
    g: GeoPoint,
    height_m: f64,
) -> Result<PixelPoint, ProjectionError> {
    let (e, n) = camera.local_frame().to_local(g);
    camera.project_local(e, n, height_m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn camera() -> PinholeCamera {
        PinholeCamera {
            lat: 1.35,
            lon: 103.99,
            height_m: 80.0,
            yaw_deg: 30.0,
            pitch_deg: 6.0,
            focal_px: 1200.0,
            width_px: 1920,
            height_px: 1080,
        }
    }

    #[test]
    fn principal_axis_hits_frame_center() {
        let cam = camera();
        let range = 500.0;
        let (s, c) = cam.pitch_deg.to_radians().sin_cos();
        let (sy, cy) = cam.yaw_deg.to_radians().sin_cos();
        let horizontal = range * c;
        let e = horizontal * sy;
        let n = horizontal * cy;
        let up = cam.height_m - range * s;
        let g = cam.local_frame().to_geo(e, n);
        let p = project(&cam, g, up).unwrap();
        assert_abs_diff_eq!(p.u, 960.0, epsilon = 1e-6);
        assert_abs_diff_eq!(p.v, 540.0, epsilon = 1e-6);
    }

    #[test]
    fn one_meter_at_range_spans_focal_over_range_pixels() {
        // level camera, 1 m baseline perpendicular to the optical axis
        let cam = PinholeCamera {
            yaw_deg: 0.0,
            pitch_deg: 0.0,
            ..camera()
        };
        let range = 400.0;
        let a = cam.project_local(0.0, range, cam.height_m).unwrap();
        let b = cam.project_local(1.0, range, cam.height_m).unwrap();
        let expected = cam.focal_px / range;
        assert!((a.distance(&b) - expected).abs() / expected < 0.05);
    }

    #[test]
    fn behind_camera_is_rejected() {
        let cam = camera();
        let (sy, cy) = cam.yaw_deg.to_radians().sin_cos();
        let err = cam
            .project_local(-100.0 * sy, -100.0 * cy, 0.0)
            .unwrap_err();
        assert!(matches!(err, ProjectionError::BehindCamera { .. }));
    }

    #[test]
    fn unprojection_inverts_projection() {
        let cam = camera();
        for &(e, n, z) in &[
            (10.0, 300.0, 0.0),
            (-150.0, 700.0, 6.0),
            (220.0, 450.0, 3.5),
        ] {
            let p = cam.project_local(e, n, z).unwrap();
            let (e2, n2) = cam.unproject_to_plane(p, z).unwrap();
            assert_abs_diff_eq!(e, e2, epsilon = 1e-6);
            assert_abs_diff_eq!(n, n2, epsilon = 1e-6);
        }
    }

    #[test]
    fn pixels_above_horizon_miss_the_ground() {
        let cam = camera();
        assert!(cam
            .unproject_to_plane(PixelPoint::new(960.0, 0.0), 0.0)
            .is_err());
    }

    #[test]
    fn local_frame_round_trip() {
        let f = LocalFrame::new(GeoPoint::new(1.35, 103.99));
        let g = f.to_geo(523.0, -217.0);
        let (e, n) = f.to_local(g);
        assert_abs_diff_eq!(e, 523.0, epsilon = 1e-6);
        assert_abs_diff_eq!(n, -217.0, epsilon = 1e-6);
    }

    #[test]
    fn ground_sample_distance_matches_pinhole_estimate() {
        let cam = PinholeCamera {
            yaw_deg: 0.0,
            ..camera()
        };
        let p = cam.project_local(0.0, 500.0, 0.0).unwrap();
        let (gu, _) = cam.ground_sample_distance(p, 0.0).unwrap();
        let slant = (500.0f64.powi(2) + 80.0f64.powi(2)).sqrt();
        // lateral footprint of one pixel is roughly slant range over focal length
        assert!((gu - slant / cam.focal_px).abs() / gu < 0.05, "{gu}");
    }
}
