//! Polynomial regression from image pixels to geographic coordinates.
//!
//! Pixels are first mapped affinely into `[-1, 1]²`, expanded into every
//! monomial of total degree `<= k`, and the latitude and longitude rows are
//! fitted as two independent least-squares problems that share the design
//! matrix.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{haversine_distance, GeoPoint, PixelPoint};

/// Relative singular-value cutoff below which the design matrix is treated as
/// rank-deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Default polynomial degree.
pub const DEFAULT_DEGREE: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("InsufficientData: degree {degree} needs at least {required} correspondences, got {provided}")]
    InsufficientData {
        degree: usize,
        required: usize,
        provided: usize,
    },
    #[error("LengthMismatch: {pixels} pixel points but {geos} geographic points")]
    LengthMismatch { pixels: usize, geos: usize },
    #[error(
        "DegenerateGeometry: design matrix is rank-deficient (singular value ratio {ratio:e})"
    )]
    DegenerateGeometry { ratio: f64 },
    #[error("InvalidInput: {0}")]
    InvalidInput(String),
    #[error("InvalidModel: {0}")]
    InvalidModel(String),
}

/// Width and height of a video frame in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSize {
    pub width: u32,
    pub height: u32,
}

impl FrameSize {
    pub const fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn contains(&self, p: PixelPoint) -> bool {
        p.u >= 0.0 && p.v >= 0.0 && p.u < self.width as f64 && p.v < self.height as f64
    }
}

impl fmt::Display for FrameSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl FromStr for FrameSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected WIDTHxHEIGHT, got {s:?}"))?;
        let width: u32 = w
            .trim()
            .parse()
            .map_err(|e| format!("bad width {w:?}: {e}"))?;
        let height: u32 = h
            .trim()
            .parse()
            .map_err(|e| format!("bad height {h:?}: {e}"))?;
        if width == 0 || height == 0 {
            return Err(format!("frame size must be positive, got {s:?}"));
        }
        Ok(Self { width, height })
    }
}

/// Affine map `n = (p - offset) / scale` taking a frame into `[-1, 1]²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelNormalizer {
    pub su: f64,
    pub ou: f64,
    pub sv: f64,
    pub ov: f64,
}

impl PixelNormalizer {
    pub fn for_frame(frame: FrameSize) -> Self {
        let hw = frame.width as f64 / 2.0;
        let hh = frame.height as f64 / 2.0;
        Self {
            su: hw,
            ou: hw,
            sv: hh,
            ov: hh,
        }
    }

    pub fn normalize(&self, p: PixelPoint) -> (f64, f64) {
        ((p.u - self.ou) / self.su, (p.v - self.ov) / self.sv)
    }

    pub fn denormalize(&self, x1: f64, x2: f64) -> PixelPoint {
        PixelPoint::new(x1 * self.su + self.ou, x2 * self.sv + self.ov)
    }

    fn is_invertible(&self) -> bool {
        [self.su, self.ou, self.sv, self.ov]
            .iter()
            .all(|x| x.is_finite())
            && self.su != 0.0
            && self.sv != 0.0
    }
}

/// Number of monomials of total degree `<= k` in two variables.
pub const fn feature_count(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// All monomials `x1^j * x2^(i-j)` for `i = 0..=k`, `j = 0..=i`, in that order.
pub fn expand_features(x1: f64, x2: f64, k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(feature_count(k));
    expand_into(x1, x2, k, &mut out);
    out
}

fn expand_into(x1: f64, x2: f64, k: usize, out: &mut Vec<f64>) {
    out.clear();
    let mut p1 = Vec::with_capacity(k + 1);
    let mut p2 = Vec::with_capacity(k + 1);
    let (mut a, mut b) = (1.0, 1.0);
    for _ in 0..=k {
        p1.push(a);
        p2.push(b);
        a *= x1;
        b *= x2;
    }
    for i in 0..=k {
        for j in 0..=i {
            out.push(p1[j] * p2[i - j]);
        }
    }
}

/// A fitted pixel-to-geographic mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRecord", into = "ModelRecord")]
pub struct CalibrationModel {
    degree: usize,
    lat_weights: Vec<f64>,
    lon_weights: Vec<f64>,
    normalizer: PixelNormalizer,
    fit_rmse_m: f64,
}

impl CalibrationModel {
    pub fn new(
        degree: usize,
        lat_weights: Vec<f64>,
        lon_weights: Vec<f64>,
        normalizer: PixelNormalizer,
        fit_rmse_m: f64,
    ) -> Result<Self, CalibrationError> {
        let t = feature_count(degree);
        if lat_weights.len() != t || lon_weights.len() != t {
            return Err(CalibrationError::InvalidModel(format!(
                "degree {degree} needs {t} weights per row, got {} and {}",
                lat_weights.len(),
                lon_weights.len()
            )));
        }
        if !lat_weights
            .iter()
            .chain(&lon_weights)
            .all(|w| w.is_finite())
        {
            return Err(CalibrationError::InvalidModel("non-finite weight".into()));
        }
        if !normalizer.is_invertible() {
            return Err(CalibrationError::InvalidModel(
                "pixel normalizer is not invertible".into(),
            ));
        }
        if !(fit_rmse_m.is_finite() && fit_rmse_m >= 0.0) {
            return Err(CalibrationError::InvalidModel(format!(
                "fit rmse must be finite and >= 0, got {fit_rmse_m}"
            )));
        }
        Ok(Self {
            degree,
            lat_weights,
            lon_weights,
            normalizer,
            fit_rmse_m,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn lat_weights(&self) -> &[f64] {
        &self.lat_weights
    }

    pub fn lon_weights(&self) -> &[f64] {
        &self.lon_weights
    }

    pub fn normalizer(&self) -> PixelNormalizer {
        self.normalizer
    }

    /// Root-mean-square haversine residual over the training set, in meters.
    pub fn fit_rmse_m(&self) -> f64 {
        self.fit_rmse_m
    }

    /// Maps a pixel to its geographic estimate. The residual term is not added.
    pub fn pixel_to_geo(&self, p: PixelPoint) -> GeoPoint {
        let (x1, x2) = self.normalizer.normalize(p);
        let f = expand_features(x1, x2, self.degree);
        GeoPoint::new(dot(&self.lat_weights, &f), dot(&self.lon_weights, &f))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Serialize, Deserialize)]
struct ModelRecord {
    degree: usize,
    weights: [Vec<f64>; 2],
    norm: PixelNormalizer,
    rmse_m: f64,
}

impl TryFrom<ModelRecord> for CalibrationModel {
    type Error = CalibrationError;

    fn try_from(r: ModelRecord) -> Result<Self, Self::Error> {
        let [lat, lon] = r.weights;
        CalibrationModel::new(r.degree, lat, lon, r.norm, r.rmse_m)
    }
}

impl From<CalibrationModel> for ModelRecord {
    fn from(m: CalibrationModel) -> Self {
        ModelRecord {
            degree: m.degree,
            weights: [m.lat_weights, m.lon_weights],
            norm: m.normalizer,
            rmse_m: m.fit_rmse_m,
        }
    }
}

/// One pixel/geographic correspondence as stored in a calibration pairs file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub u: f64,
    pub v: f64,
    pub lat: f64,
    pub lon: f64,
}

impl Correspondence {
    pub fn pixel(&self) -> PixelPoint {
        PixelPoint::new(self.u, self.v)
    }

    pub fn geo(&self) -> GeoPoint {
        GeoPoint::new(self.lat, self.lon)
    }
}

/// Fits a degree-`degree` calibration on matched pixel/geographic lists.
pub fn fit_calibration(
    pixels: &[PixelPoint],
    geos: &[GeoPoint],
    degree: usize,
    frame: FrameSize,
) -> Result<CalibrationModel, CalibrationError> {
    if pixels.len() != geos.len() {
        return Err(CalibrationError::LengthMismatch {
            pixels: pixels.len(),
            geos: geos.len(),
        });
    }
    let n = pixels.len();
    let t = feature_count(degree);
    if n < t {
        return Err(CalibrationError::InsufficientData {
            degree,
            required: t,
            provided: n,
        });
    }
    if frame.width == 0 || frame.height == 0 {
        return Err(CalibrationError::InvalidInput(format!(
            "frame size {frame} is empty"
        )));
    }
    if let Some(i) = pixels.iter().position(|p| !p.is_finite()) {
        return Err(CalibrationError::InvalidInput(format!(
            "pixel {i} is not finite"
        )));
    }
    if let Some(i) = geos.iter().position(|g| !g.is_valid()) {
        return Err(CalibrationError::InvalidInput(format!(
            "geographic point {i} is out of range"
        )));
    }

    let normalizer = PixelNormalizer::for_frame(frame);
    let mut design = DMatrix::<f64>::zeros(n, t);
    let mut row = Vec::with_capacity(t);
    for (i, p) in pixels.iter().enumerate() {
        let (x1, x2) = normalizer.normalize(*p);
        expand_into(x1, x2, degree, &mut row);
        for (j, f) in row.iter().enumerate() {
            design[(i, j)] = *f;
        }
    }

    // Center the labels so the solve works on small deviations; the means are
    // folded back into the constant term.
    let lat_mean = geos.iter().map(|g| g.lat).sum::<f64>() / n as f64;
    let lon_mean = geos.iter().map(|g| g.lon).sum::<f64>() / n as f64;
    let mut rhs = DMatrix::<f64>::zeros(n, 2);
    for (i, g) in geos.iter().enumerate() {
        rhs[(i, 0)] = g.lat - lat_mean;
        rhs[(i, 1)] = g.lon - lon_mean;
    }

    let svd = design.svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    let ratio = if s_max > 0.0 { s_min / s_max } else { 0.0 };
    if !(ratio > RANK_TOLERANCE) {
        return Err(CalibrationError::DegenerateGeometry { ratio });
    }
    let solution = svd
        .solve(&rhs, 0.0)
        .map_err(|e| CalibrationError::InvalidInput(e.to_string()))?;

    let column = |c: usize, mean: f64| -> Vec<f64> {
        let mut w: Vec<f64> = DVector::from(solution.column(c)).iter().copied().collect();
        w[0] += mean;
        w
    };
    let lat_weights = column(0, lat_mean);
    let lon_weights = column(1, lon_mean);

    let mut model = CalibrationModel::new(degree, lat_weights, lon_weights, normalizer, 0.0)?;
    let sq: f64 = pixels
        .iter()
        .zip(geos)
        .map(|(p, g)| haversine_distance(model.pixel_to_geo(*p), *g).powi(2))
        .sum();
    model.fit_rmse_m = (sq / n as f64).sqrt();
    Ok(model)
}

/// Convenience wrapper over [`fit_calibration`] for a pairs file.
pub fn fit_correspondences(
    pairs: &[Correspondence],
    degree: usize,
    frame: FrameSize,
) -> Result<CalibrationModel, CalibrationError> {
    let pixels: Vec<PixelPoint> = pairs.iter().map(Correspondence::pixel).collect();
    let geos: Vec<GeoPoint> = pairs.iter().map(Correspondence::geo).collect();
    fit_calibration(&pixels, &geos, degree, frame)
}
