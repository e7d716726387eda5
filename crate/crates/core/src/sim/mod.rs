//! Synthetic airside scenarios: aircraft following centerline routes at
//! piecewise-constant speed, seen through a pinhole camera and reported by a
//! noisy surveillance radar.

pub mod camera;
pub mod eval;
pub mod reference;

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::calibration::Correspondence;
use crate::geo::{knots_to_mps, normalize_degrees, PixelPoint};
use crate::geometry::BoundingBox;
use crate::region::{entry_point, RegionError, RegionGraph};
use crate::stream::{
    write_jsonl, DetectionFrame, DetectionRecord, RadarFrame, RadarRecord, StreamError, TruthRecord,
};

pub use camera::{project, LocalFrame, PinholeCamera, ProjectionError};
pub use eval::{evaluate_positions, EvalError, PositionErrorReport};

/// Output file names inside a scenario directory.
pub const DETECTIONS_FILE: &str = "detections.jsonl";
pub const RADAR_FILE: &str = "radar.jsonl";
pub const TRUTH_FILE: &str = "truth.jsonl";
pub const CORRESPONDENCES_FILE: &str = "correspondences.json";
pub const REGIONS_FILE: &str = "regions.json";
pub const META_FILE: &str = "meta.json";

#[derive(Debug, Error)]
pub enum SimError {
    #[error("BrokenRoute: {callsign} moves from {from} to {to}, which are not adjacent")]
    BrokenRoute {
        callsign: String,
        from: String,
        to: String,
    },
    #[error("UnknownRegion: {callsign} routes through {region:?}")]
    UnknownRegion { callsign: String, region: String },
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error("JsonError: {0}")]
    Json(#[from] serde_json::Error),
    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
}

/// Commanded speed from `at_s` seconds after the aircraft appears.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedStep {
    pub at_s: f64,
    pub speed_kn: f64,
}

/// Fixed stand position in local meters relative to the camera's ground point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParkedSpec {
    pub east_m: f64,
    pub north_m: f64,
    pub heading_deg: f64,
}

fn default_aircraft_height() -> f64 {
    12.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AircraftSpec {
    pub callsign: String,
    #[serde(rename = "type")]
    pub actype: String,
    /// Region ids traversed in order; empty for a parked aircraft.
    #[serde(default)]
    pub route: Vec<String>,
    #[serde(default)]
    pub speed_profile: Vec<SpeedStep>,
    #[serde(default)]
    pub start_time_s: f64,
    pub length_m: f64,
    pub wingspan_m: f64,
    #[serde(default = "default_aircraft_height")]
    pub height_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parked: Option<ParkedSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// Standard deviation added independently to each box edge, pixels.
    pub bbox_jitter_px: f64,
    /// Probability that a visible aircraft is missing from a frame.
    pub dropout: f64,
    /// Standard deviation of radar position noise per axis, meters.
    pub radar_sigma_m: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            bbox_jitter_px: 2.0,
            dropout: 0.0,
            radar_sigma_m: 5.0,
        }
    }
}

/// Rectangle of local ground positions sampled for calibration pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub east_min_m: f64,
    pub east_max_m: f64,
    pub north_min_m: f64,
    pub north_max_m: f64,
    pub spacing_m: f64,
}

fn default_tick() -> f64 {
    1.0
}

fn default_reference_height() -> f64 {
    6.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Region file, relative to the config file's directory.
    pub regions: PathBuf,
    pub camera: PinholeCamera,
    /// Height above ground of the plane on which centerlines are drawn and
    /// calibration pairs are sampled; roughly where box centers sit.
    #[serde(default = "default_reference_height")]
    pub reference_height_m: f64,
    pub aircraft: Vec<AircraftSpec>,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub duration_s: f64,
    #[serde(default = "default_tick")]
    pub tick_s: f64,
    pub seed: u64,
    /// Defaults to the region layout's extent plus a margin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration_grid: Option<GridSpec>,
}

impl ScenarioConfig {
    /// Reads a config and the region file it points at.
    pub fn load(path: &Path) -> Result<(ScenarioConfig, RegionGraph), SimError> {
        let config: ScenarioConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let graph = RegionGraph::from_json_str(&fs::read_to_string(base.join(&config.regions))?)?;
        Ok((config, graph))
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        self.camera.validate().map_err(SimError::InvalidConfig)?;
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad(format!(
                "duration_s must be positive, got {}",
                self.duration_s
            ));
        }
        if !(self.tick_s.is_finite() && self.tick_s > 0.0) {
            return bad(format!("tick_s must be positive, got {}", self.tick_s));
        }
        if !(self.reference_height_m >= 0.0 && self.reference_height_m < self.camera.height_m) {
            return bad("reference_height_m must lie between the ground and the camera".into());
        }
        let n = &self.noise;
        if !(n.bbox_jitter_px >= 0.0 && n.radar_sigma_m >= 0.0 && (0.0..=1.0).contains(&n.dropout))
        {
            return bad("noise parameters out of range".into());
        }
        if let Some(g) = &self.calibration_grid {
            if !(g.spacing_m > 0.0 && g.east_max_m > g.east_min_m && g.north_max_m > g.north_min_m)
            {
                return bad("calibration grid is empty".into());
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for a in &self.aircraft {
            if !seen.insert(a.callsign.as_str()) {
                return bad(format!("duplicate callsign {}", a.callsign));
            }
            if !(a.length_m > 0.0 && a.wingspan_m > 0.0 && a.height_m > 0.0) {
                return bad(format!("{}: dimensions must be positive", a.callsign));
            }
            if !(a.start_time_s.is_finite() && a.start_time_s >= 0.0) {
                return bad(format!("{}: start_time_s must be non-negative", a.callsign));
            }
            match (&a.parked, a.route.is_empty()) {
                (Some(_), false) => {
                    return bad(format!(
                        "{}: parked aircraft cannot have a route",
                        a.callsign
                    ))
                }
                (None, true) => {
                    return bad(format!(
                        "{}: needs a route or a parked position",
                        a.callsign
                    ))
                }
                _ => {}
            }
            if a.parked.is_none() {
                let p = &a.speed_profile;
                if p.first().map(|s| s.at_s) != Some(0.0) {
                    return bad(format!(
                        "{}: speed profile must start at at_s = 0",
                        a.callsign
                    ));
                }
                if p.windows(2).any(|w| w[1].at_s < w[0].at_s) {
                    return bad(format!(
                        "{}: speed profile times must be non-decreasing",
                        a.callsign
                    ));
                }
                if p.iter()
                    .any(|s| !(s.speed_kn.is_finite() && s.speed_kn >= 0.0))
                {
                    return bad(format!("{}: speeds must be non-negative", a.callsign));
                }
            }
        }
        Ok(())
    }

    pub fn tick_count(&self) -> usize {
        (self.duration_s / self.tick_s + 1e-9).floor() as usize
    }
}

/// Polyline in local meters with the region each leg belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundRoute {
    pub points: Vec<(f64, f64)>,
    pub regions: Vec<String>,
    cumulative: Vec<f64>,
}

impl GroundRoute {
    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    /// Position, leg heading and leg index at arc length `s` (clamped). A
    /// point exactly on a junction belongs to the earlier leg.
    pub fn locate(&self, s: f64) -> ((f64, f64), f64, usize) {
        let s = s.clamp(0.0, self.length());
        let leg = (0..self.regions.len())
            .find(|&i| s <= self.cumulative[i + 1])
            .unwrap_or(self.regions.len() - 1);
        let (a, b) = (self.points[leg], self.points[leg + 1]);
        let len = self.cumulative[leg + 1] - self.cumulative[leg];
        let f = ((s - self.cumulative[leg]) / len).clamp(0.0, 1.0);
        let pos = (a.0 + f * (b.0 - a.0), a.1 + f * (b.1 - a.1));
        (
            pos,
            normalize_degrees((b.0 - a.0).atan2(b.1 - a.1).to_degrees()),
            leg,
        )
    }
}

/// Ground footprint of each region's centerline on the reference plane.
pub fn ground_centerlines(
    graph: &RegionGraph,
    camera: &PinholeCamera,
    plane_m: f64,
) -> Result<BTreeMap<String, ((f64, f64), (f64, f64))>, SimError> {
    graph
        .regions()
        .map(|r| {
            let a = camera.unproject_to_plane(r.p1, plane_m)?;
            let b = camera.unproject_to_plane(r.p2, plane_m)?;
            Ok((r.id.clone(), (a, b)))
        })
        .collect()
}

fn as_point(p: (f64, f64)) -> PixelPoint {
    PixelPoint::new(p.0, p.1)
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Builds the driven polyline for a route: from the end of the first region
/// away from the first junction, through each junction, to the end of the
/// last region away from the final junction.
pub fn build_route(
    spec: &AircraftSpec,
    graph: &RegionGraph,
    ground: &BTreeMap<String, ((f64, f64), (f64, f64))>,
) -> Result<GroundRoute, SimError> {
    for id in &spec.route {
        if graph.get(id).is_none() {
            return Err(SimError::UnknownRegion {
                callsign: spec.callsign.clone(),
                region: id.clone(),
            });
        }
    }
    for w in spec.route.windows(2) {
        if !graph.are_adjacent(&w[0], &w[1]) {
            return Err(SimError::BrokenRoute {
                callsign: spec.callsign.clone(),
                from: w[0].clone(),
                to: w[1].clone(),
            });
        }
    }
    let seg = |id: &String| ground[id];
    let junctions: Vec<(f64, f64)> = spec
        .route
        .windows(2)
        .map(|w| {
            let (a1, a2) = seg(&w[0]);
            let (b1, b2) = seg(&w[1]);
            let p = entry_point(as_point(a1), as_point(a2), as_point(b1), as_point(b2));
            (p.u, p.v)
        })
        .collect();
    let far_end = |(a, b): ((f64, f64), (f64, f64)), from: (f64, f64)| {
        if dist(a, from) >= dist(b, from) {
            a
        } else {
            b
        }
    };
    let first = seg(&spec.route[0]);
    let last = seg(spec.route.last().expect("route is non-empty"));
    let (start, end) = match (junctions.first(), junctions.last()) {
        (Some(j0), Some(jn)) => (far_end(first, *j0), far_end(last, *jn)),
        _ => first,
    };
    let mut points = vec![start];
    points.extend(junctions);
    points.push(end);

    let mut cumulative = vec![0.0];
    for w in points.windows(2) {
        let len = dist(w[0], w[1]);
        if len < 0.01 {
            return Err(SimError::InvalidConfig(format!(
                "{}: route has a degenerate leg near ({:.1}, {:.1})",
                spec.callsign, w[0].0, w[0].1
            )));
        }
        cumulative.push(cumulative.last().unwrap() + len);
    }
    Ok(GroundRoute {
        points,
        regions: spec.route.clone(),
        cumulative,
    })
}

/// Distance covered `elapsed` seconds after appearing, meters.
pub fn distance_along(profile: &[SpeedStep], elapsed: f64) -> f64 {
    let mut s = 0.0;
    for (i, step) in profile.iter().enumerate() {
        let end = profile.get(i + 1).map_or(f64::INFINITY, |n| n.at_s);
        if elapsed > step.at_s {
            s += knots_to_mps(step.speed_kn) * (elapsed.min(end) - step.at_s);
        }
    }
    s
}

/// Commanded speed `elapsed` seconds after appearing, knots.
pub fn commanded_speed(profile: &[SpeedStep], elapsed: f64) -> f64 {
    profile
        .iter()
        .rev()
        .find(|s| s.at_s <= elapsed)
        .map_or(0.0, |s| s.speed_kn)
}

/// True kinematic state of one aircraft at one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct AircraftState {
    pub east_m: f64,
    pub north_m: f64,
    pub heading_deg: f64,
    pub speed_kn: f64,
    pub region: Option<String>,
}

enum Motion {
    Route(GroundRoute),
    Parked(ParkedSpec),
}

fn state_at(spec: &AircraftSpec, motion: &Motion, t: f64) -> Option<AircraftState> {
    if t < spec.start_time_s {
        return None;
    }
    let elapsed = t - spec.start_time_s;
    Some(match motion {
        Motion::Parked(p) => AircraftState {
            east_m: p.east_m,
            north_m: p.north_m,
            heading_deg: normalize_degrees(p.heading_deg),
            speed_kn: 0.0,
            region: None,
        },
        Motion::Route(route) => {
            let s = distance_along(&spec.speed_profile, elapsed);
            let arrived = s >= route.length();
            let ((e, n), heading, leg) = route.locate(s);
            AircraftState {
                east_m: e,
                north_m: n,
                heading_deg: heading,
                speed_kn: if arrived {
                    0.0
                } else {
                    commanded_speed(&spec.speed_profile, elapsed)
                },
                region: Some(route.regions[leg].clone()),
            }
        }
    })
}

/// Axis-aligned image bounds of the aircraft, modelled as the diamond through
/// nose, tail and wingtips extruded from the ground to its full height. `None`
/// when any point is behind the camera or the box leaves the frame.
pub fn aircraft_box(
    camera: &PinholeCamera,
    spec: &AircraftSpec,
    state: &AircraftState,
) -> Option<BoundingBox> {
    let (s, c) = state.heading_deg.to_radians().sin_cos();
    let fwd = (s, c);
    let right = (c, -s);
    // (along length, across span)
    let diamond = [(0.5, 0.0), (-0.5, 0.0), (0.0, -0.5), (0.0, 0.5)];
    let (mut x0, mut y0, mut x1, mut y1) = (
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    for (a, b) in diamond {
        let e = state.east_m + a * spec.length_m * fwd.0 + b * spec.wingspan_m * right.0;
        let n = state.north_m + a * spec.length_m * fwd.1 + b * spec.wingspan_m * right.1;
        for z in [0.0, spec.height_m] {
            let p = camera.project_local(e, n, z).ok()?;
            x0 = x0.min(p.u);
            y0 = y0.min(p.v);
            x1 = x1.max(p.u);
            y1 = y1.max(p.v);
        }
    }
    let (w, h) = (camera.width_px as f64, camera.height_px as f64);
    if x0 < 0.0 || y0 < 0.0 || x1 > w || y1 > h {
        return None;
    }
    BoundingBox::new(x0, y0, x1, y1).ok()
}

fn default_grid(ground: &BTreeMap<String, ((f64, f64), (f64, f64))>) -> GridSpec {
    let margin = 60.0;
    let pts = ground.values().flat_map(|(a, b)| [*a, *b]);
    let (mut e0, mut e1, mut n0, mut n1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for (e, n) in pts {
        e0 = e0.min(e);
        e1 = e1.max(e);
        n0 = n0.min(n);
        n1 = n1.max(n);
    }
    GridSpec {
        east_min_m: e0 - margin,
        east_max_m: e1 + margin,
        north_min_m: n0 - margin,
        north_max_m: n1 + margin,
        spacing_m: 20.0,
    }
}

/// Calibration pairs on a ground grid: pixel position of each grid node on
/// the reference plane, labeled with the geographic position beneath it.
pub fn sample_correspondences(
    camera: &PinholeCamera,
    plane_m: f64,
    grid: &GridSpec,
) -> Vec<Correspondence> {
    let frame = camera.frame();
    let local = camera.local_frame();
    let ne = ((grid.east_max_m - grid.east_min_m) / grid.spacing_m).floor() as usize;
    let nn = ((grid.north_max_m - grid.north_min_m) / grid.spacing_m).floor() as usize;
    let mut out = Vec::new();
    for j in 0..=nn {
        for i in 0..=ne {
            let e = grid.east_min_m + i as f64 * grid.spacing_m;
            let n = grid.north_min_m + j as f64 * grid.spacing_m;
            let Ok(p) = camera.project_local(e, n, plane_m) else {
                continue;
            };
            if !frame.contains(p) {
                continue;
            }
            let g = local.to_geo(e, n);
            out.push(Correspondence {
                u: p.u,
                v: p.v,
                lat: g.lat,
                lon: g.lon,
            });
        }
    }
    out
}

/// Everything a scenario run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub detections: Vec<DetectionFrame>,
    /// Index into the config's aircraft list behind each detection.
    pub detection_sources: Vec<Vec<usize>>,
    pub radar: Vec<RadarFrame>,
    pub truth: Vec<TruthRecord>,
    pub correspondences: Vec<Correspondence>,
    pub meta: serde_json::Value,
}

const STREAM_DROPOUT: u64 = 1;
const STREAM_JITTER: u64 = 2;
const STREAM_CONFIDENCE: u64 = 3;
const STREAM_RADAR: u64 = 4;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn jittered_box(b: &BoundingBox, noise: [f64; 4]) -> BoundingBox {
    let (mut x0, mut x1) = (b.x_min() + noise[0], b.x_max() + noise[2]);
    let (mut y0, mut y1) = (b.y_min() + noise[1], b.y_max() + noise[3]);
    if x1 < x0 {
        std::mem::swap(&mut x0, &mut x1);
    }
    if y1 < y0 {
        std::mem::swap(&mut y0, &mut y1);
    }
    x1 = x1.max(x0 + 1.0);
    y1 = y1.max(y0 + 1.0);
    BoundingBox::new(x0, y0, x1, y1).expect("ordered finite corners")
}

/// Runs a scenario. Deterministic in `(config, graph)`.
pub fn generate(config: &ScenarioConfig, graph: &RegionGraph) -> Result<ScenarioOutput, SimError> {
    config.validate()?;
    let camera = &config.camera;
    let local = camera.local_frame();
    let ground = ground_centerlines(graph, camera, config.reference_height_m)?;
    let motions = config
        .aircraft
        .iter()
        .map(|a| match &a.parked {
            Some(p) => Ok(Motion::Parked(*p)),
            None => build_route(a, graph, &ground).map(Motion::Route),
        })
        .collect::<Result<Vec<_>, _>>()?;

    let noise = &config.noise;
    let mut dropout_rng = stream_rng(config.seed, STREAM_DROPOUT);
    let mut jitter_rng = stream_rng(config.seed, STREAM_JITTER);
    let mut conf_rng = stream_rng(config.seed, STREAM_CONFIDENCE);
    let mut radar_rng = stream_rng(config.seed, STREAM_RADAR);
    let jitter = Normal::new(0.0, noise.bbox_jitter_px)
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let radar_noise = Normal::new(0.0, noise.radar_sigma_m)
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?;

    let ticks = config.tick_count();
    let mut out = ScenarioOutput {
        detections: Vec::with_capacity(ticks),
        detection_sources: Vec::with_capacity(ticks),
        radar: Vec::with_capacity(ticks),
        truth: Vec::new(),
        correspondences: Vec::new(),
        meta: serde_json::Value::Null,
    };
    let (mut n_visible, mut n_radar) = (0usize, 0usize);

    for k in 0..ticks {
        let t = k as f64 * config.tick_s;
        let mut frame: Vec<(DetectionRecord, usize)> = Vec::new();
        let mut radar = Vec::new();
        for (idx, (spec, motion)) in config.aircraft.iter().zip(&motions).enumerate() {
            let Some(state) = state_at(spec, motion, t) else {
                continue;
            };
            let geo = local.to_geo(state.east_m, state.north_m);
            let bbox = aircraft_box(camera, spec, &state);
            if let Some(b) = &bbox {
                n_visible += 1;
                let dropped = dropout_rng.random::<f64>() < noise.dropout;
                let conf = 0.6 + 0.4 * conf_rng.random::<f64>();
                let edge_noise = [(); 4].map(|_| jitter.sample(&mut jitter_rng));
                if !dropped {
                    frame.push((
                        DetectionRecord {
                            bbox: jittered_box(b, edge_noise),
                            conf,
                        },
                        idx,
                    ));
                }
            }
            n_radar += 1;
            let (de, dn) = (
                radar_noise.sample(&mut radar_rng),
                radar_noise.sample(&mut radar_rng),
            );
            let seen = local.to_geo(state.east_m + de, state.north_m + dn);
            radar.push(RadarRecord {
                callsign: spec.callsign.clone(),
                actype: spec.actype.clone(),
                lat: seen.lat,
                lon: seen.lon,
                speed_kn: Some(state.speed_kn),
            });
            out.truth.push(TruthRecord {
                t,
                callsign: spec.callsign.clone(),
                lat: geo.lat,
                lon: geo.lon,
                speed_kn: state.speed_kn,
                heading: state.heading_deg,
                region: state.region.clone(),
                bbox,
            });
        }
        // detector output order carries no identity
        frame.sort_by(|a, b| {
            (a.0.bbox.x_min(), a.0.bbox.y_min())
                .partial_cmp(&(b.0.bbox.x_min(), b.0.bbox.y_min()))
                .expect("finite boxes")
        });
        out.detection_sources
            .push(frame.iter().map(|(_, i)| *i).collect());
        out.detections.push(DetectionFrame {
            t,
            detections: frame.into_iter().map(|(d, _)| d).collect(),
        });
        out.radar.push(RadarFrame { t, tracks: radar });
    }

    let grid = config
        .calibration_grid
        .unwrap_or_else(|| default_grid(&ground));
    out.correspondences = sample_correspondences(camera, config.reference_height_m, &grid);
    out.meta = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "rng": "ChaCha8Rng",
        "seed": config.seed,
        "ticks": ticks,
        "draws": {
            "dropout": {"stream": STREAM_DROPOUT, "distribution": "uniform[0,1)", "per": "visible aircraft per tick", "count": n_visible},
            "confidence": {"stream": STREAM_CONFIDENCE, "distribution": "uniform[0,1) mapped to [0.6,1.0)", "per": "visible aircraft per tick", "count": n_visible},
            "bbox_jitter": {"stream": STREAM_JITTER, "distribution": format!("normal(0, {})", noise.bbox_jitter_px), "per": "box edge (x_min, y_min, x_max, y_max) per visible aircraft per tick", "count": 4 * n_visible},
            "radar_noise": {"stream": STREAM_RADAR, "distribution": format!("normal(0, {})", noise.radar_sigma_m), "per": "east then north offset per active aircraft per tick", "count": 2 * n_radar},
        },
        "calibration_grid": grid,
        "config": config,
    });
    Ok(out)
}

impl ScenarioOutput {
    /// Writes the detection, radar and truth streams, calibration pairs,
    /// region file and metadata into `dir`.
    pub fn write_to_dir(&self, dir: &Path, graph: &RegionGraph) -> Result<(), SimError> {
        fs::create_dir_all(dir)?;
        let jsonl = |name: &str| -> Result<BufWriter<fs::File>, SimError> {
            Ok(BufWriter::new(fs::File::create(dir.join(name))?))
        };
        write_jsonl(&mut jsonl(DETECTIONS_FILE)?, &self.detections)?;
        write_jsonl(&mut jsonl(RADAR_FILE)?, &self.radar)?;
        write_jsonl(&mut jsonl(TRUTH_FILE)?, &self.truth)?;
        fs::write(
            dir.join(CORRESPONDENCES_FILE),
            serde_json::to_string_pretty(&self.correspondences)?,
        )?;
        fs::write(
            dir.join(REGIONS_FILE),
            serde_json::to_string_pretty(&graph.to_file())?,
        )?;
        fs::write(
            dir.join(META_FILE),
            serde_json::to_string_pretty(&self.meta)?,
        )?;
        Ok(())
    }
}
