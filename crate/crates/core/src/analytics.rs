//! Per-frame analytics over tracker snapshots: motion state, heading, region
//! assignment, speed, pairwise separation and distance to the next regions.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::CalibrationModel;
use crate::geo::{
    angular_difference, haversine_distance, meters_to_feet, mps_to_knots, pixel_bearing, GeoPoint,
    PixelPoint,
};
use crate::geometry::{point_segment_distance, project_parameter};
use crate::region::{next_region_entry_point, region_bearings, Region, RegionGraph};
use crate::tracker::Track;

/// Color reported for aircraft outside every region.
pub const UNASSIGNED_COLOR: &str = "#808080";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("NotSameRegion: tracks {a} and {b} are not both assigned to {region:?}")]
    NotSameRegion { a: u64, b: u64, region: String },
    #[error("NoIntersection: track {track} does not cross the centerline of {region:?}")]
    NoIntersection { track: u64, region: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalyticsConfig {
    /// Speeds at or below this are reported as stationary, in knots.
    pub still_speed_kn: f64,
    /// Number of per-step speeds averaged into the reported speed.
    pub speed_window: usize,
    /// Smoothed-sample span used for motion classification and heading.
    pub motion_window: usize,
}

impl Default for AnalyticsConfig {
    fn default() -> Self {
        Self {
            still_speed_kn: 2.0,
            speed_window: 3,
            motion_window: 5,
        }
    }
}

fn window_span(track: &Track, window: usize) -> Option<(usize, usize)> {
    let n = track.smoothed_centers.len();
    if n < 2 {
        return None;
    }
    let last = n - 1;
    let first = last.saturating_sub(window.max(1));
    Some((first, last))
}

/// Ground speed between the newest smoothed center and the one `motion_window`
/// samples earlier, in knots.
pub fn window_speed_kn(
    track: &Track,
    model: &CalibrationModel,
    config: &AnalyticsConfig,
) -> Option<f64> {
    let (first, last) = window_span(track, config.motion_window)?;
    let (t0, c0) = track.smoothed_centers[first];
    let (t1, c1) = track.smoothed_centers[last];
    let dt = t1 - t0;
    if dt <= 0.0 {
        return None;
    }
    let d = haversine_distance(model.pixel_to_geo(c0), model.pixel_to_geo(c1));
    Some(mps_to_knots(d / dt))
}

/// True when the window speed exceeds the stationary threshold. Tracks with
/// fewer than two smoothed samples are stationary.
pub fn classify_motion(track: &Track, model: &CalibrationModel, config: &AnalyticsConfig) -> bool {
    window_speed_kn(track, model, config).is_some_and(|v| v > config.still_speed_kn)
}

/// Image-space direction of travel over the motion window, `None` when stationary.
pub fn heading(track: &Track, model: &CalibrationModel, config: &AnalyticsConfig) -> Option<f64> {
    if !classify_motion(track, model, config) {
        return None;
    }
    let (first, last) = window_span(track, config.motion_window)?;
    Some(pixel_bearing(
        track.smoothed_centers[first].1,
        track.smoothed_centers[last].1,
    ))
}

/// Mean of the last `speed_window` speeds between consecutive smoothed centers,
/// in knots. Stationary tracks report zero.
pub fn estimate_speed(
    track: &Track,
    model: &CalibrationModel,
    config: &AnalyticsConfig,
) -> Option<f64> {
    let n = track.smoothed_centers.len();
    if n < 2 {
        return None;
    }
    if !classify_motion(track, model, config) {
        return Some(0.0);
    }
    let steps = config.speed_window.max(1).min(n - 1);
    let mut total = 0.0;
    let mut count = 0usize;
    for i in (n - steps)..n {
        let (ta, a) = track.smoothed_centers[i - 1];
        let (tb, b) = track.smoothed_centers[i];
        let dt = tb - ta;
        if dt <= 0.0 {
            continue;
        }
        let d = haversine_distance(model.pixel_to_geo(a), model.pixel_to_geo(b));
        total += mps_to_knots(d / dt);
        count += 1;
    }
    (count > 0).then(|| total / count as f64)
}

/// Which rule decided a region assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignBranch {
    /// The box crosses no candidate centerline.
    NoIntersection,
    /// Exactly one candidate centerline crosses the box.
    Single,
    /// Several cross and the aircraft is stationary.
    StationaryMany,
    /// Several cross and the aircraft is moving.
    MovingMany,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionAssignment {
    pub region: Option<String>,
    pub branch: AssignBranch,
}

/// Assigns the track's current box to a region, searching only the previous
/// region and its neighbors.
pub fn assign_region(
    track: &Track,
    graph: &RegionGraph,
    model: &CalibrationModel,
    config: &AnalyticsConfig,
) -> RegionAssignment {
    let previous = track.region.as_deref().filter(|id| graph.get(id).is_some());
    let candidates = graph
        .candidate_regions(previous)
        .expect("previous region is known to the graph");
    assign_among(track, graph, candidates, model, config)
}

/// Same rule as [`assign_region`] but testing every region in the graph.
pub fn assign_region_exhaustive(
    track: &Track,
    graph: &RegionGraph,
    model: &CalibrationModel,
    config: &AnalyticsConfig,
) -> RegionAssignment {
    let all = graph.ids().collect();
    assign_among(track, graph, all, model, config)
}

fn assign_among(
    track: &Track,
    graph: &RegionGraph,
    candidates: BTreeSet<&str>,
    model: &CalibrationModel,
    config: &AnalyticsConfig,
) -> RegionAssignment {
    let bbox = track.last_box();
    let hit: Vec<&Region> = candidates
        .into_iter()
        .filter_map(|id| graph.get(id))
        .filter(|r| r.meets_box(bbox))
        .collect();
    match hit.as_slice() {
        [] => RegionAssignment {
            region: None,
            branch: AssignBranch::NoIntersection,
        },
        [only] => RegionAssignment {
            region: Some(only.id.clone()),
            branch: AssignBranch::Single,
        },
        many => match heading(track, model, config) {
            Some(h) => RegionAssignment {
                region: Some(best_aligned(many, h).id.clone()),
                branch: AssignBranch::MovingMany,
            },
            None => {
                let previous = track
                    .region
                    .as_deref()
                    .and_then(|p| many.iter().find(|r| r.id == p));
                let chosen = previous
                    .copied()
                    .unwrap_or_else(|| nearest_centerline(many, bbox.center()));
                RegionAssignment {
                    region: Some(chosen.id.clone()),
                    branch: AssignBranch::StationaryMany,
                }
            }
        },
    }
}

/// Angular gap between a heading and the closer of a region's two bearings.
pub fn direction_difference(region: &Region, heading_deg: f64) -> f64 {
    let (fwd, back) = region_bearings(region);
    angular_difference(fwd, heading_deg).min(angular_difference(back, heading_deg))
}

// `regions` arrive in id order, so keeping the first minimum breaks ties by id.
fn best_aligned<'a>(regions: &[&'a Region], heading_deg: f64) -> &'a Region {
    let mut best = regions[0];
    let mut best_diff = direction_difference(best, heading_deg);
    for r in &regions[1..] {
        let d = direction_difference(r, heading_deg);
        if d < best_diff {
            best = r;
            best_diff = d;
        } else if d == best_diff {
            tracing::debug!(kept = %best.id, other = %r.id, diff = d, "direction tie");
        }
    }
    best
}

fn nearest_centerline<'a>(regions: &[&'a Region], center: PixelPoint) -> &'a Region {
    let mut best = regions[0];
    let mut best_d = point_segment_distance(best.p1, best.p2, center);
    for r in &regions[1..] {
        let d = point_segment_distance(r.p1, r.p2, center);
        if d < best_d {
            best = r;
            best_d = d;
        }
    }
    best
}

fn unit(from: PixelPoint, to: PixelPoint) -> (f64, f64) {
    let (du, dv) = (to.u - from.u, to.v - from.v);
    let len = du.hypot(dv);
    (du / len, dv / len)
}

fn heading_vector(bearing_deg: f64) -> (f64, f64) {
    let r = bearing_deg.to_radians();
    (r.sin(), -r.cos())
}

fn along(p: PixelPoint, dir: (f64, f64)) -> f64 {
    p.u * dir.0 + p.v * dir.1
}

/// Head and tail of an aircraft on a region: the centerline crossings of its
/// box ordered along `dir`. A single crossing serves as both.
fn head_tail(track: &Track, region: &Region, dir: (f64, f64)) -> Option<(PixelPoint, PixelPoint)> {
    let pts = region.box_intersections(track.last_box());
    match pts.as_slice() {
        [] => None,
        [p] => Some((*p, *p)),
        [a, b, ..] => {
            if along(*a, dir) >= along(*b, dir) {
                Some((*a, *b))
            } else {
                Some((*b, *a))
            }
        }
    }
}

/// Distances between two aircraft sharing a region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub leader: u64,
    pub trailer: u64,
    pub region: String,
    pub d_tail_tail: f64,
    pub d_head_head: f64,
    /// Leader head to trailer tail.
    pub d_head_tail: f64,
    /// Leader tail to trailer head.
    pub d_tail_head: f64,
    pub d_min: f64,
}

impl SeparationReport {
    /// The four distances in `[tail-tail, head-head, head-tail, tail-head]` order.
    pub fn distances(&self) -> [f64; 4] {
        [
            self.d_tail_tail,
            self.d_head_head,
            self.d_head_tail,
            self.d_tail_head,
        ]
    }
}

/// Head/tail distances, in feet, between two aircraft on the same region.
pub fn pair_separation(
    a: &Track,
    b: &Track,
    region: &Region,
    model: &CalibrationModel,
    config: &AnalyticsConfig,
) -> Result<SeparationReport, AnalyticsError> {
    for t in [a, b] {
        if t.region.as_deref() != Some(region.id.as_str()) {
            return Err(AnalyticsError::NotSameRegion {
                a: a.id,
                b: b.id,
                region: region.id.clone(),
            });
        }
    }
    let region_dir = unit(region.p1, region.p2);
    let headings = [heading(a, model, config), heading(b, model, config)];

    // Shared direction of travel used to decide who leads.
    let mut pair_dir = region_dir;
    if let Some(h) = headings.iter().flatten().next() {
        let hv = heading_vector(*h);
        if hv.0 * region_dir.0 + hv.1 * region_dir.1 < 0.0 {
            pair_dir = (-region_dir.0, -region_dir.1);
        }
    }

    let ends = |t: &Track, h: Option<f64>| {
        let dir = h.map(heading_vector).unwrap_or(region_dir);
        head_tail(t, region, dir).ok_or_else(|| AnalyticsError::NoIntersection {
            track: t.id,
            region: region.id.clone(),
        })
    };
    let ea = ends(a, headings[0])?;
    let eb = ends(b, headings[1])?;
    let pos = |e: &(PixelPoint, PixelPoint)| along(e.0.midpoint(&e.1), pair_dir);
    let ((leader, (lh, lt)), (trailer, (th, tt))) = if pos(&ea) >= pos(&eb) {
        ((a.id, ea), (b.id, eb))
    } else {
        ((b.id, eb), (a.id, ea))
    };

    let feet = |p: PixelPoint, q: PixelPoint| {
        meters_to_feet(haversine_distance(
            model.pixel_to_geo(p),
            model.pixel_to_geo(q),
        ))
    };
    let d_tail_tail = feet(lt, tt);
    let d_head_head = feet(lh, th);
    let d_head_tail = feet(lh, tt);
    let d_tail_head = feet(lt, th);
    let d_min = d_tail_tail
        .min(d_head_head)
        .min(d_head_tail)
        .min(d_tail_head);
    Ok(SeparationReport {
        leader,
        trailer,
        region: region.id.clone(),
        d_tail_tail,
        d_head_head,
        d_head_tail,
        d_tail_head,
        d_min,
    })
}

/// Feet from the aircraft's leading crossing to each neighboring region's
/// entry point.
pub fn distance_to_next_regions(
    track: &Track,
    graph: &RegionGraph,
    model: &CalibrationModel,
) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    let Some(current) = track.region.as_deref().and_then(|id| graph.get(id)) else {
        return out;
    };
    let Ok(neighbors) = graph.neighbors(&current.id) else {
        return out;
    };
    let crossings = current.box_intersections(track.last_box());
    for id in neighbors {
        let Some(next) = graph.get(id) else { continue };
        let entry = next_region_entry_point(current, next);
        let entry_s = project_parameter(current.p1, current.p2, entry);
        let head = crossings
            .iter()
            .copied()
            .min_by(|p, q| {
                let dp = (project_parameter(current.p1, current.p2, *p) - entry_s).abs();
                let dq = (project_parameter(current.p1, current.p2, *q) - entry_s).abs();
                dp.total_cmp(&dq)
            })
            .unwrap_or_else(|| track.last_box().center());
        let d = haversine_distance(model.pixel_to_geo(head), model.pixel_to_geo(entry));
        out.insert(id.clone(), meters_to_feet(d));
    }
    out
}

/// Radar identity attached to a camera track.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Identity {
    pub callsign: String,
    pub actype: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextStyle {
    Black,
    White,
}

/// Per-track output record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackAnalytics {
    pub id: u64,
    #[serde(with = "geo_pair")]
    pub geo: GeoPoint,
    pub region: Option<String>,
    pub moving: bool,
    #[serde(rename = "speed_kn")]
    pub speed_knots: Option<f64>,
    #[serde(rename = "heading")]
    pub heading_deg: Option<f64>,
    pub color: String,
    pub text: TextStyle,
    pub callsign: Option<String>,
    pub actype: Option<String>,
    #[serde(rename = "next")]
    pub next_region_distances: BTreeMap<String, f64>,
}

/// Separation record as written to the analytics stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationRecord {
    pub a: u64,
    pub b: u64,
    pub region: String,
    pub d_min_ft: f64,
    pub d4_ft: [f64; 4],
}

impl From<&SeparationReport> for SeparationRecord {
    fn from(r: &SeparationReport) -> Self {
        Self {
            a: r.leader,
            b: r.trailer,
            region: r.region.clone(),
            d_min_ft: r.d_min,
            d4_ft: r.distances(),
        }
    }
}

/// Everything emitted for one timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsFrame {
    pub t: f64,
    pub tracks: Vec<TrackAnalytics>,
    pub separations: Vec<SeparationRecord>,
}

mod geo_pair {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::geo::GeoPoint;

    pub fn serialize<S: Serializer>(g: &GeoPoint, s: S) -> Result<S::Ok, S::Error> {
        [g.lat, g.lon].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<GeoPoint, D::Error> {
        let [lat, lon] = <[f64; 2]>::deserialize(d)?;
        Ok(GeoPoint::new(lat, lon))
    }
}

/// Builds the output record for one tick from confirmed tracks. Region fields
/// of the tracks must already hold this tick's assignment.
pub fn build_frame_output(
    t: f64,
    tracks: &[Track],
    graph: &RegionGraph,
    model: &CalibrationModel,
    identities: &BTreeMap<u64, Identity>,
    config: &AnalyticsConfig,
) -> AnalyticsFrame {
    let mut confirmed: Vec<&Track> = tracks.iter().filter(|t| t.is_confirmed()).collect();
    confirmed.sort_by_key(|t| t.id);

    let records = confirmed
        .iter()
        .map(|track| {
            let moving = classify_motion(track, model, config);
            let region = track.region.as_deref().and_then(|id| graph.get(id));
            let identity = identities.get(&track.id);
            TrackAnalytics {
                id: track.id,
                geo: model.pixel_to_geo(track.last_box().center()),
                region: region.map(|r| r.id.clone()),
                moving,
                speed_knots: estimate_speed(track, model, config),
                heading_deg: heading(track, model, config),
                color: region
                    .map(|r| r.display_color.clone())
                    .unwrap_or_else(|| UNASSIGNED_COLOR.to_string()),
                text: if moving {
                    TextStyle::Black
                } else {
                    TextStyle::White
                },
                callsign: identity.map(|i| i.callsign.clone()),
                actype: identity.map(|i| i.actype.clone()),
                next_region_distances: distance_to_next_regions(track, graph, model),
            }
        })
        .collect();

    let mut separations = Vec::new();
    for (i, a) in confirmed.iter().enumerate() {
        let Some(region) = a.region.as_deref().and_then(|id| graph.get(id)) else {
            continue;
        };
        for b in &confirmed[i + 1..] {
            if b.region.as_deref() != Some(region.id.as_str()) {
                continue;
            }
            match pair_separation(a, b, region, model, config) {
                Ok(report) => separations.push(SeparationRecord::from(&report)),
                Err(e) => tracing::debug!(error = %e, "separation skipped"),
            }
        }
    }

    AnalyticsFrame {
        t,
        tracks: records,
        separations,
    }
}
