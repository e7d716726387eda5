//! Tracking by detection: greedy box association between consecutive frames
//! with a small tentative/confirmed/dead lifecycle.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::PixelPoint;
use crate::geometry::BoundingBox;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackerError {
    #[error("NonMonotoneTime: frame at t={t} does not follow previous frame at t={last}")]
    NonMonotoneTime { t: f64, last: f64 },
    #[error("InvalidDetection: {0}")]
    InvalidDetection(String),
}

/// One detector output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub t: f64,
    pub bbox: BoundingBox,
    pub confidence: f64,
}

impl Detection {
    pub fn new(t: f64, bbox: BoundingBox, confidence: f64) -> Self {
        Self {
            t,
            bbox,
            confidence,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackState {
    Tentative,
    Confirmed,
    Dead,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    /// Minimum IoU for a track/detection pair to be admissible.
    pub iou_gate: f64,
    /// Alternative admissibility gate on box-center distance, in pixels.
    pub center_gate_px: f64,
    /// Consecutive matches (spawn included) before a track is confirmed.
    pub confirm_hits: u32,
    /// A track dies once it has missed more than this many consecutive frames.
    pub max_missed: u32,
    /// Moving-average window for box centers, in samples.
    pub smoothing_window: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            iou_gate: 0.1,
            center_gate_px: 100.0,
            confirm_hits: 2,
            max_missed: 3,
            smoothing_window: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub id: u64,
    pub history: Vec<(f64, BoundingBox)>,
    pub smoothed_centers: Vec<(f64, PixelPoint)>,
    pub region: Option<String>,
    pub missed: u32,
    /// Consecutive frames with a match, counting the spawning detection.
    pub hits: u32,
    pub state: TrackState,
}

impl Track {
    fn spawn(id: u64, det: &Detection, window: usize) -> Self {
        let mut track = Track {
            id,
            history: Vec::new(),
            smoothed_centers: Vec::new(),
            region: None,
            missed: 0,
            hits: 0,
            state: TrackState::Tentative,
        };
        track.observe(det.t, det.bbox, window);
        track
    }

    fn observe(&mut self, t: f64, bbox: BoundingBox, window: usize) {
        self.history.push((t, bbox));
        let c = smooth_center(self, window);
        self.smoothed_centers.push((t, c));
        self.missed = 0;
        self.hits += 1;
    }

    pub fn last_box(&self) -> &BoundingBox {
        &self.history.last().expect("tracks are never empty").1
    }

    pub fn last_time(&self) -> f64 {
        self.history.last().expect("tracks are never empty").0
    }

    pub fn is_confirmed(&self) -> bool {
        self.state == TrackState::Confirmed
    }
}

/// Mean of the last `min(window, len)` box centers of a track.
pub fn smooth_center(track: &Track, window: usize) -> PixelPoint {
    let n = window.max(1).min(track.history.len());
    assert!(n > 0, "smooth_center on an empty track");
    let (su, sv) = track.history[track.history.len() - n..]
        .iter()
        .map(|(_, b)| b.center())
        .fold((0.0, 0.0), |(su, sv), c| (su + c.u, sv + c.v));
    PixelPoint::new(su / n as f64, sv / n as f64)
}

/// Outcome of matching one frame's detections against live tracks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Association {
    pub matches: Vec<(u64, usize)>,
    pub unmatched_detections: Vec<usize>,
    pub unmatched_tracks: Vec<u64>,
}

/// Greedy one-to-one association of detections to tracks.
///
/// A pair is admissible when IoU reaches `iou_gate` or the box centers are
/// within `center_gate_px`. Admissible pairs are taken in order of decreasing
/// IoU, then increasing center distance, then increasing track id.
pub fn associate(
    tracks: &[Track],
    detections: &[Detection],
    t: f64,
    config: &TrackerConfig,
) -> Result<Association, TrackerError> {
    for tr in tracks {
        if tr.last_time() >= t {
            return Err(TrackerError::NonMonotoneTime {
                t,
                last: tr.last_time(),
            });
        }
    }
    for (i, d) in detections.iter().enumerate() {
        if d.t != t {
            return Err(TrackerError::InvalidDetection(format!(
                "detection {i} has t={} inside frame t={t}",
                d.t
            )));
        }
    }

    struct Pair {
        iou: f64,
        dist: f64,
        track: usize,
        det: usize,
    }
    let mut pairs = Vec::new();
    for (ti, tr) in tracks.iter().enumerate() {
        let last = tr.last_box();
        let lc = last.center();
        for (di, d) in detections.iter().enumerate() {
            let iou = last.iou(&d.bbox);
            let dist = lc.distance(&d.bbox.center());
            if iou >= config.iou_gate || dist <= config.center_gate_px {
                pairs.push(Pair {
                    iou,
                    dist,
                    track: ti,
                    det: di,
                });
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.iou
            .total_cmp(&a.iou)
            .then(a.dist.total_cmp(&b.dist))
            .then(tracks[a.track].id.cmp(&tracks[b.track].id))
            .then(a.det.cmp(&b.det))
    });

    let mut track_used = vec![false; tracks.len()];
    let mut det_used = vec![false; detections.len()];
    let mut matches = Vec::new();
    for p in pairs {
        if track_used[p.track] || det_used[p.det] {
            continue;
        }
        track_used[p.track] = true;
        det_used[p.det] = true;
        matches.push((tracks[p.track].id, p.det));
    }
    matches.sort_unstable();
    Ok(Association {
        matches,
        unmatched_detections: (0..detections.len()).filter(|&i| !det_used[i]).collect(),
        unmatched_tracks: tracks
            .iter()
            .zip(&track_used)
            .filter(|(_, used)| !**used)
            .map(|(t, _)| t.id)
            .collect(),
    })
}

/// What happened to each detection and track during one [`Tracker::step`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepOutcome {
    /// Track id that absorbed each detection, by detection index.
    pub detection_tracks: Vec<u64>,
    pub spawned: Vec<u64>,
    pub died: Vec<u64>,
}

/// Track store for one camera stream.
#[derive(Debug, Clone, Default)]
pub struct Tracker {
    config: TrackerConfig,
    live: Vec<Track>,
    finished: Vec<Track>,
    next_id: u64,
    last_t: Option<f64>,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Self {
        Self {
            config,
            live: Vec::new(),
            finished: Vec::new(),
            next_id: 1,
            last_t: None,
        }
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// Live tracks (tentative and confirmed) ordered by id.
    pub fn tracks(&self) -> &[Track] {
        &self.live
    }

    pub fn tracks_mut(&mut self) -> &mut [Track] {
        &mut self.live
    }

    /// Tracks that have died, in order of death.
    pub fn finished(&self) -> &[Track] {
        &self.finished
    }

    pub fn track(&self, id: u64) -> Option<&Track> {
        self.live.iter().chain(&self.finished).find(|t| t.id == id)
    }

    pub fn last_time(&self) -> Option<f64> {
        self.last_t
    }

    /// Advances the tracker by one frame.
    pub fn step(&mut self, detections: &[Detection], t: f64) -> Result<StepOutcome, TrackerError> {
        if !t.is_finite() {
            return Err(TrackerError::InvalidDetection(format!(
                "frame time {t} is not finite"
            )));
        }
        if let Some(last) = self.last_t {
            if t <= last {
                return Err(TrackerError::NonMonotoneTime { t, last });
            }
        }
        let assoc = associate(&self.live, detections, t, &self.config)?;
        self.last_t = Some(t);

        let window = self.config.smoothing_window;
        let mut outcome = StepOutcome {
            detection_tracks: vec![0; detections.len()],
            ..Default::default()
        };
        for &(id, di) in &assoc.matches {
            let track = self
                .live
                .iter_mut()
                .find(|tr| tr.id == id)
                .expect("matched track is live");
            track.observe(t, detections[di].bbox, window);
            if track.state == TrackState::Tentative && track.hits >= self.config.confirm_hits {
                track.state = TrackState::Confirmed;
            }
            outcome.detection_tracks[di] = id;
        }
        for id in &assoc.unmatched_tracks {
            let track = self.live.iter_mut().find(|tr| tr.id == *id).unwrap();
            track.missed += 1;
            track.hits = 0;
            if track.missed > self.config.max_missed {
                track.state = TrackState::Dead;
                outcome.died.push(track.id);
            }
        }
        for &di in &assoc.unmatched_detections {
            let id = self.next_id;
            self.next_id += 1;
            let mut track = Track::spawn(id, &detections[di], window);
            if track.hits >= self.config.confirm_hits {
                track.state = TrackState::Confirmed;
            }
            self.live.push(track);
            outcome.detection_tracks[di] = id;
            outcome.spawned.push(id);
        }
        let (dead, live): (Vec<Track>, Vec<Track>) = std::mem::take(&mut self.live)
            .into_iter()
            .partition(|t| t.state == TrackState::Dead);
        self.live = live;
        self.finished.extend(dead);
        Ok(outcome)
    }
}
