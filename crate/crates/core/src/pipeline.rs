//! Per-tick composition of tracking, region assignment, radar fusion and
//! analytics over detection and radar streams.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{
    assign_region, assign_region_exhaustive, build_frame_output, AnalyticsConfig, AnalyticsFrame,
    Identity, RegionAssignment,
};
use crate::calibration::CalibrationModel;
use crate::fusion::{FusionConfig, IdentityTracker, RadarSample, RadarTrack};
use crate::geo::GeoPoint;
use crate::region::RegionGraph;
use crate::stream::{
    write_jsonl_line, DetectionFrame, JsonlReader, Meta, MetaRecord, RadarFrame, StreamError,
};
use crate::tracker::{Tracker, TrackerConfig, TrackerError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("{source} (detection stream line {line})")]
    Tracker {
        line: usize,
        #[source]
        source: TrackerError,
    },
    #[error("NonMonotoneTime: radar stream line {line} at t={t} follows t={last}")]
    RadarTime { line: usize, t: f64, last: f64 },
    #[error(transparent)]
    Stream(#[from] StreamError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regions: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    pub tracker: TrackerConfig,
    pub analytics: AnalyticsConfig,
    pub fusion: FusionConfig,
    pub tick_s: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            regions: None,
            model: None,
            tracker: TrackerConfig::default(),
            analytics: AnalyticsConfig::default(),
            fusion: FusionConfig::default(),
            tick_s: 1.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(PipelineError::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        let count = |name: &str, v: usize| positive(name, v as f64);
        let t = &self.tracker;
        positive("tick_s", self.tick_s)?;
        positive("tracker.iou_gate", t.iou_gate)?;
        positive("tracker.center_gate_px", t.center_gate_px)?;
        count("tracker.confirm_hits", t.confirm_hits as usize)?;
        count("tracker.smoothing_window", t.smoothing_window)?;
        if t.iou_gate > 1.0 {
            return Err(PipelineError::InvalidConfig(
                "tracker.iou_gate must not exceed 1".into(),
            ));
        }
        let a = &self.analytics;
        positive("analytics.still_speed_kn", a.still_speed_kn)?;
        count("analytics.speed_window", a.speed_window)?;
        count("analytics.motion_window", a.motion_window)?;
        let f = &self.fusion;
        positive("fusion.gate_m", f.gate_m)?;
        positive("fusion.window_s", f.window_s)?;
        positive("fusion.tick_s", f.tick_s)?;
        positive("fusion.release_factor", f.release_factor)?;
        count("fusion.min_shared_ticks", f.min_shared_ticks)?;
        count("fusion.release_ticks", f.release_ticks as usize)?;
        Ok(())
    }
}

/// Region decision for one live track at one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentRecord {
    pub track: u64,
    pub previous: Option<String>,
    pub assignment: RegionAssignment,
    /// All-regions decision from the same state, when auditing.
    pub exhaustive: Option<RegionAssignment>,
}

/// Everything produced by one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub frame: AnalyticsFrame,
    /// Track id given to each detection of the input frame, in order.
    pub detection_tracks: Vec<u64>,
    pub assignments: Vec<AssignmentRecord>,
}

/// Streaming analytics engine. Feed radar updates with [`Pipeline::push_radar`]
/// and detection frames with [`Pipeline::step`]; only radar already pushed is
/// used, so callers control causality.
#[derive(Debug, Clone)]
pub struct Pipeline<'a> {
    graph: &'a RegionGraph,
    model: &'a CalibrationModel,
    config: PipelineConfig,
    tracker: Tracker,
    identities: IdentityTracker,
    radar: BTreeMap<String, RadarTrack>,
    trails: BTreeMap<u64, Vec<(f64, GeoPoint)>>,
    audit_regions: bool,
}

impl<'a> Pipeline<'a> {
    pub fn new(
        graph: &'a RegionGraph,
        model: &'a CalibrationModel,
        config: PipelineConfig,
    ) -> Result<Self, PipelineError> {
        config.validate()?;
        Ok(Self {
            graph,
            model,
            tracker: Tracker::new(config.tracker.clone()),
            identities: IdentityTracker::new(config.fusion.clone()),
            config,
            radar: BTreeMap::new(),
            trails: BTreeMap::new(),
            audit_regions: false,
        })
    }

    /// Also computes the all-regions assignment for every track, reported in
    /// [`StepReport::assignments`]. Does not change the output.
    pub fn with_region_audit(mut self, on: bool) -> Self {
        self.audit_regions = on;
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn tracker(&self) -> &Tracker {
        &self.tracker
    }

    fn horizon(&self, now: f64) -> f64 {
        now - self.config.fusion.window_s - self.config.fusion.tick_s
    }

    pub fn push_radar(&mut self, frame: &RadarFrame) {
        for r in &frame.tracks {
            let track = self
                .radar
                .entry(r.callsign.clone())
                .or_insert_with(|| RadarTrack {
                    callsign: r.callsign.clone(),
                    actype: r.actype.clone(),
                    samples: Vec::new(),
                });
            track.actype.clone_from(&r.actype);
            track.samples.push(RadarSample {
                t: frame.t,
                geo: r.geo(),
                speed_kn: r.speed_kn,
            });
        }
    }

    pub fn step(&mut self, frame: &DetectionFrame) -> Result<StepReport, TrackerError> {
        let t = frame.t;
        let outcome = self.tracker.step(&frame.to_detections(), t)?;

        let mut assignments = Vec::new();
        let (graph, model, cfg) = (self.graph, self.model, &self.config.analytics);
        for track in self.tracker.tracks_mut() {
            let assignment = assign_region(track, graph, model, cfg);
            let exhaustive = self
                .audit_regions
                .then(|| assign_region_exhaustive(track, graph, model, cfg));
            let previous = std::mem::replace(&mut track.region, assignment.region.clone());
            assignments.push(AssignmentRecord {
                track: track.id,
                previous,
                assignment,
                exhaustive,
            });
        }

        // geographic trails of confirmed tracks, for fusion
        let horizon = self.horizon(t);
        let mut live = std::collections::BTreeSet::new();
        for track in self.tracker.tracks().iter().filter(|tr| tr.is_confirmed()) {
            live.insert(track.id);
            let trail = self.trails.entry(track.id).or_default();
            if track.last_time() == t {
                trail.push((t, model.pixel_to_geo(track.last_box().center())));
            }
            trail.retain(|(ts, _)| *ts >= horizon);
        }
        self.trails.retain(|id, _| live.contains(id));
        for r in self.radar.values_mut() {
            r.samples.retain(|s| s.t >= horizon);
        }
        self.radar.retain(|_, r| !r.samples.is_empty());

        let radar: Vec<RadarTrack> = self.radar.values().cloned().collect();
        let fused = self.identities.update(&self.trails, &radar, t);
        let identities: BTreeMap<u64, Identity> = fused
            .assignments
            .into_iter()
            .filter_map(|(id, callsign)| {
                let actype = self.radar.get(&callsign)?.actype.clone();
                Some((id, Identity { callsign, actype }))
            })
            .collect();

        let frame = build_frame_output(t, self.tracker.tracks(), graph, model, &identities, cfg);
        Ok(StepReport {
            frame,
            detection_tracks: outcome.detection_tracks,
            assignments,
        })
    }
}

/// Runs the pipeline over in-memory streams. Radar frames with `t` up to and
/// including each detection frame's time are pushed before that frame.
pub fn run_pipeline(
    detections: &[DetectionFrame],
    radar: &[RadarFrame],
    graph: &RegionGraph,
    model: &CalibrationModel,
    config: &PipelineConfig,
) -> Result<Vec<AnalyticsFrame>, PipelineError> {
    let mut pipeline = Pipeline::new(graph, model, config.clone())?;
    let mut next_radar = 0;
    let mut out = Vec::with_capacity(detections.len());
    for (i, frame) in detections.iter().enumerate() {
        while next_radar < radar.len() && radar[next_radar].t <= frame.t {
            pipeline.push_radar(&radar[next_radar]);
            next_radar += 1;
        }
        let report = pipeline
            .step(frame)
            .map_err(|source| PipelineError::Tracker {
                line: i + 1,
                source,
            })?;
        out.push(report.frame);
    }
    Ok(out)
}

/// Metadata header written as the first analytics line.
pub fn meta_record(config: &PipelineConfig) -> MetaRecord {
    MetaRecord {
        meta: Meta {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: serde_json::to_value(config).expect("config serializes"),
        },
    }
}

/// Streams JSONL detections and radar through the pipeline, writing the
/// metadata header and then one analytics line per detection frame. Returns
/// the number of frames written.
pub fn run_streams<D: BufRead, R: BufRead, W: Write>(
    detections: D,
    radar: R,
    out: &mut W,
    graph: &RegionGraph,
    model: &CalibrationModel,
    config: &PipelineConfig,
) -> Result<usize, PipelineError> {
    let mut pipeline = Pipeline::new(graph, model, config.clone())?;
    write_jsonl_line(out, &meta_record(config))?;

    let mut radar = JsonlReader::<R, RadarFrame>::new(radar).peekable();
    let mut last_radar = f64::NEG_INFINITY;
    let mut written = 0;
    for item in JsonlReader::<D, DetectionFrame>::new(detections) {
        let (line, frame) = item?;
        loop {
            match radar.peek() {
                Some(Ok((_, r))) if r.t <= frame.t => {}
                Some(Err(_)) => return Err(radar.next().unwrap().unwrap_err().into()),
                _ => break,
            }
            let (rline, r) = radar.next().unwrap()?;
            if r.t < last_radar {
                return Err(PipelineError::RadarTime {
                    line: rline,
                    t: r.t,
                    last: last_radar,
                });
            }
            last_radar = r.t;
            pipeline.push_radar(&r);
        }
        let report = pipeline
            .step(&frame)
            .map_err(|source| PipelineError::Tracker { line, source })?;
        write_jsonl_line(out, &report.frame)?;
        written += 1;
    }
    out.flush().map_err(StreamError::from)?;
    Ok(written)
}
