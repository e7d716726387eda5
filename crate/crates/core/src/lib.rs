//! Airside surveillance analytics: pixel-to-geographic calibration, region
//! modelling, multi-object tracking, per-aircraft analytics, radar identity
//! fusion and a synthetic scenario generator.

pub mod analytics;
pub mod calibration;
pub mod fusion;
pub mod geo;
pub mod geometry;
pub mod pipeline;
pub mod region;
pub mod sim;
pub mod stream;
pub mod tracker;

pub use analytics::{
    build_frame_output, AnalyticsConfig, AnalyticsError, AnalyticsFrame, Identity,
    SeparationRecord, SeparationReport, TextStyle, TrackAnalytics,
};
pub use calibration::{
    fit_calibration, CalibrationError, CalibrationModel, Correspondence, FrameSize,
};
pub use fusion::{FusionConfig, FusionResult, IdentityTracker, RadarSample, RadarTrack};
pub use geo::{haversine_distance, GeoPoint, PixelPoint};
pub use geometry::BoundingBox;
pub use pipeline::{run_pipeline, Pipeline, PipelineConfig, PipelineError};
pub use region::{Region, RegionError, RegionGraph, RegionKind};
pub use stream::{
    DetectionFrame, DetectionRecord, RadarFrame, RadarRecord, StreamError, TruthRecord,
};
pub use tracker::{Detection, Track, TrackState, Tracker, TrackerConfig, TrackerError};
