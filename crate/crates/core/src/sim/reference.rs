//! Built-in demonstration airfield: one runway, two parallel taxiways joined
//! by connectors, and two runway links ending at holding points, all seen by
//! a tower camera looking north.

use crate::geo::knots_to_mps;
use crate::region::{Region, RegionGraph, RegionKind};

use super::{AircraftSpec, NoiseConfig, ParkedSpec, PinholeCamera, ScenarioConfig, SpeedStep};

pub const REFERENCE_HEIGHT_M: f64 = 6.0;
pub const REFERENCE_DURATION_S: f64 = 300.0;
pub const TAXI_SPEED_KN: f64 = 15.0;

pub fn reference_camera() -> PinholeCamera {
    PinholeCamera {
        lat: 1.3500,
        lon: 103.9900,
        height_m: 80.0,
        yaw_deg: 0.0,
        pitch_deg: 6.0,
        focal_px: 1200.0,
        width_px: 1920,
        height_px: 1080,
    }
}

type GroundSegment = (&'static str, RegionKind, (f64, f64), (f64, f64));

/// Centerlines in local meters east/north of the camera.
pub fn reference_ground_layout() -> Vec<GroundSegment> {
    use RegionKind::*;
    vec![
        ("RWY", Runway, (-580.0, 850.0), (620.0, 850.0)),
        ("A", Taxiway, (-420.0, 600.0), (420.0, 600.0)),
        ("B", Taxiway, (-240.0, 400.0), (240.0, 400.0)),
        ("C1", Taxiway, (-200.0, 400.0), (-200.0, 600.0)),
        ("C2", Taxiway, (200.0, 400.0), (200.0, 600.0)),
        ("L1", Taxiway, (-300.0, 600.0), (-300.0, 740.0)),
        ("L2", Taxiway, (300.0, 600.0), (300.0, 740.0)),
        ("H1", HoldingPoint, (-300.0, 740.0), (-300.0, 827.5)),
        ("H2", HoldingPoint, (300.0, 740.0), (300.0, 827.5)),
    ]
}

pub fn reference_adjacency() -> Vec<(String, String)> {
    [
        ("A", "C1"),
        ("A", "C2"),
        ("A", "L1"),
        ("A", "L2"),
        ("B", "C1"),
        ("B", "C2"),
        ("L1", "H1"),
        ("L2", "H2"),
        ("H1", "RWY"),
        ("H2", "RWY"),
    ]
    .into_iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect()
}

/// The layout drawn in pixels on the reference plane of `camera`.
pub fn reference_regions(camera: &PinholeCamera) -> RegionGraph {
    let regions = reference_ground_layout()
        .into_iter()
        .map(|(id, kind, a, b)| {
            let p1 = camera
                .project_local(a.0, a.1, REFERENCE_HEIGHT_M)
                .expect("layout lies in front of the camera");
            let p2 = camera
                .project_local(b.0, b.1, REFERENCE_HEIGHT_M)
                .expect("layout lies in front of the camera");
            Region::new(id, kind, p1, p2)
        });
    RegionGraph::new(regions, reference_adjacency()).expect("reference layout is consistent")
}

fn narrowbody(callsign: &str, actype: &str, length_m: f64) -> AircraftSpec {
    AircraftSpec {
        callsign: callsign.into(),
        actype: actype.into(),
        route: Vec::new(),
        speed_profile: vec![SpeedStep {
            at_s: 0.0,
            speed_kn: TAXI_SPEED_KN,
        }],
        start_time_s: 0.0,
        length_m,
        wingspan_m: 35.8,
        height_m: 11.8,
        parked: None,
    }
}

fn routed(mut a: AircraftSpec, route: &[&str]) -> AircraftSpec {
    a.route = route.iter().map(|s| s.to_string()).collect();
    a
}

/// Five aircraft over five minutes: two taxiing in trail along taxiway A,
/// one stopping at a junction before crossing to A, one vacating the runway
/// to a holding point and onward, and one parked on a stand.
pub fn reference_scenario(seed: u64) -> ScenarioConfig {
    let stop_at_junction = 440.0 / knots_to_mps(TAXI_SPEED_KN);
    let mut crossing = routed(narrowbody("CPA303", "A20N", 37.6), &["B", "C1"]);
    crossing.start_time_s = 100.0;
    crossing.speed_profile = vec![
        SpeedStep {
            at_s: 0.0,
            speed_kn: TAXI_SPEED_KN,
        },
        SpeedStep {
            at_s: stop_at_junction,
            speed_kn: 0.0,
        },
        SpeedStep {
            at_s: stop_at_junction + 40.0,
            speed_kn: TAXI_SPEED_KN,
        },
    ];
    let mut parked = narrowbody("AXM505", "A320", 37.6);
    parked.speed_profile.clear();
    parked.start_time_s = 10.0;
    parked.parked = Some(ParkedSpec {
        east_m: -330.0,
        north_m: 470.0,
        heading_deg: 0.0,
    });
    let mut trailing = routed(narrowbody("UAE202", "B738", 39.5), &["A", "L1", "H1"]);
    trailing.height_m = 12.5;

    ScenarioConfig {
        regions: "regions.json".into(),
        camera: reference_camera(),
        reference_height_m: REFERENCE_HEIGHT_M,
        aircraft: vec![
            routed(narrowbody("SIA101", "A320", 37.6), &["B", "C2", "A"]),
            trailing,
            crossing,
            routed(narrowbody("QFA404", "A321", 44.5), &["RWY", "H2", "L2"]),
            parked,
        ],
        noise: NoiseConfig {
            bbox_jitter_px: 2.0,
            dropout: 0.0,
            radar_sigma_m: 5.0,
        },
        duration_s: REFERENCE_DURATION_S,
        tick_s: 1.0,
        seed,
        calibration_grid: None,
    }
}
