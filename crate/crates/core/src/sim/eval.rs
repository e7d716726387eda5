//! Position error of analytics output against simulator ground truth.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{haversine_distance, GeoPoint};
use crate::stream::TruthRecord;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("EmptyJoin: no estimate shares a (time, callsign) key with the ground truth")]
    EmptyJoin,
}

/// Error summary in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionErrorReport {
    pub count: usize,
    pub mean_m: f64,
    pub p5_m: f64,
    pub p25_m: f64,
    pub p50_m: f64,
    pub p75_m: f64,
    pub p95_m: f64,
}

/// Percentile of sorted data with linear interpolation between closest ranks.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let rank = (p / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let f = rank - lo as f64;
    sorted[lo] + f * (sorted[hi] - sorted[lo])
}

fn time_key(t: f64) -> i64 {
    (t * 1000.0).round() as i64
}

/// Joins estimates to truth on (time, callsign) and summarizes the
/// haversine errors.
pub fn evaluate_positions(
    estimates: &[(f64, String, GeoPoint)],
    truth: &[TruthRecord],
) -> Result<PositionErrorReport, EvalError> {
    let index: BTreeMap<(i64, &str), GeoPoint> = truth
        .iter()
        .map(|r| ((time_key(r.t), r.callsign.as_str()), r.geo()))
        .collect();
    let mut errors: Vec<f64> = estimates
        .iter()
        .filter_map(|(t, id, g)| {
            index
                .get(&(time_key(*t), id.as_str()))
                .map(|tr| haversine_distance(*g, *tr))
        })
        .collect();
    if errors.is_empty() {
        return Err(EvalError::EmptyJoin);
    }
    errors.sort_by(f64::total_cmp);
    let count = errors.len();
    Ok(PositionErrorReport {
        count,
        mean_m: errors.iter().sum::<f64>() / count as f64,
        p5_m: percentile(&errors, 5.0),
        p25_m: percentile(&errors, 25.0),
        p50_m: percentile(&errors, 50.0),
        p75_m: percentile(&errors, 75.0),
        p95_m: percentile(&errors, 95.0),
    })
}
