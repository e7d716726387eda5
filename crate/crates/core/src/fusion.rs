//! Camera-to-radar identity fusion by comparing geographic trajectories.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::geo::{haversine_distance, GeoPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarSample {
    pub t: f64,
    pub geo: GeoPoint,
    pub speed_kn: Option<f64>,
}

/// Surveillance track for one aircraft.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarTrack {
    pub callsign: String,
    pub actype: String,
    pub samples: Vec<RadarSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    /// Largest admissible mean residual, meters.
    pub gate_m: f64,
    /// Trailing comparison window, seconds.
    pub window_s: f64,
    /// Resampling cadence shared by both sources, seconds.
    pub tick_s: f64,
    /// Pairs sharing fewer ticks than this are inadmissible.
    pub min_shared_ticks: usize,
    /// Largest cost matrix side solved exhaustively; bigger ones go greedy.
    pub exhaustive_limit: usize,
    /// A held identity is dropped after `release_ticks` consecutive ticks with
    /// a residual above `release_factor * gate_m`.
    pub release_factor: f64,
    pub release_ticks: u32,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            gate_m: 50.0,
            window_s: 30.0,
            tick_s: 1.0,
            min_shared_ticks: 3,
            exhaustive_limit: 6,
            release_factor: 2.0,
            release_ticks: 5,
        }
    }
}

impl FusionConfig {
    fn tick(&self, t: f64) -> i64 {
        (t / self.tick_s).round() as i64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FusionResult {
    pub assignments: BTreeMap<u64, String>,
    pub mean_residual_m: BTreeMap<u64, f64>,
}

type Resampled = BTreeMap<i64, GeoPoint>;

fn resample<'a>(
    samples: impl IntoIterator<Item = (f64, GeoPoint)> + 'a,
    lo: i64,
    hi: i64,
    config: &FusionConfig,
) -> Resampled {
    let mut out = BTreeMap::new();
    for (t, g) in samples {
        let k = config.tick(t);
        if (lo..=hi).contains(&k) {
            out.insert(k, g);
        }
    }
    out
}

/// Mean haversine distance over shared ticks, with the number of shared ticks.
fn mean_residual(a: &Resampled, b: &Resampled) -> (f64, usize) {
    let mut sum = 0.0;
    let mut n = 0;
    for (k, ga) in a {
        if let Some(gb) = b.get(k) {
            sum += haversine_distance(*ga, *gb);
            n += 1;
        }
    }
    if n == 0 {
        (f64::INFINITY, 0)
    } else {
        (sum / n as f64, n)
    }
}

struct CostTable {
    cameras: Vec<u64>,
    radars: Vec<usize>,
    /// Mean residual and shared-tick count per (camera, radar) cell.
    raw: Vec<Vec<(f64, usize)>>,
}

fn cost_table(
    camera: &BTreeMap<u64, Vec<(f64, GeoPoint)>>,
    radar: &[RadarTrack],
    now: f64,
    config: &FusionConfig,
) -> CostTable {
    let hi = config.tick(now);
    let lo = hi - (config.window_s / config.tick_s).round() as i64;
    let cams: Vec<(u64, Resampled)> = camera
        .iter()
        .map(|(id, s)| (*id, resample(s.iter().copied(), lo, hi, config)))
        .collect();
    let rads: Vec<Resampled> = radar
        .iter()
        .map(|r| resample(r.samples.iter().map(|s| (s.t, s.geo)), lo, hi, config))
        .collect();
    CostTable {
        cameras: cams.iter().map(|(id, _)| *id).collect(),
        radars: (0..radar.len()).collect(),
        raw: cams
            .iter()
            .map(|(_, c)| rads.iter().map(|r| mean_residual(c, r)).collect())
            .collect(),
    }
}

impl CostTable {
    fn admissible(&self, config: &FusionConfig) -> Vec<Vec<Option<f64>>> {
        self.raw
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&(cost, n)| {
                        (n >= config.min_shared_ticks && cost <= config.gate_m).then_some(cost)
                    })
                    .collect()
            })
            .collect()
    }
}

/// Exhaustive one-to-one assignment: the largest number of pairs, and among
/// those the smallest total cost. `None` cells are inadmissible.
pub fn assign_exhaustive(costs: &[Vec<Option<f64>>]) -> Vec<(usize, usize)> {
    let cols = costs.iter().map(Vec::len).max().unwrap_or(0);
    let mut used = vec![false; cols];
    let mut current = Vec::new();
    let mut best: (usize, f64, Vec<(usize, usize)>) = (0, 0.0, Vec::new());
    search(costs, 0, &mut used, &mut current, 0.0, &mut best);
    let mut pairs = best.2;
    pairs.sort_unstable();
    pairs
}

fn search(
    costs: &[Vec<Option<f64>>],
    row: usize,
    used: &mut [bool],
    current: &mut Vec<(usize, usize)>,
    total: f64,
    best: &mut (usize, f64, Vec<(usize, usize)>),
) {
    if row == costs.len() {
        let better = current.len() > best.0 || (current.len() == best.0 && total < best.1 - 1e-12);
        if better {
            *best = (current.len(), total, current.clone());
        }
        return;
    }
    for (col, cell) in costs[row].iter().enumerate() {
        if let Some(c) = cell {
            if !used[col] {
                used[col] = true;
                current.push((row, col));
                search(costs, row + 1, used, current, total + c, best);
                current.pop();
                used[col] = false;
            }
        }
    }
    search(costs, row + 1, used, current, total, best);
}

/// Greedy one-to-one assignment in order of increasing cost (ties by row, then column).
pub fn assign_greedy(costs: &[Vec<Option<f64>>]) -> Vec<(usize, usize)> {
    let mut cells: Vec<(f64, usize, usize)> = costs
        .iter()
        .enumerate()
        .flat_map(|(r, row)| {
            row.iter()
                .enumerate()
                .filter_map(move |(c, x)| x.map(|x| (x, r, c)))
        })
        .collect();
    cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut row_used = BTreeSet::new();
    let mut col_used = BTreeSet::new();
    let mut pairs = Vec::new();
    for (_, r, c) in cells {
        if row_used.contains(&r) || col_used.contains(&c) {
            continue;
        }
        row_used.insert(r);
        col_used.insert(c);
        pairs.push((r, c));
    }
    pairs.sort_unstable();
    pairs
}

/// Matches camera trajectories to radar tracks over the trailing window
/// ending at `now`.
pub fn fuse(
    camera: &BTreeMap<u64, Vec<(f64, GeoPoint)>>,
    radar: &[RadarTrack],
    now: f64,
    config: &FusionConfig,
) -> FusionResult {
    let table = cost_table(camera, radar, now, config);
    let costs = table.admissible(config);
    let pairs = if table.cameras.len() <= config.exhaustive_limit
        && table.radars.len() <= config.exhaustive_limit
    {
        assign_exhaustive(&costs)
    } else {
        assign_greedy(&costs)
    };
    let mut result = FusionResult::default();
    for (r, c) in pairs {
        let cam = table.cameras[r];
        let rad = &radar[table.radars[c]];
        result.assignments.insert(cam, rad.callsign.clone());
        result.mean_residual_m.insert(cam, table.raw[r][c].0);
    }
    result
}

#[derive(Debug, Clone, PartialEq)]
struct Held {
    callsign: String,
    strikes: u32,
}

/// Keeps camera identities stable from tick to tick: an assigned callsign is
/// retained until its residual stays above the release threshold for
/// `release_ticks` consecutive ticks.
#[derive(Debug, Clone, Default)]
pub struct IdentityTracker {
    config: FusionConfig,
    held: BTreeMap<u64, Held>,
}

impl IdentityTracker {
    pub fn new(config: FusionConfig) -> Self {
        Self {
            config,
            held: BTreeMap::new(),
        }
    }

    pub fn update(
        &mut self,
        camera: &BTreeMap<u64, Vec<(f64, GeoPoint)>>,
        radar: &[RadarTrack],
        now: f64,
    ) -> FusionResult {
        let cfg = &self.config.clone();
        self.held.retain(|id, _| camera.contains_key(id));

        let table = cost_table(camera, radar, now, cfg);
        let row_of: BTreeMap<u64, usize> = table
            .cameras
            .iter()
            .enumerate()
            .map(|(i, id)| (*id, i))
            .collect();
        let col_of: BTreeMap<&str, usize> = radar
            .iter()
            .enumerate()
            .map(|(i, r)| (r.callsign.as_str(), i))
            .collect();

        let mut result = FusionResult::default();
        let release_above = cfg.release_factor * cfg.gate_m;
        let mut released = Vec::new();
        for (id, held) in self.held.iter_mut() {
            let residual = col_of.get(held.callsign.as_str()).and_then(|&c| {
                let (cost, n) = table.raw[row_of[id]][c];
                (n >= cfg.min_shared_ticks).then_some(cost)
            });
            match residual {
                Some(r) if r <= release_above => held.strikes = 0,
                _ => held.strikes += 1,
            }
            if held.strikes >= cfg.release_ticks {
                released.push(*id);
                continue;
            }
            result.assignments.insert(*id, held.callsign.clone());
            if let Some(r) = residual {
                result.mean_residual_m.insert(*id, r);
            }
        }
        for id in released {
            tracing::debug!(track = id, "identity released");
            self.held.remove(&id);
        }

        let claimed: BTreeSet<&str> = self.held.values().map(|h| h.callsign.as_str()).collect();
        let free_cameras: BTreeMap<u64, Vec<(f64, GeoPoint)>> = camera
            .iter()
            .filter(|(id, _)| !self.held.contains_key(id))
            .map(|(id, s)| (*id, s.clone()))
            .collect();
        let free_radar: Vec<RadarTrack> = radar
            .iter()
            .filter(|r| !claimed.contains(r.callsign.as_str()))
            .cloned()
            .collect();
        let fresh = fuse(&free_cameras, &free_radar, now, cfg);
        for (id, callsign) in fresh.assignments {
            self.held.insert(
                id,
                Held {
                    callsign: callsign.clone(),
                    strikes: 0,
                },
            );
            result.assignments.insert(id, callsign);
        }
        result.mean_residual_m.extend(fresh.mean_residual_m);
        result
    }
}
