//! Runway, taxiway and holding-point centerlines and their adjacency graph.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{pixel_bearing, PixelPoint};
use crate::geometry::{
    closest_points_between_segments, line_intersection_params, segment_box_crossings, BoundingBox,
};

#[derive(Debug, Error)]
pub enum RegionError {
    #[error("UnknownRegion: {0:?}")]
    UnknownRegion(String),
    #[error("DuplicateRegion: {0:?} is defined twice")]
    DuplicateRegion(String),
    #[error("DegenerateRegion: {0:?} has identical or non-finite endpoints")]
    DegenerateRegion(String),
    #[error("invalid region file: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Runway,
    Taxiway,
    HoldingPoint,
}

impl RegionKind {
    /// Display color used when a region file omits one.
    pub fn default_color(self) -> &'static str {
        match self {
            RegionKind::Runway => "#ff0000",
            RegionKind::Taxiway => "#00ff00",
            RegionKind::HoldingPoint => "#0000ff",
        }
    }
}

/// A two-point centerline in pixel space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    pub kind: RegionKind,
    #[serde(with = "pixel_pair")]
    pub p1: PixelPoint,
    #[serde(with = "pixel_pair")]
    pub p2: PixelPoint,
    #[serde(rename = "color", default)]
    pub display_color: String,
}

impl Region {
    pub fn new(id: impl Into<String>, kind: RegionKind, p1: PixelPoint, p2: PixelPoint) -> Self {
        Self {
            id: id.into(),
            kind,
            p1,
            p2,
            display_color: kind.default_color().to_string(),
        }
    }

    pub fn length(&self) -> f64 {
        self.p1.distance(&self.p2)
    }

    /// Centerline crossings of the box boundary, ordered from `p1`.
    pub fn box_intersections(&self, bx: &BoundingBox) -> Vec<PixelPoint> {
        segment_box_intersections(self, bx)
    }

    /// Whether the centerline meets the box at all, including a centerline
    /// lying wholly inside it.
    pub fn meets_box(&self, bx: &BoundingBox) -> bool {
        !self.box_intersections(bx).is_empty() || (bx.contains(self.p1) && bx.contains(self.p2))
    }
}

mod pixel_pair {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::geo::PixelPoint;

    pub fn serialize<S: Serializer>(p: &PixelPoint, s: S) -> Result<S::Ok, S::Error> {
        [p.u, p.v].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<PixelPoint, D::Error> {
        let [u, v] = <[f64; 2]>::deserialize(d)?;
        Ok(PixelPoint::new(u, v))
    }
}

/// On-disk layout of a region file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegionFile {
    pub regions: Vec<Region>,
    #[serde(default)]
    pub adjacency: BTreeMap<String, Vec<String>>,
}

/// Regions keyed by id with symmetric adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionGraph {
    regions: BTreeMap<String, Region>,
    adjacency: BTreeMap<String, BTreeSet<String>>,
}

impl RegionGraph {
    pub fn new(
        regions: impl IntoIterator<Item = Region>,
        edges: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, RegionError> {
        let mut map = BTreeMap::new();
        for mut r in regions {
            let finite = r.p1.is_finite() && r.p2.is_finite();
            if !finite || r.p1 == r.p2 {
                return Err(RegionError::DegenerateRegion(r.id));
            }
            if r.display_color.is_empty() {
                r.display_color = r.kind.default_color().to_string();
            }
            if map.contains_key(&r.id) {
                return Err(RegionError::DuplicateRegion(r.id));
            }
            map.insert(r.id.clone(), r);
        }
        let mut adjacency: BTreeMap<String, BTreeSet<String>> =
            map.keys().map(|k| (k.clone(), BTreeSet::new())).collect();
        for (a, b) in edges {
            for id in [&a, &b] {
                if !map.contains_key(id) {
                    return Err(RegionError::UnknownRegion(id.clone()));
                }
            }
            if a == b {
                continue;
            }
            adjacency.get_mut(&a).unwrap().insert(b.clone());
            adjacency.get_mut(&b).unwrap().insert(a);
        }
        Ok(Self {
            regions: map,
            adjacency,
        })
    }

    pub fn from_file(file: RegionFile) -> Result<Self, RegionError> {
        let edges: Vec<(String, String)> = file
            .adjacency
            .into_iter()
            .flat_map(|(a, bs)| bs.into_iter().map(move |b| (a.clone(), b)))
            .collect();
        Self::new(file.regions, edges)
    }

    pub fn from_json_str(s: &str) -> Result<Self, RegionError> {
        Self::from_file(serde_json::from_str(s)?)
    }

    /// Serializable form; adjacency lists each edge in both directions.
    pub fn to_file(&self) -> RegionFile {
        RegionFile {
            regions: self.regions.values().cloned().collect(),
            adjacency: self
                .adjacency
                .iter()
                .filter(|(_, v)| !v.is_empty())
                .map(|(k, v)| (k.clone(), v.iter().cloned().collect()))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Region> {
        self.regions.get(id)
    }

    pub fn region(&self, id: &str) -> Result<&Region, RegionError> {
        self.regions
            .get(id)
            .ok_or_else(|| RegionError::UnknownRegion(id.to_string()))
    }

    /// Regions in id order.
    pub fn regions(&self) -> impl Iterator<Item = &Region> {
        self.regions.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.regions.keys().map(String::as_str)
    }

    pub fn neighbors(&self, id: &str) -> Result<&BTreeSet<String>, RegionError> {
        self.adjacency
            .get(id)
            .ok_or_else(|| RegionError::UnknownRegion(id.to_string()))
    }

    pub fn are_adjacent(&self, a: &str, b: &str) -> bool {
        self.adjacency.get(a).is_some_and(|n| n.contains(b))
    }

    /// Regions worth testing for an object last seen in `current`: every
    /// region when there is no current one, else the region and its neighbors.
    pub fn candidate_regions(&self, current: Option<&str>) -> Result<BTreeSet<&str>, RegionError> {
        match current {
            None => Ok(self.ids().collect()),
            Some(id) => {
                let (key, _) = self
                    .regions
                    .get_key_value(id)
                    .ok_or_else(|| RegionError::UnknownRegion(id.to_string()))?;
                let mut out: BTreeSet<&str> =
                    self.adjacency[id].iter().map(String::as_str).collect();
                out.insert(key.as_str());
                Ok(out)
            }
        }
    }
}

/// Where a region's centerline crosses the boundary of `bx`, ordered from `p1`.
/// At most two points.
pub fn segment_box_intersections(region: &Region, bx: &BoundingBox) -> Vec<PixelPoint> {
    segment_box_crossings(region.p1, region.p2, bx)
}

/// Bearing of `p1 -> p2` and its reverse, both in `[0, 360)`.
pub fn region_bearings(region: &Region) -> (f64, f64) {
    let forward = pixel_bearing(region.p1, region.p2);
    let back = (forward + 180.0) % 360.0;
    (forward, back)
}

/// Point at which traffic on `current` enters `next`.
///
/// The crossing of the two centerlines when it lies on both segments, otherwise
/// the midpoint of the closest pair of points between them.
pub fn next_region_entry_point(current: &Region, next: &Region) -> PixelPoint {
    entry_point(current.p1, current.p2, next.p1, next.p2)
}

pub(crate) fn entry_point(
    a1: PixelPoint,
    a2: PixelPoint,
    b1: PixelPoint,
    b2: PixelPoint,
) -> PixelPoint {
    if let Some((s, t)) = line_intersection_params(a1, a2, b1, b2) {
        if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t) {
            return a1.lerp(&a2, s);
        }
    }
    let (p, q) = closest_points_between_segments(a1, a2, b1, b2);
    p.midpoint(&q)
}
