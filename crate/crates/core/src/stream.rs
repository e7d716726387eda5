//! Line-delimited JSON records exchanged between the simulator, the pipeline
//! and the evaluator.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::GeoPoint;
use crate::geometry::BoundingBox;
use crate::tracker::Detection;

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("ParseError at line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
    #[error("SerializeError: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// One detector box as written in the detection stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub conf: f64,
}

/// All detections of one video frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionFrame {
    pub t: f64,
    pub detections: Vec<DetectionRecord>,
}

impl DetectionFrame {
    pub fn to_detections(&self) -> Vec<Detection> {
        self.detections
            .iter()
            .map(|d| Detection::new(self.t, d.bbox, d.conf))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarRecord {
    pub callsign: String,
    #[serde(rename = "type")]
    pub actype: String,
    pub lat: f64,
    pub lon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_kn: Option<f64>,
}

impl RadarRecord {
    pub fn geo(&self) -> GeoPoint {
        GeoPoint::new(self.lat, self.lon)
    }
}

/// One surveillance radar update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarFrame {
    pub t: f64,
    pub tracks: Vec<RadarRecord>,
}

/// Simulator ground truth for one aircraft at one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub t: f64,
    pub callsign: String,
    pub lat: f64,
    pub lon: f64,
    pub speed_kn: f64,
    pub heading: f64,
    pub region: Option<String>,
    /// Noise-free image box, absent when the aircraft is out of frame.
    #[serde(rename = "box")]
    pub bbox: Option<BoundingBox>,
}

impl TruthRecord {
    pub fn geo(&self) -> GeoPoint {
        GeoPoint::new(self.lat, self.lon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub version: String,
    pub config: serde_json::Value,
}

/// Header line of an analytics stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaRecord {
    pub meta: Meta,
}

fn is_meta_line(line: &str) -> bool {
    serde_json::from_str::<MetaRecord>(line).is_ok()
}

/// Iterates the records of a JSONL stream, skipping blank lines and, when
/// asked, metadata header lines. Errors carry 1-based line numbers.
pub struct JsonlReader<R, T> {
    lines: std::io::Lines<R>,
    line_no: usize,
    skip_meta: bool,
    _marker: std::marker::PhantomData<T>,
}

impl<R: BufRead, T: DeserializeOwned> JsonlReader<R, T> {
    pub fn new(reader: R) -> Self {
        Self {
            lines: reader.lines(),
            line_no: 0,
            skip_meta: false,
            _marker: std::marker::PhantomData,
        }
    }

    pub fn skipping_meta(mut self) -> Self {
        self.skip_meta = true;
        self
    }
}

impl<R: BufRead, T: DeserializeOwned> Iterator for JsonlReader<R, T> {
    type Item = Result<(usize, T), StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || (self.skip_meta && is_meta_line(trimmed)) {
                continue;
            }
            return Some(
                serde_json::from_str(trimmed)
                    .map(|v| (self.line_no, v))
                    .map_err(|source| StreamError::Parse {
                        line: self.line_no,
                        source,
                    }),
            );
        }
    }
}

pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>, StreamError> {
    JsonlReader::new(reader)
        .map(|r| r.map(|(_, v)| v))
        .collect()
}

/// Like [`read_jsonl`] but ignores `{"meta":...}` header lines.
pub fn read_jsonl_records<T: DeserializeOwned, R: BufRead>(
    reader: R,
) -> Result<Vec<T>, StreamError> {
    JsonlReader::new(reader)
        .skipping_meta()
        .map(|r| r.map(|(_, v)| v))
        .collect()
}

pub fn write_jsonl_line<T: Serialize, W: Write>(out: &mut W, value: &T) -> Result<(), StreamError> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_jsonl<'a, T: Serialize + 'a, W: Write>(
    out: &mut W,
    values: impl IntoIterator<Item = &'a T>,
) -> Result<(), StreamError> {
    for v in values {
        write_jsonl_line(out, v)?;
    }
    Ok(())
}
