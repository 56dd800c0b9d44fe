//! The detector boundary.
//!
//! Line and word models are external: their outputs arrive as YOLO text
//! records (`class cx cy w h [conf]`) and are served through the
//! [`Detector`] trait. [`MapDetector`] answers from an in-memory table keyed
//! by image id, which covers ground-truth oracles and the synthetic corpus.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use thiserror::Error;

pub use crate::geometry::Detection;
use crate::geometry::{norm_to_rect, NormBox, PixelRect};
use crate::raster::GrayImage;

/// Values may stray this far outside `[0, 1]` before a record is rejected.
pub const RANGE_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DetectorRole {
    LineDetector,
    WordDetector,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: expected 5 or 6 fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: field {field} is not a number: {text:?}")]
    NotNumeric {
        line: usize,
        field: usize,
        text: String,
    },
    #[error("line {line}: {what} = {value} outside [0, 1]")]
    OutOfRange {
        line: usize,
        what: &'static str,
        value: f64,
    },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            Self::FieldCount { line, .. }
            | Self::NotNumeric { line, .. }
            | Self::OutOfRange { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectError {
    #[error("no prediction recorded for image {0:?}")]
    MissingPrediction(String),
    #[error("detector serves {served:?}, asked for {requested:?}")]
    WrongRole {
        served: DetectorRole,
        requested: DetectorRole,
    },
    #[error("prediction for {image_id:?} is malformed: {source}")]
    Malformed {
        image_id: String,
        #[source]
        source: ParseError,
    },
    #[error("detector backend failed for {image_id:?}: {message}")]
    Backend { image_id: String, message: String },
}

/// Detections for one image, in the order the detector produced them.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetectionSet {
    pub image_id: String,
    pub image_w: u32,
    pub image_h: u32,
    pub detections: Vec<Detection>,
}

impl DetectionSet {
    pub fn new(image_id: impl Into<String>, image_w: u32, image_h: u32) -> Self {
        Self {
            image_id: image_id.into(),
            image_w,
            image_h,
            detections: Vec::new(),
        }
    }

    pub fn with_detections(mut self, detections: Vec<Detection>) -> Self {
        self.detections = detections;
        self
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }

    /// Pixel rectangles of every detection in this set's frame.
    pub fn rects(&self) -> Vec<PixelRect> {
        self.detections
            .iter()
            .map(|d| norm_to_rect(d.bbox, self.image_w, self.image_h))
            .collect()
    }
}

/// Keeps detections with `confidence >= threshold`, preserving order.
pub fn filter_by_confidence(set: &DetectionSet, threshold: f64) -> DetectionSet {
    DetectionSet {
        image_id: set.image_id.clone(),
        image_w: set.image_w,
        image_h: set.image_h,
        detections: set
            .detections
            .iter()
            .filter(|d| d.confidence >= threshold)
            .copied()
            .collect(),
    }
}

fn unit_value(line: usize, what: &'static str, value: f64) -> Result<f64, ParseError> {
    if !(-RANGE_TOLERANCE..=1.0 + RANGE_TOLERANCE).contains(&value) {
        return Err(ParseError::OutOfRange { line, what, value });
    }
    Ok(value.clamp(0.0, 1.0))
}

fn extent_value(line: usize, what: &'static str, value: f64) -> Result<f64, ParseError> {
    let v = unit_value(line, what, value)?;
    if v <= 0.0 {
        return Err(ParseError::OutOfRange { line, what, value });
    }
    Ok(v)
}

/// Parses YOLO records, one per non-blank line. A missing confidence column
/// (ground-truth files) reads as 1.0. Line numbers in errors are 1-based.
pub fn parse_yolo(text: &str) -> Result<Vec<Detection>, ParseError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 5 && fields.len() != 6 {
            return Err(ParseError::FieldCount {
                line,
                found: fields.len(),
            });
        }
        let mut values = [1.0f64; 6];
        for (field, text) in fields.iter().enumerate() {
            values[field] = text.parse::<f64>().map_err(|_| ParseError::NotNumeric {
                line,
                field: field + 1,
                text: text.to_string(),
            })?;
            if !values[field].is_finite() {
                return Err(ParseError::NotNumeric {
                    line,
                    field: field + 1,
                    text: text.to_string(),
                });
            }
        }
        let class = values[0];
        if class < 0.0 || libm::trunc(class) != class || class > u32::MAX as f64 {
            return Err(ParseError::NotNumeric {
                line,
                field: 1,
                text: fields[0].to_string(),
            });
        }
        let bbox = NormBox {
            cx: unit_value(line, "x", values[1])?,
            cy: unit_value(line, "y", values[2])?,
            w: extent_value(line, "width", values[3])?,
            h: extent_value(line, "height", values[4])?,
        };
        let confidence = unit_value(line, "confidence", values[5])?;
        out.push(Detection {
            class_id: class as u32,
            bbox,
            confidence,
        });
    }
    Ok(out)
}

/// Formats detections as YOLO records with six decimals and a trailing
/// newline per record. Confidences are written only when requested.
pub fn format_yolo(detections: &[Detection], with_confidence: bool) -> String {
    let mut out = String::new();
    for d in detections {
        let b = d.bbox;
        // Writing into a String cannot fail.
        let _ = write!(
            out,
            "{} {:.6} {:.6} {:.6} {:.6}",
            d.class_id, b.cx, b.cy, b.w, b.h
        );
        if with_confidence {
            let _ = write!(out, " {:.6}", d.confidence);
        }
        out.push('\n');
    }
    out
}

/// Source of detections for a page or a line crop.
///
/// Implementations must be shareable across worker threads; detection never
/// mutates the image.
pub trait Detector {
    fn role(&self) -> DetectorRole;

    fn detect(
        &self,
        role: DetectorRole,
        image: &GrayImage,
        image_id: &str,
    ) -> Result<DetectionSet, DetectError>;
}

impl<D: Detector + ?Sized> Detector for &D {
    fn role(&self) -> DetectorRole {
        (**self).role()
    }

    fn detect(
        &self,
        role: DetectorRole,
        image: &GrayImage,
        image_id: &str,
    ) -> Result<DetectionSet, DetectError> {
        (**self).detect(role, image, image_id)
    }
}

/// Detector answering from a table of recorded detections.
///
/// With `force_full_confidence` every answer carries confidence 1.0, which is
/// how ground-truth annotations act as an oracle detector.
#[derive(Debug, Clone, PartialEq)]
pub struct MapDetector {
    role: DetectorRole,
    entries: BTreeMap<String, Vec<Detection>>,
    force_full_confidence: bool,
}

impl MapDetector {
    pub fn new(role: DetectorRole) -> Self {
        Self {
            role,
            entries: BTreeMap::new(),
            force_full_confidence: false,
        }
    }

    pub fn oracle(role: DetectorRole) -> Self {
        Self {
            force_full_confidence: true,
            ..Self::new(role)
        }
    }

    pub fn insert(&mut self, image_id: impl Into<String>, detections: Vec<Detection>) {
        self.entries.insert(image_id.into(), detections);
    }

    pub fn get(&self, image_id: &str) -> Option<&[Detection]> {
        self.entries.get(image_id).map(Vec::as_slice)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Detector for MapDetector {
    fn role(&self) -> DetectorRole {
        self.role
    }

    fn detect(
        &self,
        role: DetectorRole,
        image: &GrayImage,
        image_id: &str,
    ) -> Result<DetectionSet, DetectError> {
        if role != self.role {
            return Err(DetectError::WrongRole {
                served: self.role,
                requested: role,
            });
        }
        let recorded = self
            .entries
            .get(image_id)
            .ok_or_else(|| DetectError::MissingPrediction(image_id.to_string()))?;
        let mut detections = recorded.clone();
        if self.force_full_confidence {
            for d in &mut detections {
                d.confidence = 1.0;
            }
        }
        Ok(DetectionSet {
            image_id: image_id.to_string(),
            image_w: image.width() as u32,
            image_h: image.height() as u32,
            detections,
        })
    }
}

/// Image id of the second line-detection pass on line `index` (1-based).
pub fn pass2_image_id(doc_id: &str, index: usize) -> String {
    alloc::format!("{doc_id}#line{index}#pass2")
}

/// Image id of the final line `index` (1-based) handed to the word detector.
pub fn word_image_id(doc_id: &str, index: usize) -> String {
    alloc::format!("{doc_id}#line{index}")
}
