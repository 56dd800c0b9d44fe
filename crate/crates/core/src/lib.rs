//! Segmentation primitives for handwritten document images.
//!
//! The crate turns raw line/word detector output into clean, skew-corrected,
//! ordered line and word annotations, and scores segmentations against ground
//! truth. Everything here is pure computation over in-memory values; file
//! formats, image codecs and the command line live in the `hwseg` crate.
//!
//! Stages, in pipeline order:
//!
//! 1. [`linesel::filter_first_pass`] cleans the page-level line detections.
//! 2. [`skew::correct_skew`] estimates and removes the skew of each line crop
//!    (standard Hough first, probabilistic Hough with voting as fallback).
//! 3. [`linesel::select_final_line`] picks the main line out of the second
//!    detection pass on the corrected crop.
//! 4. [`words::segment_words`] orders the word detections of the final line.
//!
//! [`pipeline::process_document`] chains them, [`eval`] scores the result and
//! [`synth`] generates pages with exact ground truth for testing.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod math;

pub mod detect;
pub mod eval;
pub mod geometry;
pub mod linesel;
pub mod pipeline;
pub mod raster;
pub mod skew;
pub mod synth;
pub mod words;

pub use detect::{Detection, DetectionSet, Detector, DetectorRole, MapDetector};
pub use eval::{EvalReport, SummaryReport};
pub use geometry::{NormBox, PixelRect};
pub use pipeline::{LineRecord, PageSegmentation, PipelineConfig};
pub use raster::{BinaryImage, GrayImage, RotationDirection};
pub use skew::{SkewEstimate, SkewMethod};
