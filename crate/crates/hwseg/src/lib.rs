//! File formats, batch processing and evaluation on top of `hwseg-core`.
//!
//! Prediction files use the YOLO text format, one file per image id. The
//! second-pass and word detections for line `i` of document `doc` live in
//! `doc#line{i}#pass2.txt` and `doc#line{i}.txt`.

pub mod batch;
pub mod config;
pub mod error;
pub mod evaluate;
pub mod export;
pub mod io;
pub mod predictions;
pub mod synth_out;

pub use error::Error;
