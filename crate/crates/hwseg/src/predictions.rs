//! Prediction files on disk and a detector that reads them.

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use hwseg_core::detect::{parse_yolo, DetectError, DetectionSet, Detector, DetectorRole};
use hwseg_core::{Detection, GrayImage};

use crate::error::{Error, Result};

pub fn load_yolo_predictions(path: &Path) -> Result<Vec<Detection>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_yolo(&text).map_err(|source| Error::Parse {
        path: path.to_path_buf(),
        source,
    })
}

/// Path of the prediction file for `image_id` inside `dir`.
pub fn prediction_path(dir: &Path, image_id: &str) -> PathBuf {
    dir.join(format!("{image_id}.txt"))
}

/// Detector answering from `{dir}/{image_id}.txt`.
#[derive(Debug, Clone)]
pub struct FileDetector {
    role: DetectorRole,
    dir: PathBuf,
}

impl FileDetector {
    pub fn new(role: DetectorRole, dir: impl Into<PathBuf>) -> Self {
        Self {
            role,
            dir: dir.into(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl Detector for FileDetector {
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
        let path = prediction_path(&self.dir, image_id);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == ErrorKind::NotFound => {
                return Err(DetectError::MissingPrediction(image_id.to_string()))
            }
            Err(e) => {
                return Err(DetectError::Backend {
                    image_id: image_id.to_string(),
                    message: format!("{}: {e}", path.display()),
                })
            }
        };
        let detections = parse_yolo(&text).map_err(|source| DetectError::Malformed {
            image_id: image_id.to_string(),
            source,
        })?;
        Ok(DetectionSet::new(image_id, image.width() as u32, image.height() as u32)
            .with_detections(detections))
    }
}
