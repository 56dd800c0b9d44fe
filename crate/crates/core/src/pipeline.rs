//! Page-level orchestration: first-pass filtering, per-line skew correction,
//! second-pass selection and word ordering.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::detect::{
    filter_by_confidence, pass2_image_id, word_image_id, DetectError, Detector, DetectorRole,
};
use crate::geometry::PixelRect;
use crate::linesel::{filter_first_pass, select_final_line, FinalLineDecision, FirstPassParams};
use crate::raster::{crop, trim_amount, trim_sides, GrayImage, RasterError, Rotation};
use crate::skew::{correct_skew, SkewError, SkewEstimate, SkewMethod, SkewParams, SkewTrace};
use crate::words::{segment_words, WordRecord};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("unknown configuration key {0:?}")]
    UnknownKey(String),
    #[error("cannot parse {value:?} for {key}")]
    InvalidValue { key: String, value: String },
    #[error("{key} out of range: {reason}")]
    OutOfRange { key: &'static str, reason: &'static str },
}

/// Every threshold and seed used by [`process_document`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PipelineConfig {
    pub conf_line_pass1: f64,
    pub conf_line_pass2: f64,
    pub conf_word: f64,
    pub height_factor: f64,
    pub overlap_frac: f64,
    pub high_conf: f64,
    pub trim_fraction: f64,
    pub min_correction_deg: f64,
    pub dskew_height: u32,
    pub pht_seed: u64,
    pub pht_min_len_frac: f64,
    pub pht_max_gap: u32,
    pub pht_vote_threshold: u32,
    pub sht_window_deg: f64,
    pub sht_threshold_frac: f64,
    pub canny_low: f64,
    pub canny_high: f64,
    pub ta: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let skew = SkewParams::default();
        Self {
            conf_line_pass1: 0.3,
            conf_line_pass2: 0.5,
            conf_word: 0.4,
            height_factor: 1.7,
            overlap_frac: 0.5,
            high_conf: 0.5,
            trim_fraction: 0.02,
            min_correction_deg: skew.min_correction_deg,
            dskew_height: skew.dskew_height as u32,
            pht_seed: skew.pht_seed,
            pht_min_len_frac: skew.pht_min_len_frac,
            pht_max_gap: skew.pht_max_gap,
            pht_vote_threshold: skew.pht_vote_threshold,
            sht_window_deg: skew.sht_window_deg,
            sht_threshold_frac: skew.sht_threshold_frac,
            canny_low: skew.canny_low as f64,
            canny_high: skew.canny_high as f64,
            ta: crate::eval::DEFAULT_TA,
        }
    }
}

fn parse<T: core::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn parse_seed(key: &str, value: &str) -> Result<u64, ConfigError> {
    let v = value.trim();
    let parsed = match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => v.parse().ok(),
    };
    parsed.ok_or_else(|| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

impl PipelineConfig {
    pub const KEYS: [&'static str; 18] = [
        "conf_line_pass1",
        "conf_line_pass2",
        "conf_word",
        "height_factor",
        "overlap_frac",
        "high_conf",
        "trim_fraction",
        "min_correction_deg",
        "dskew_height",
        "pht_seed",
        "pht_min_len_frac",
        "pht_max_gap",
        "pht_vote_threshold",
        "sht_window_deg",
        "sht_threshold_frac",
        "canny_low",
        "canny_high",
        "ta",
    ];

    /// Sets one field from its textual form. Seeds accept a `0x` prefix.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "conf_line_pass1" => self.conf_line_pass1 = parse(key, value)?,
            "conf_line_pass2" => self.conf_line_pass2 = parse(key, value)?,
            "conf_word" => self.conf_word = parse(key, value)?,
            "height_factor" => self.height_factor = parse(key, value)?,
            "overlap_frac" => self.overlap_frac = parse(key, value)?,
            "high_conf" => self.high_conf = parse(key, value)?,
            "trim_fraction" => self.trim_fraction = parse(key, value)?,
            "min_correction_deg" => self.min_correction_deg = parse(key, value)?,
            "dskew_height" => self.dskew_height = parse(key, value)?,
            "pht_seed" => self.pht_seed = parse_seed(key, value)?,
            "pht_min_len_frac" => self.pht_min_len_frac = parse(key, value)?,
            "pht_max_gap" => self.pht_max_gap = parse(key, value)?,
            "pht_vote_threshold" => self.pht_vote_threshold = parse(key, value)?,
            "sht_window_deg" => self.sht_window_deg = parse(key, value)?,
            "sht_threshold_frac" => self.sht_threshold_frac = parse(key, value)?,
            "canny_low" => self.canny_low = parse(key, value)?,
            "canny_high" => self.canny_high = parse(key, value)?,
            "ta" => self.ta = parse(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// `(key, value)` pairs in a fixed order; values round-trip through
    /// [`PipelineConfig::set`].
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let values = [
            format!("{}", self.conf_line_pass1),
            format!("{}", self.conf_line_pass2),
            format!("{}", self.conf_word),
            format!("{}", self.height_factor),
            format!("{}", self.overlap_frac),
            format!("{}", self.high_conf),
            format!("{}", self.trim_fraction),
            format!("{}", self.min_correction_deg),
            format!("{}", self.dskew_height),
            format!("{:#x}", self.pht_seed),
            format!("{}", self.pht_min_len_frac),
            format!("{}", self.pht_max_gap),
            format!("{}", self.pht_vote_threshold),
            format!("{}", self.sht_window_deg),
            format!("{}", self.sht_threshold_frac),
            format!("{}", self.canny_low),
            format!("{}", self.canny_high),
            format!("{}", self.ta),
        ];
        Self::KEYS.iter().copied().zip(values).collect()
    }

    /// First 16 hex digits of the SHA-256 of the `key=value` listing.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in self.entries() {
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(v.as_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        let open_unit = |v: f64| v > 0.0 && v <= 1.0;
        let checks: [(bool, &'static str, &'static str); 15] = [
            (unit(self.conf_line_pass1), "conf_line_pass1", "must lie in [0, 1]"),
            (unit(self.conf_line_pass2), "conf_line_pass2", "must lie in [0, 1]"),
            (unit(self.conf_word), "conf_word", "must lie in [0, 1]"),
            (self.height_factor > 1.0, "height_factor", "must exceed 1"),
            (open_unit(self.overlap_frac), "overlap_frac", "must lie in (0, 1]"),
            (unit(self.high_conf), "high_conf", "must lie in [0, 1]"),
            ((0.0..=0.25).contains(&self.trim_fraction), "trim_fraction", "must lie in [0, 0.25]"),
            (self.min_correction_deg >= 0.0, "min_correction_deg", "must be non-negative"),
            (self.dskew_height >= 1, "dskew_height", "must be positive"),
            (open_unit(self.pht_min_len_frac), "pht_min_len_frac", "must lie in (0, 1]"),
            (self.pht_vote_threshold >= 1, "pht_vote_threshold", "must be positive"),
            (
                self.sht_window_deg > 0.0 && self.sht_window_deg <= 45.0,
                "sht_window_deg",
                "must lie in (0, 45]",
            ),
            (open_unit(self.sht_threshold_frac), "sht_threshold_frac", "must lie in (0, 1]"),
            (
                self.canny_low >= 0.0 && self.canny_low <= self.canny_high,
                "canny_low",
                "must satisfy 0 <= canny_low <= canny_high",
            ),
            (open_unit(self.ta), "ta", "must lie in (0, 1]"),
        ];
        for (ok, key, reason) in checks {
            if !ok {
                return Err(ConfigError::OutOfRange { key, reason });
            }
        }
        Ok(())
    }

    pub fn skew_params(&self) -> SkewParams {
        SkewParams {
            sht_window_deg: self.sht_window_deg,
            sht_threshold_frac: self.sht_threshold_frac,
            canny_low: self.canny_low as f32,
            canny_high: self.canny_high as f32,
            dskew_height: self.dskew_height as usize,
            pht_min_len_frac: self.pht_min_len_frac,
            pht_max_gap: self.pht_max_gap,
            pht_vote_threshold: self.pht_vote_threshold,
            pht_seed: self.pht_seed,
            min_correction_deg: self.min_correction_deg,
        }
    }

    pub fn first_pass_params(&self) -> FirstPassParams {
        FirstPassParams {
            conf_threshold: self.conf_line_pass1,
            height_factor: self.height_factor,
            overlap_frac: self.overlap_frac,
            high_conf: self.high_conf,
        }
    }
}

/// Pipeline stage that issued a detector call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    FirstPass,
    SecondPass,
    Words,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FirstPass => "first-pass line",
            Self::SecondPass => "second-pass line",
            Self::Words => "word",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{stage} detection failed: {source}")]
    Detect {
        stage: Stage,
        #[source]
        source: DetectError,
    },
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Skew(#[from] SkewError),
}

/// How a corrected line image relates to the page it was cut from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFrame {
    /// First-pass crop in the page frame.
    pub crop: PixelRect,
    /// Rotation applied to the crop, if any.
    pub rotation: Option<Rotation>,
    /// Columns removed from the left of the rotated crop.
    pub trim_left: usize,
    pub width: usize,
    pub height: usize,
}

impl LineFrame {
    /// Maps a continuous page-frame point into the corrected line image.
    pub fn map_point(&self, x: f64, y: f64) -> (f64, f64) {
        let (lx, ly) = (x - self.crop.x as f64, y - self.crop.y as f64);
        let (rx, ry) = match &self.rotation {
            Some(rot) => rot.to_dest(lx, ly),
            None => (lx, ly),
        };
        (rx - self.trim_left as f64, ry)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedLine {
    pub image: GrayImage,
    pub skew: SkewEstimate,
    pub trace: SkewTrace,
    pub frame: LineFrame,
}

/// Crops one first-pass line out of the page, corrects its skew and, after
/// the dimension estimator, trims both sides.
pub fn correct_line(
    page: &GrayImage,
    rect: PixelRect,
    config: &PipelineConfig,
) -> Result<CorrectedLine, PipelineError> {
    let line = crop(page, rect)?;
    let corrected = correct_skew(&line, &config.skew_params())?;
    let rotation = corrected.estimate.rotation().map(|(angle, dir)| {
        Rotation::new(line.width(), line.height(), angle, dir)
    });
    let (image, trim_left) = if corrected.estimate.method == SkewMethod::DSkew {
        let cut = trim_amount(corrected.image.width(), config.trim_fraction);
        (trim_sides(&corrected.image, config.trim_fraction)?, cut)
    } else {
        (corrected.image, 0)
    };
    let frame = LineFrame {
        crop: PixelRect::new(rect.x, rect.y, line.width() as u32, line.height() as u32)
            .expect("crop is non-empty"),
        rotation,
        trim_left,
        width: image.width(),
        height: image.height(),
    };
    Ok(CorrectedLine {
        image,
        skew: corrected.estimate,
        trace: corrected.trace,
        frame,
    })
}

/// One segmented line with its provenance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LineRecord {
    /// 1-based, top to bottom.
    pub line_index: usize,
    /// First-pass crop in the page frame.
    pub page_rect: PixelRect,
    pub skew: SkewEstimate,
    pub decision: FinalLineDecision,
    /// Final crop inside the corrected line image; `None` keeps it whole.
    pub final_rect: Option<PixelRect>,
    /// Size of the corrected (and possibly trimmed) line image.
    pub corrected_size: (u32, u32),
    /// Size of the image the word detector saw.
    pub final_size: (u32, u32),
    /// Words in the final line frame, left to right.
    pub words: Vec<WordRecord>,
    pub trace: SkewTrace,
}

impl LineRecord {
    /// Whether the final line frame is an axis-aligned window of the page.
    pub fn is_unrotated(&self) -> bool {
        !self.skew.applied
            && self.skew.method != SkewMethod::DSkew
            && self.corrected_size == (self.page_rect.w, self.page_rect.h)
    }

    /// Word rectangles in the page frame, available for unrotated lines only.
    pub fn words_in_page(&self) -> Option<Vec<PixelRect>> {
        if !self.is_unrotated() {
            return None;
        }
        let (ox, oy) = match self.final_rect {
            Some(r) => (self.page_rect.x + r.x, self.page_rect.y + r.y),
            None => (self.page_rect.x, self.page_rect.y),
        };
        Some(
            self.words
                .iter()
                .map(|w| PixelRect {
                    x: w.rect.x + ox,
                    y: w.rect.y + oy,
                    ..w.rect
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PageSegmentation {
    pub image_id: String,
    pub image_w: u32,
    pub image_h: u32,
    pub lines: Vec<LineRecord>,
    pub config_fingerprint: String,
}

/// Runs the full pipeline on one page.
///
/// Pass-2 detections are requested under [`pass2_image_id`] and word
/// detections under [`word_image_id`], both indexed by the 1-based line
/// number.
pub fn process_document<L, W>(
    image: &GrayImage,
    image_id: &str,
    line_detector: &L,
    word_detector: &W,
    config: &PipelineConfig,
) -> Result<PageSegmentation, PipelineError>
where
    L: Detector + ?Sized,
    W: Detector + ?Sized,
{
    config.validate()?;
    let detect_err = |stage| move |source| PipelineError::Detect { stage, source };

    let first = line_detector
        .detect(DetectorRole::LineDetector, image, image_id)
        .map_err(detect_err(Stage::FirstPass))?;
    let candidates = filter_first_pass(&first, &config.first_pass_params());

    let mut lines = Vec::with_capacity(candidates.len());
    for (i, cand) in candidates.iter().enumerate() {
        let index = i + 1;
        let corrected = correct_line(image, cand.rect, config)?;
        let (cw, ch) = (corrected.image.width() as u32, corrected.image.height() as u32);
        let second = line_detector
            .detect(
                DetectorRole::LineDetector,
                &corrected.image,
                &pass2_image_id(image_id, index),
            )
            .map_err(detect_err(Stage::SecondPass))?;
        let second = filter_by_confidence(&second, config.conf_line_pass2);
        let decision = select_final_line(&second, cw, ch);
        let final_rect = decision.crop_rect();
        let final_image = match final_rect {
            Some(r) => crop(&corrected.image, r)?,
            None => corrected.image,
        };
        let words = segment_words(
            &final_image,
            word_detector,
            config.conf_word,
            &word_image_id(image_id, index),
        )
        .map_err(detect_err(Stage::Words))?;
        lines.push(LineRecord {
            line_index: index,
            page_rect: cand.rect,
            skew: corrected.skew,
            decision,
            final_rect,
            corrected_size: (cw, ch),
            final_size: (final_image.width() as u32, final_image.height() as u32),
            words,
            trace: corrected.trace,
        });
    }

    Ok(PageSegmentation {
        image_id: image_id.to_string(),
        image_w: image.width() as u32,
        image_h: image.height() as u32,
        lines,
        config_fingerprint: config.fingerprint(),
    })
}
