//! Deterministic synthetic lines and pages with exact ground truth.
//!
//! Words are drawn as a thick horizontal headstroke with a few short
//! descenders hanging from it, the dominant structure of connected scripts.
//! A line is rendered level and then rotated, so its skew is known exactly.
//! Pages stack lines and record the detections every pipeline stage will ask
//! for, which lets a table-driven detector stand in for trained models.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::detect::{pass2_image_id, word_image_id, DetectionSet, DetectorRole, MapDetector};
use crate::geometry::{rect_to_norm, Detection, PixelRect};
use crate::math;
use crate::pipeline::{correct_line, PipelineConfig, PipelineError};
use crate::raster::{GrayImage, Rotation, RotationDirection, WHITE};

/// Pixel value of rendered ink.
pub const INK: u8 = 0;
/// White border kept around the ink of a generated line.
pub const LINE_MARGIN: u32 = 4;
/// Largest canvas side the generator will produce.
pub const MAX_SIDE: usize = 16_384;
pub const MAX_SKEW_DEG: f64 = 40.0;

const STROKE: u32 = 3;
const DESCENDER_WIDTH: u32 = 2;
const WORD_GAP: (u32, u32) = (10, 18);
const PAGE_PAD: u32 = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("skew {0} outside [-40, 40]")]
    SkewOutOfRange(f64),
    #[error("a line needs at least one word")]
    NoWords,
    #[error("word length range {0}..={1} is invalid")]
    WordLength(u32, u32),
    #[error("line height {0} is too small")]
    Height(u32),
    #[error("generated canvas {0}x{1} exceeds the size limit")]
    TooLarge(usize, usize),
    #[error("{skews} skews given for {lines} lines")]
    SkewCount { lines: usize, skews: usize },
    #[error("line {0} of the injection does not exist")]
    BadInjection(usize),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthLineSpec {
    /// Positive skew descends to the right.
    pub skew_deg: f64,
    pub n_words: usize,
    /// Inclusive range of word lengths in pixels.
    pub word_len: (u32, u32),
    /// Height of the level line in pixels.
    pub height: u32,
    pub seed: u64,
}

impl SynthLineSpec {
    pub fn new(skew_deg: f64, n_words: usize, seed: u64) -> Self {
        Self {
            skew_deg,
            n_words,
            word_len: (36, 72),
            height: 36,
            seed,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        if !(-MAX_SKEW_DEG..=MAX_SKEW_DEG).contains(&self.skew_deg) {
            return Err(SynthError::SkewOutOfRange(self.skew_deg));
        }
        if self.n_words == 0 {
            return Err(SynthError::NoWords);
        }
        let (lo, hi) = self.word_len;
        if lo < 8 || lo > hi {
            return Err(SynthError::WordLength(lo, hi));
        }
        if self.height < 12 {
            return Err(SynthError::Height(self.height));
        }
        Ok(())
    }
}

/// Axis-aligned ink rectangle in continuous coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Stroke {
    x0: u32,
    y0: u32,
    x1: u32,
    y1: u32,
}

impl Stroke {
    fn corners(&self) -> [(f64, f64); 4] {
        let (x0, y0, x1, y1) = (self.x0 as f64, self.y0 as f64, self.x1 as f64, self.y1 as f64);
        [(x0, y0), (x1, y0), (x0, y1), (x1, y1)]
    }
}

/// A rendered line and its ground truth, all in the line image frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthLine {
    pub image: GrayImage,
    pub skew_deg: f64,
    /// Hull of every non-white pixel.
    pub line_box: PixelRect,
    /// Hull of the non-white pixels of each word, left to right.
    pub word_boxes: Vec<PixelRect>,
    /// Exact outline points of each word's strokes.
    pub word_outlines: Vec<Vec<(f64, f64)>>,
}

impl SynthLine {
    /// Line and word boxes as normalised class-0 detections.
    pub fn truth_detections(&self) -> (Detection, Vec<Detection>) {
        let (w, h) = (self.image.width() as u32, self.image.height() as u32);
        let to_det = |r: PixelRect| {
            Detection::new(0, rect_to_norm(r, w, h).expect("box inside image"), 1.0)
                .expect("unit confidence")
        };
        (
            to_det(self.line_box),
            self.word_boxes.iter().map(|&r| to_det(r)).collect(),
        )
    }
}

#[derive(Default, Clone, Copy)]
struct Hull {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
    any: bool,
}

impl Hull {
    fn add(&mut self, x: usize, y: usize) {
        if !self.any {
            *self = Hull {
                x0: x,
                y0: y,
                x1: x + 1,
                y1: y + 1,
                any: true,
            };
        } else {
            self.x0 = self.x0.min(x);
            self.y0 = self.y0.min(y);
            self.x1 = self.x1.max(x + 1);
            self.y1 = self.y1.max(y + 1);
        }
    }

    fn rect(&self) -> Option<PixelRect> {
        self.any.then(|| {
            PixelRect::from_corners(self.x0 as u32, self.y0 as u32, self.x1 as u32, self.y1 as u32)
                .expect("non-empty hull")
        })
    }
}

/// Renders one line per `spec`.
pub fn generate_line(spec: &SynthLineSpec) -> Result<SynthLine, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let h = spec.height;
    let matra_top = h / 4;
    let stem_top = matra_top + STROKE;

    let mut words: Vec<Vec<Stroke>> = Vec::with_capacity(spec.n_words);
    let mut x = LINE_MARGIN;
    for i in 0..spec.n_words {
        if i > 0 {
            x += rng.random_range(WORD_GAP.0..=WORD_GAP.1);
        }
        let len = rng.random_range(spec.word_len.0..=spec.word_len.1);
        let mut strokes = vec![Stroke {
            x0: x,
            y0: matra_top,
            x1: x + len,
            y1: stem_top,
        }];
        let n_desc = rng.random_range(2..=5u32);
        let slot = (len - DESCENDER_WIDTH) / n_desc;
        for k in 0..n_desc {
            let lo = x + k * slot;
            let dx = lo + rng.random_range(0..slot.max(1));
            let depth = rng.random_range((h * 35 / 100).max(2)..=(h * 60 / 100).max(3));
            let bottom = (stem_top + depth).min(h - 2);
            strokes.push(Stroke {
                x0: dx,
                y0: stem_top,
                x1: dx + DESCENDER_WIDTH,
                y1: bottom,
            });
        }
        words.push(strokes);
        x += len;
    }
    let canvas_w = (x + LINE_MARGIN) as usize;
    let canvas_h = h as usize;
    if canvas_w > MAX_SIDE {
        return Err(SynthError::TooLarge(canvas_w, canvas_h));
    }

    let mut canvas = GrayImage::filled(canvas_w, canvas_h, WHITE).expect("non-empty canvas");
    let mut labels = vec![0u16; canvas_w * canvas_h];
    for (wi, strokes) in words.iter().enumerate() {
        for s in strokes {
            for yy in s.y0..s.y1 {
                for xx in s.x0..s.x1 {
                    canvas.set(xx as usize, yy as usize, INK);
                    labels[yy as usize * canvas_w + xx as usize] = wi as u16 + 1;
                }
            }
        }
    }

    let rotation = (spec.skew_deg != 0.0).then(|| {
        let dir = if spec.skew_deg > 0.0 {
            RotationDirection::Clockwise
        } else {
            RotationDirection::AntiClockwise
        };
        Rotation::new(canvas_w, canvas_h, spec.skew_deg.abs(), dir)
    });
    let rendered = match &rotation {
        Some(rot) => {
            let (w, hh) = rot.output_size();
            if w > MAX_SIDE || hh > MAX_SIDE {
                return Err(SynthError::TooLarge(w, hh));
            }
            rot.apply(&canvas)
        }
        None => canvas,
    };

    let mut hulls = vec![Hull::default(); spec.n_words];
    for yy in 0..rendered.height() {
        for xx in 0..rendered.width() {
            if rendered.get(xx, yy) == WHITE {
                continue;
            }
            match &rotation {
                Some(rot) => {
                    for (pos, weight) in rot.taps(xx, yy) {
                        if let (Some((sx, sy)), true) = (pos, weight > 0.0) {
                            let l = labels[sy * canvas_w + sx];
                            if l > 0 {
                                hulls[l as usize - 1].add(xx, yy);
                            }
                        }
                    }
                }
                None => {
                    let l = labels[yy * canvas_w + xx];
                    hulls[l as usize - 1].add(xx, yy);
                }
            }
        }
    }

    let mut all = Hull::default();
    for hl in &hulls {
        all.add(hl.x0, hl.y0);
        all.add(hl.x1 - 1, hl.y1 - 1);
    }
    let m = LINE_MARGIN as usize;
    let ox = all.x0.saturating_sub(m);
    let oy = all.y0.saturating_sub(m);
    let ex = (all.x1 + m).min(rendered.width());
    let ey = (all.y1 + m).min(rendered.height());
    let window = PixelRect::from_corners(ox as u32, oy as u32, ex as u32, ey as u32)
        .expect("non-empty window");
    let image = crate::raster::crop(&rendered, window).expect("window inside image");

    let shift = |r: PixelRect| PixelRect {
        x: r.x - ox as u32,
        y: r.y - oy as u32,
        ..r
    };
    let word_boxes: Vec<PixelRect> = hulls
        .iter()
        .map(|hl| shift(hl.rect().expect("every word leaves ink")))
        .collect();
    let line_box = shift(all.rect().expect("ink present"));
    let word_outlines = words
        .iter()
        .map(|strokes| {
            strokes
                .iter()
                .flat_map(|s| s.corners())
                .map(|(px, py)| {
                    let (dx, dy) = match &rotation {
                        Some(rot) => rot.to_dest(px, py),
                        None => (px, py),
                    };
                    (dx - ox as f64, dy - oy as f64)
                })
                .collect()
        })
        .collect();

    Ok(SynthLine {
        image,
        skew_deg: spec.skew_deg,
        line_box,
        word_boxes,
        word_outlines,
    })
}

/// Deliberate detector noise for exercising filters and selection rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Injection {
    /// A tall, unsure first-pass box spanning `first_line` and the next line.
    SpanningPass1 { first_line: usize, confidence: f64 },
    /// Fragments of the neighbouring lines above and below line `line` in its
    /// second-pass detections.
    Pass2Neighbours { line: usize },
    /// A low-confidence spurious word on line `line`.
    ExtraWord { line: usize, confidence: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageSpec {
    pub image_id: String,
    pub skews: Vec<f64>,
    /// Inclusive range of words per line.
    pub words_per_line: (usize, usize),
    pub line_height: u32,
    pub seed: u64,
    pub injections: Vec<Injection>,
}

impl PageSpec {
    pub fn new(skews: Vec<f64>, seed: u64) -> Self {
        Self {
            image_id: format!("page{seed}"),
            skews,
            words_per_line: (3, 7),
            line_height: 36,
            seed,
            injections: Vec::new(),
        }
    }
}

/// Ground truth of a synthetic page.
#[derive(Debug, Clone, PartialEq)]
pub struct PageTruth {
    pub image_id: String,
    pub skews: Vec<f64>,
    /// Ink hull of each line in the page frame, top to bottom.
    pub line_boxes: Vec<PixelRect>,
    /// Word boxes of each line in that line's final frame, left to right.
    pub line_words: Vec<Vec<PixelRect>>,
    /// Size of each final line frame.
    pub final_sizes: Vec<(u32, u32)>,
    /// Line detections keyed by image id (page and second-pass images).
    pub line_predictions: BTreeMap<String, DetectionSet>,
    /// Word detections keyed by final line image id.
    pub word_predictions: BTreeMap<String, DetectionSet>,
}

impl PageTruth {
    pub fn line_detector(&self) -> MapDetector {
        map_detector(DetectorRole::LineDetector, &self.line_predictions)
    }

    pub fn word_detector(&self) -> MapDetector {
        map_detector(DetectorRole::WordDetector, &self.word_predictions)
    }
}

fn map_detector(role: DetectorRole, table: &BTreeMap<String, DetectionSet>) -> MapDetector {
    let mut det = MapDetector::new(role);
    for (id, set) in table {
        det.insert(id.clone(), set.detections.clone());
    }
    det
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthPage {
    pub image: GrayImage,
    pub truth: PageTruth,
}

fn detection(r: PixelRect, w: u32, h: u32, confidence: f64) -> Detection {
    Detection::new(0, rect_to_norm(r, w, h).expect("box inside frame"), confidence)
        .expect("confidence in range")
}

fn confidence(rng: &mut ChaCha8Rng, lo: u32, hi: u32) -> f64 {
    rng.random_range(lo..=hi) as f64 / 100.0
}

/// Hull of mapped outline points, grown by one pixel and clamped to a
/// `w x h` frame.
fn outline_box(points: &[(f64, f64)], w: usize, h: usize) -> Option<PixelRect> {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &(x, y) in points {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let clamp = |v: f64, hi: usize| v.clamp(0.0, hi as f64) as u32;
    let r = PixelRect::from_corners(
        clamp(math::floor(x0) - 1.0, w),
        clamp(math::floor(y0) - 1.0, h),
        clamp(math::ceil(x1) + 1.0, w),
        clamp(math::ceil(y1) + 1.0, h),
    );
    r.ok()
}

fn union_all(rects: &[PixelRect]) -> Option<PixelRect> {
    let mut it = rects.iter();
    let first = *it.next()?;
    Some(it.fold(first, |acc, r| acc.union(r)))
}

/// Page of `n_lines` lines with the given skews under default settings.
pub fn generate_page(n_lines: usize, skews: &[f64], seed: u64) -> Result<SynthPage, SynthError> {
    if skews.len() != n_lines {
        return Err(SynthError::SkewCount {
            lines: n_lines,
            skews: skews.len(),
        });
    }
    generate_page_with(&PageSpec::new(skews.to_vec(), seed), &PipelineConfig::default())
}

/// Page per `spec`. Second-pass and word truth is expressed in the frames the
/// pipeline will produce under `config`.
pub fn generate_page_with(spec: &PageSpec, config: &PipelineConfig) -> Result<SynthPage, SynthError> {
    let n_lines = spec.skews.len();
    for inj in &spec.injections {
        let (line, needs_next) = match *inj {
            Injection::SpanningPass1 { first_line, .. } => (first_line, true),
            Injection::Pass2Neighbours { line } | Injection::ExtraWord { line, .. } => (line, false),
        };
        if line == 0 || line > n_lines || (needs_next && line + 1 > n_lines) {
            return Err(SynthError::BadInjection(line));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (wlo, whi) = spec.words_per_line;
    let lines: Vec<SynthLine> = spec
        .skews
        .iter()
        .map(|&skew| {
            let n_words = rng.random_range(wlo.max(1)..=whi.max(wlo.max(1)));
            let line_spec = SynthLineSpec {
                height: spec.line_height,
                ..SynthLineSpec::new(skew, n_words, rng.random())
            };
            generate_line(&line_spec)
        })
        .collect::<Result<_, _>>()?;

    let gap = spec.line_height.div_ceil(2) + 2 * LINE_MARGIN;
    let page_w = lines.iter().map(|l| l.image.width()).max().unwrap_or(1) + 2 * PAGE_PAD as usize;
    let page_h = lines.iter().map(|l| l.image.height()).sum::<usize>()
        + gap as usize * n_lines.saturating_sub(1)
        + 2 * PAGE_PAD as usize;
    if page_w > MAX_SIDE || page_h > MAX_SIDE {
        return Err(SynthError::TooLarge(page_w, page_h));
    }
    let mut page = GrayImage::filled(page_w, page_h, WHITE).expect("non-empty page");
    let mut offsets = Vec::with_capacity(n_lines);
    let mut y = PAGE_PAD as usize;
    for line in &lines {
        let x = PAGE_PAD as usize;
        for ly in 0..line.image.height() {
            for lx in 0..line.image.width() {
                page.set(x + lx, y + ly, line.image.get(lx, ly));
            }
        }
        offsets.push((x, y));
        y += line.image.height() + gap as usize;
    }
    let (pw, ph) = (page_w as u32, page_h as u32);

    let line_boxes: Vec<PixelRect> = lines
        .iter()
        .zip(&offsets)
        .map(|(l, &(ox, oy))| PixelRect {
            x: l.line_box.x + ox as u32,
            y: l.line_box.y + oy as u32,
            ..l.line_box
        })
        .collect();

    let mut pass1: Vec<Detection> = line_boxes
        .iter()
        .map(|&r| detection(r, pw, ph, confidence(&mut rng, 80, 99)))
        .collect();
    for inj in &spec.injections {
        if let Injection::SpanningPass1 { first_line, confidence } = *inj {
            let r = line_boxes[first_line - 1].union(&line_boxes[first_line]);
            pass1.push(detection(r, pw, ph, confidence));
        }
    }

    let mut line_predictions = BTreeMap::new();
    let mut word_predictions = BTreeMap::new();
    line_predictions.insert(
        spec.image_id.clone(),
        DetectionSet::new(spec.image_id.clone(), pw, ph).with_detections(pass1),
    );

    let mut line_words = Vec::with_capacity(n_lines);
    let mut final_sizes = Vec::with_capacity(n_lines);
    for (i, (line, &(ox, oy))) in lines.iter().zip(&offsets).enumerate() {
        let index = i + 1;
        let corrected = correct_line(&page, line_boxes[i], config)?;
        let frame = corrected.frame;
        let (cw, ch) = (frame.width, frame.height);
        let mapped: Vec<Vec<(f64, f64)>> = line
            .word_outlines
            .iter()
            .map(|pts| {
                pts.iter()
                    .map(|&(px, py)| frame.map_point(px + ox as f64, py + oy as f64))
                    .collect()
            })
            .collect();
        let word_rects: Vec<PixelRect> =
            mapped.iter().filter_map(|pts| outline_box(pts, cw, ch)).collect();
        let main = union_all(&word_rects).unwrap_or(PixelRect {
            x: 0,
            y: 0,
            w: cw as u32,
            h: ch as u32,
        });

        let neighbours = spec
            .injections
            .iter()
            .any(|inj| matches!(inj, Injection::Pass2Neighbours { line } if *line == index));
        let mut pass2 = vec![detection(main, cw as u32, ch as u32, confidence(&mut rng, 80, 99))];
        let final_rect = if neighbours {
            let strip = (ch as u32 / 10).max(1);
            let above = PixelRect::new(0, 0, cw as u32, strip).expect("non-empty strip");
            let below = PixelRect::new(0, ch as u32 - strip, cw as u32, strip).expect("non-empty strip");
            pass2.push(detection(above, cw as u32, ch as u32, confidence(&mut rng, 55, 70)));
            pass2.push(detection(below, cw as u32, ch as u32, confidence(&mut rng, 55, 70)));
            Some(main)
        } else if (main.w as f64) < 0.4 * cw as f64 {
            None
        } else {
            Some(main)
        };
        line_predictions.insert(
            pass2_image_id(&spec.image_id, index),
            DetectionSet::new(pass2_image_id(&spec.image_id, index), cw as u32, ch as u32)
                .with_detections(pass2),
        );

        let (fx, fy, fw, fh) = match final_rect {
            Some(r) => (r.x, r.y, r.w, r.h),
            None => (0, 0, cw as u32, ch as u32),
        };
        let mut words: Vec<PixelRect> = mapped
            .iter()
            .filter_map(|pts| {
                let shifted: Vec<(f64, f64)> =
                    pts.iter().map(|&(x, y)| (x - fx as f64, y - fy as f64)).collect();
                outline_box(&shifted, fw as usize, fh as usize)
            })
            .collect();
        words.sort_by_key(|r| (r.center_x2(), r.center_y2(), r.x));
        let mut word_dets: Vec<Detection> = words
            .iter()
            .map(|&r| detection(r, fw, fh, confidence(&mut rng, 70, 99)))
            .collect();
        for inj in &spec.injections {
            if let Injection::ExtraWord { line, confidence } = *inj {
                if line == index {
                    let r = PixelRect::new(0, 0, (fw / 8).max(1), fh).expect("non-empty");
                    word_dets.push(detection(r, fw, fh, confidence));
                }
            }
        }
        word_predictions.insert(
            word_image_id(&spec.image_id, index),
            DetectionSet::new(word_image_id(&spec.image_id, index), fw, fh).with_detections(word_dets),
        );
        line_words.push(words);
        final_sizes.push((fw, fh));
    }

    Ok(SynthPage {
        image: page,
        truth: PageTruth {
            image_id: spec.image_id.clone(),
            skews: spec.skews.clone(),
            line_boxes,
            line_words,
            final_sizes,
            line_predictions,
            word_predictions,
        },
    })
}
