//! Box representations and overlap measures.
//!
//! [`NormBox`] is the detector-facing form (normalised centre and size, the
//! YOLO convention); [`PixelRect`] is an integer rectangle in some image
//! frame. Conversions round half away from zero and clamp to the frame.

use thiserror::Error;

use crate::math;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("normalised box ({cx}, {cy}, {w}, {h}) out of range")]
    InvalidNormBox { cx: f64, cy: f64, w: f64, h: f64 },
    #[error("rectangle extents must be at least one pixel, got {w}x{h}")]
    EmptyRect { w: u32, h: u32 },
    #[error("rectangle {rect:?} does not fit in a {img_w}x{img_h} image")]
    RectOutsideImage {
        rect: PixelRect,
        img_w: u32,
        img_h: u32,
    },
    #[error("confidence {0} outside [0, 1]")]
    InvalidConfidence(f64),
}

/// Normalised centre-format box.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NormBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl NormBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self, GeometryError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if unit(cx) && unit(cy) && w > 0.0 && w <= 1.0 && h > 0.0 && h <= 1.0 {
            Ok(Self { cx, cy, w, h })
        } else {
            Err(GeometryError::InvalidNormBox { cx, cy, w, h })
        }
    }
}

/// Integer rectangle: top-left corner plus extents, all in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PixelRect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl PixelRect {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Result<Self, GeometryError> {
        if w == 0 || h == 0 {
            return Err(GeometryError::EmptyRect { w, h });
        }
        Ok(Self { x, y, w, h })
    }

    /// Rectangle spanning the half-open ranges `[x0, x1) x [y0, y1)`.
    pub fn from_corners(x0: u32, y0: u32, x1: u32, y1: u32) -> Result<Self, GeometryError> {
        Self::new(x0, y0, x1.saturating_sub(x0), y1.saturating_sub(y0))
    }

    /// Exclusive right edge.
    pub fn right(&self) -> u64 {
        self.x as u64 + self.w as u64
    }

    /// Exclusive bottom edge.
    pub fn bottom(&self) -> u64 {
        self.y as u64 + self.h as u64
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    /// Twice the centre x coordinate, exact in integers.
    pub fn center_x2(&self) -> u64 {
        2 * self.x as u64 + self.w as u64
    }

    /// Twice the centre y coordinate, exact in integers.
    pub fn center_y2(&self) -> u64 {
        2 * self.y as u64 + self.h as u64
    }

    pub fn fits_in(&self, img_w: u32, img_h: u32) -> bool {
        self.right() <= img_w as u64 && self.bottom() <= img_h as u64
    }

    /// Smallest rectangle covering both.
    pub fn union(&self, other: &PixelRect) -> PixelRect {
        let x0 = self.x.min(other.x);
        let y0 = self.y.min(other.y);
        let x1 = self.right().max(other.right()) as u32;
        let y1 = self.bottom().max(other.bottom()) as u32;
        PixelRect {
            x: x0,
            y: y0,
            w: x1 - x0,
            h: y1 - y0,
        }
    }

    /// Overlapping part, if any.
    pub fn intersection(&self, other: &PixelRect) -> Option<PixelRect> {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        if x1 <= x0 as u64 || y1 <= y0 as u64 {
            return None;
        }
        Some(PixelRect {
            x: x0,
            y: y0,
            w: (x1 - x0 as u64) as u32,
            h: (y1 - y0 as u64) as u32,
        })
    }
}

/// One detector output.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Detection {
    pub class_id: u32,
    pub bbox: NormBox,
    pub confidence: f64,
}

impl Detection {
    pub fn new(class_id: u32, bbox: NormBox, confidence: f64) -> Result<Self, GeometryError> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(GeometryError::InvalidConfidence(confidence));
        }
        Ok(Self {
            class_id,
            bbox,
            confidence,
        })
    }

    pub fn rect(&self, img_w: u32, img_h: u32) -> PixelRect {
        norm_to_rect(self.bbox, img_w, img_h)
    }
}

fn clamp_span(start: f64, len: f64, limit: u32) -> (u32, u32) {
    let limit = limit as i64;
    let s = math::round(start) as i64;
    let e = s + math::round(len) as i64;
    let s = s.clamp(0, limit - 1);
    let e = e.clamp(s + 1, limit);
    (s as u32, (e - s) as u32)
}

/// Normalised box to pixel rectangle in a `img_w x img_h` frame. The result
/// is clamped to the frame and never empty.
pub fn norm_to_rect(b: NormBox, img_w: u32, img_h: u32) -> PixelRect {
    debug_assert!(img_w >= 1 && img_h >= 1);
    let (x, w) = clamp_span((b.cx - b.w / 2.0) * img_w as f64, b.w * img_w as f64, img_w);
    let (y, h) = clamp_span((b.cy - b.h / 2.0) * img_h as f64, b.h * img_h as f64, img_h);
    PixelRect { x, y, w, h }
}

/// Pixel rectangle to normalised box; the rectangle must lie in the frame.
pub fn rect_to_norm(r: PixelRect, img_w: u32, img_h: u32) -> Result<NormBox, GeometryError> {
    if r.w == 0 || r.h == 0 || !r.fits_in(img_w, img_h) {
        return Err(GeometryError::RectOutsideImage {
            rect: r,
            img_w,
            img_h,
        });
    }
    let (fw, fh) = (img_w as f64, img_h as f64);
    NormBox::new(
        (r.x as f64 + r.w as f64 / 2.0) / fw,
        (r.y as f64 + r.h as f64 / 2.0) / fh,
        r.w as f64 / fw,
        r.h as f64 / fh,
    )
}

pub fn intersection_area(a: &PixelRect, b: &PixelRect) -> u64 {
    a.intersection(b).map_or(0, |r| r.area())
}

/// True when the intersection covers at least `min_frac_of_smaller` of the
/// smaller rectangle.
pub fn overlaps(a: &PixelRect, b: &PixelRect, min_frac_of_smaller: f64) -> bool {
    let inter = intersection_area(a, b);
    if inter == 0 {
        return false;
    }
    inter as f64 >= min_frac_of_smaller * a.area().min(b.area()) as f64
}
