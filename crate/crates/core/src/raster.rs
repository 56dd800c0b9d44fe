//! Raster primitives used by skew estimation and line cropping.
//!
//! Images are 8-bit luminance, row-major, origin top-left with `y` growing
//! downward. Rotation directions are as seen on screen.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::geometry::PixelRect;
use crate::math;

/// Background value used wherever new canvas area appears.
pub const WHITE: u8 = 255;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RasterError {
    #[error("image dimensions must be non-zero, got {width}x{height}")]
    EmptyImage { width: usize, height: usize },
    #[error("pixel buffer holds {actual} values, expected {expected}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("canny thresholds must satisfy 0 <= low <= high, got low={low} high={high}")]
    InvalidThresholds { low: f32, high: f32 },
    #[error("target height {target} is below the current height {current}")]
    Downscale { current: usize, target: usize },
    #[error("crop rectangle lies outside the {width}x{height} image")]
    RectOutside { width: usize, height: usize },
    #[error("trim fraction {0} outside [0, 0.25]")]
    InvalidTrimFraction(f64),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl core::fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("GrayImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyImage { width, height });
        }
        let expected = width * height;
        if pixels.len() != expected {
            return Err(RasterError::SizeMismatch {
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, RasterError> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self, RasterError> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl core::fmt::Debug for BinaryImage {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("BinaryImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("foreground", &self.count_foreground())
            .finish()
    }
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, mask: Vec<bool>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyImage { width, height });
        }
        let expected = width * height;
        if mask.len() != expected {
            return Err(RasterError::SizeMismatch {
                expected,
                actual: mask.len(),
            });
        }
        Ok(Self {
            width,
            height,
            mask,
        })
    }

    /// All-background mask.
    pub fn empty(width: usize, height: usize) -> Result<Self, RasterError> {
        Self::new(width, height, vec![false; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.mask[y * self.width + x] = value;
    }

    pub fn count_foreground(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Coordinates of every foreground pixel in row-major order.
    pub fn foreground(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(move |(i, _)| (i % w, i / w))
    }

    /// Renders foreground as 255 on a 0 background.
    pub fn to_gray(&self) -> GrayImage {
        let pixels = self.mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
        GrayImage {
            width: self.width,
            height: self.height,
            pixels,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RotationDirection {
    Clockwise,
    AntiClockwise,
}

impl RotationDirection {
    pub fn reversed(self) -> Self {
        match self {
            Self::Clockwise => Self::AntiClockwise,
            Self::AntiClockwise => Self::Clockwise,
        }
    }
}

pub fn histogram(img: &GrayImage) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for &p in img.pixels() {
        hist[p as usize] += 1;
    }
    hist
}

/// Otsu threshold over a 256-bin histogram.
///
/// Returns the level `t` maximising the between-class variance of the
/// partition `[0, t] | [t+1, 255]`, the lowest such level on ties. `None`
/// when fewer than two levels are populated.
pub fn otsu_threshold(hist: &[u64; 256]) -> Option<u8> {
    let total: u64 = hist.iter().sum();
    let total_sum: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();

    let mut best: Option<(u8, f64)> = None;
    let mut n0 = 0u64;
    let mut s0 = 0u64;
    for t in 0..255usize {
        n0 += hist[t];
        s0 += t as u64 * hist[t];
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let mu0 = s0 as f64 / n0 as f64;
        let mu1 = (total_sum - s0) as f64 / n1 as f64;
        let diff = mu0 - mu1;
        let variance = n0 as f64 * n1 as f64 * diff * diff;
        if best.is_none_or(|(_, v)| variance > v) {
            best = Some((t as u8, variance));
        }
    }
    best.filter(|&(_, v)| v > 0.0).map(|(t, _)| t)
}

/// Otsu binarization with ink (dark pixels, `<= t`) as foreground.
pub fn binarize(img: &GrayImage) -> BinaryImage {
    let mask = match otsu_threshold(&histogram(img)) {
        Some(t) => img.pixels().iter().map(|&p| p <= t).collect(),
        None => vec![false; img.pixels().len()],
    };
    BinaryImage {
        width: img.width(),
        height: img.height(),
        mask,
    }
}

/// Dilation with a 3x3 square structuring element; neighbours outside the
/// image are ignored.
pub fn dilate3x3(img: &BinaryImage) -> BinaryImage {
    let (w, h) = (img.width, img.height);
    // Horizontal pass then vertical pass; the square element is separable.
    let mut horiz = vec![false; w * h];
    for y in 0..h {
        let row = &img.mask[y * w..(y + 1) * w];
        let out = &mut horiz[y * w..(y + 1) * w];
        for x in 0..w {
            let lo = x.saturating_sub(1);
            let hi = (x + 1).min(w - 1);
            out[x] = row[lo..=hi].iter().any(|&m| m);
        }
    }
    let mut mask = vec![false; w * h];
    for y in 0..h {
        let lo = y.saturating_sub(1);
        let hi = (y + 1).min(h - 1);
        for x in 0..w {
            mask[y * w + x] = (lo..=hi).any(|yy| horiz[yy * w + x]);
        }
    }
    BinaryImage {
        width: w,
        height: h,
        mask,
    }
}

/// Gaussian sigma used by [`canny`].
pub const CANNY_SIGMA: f64 = 1.4;

fn gaussian_kernel5(sigma: f64) -> [f32; 5] {
    let mut k = [0f64; 5];
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - 2.0;
        *v = math::exp(-(d * d) / (2.0 * sigma * sigma));
    }
    let sum: f64 = k.iter().sum();
    k.map(|v| (v / sum) as f32)
}

#[inline]
fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

/// 5x5 Gaussian smoothing (sigma 1.4) with replicated borders.
pub(crate) fn gaussian_smooth(img: &GrayImage) -> Vec<f32> {
    let (w, h) = (img.width, img.height);
    let k = gaussian_kernel5(CANNY_SIGMA);
    let mut tmp = vec![0f32; w * h];
    for y in 0..h {
        let row = img.row(y);
        for x in 0..w {
            let mut acc = 0f32;
            for (j, kv) in k.iter().enumerate() {
                let xx = clamp_index(x as isize + j as isize - 2, w);
                acc += kv * row[xx] as f32;
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0f32;
            for (j, kv) in k.iter().enumerate() {
                let yy = clamp_index(y as isize + j as isize - 2, h);
                acc += kv * tmp[yy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// 3x3 Sobel derivatives with replicated borders.
pub(crate) fn sobel(values: &[f32], w: usize, h: usize) -> (Vec<f32>, Vec<f32>) {
    let at = |x: isize, y: isize| values[clamp_index(y, h) * w + clamp_index(x, w)];
    let mut gx = vec![0f32; w * h];
    let mut gy = vec![0f32; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let tl = at(x - 1, y - 1);
            let t = at(x, y - 1);
            let tr = at(x + 1, y - 1);
            let l = at(x - 1, y);
            let r = at(x + 1, y);
            let bl = at(x - 1, y + 1);
            let b = at(x, y + 1);
            let br = at(x + 1, y + 1);
            let i = y as usize * w + x as usize;
            gx[i] = (tr + 2.0 * r + br) - (tl + 2.0 * l + bl);
            gy[i] = (bl + 2.0 * b + br) - (tl + 2.0 * t + tr);
        }
    }
    (gx, gy)
}

/// Gradient magnitude of the smoothed image, as seen by [`canny`].
pub fn gradient_magnitude(img: &GrayImage) -> Vec<f32> {
    let smooth = gaussian_smooth(img);
    let (gx, gy) = sobel(&smooth, img.width, img.height);
    gx.iter()
        .zip(&gy)
        .map(|(&a, &b)| math::sqrtf(a * a + b * b))
        .collect()
}

/// Canny edge detector.
///
/// Gaussian 5x5 smoothing, Sobel gradients, non-maximum suppression along
/// the gradient direction quantised to 0/45/90/135 degrees, then hysteresis:
/// pixels with magnitude `>= high` seed edges which grow through 8-connected
/// pixels with magnitude `>= low`. Thresholds are on the raw Sobel scale of a
/// 0-255 image.
pub fn canny(img: &GrayImage, low: f32, high: f32) -> Result<BinaryImage, RasterError> {
    if !(low >= 0.0 && low <= high) {
        return Err(RasterError::InvalidThresholds { low, high });
    }
    let (w, h) = (img.width, img.height);
    let smooth = gaussian_smooth(img);
    let (gx, gy) = sobel(&smooth, w, h);
    let mag: Vec<f32> = gx
        .iter()
        .zip(&gy)
        .map(|(&a, &b)| math::sqrtf(a * a + b * b))
        .collect();

    // tan(22.5deg) and tan(67.5deg)
    const TAN_22_5: f32 = 0.414_213_56;
    const TAN_67_5: f32 = 2.414_213_6;
    let mag_at = |x: isize, y: isize| -> f32 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };

    let mut candidate = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag[i];
            if m <= 0.0 {
                continue;
            }
            let (dx, dy) = (gx[i], gy[i]);
            let (ax, ay) = (dx.abs(), dy.abs());
            // Offsets of the neighbour on the "negative" side of the gradient.
            let (ox, oy): (isize, isize) = if ay <= ax * TAN_22_5 {
                (-1, 0)
            } else if ay >= ax * TAN_67_5 {
                (0, -1)
            } else if (dx > 0.0) == (dy > 0.0) {
                (-1, -1)
            } else {
                (1, -1)
            };
            let (xi, yi) = (x as isize, y as isize);
            let before = mag_at(xi + ox, yi + oy);
            let after = mag_at(xi - ox, yi - oy);
            // Asymmetric comparison keeps exactly one pixel of a symmetric ridge.
            if m > before && m >= after {
                candidate[i] = true;
            }
        }
    }

    let mut edges = vec![false; w * h];
    let mut stack: Vec<usize> = Vec::new();
    for i in 0..w * h {
        if candidate[i] && mag[i] >= high && !edges[i] {
            edges[i] = true;
            stack.push(i);
            while let Some(j) = stack.pop() {
                let (cx, cy) = ((j % w) as isize, (j / w) as isize);
                for ny in cy - 1..=cy + 1 {
                    for nx in cx - 1..=cx + 1 {
                        if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                            continue;
                        }
                        let k = ny as usize * w + nx as usize;
                        if !edges[k] && candidate[k] && mag[k] >= low {
                            edges[k] = true;
                            stack.push(k);
                        }
                    }
                }
            }
        }
    }
    Ok(BinaryImage {
        width: w,
        height: h,
        mask: edges,
    })
}

/// Affine rotation about the image centre onto an expanded canvas.
///
/// Coordinates are continuous with pixel `i` covering `[i, i + 1)`. The
/// output canvas covers the rotated extent and keeps the parity of the input
/// dimensions so both pixel grids share their centre; exact quarter turns
/// swap the dimensions instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    src_w: usize,
    src_h: usize,
    dst_w: usize,
    dst_h: usize,
    cos: f64,
    sin: f64,
    angle_deg: f64,
    direction: RotationDirection,
}

fn quarter_turns(angle_deg: f64) -> Option<u8> {
    let r = libm::fmod(libm::fmod(angle_deg, 360.0) + 360.0, 360.0);
    if r % 90.0 == 0.0 {
        Some((r / 90.0) as u8 % 4)
    } else {
        None
    }
}

fn expanded_extent(extent: f64, original: usize) -> usize {
    let mut n = math::ceil(extent - 1e-9).max(1.0) as usize;
    if (n + original) % 2 == 1 {
        n += 1;
    }
    n
}

impl Rotation {
    pub fn new(src_w: usize, src_h: usize, angle_deg: f64, direction: RotationDirection) -> Self {
        // Signed screen angle: positive turns clockwise on a y-down display.
        let signed = match direction {
            RotationDirection::Clockwise => angle_deg,
            RotationDirection::AntiClockwise => -angle_deg,
        };
        let (sin, cos, dst_w, dst_h) = match quarter_turns(signed) {
            Some(q) => {
                let (s, c) = [(0.0, 1.0), (1.0, 0.0), (0.0, -1.0), (-1.0, 0.0)][q as usize];
                let (w, h) = if q % 2 == 0 {
                    (src_w, src_h)
                } else {
                    (src_h, src_w)
                };
                (s, c, w, h)
            }
            None => {
                let (s, c) = math::sin_cos_deg(signed);
                let ext_w = src_w as f64 * c.abs() + src_h as f64 * s.abs();
                let ext_h = src_w as f64 * s.abs() + src_h as f64 * c.abs();
                (
                    s,
                    c,
                    expanded_extent(ext_w, src_w),
                    expanded_extent(ext_h, src_h),
                )
            }
        };
        Self {
            src_w,
            src_h,
            dst_w,
            dst_h,
            cos,
            sin,
            angle_deg,
            direction,
        }
    }

    pub fn angle_deg(&self) -> f64 {
        self.angle_deg
    }

    pub fn direction(&self) -> RotationDirection {
        self.direction
    }

    pub fn source_size(&self) -> (usize, usize) {
        (self.src_w, self.src_h)
    }

    pub fn output_size(&self) -> (usize, usize) {
        (self.dst_w, self.dst_h)
    }

    /// Maps a continuous point of the source image into the output canvas.
    pub fn to_dest(&self, x: f64, y: f64) -> (f64, f64) {
        let dx = x - self.src_w as f64 / 2.0;
        let dy = y - self.src_h as f64 / 2.0;
        (
            self.cos * dx - self.sin * dy + self.dst_w as f64 / 2.0,
            self.sin * dx + self.cos * dy + self.dst_h as f64 / 2.0,
        )
    }

    /// Maps a continuous point of the output canvas back into the source.
    pub fn to_source(&self, x: f64, y: f64) -> (f64, f64) {
        let dx = x - self.dst_w as f64 / 2.0;
        let dy = y - self.dst_h as f64 / 2.0;
        (
            self.cos * dx + self.sin * dy + self.src_w as f64 / 2.0,
            -self.sin * dx + self.cos * dy + self.src_h as f64 / 2.0,
        )
    }

    /// Source pixels (with bilinear weights) sampled for output pixel `(x, y)`.
    /// Entries outside the source are reported with `None` coordinates.
    pub fn taps(&self, x: usize, y: usize) -> [(Option<(usize, usize)>, f64); 4] {
        let (sx, sy) = self.to_source(x as f64 + 0.5, y as f64 + 0.5);
        let (px, py) = (sx - 0.5, sy - 0.5);
        let x0 = math::floor(px);
        let y0 = math::floor(py);
        let fx = px - x0;
        let fy = py - y0;
        let (x0, y0) = (x0 as isize, y0 as isize);
        let at = |xx: isize, yy: isize| {
            if xx < 0 || yy < 0 || xx >= self.src_w as isize || yy >= self.src_h as isize {
                None
            } else {
                Some((xx as usize, yy as usize))
            }
        };
        [
            (at(x0, y0), (1.0 - fx) * (1.0 - fy)),
            (at(x0 + 1, y0), fx * (1.0 - fy)),
            (at(x0, y0 + 1), (1.0 - fx) * fy),
            (at(x0 + 1, y0 + 1), fx * fy),
        ]
    }

    /// Bilinear resampling; area outside the source reads as white.
    pub fn apply(&self, img: &GrayImage) -> GrayImage {
        debug_assert_eq!((img.width, img.height), (self.src_w, self.src_h));
        let mut pixels = Vec::with_capacity(self.dst_w * self.dst_h);
        for y in 0..self.dst_h {
            for x in 0..self.dst_w {
                let mut acc = 0.0;
                for (pos, weight) in self.taps(x, y) {
                    let v = match pos {
                        Some((sx, sy)) => img.get(sx, sy),
                        None => WHITE,
                    };
                    acc += weight * v as f64;
                }
                pixels.push(math::round(acc).clamp(0.0, 255.0) as u8);
            }
        }
        GrayImage {
            width: self.dst_w,
            height: self.dst_h,
            pixels,
        }
    }
}

/// Rotates `img` by `angle_deg` about its centre, expanding the canvas so no
/// content is clipped. Uncovered area is white.
pub fn rotate_about_center(img: &GrayImage, angle_deg: f64, dir: RotationDirection) -> GrayImage {
    if angle_deg == 0.0 {
        return img.clone();
    }
    Rotation::new(img.width, img.height, angle_deg, dir).apply(img)
}

/// Bilinear resample to an arbitrary size (pixel-centre aligned, clamped edges).
fn resize_bilinear(img: &GrayImage, new_w: usize, new_h: usize) -> GrayImage {
    let sx = img.width as f64 / new_w as f64;
    let sy = img.height as f64 / new_h as f64;
    let max_x = (img.width - 1) as f64;
    let max_y = (img.height - 1) as f64;
    let mut pixels = Vec::with_capacity(new_w * new_h);
    for y in 0..new_h {
        let py = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
        let y0 = math::floor(py) as usize;
        let y1 = (y0 + 1).min(img.height - 1);
        let fy = py - y0 as f64;
        for x in 0..new_w {
            let px = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
            let x0 = math::floor(px) as usize;
            let x1 = (x0 + 1).min(img.width - 1);
            let fx = px - x0 as f64;
            let top = img.get(x0, y0) as f64 * (1.0 - fx) + img.get(x1, y0) as f64 * fx;
            let bottom = img.get(x0, y1) as f64 * (1.0 - fx) + img.get(x1, y1) as f64 * fx;
            let v = top * (1.0 - fy) + bottom * fy;
            pixels.push(math::round(v).clamp(0.0, 255.0) as u8);
        }
    }
    GrayImage {
        width: new_w,
        height: new_h,
        pixels,
    }
}

/// Width after scaling to `target_height` with the aspect ratio preserved.
pub fn scaled_width(width: usize, height: usize, target_height: usize) -> usize {
    (math::round(width as f64 * target_height as f64 / height as f64) as usize).max(1)
}

/// Bilinear upscale to `target_height`, width scaled by the same factor.
pub fn upscale_preserve_aspect(
    img: &GrayImage,
    target_height: usize,
) -> Result<GrayImage, RasterError> {
    if target_height < img.height {
        return Err(RasterError::Downscale {
            current: img.height,
            target: target_height,
        });
    }
    if target_height == img.height {
        return Ok(img.clone());
    }
    let new_w = scaled_width(img.width, img.height, target_height);
    Ok(resize_bilinear(img, new_w, target_height))
}

/// Sub-image covered by `rect`, clamped to the image bounds.
pub fn crop(img: &GrayImage, rect: PixelRect) -> Result<GrayImage, RasterError> {
    let outside = RasterError::RectOutside {
        width: img.width,
        height: img.height,
    };
    let x0 = rect.x as usize;
    let y0 = rect.y as usize;
    if x0 >= img.width || y0 >= img.height {
        return Err(outside);
    }
    let x1 = (rect.x as usize + rect.w as usize).min(img.width);
    let y1 = (rect.y as usize + rect.h as usize).min(img.height);
    if x1 <= x0 || y1 <= y0 {
        return Err(outside);
    }
    let mut pixels = Vec::with_capacity((x1 - x0) * (y1 - y0));
    for y in y0..y1 {
        pixels.extend_from_slice(&img.row(y)[x0..x1]);
    }
    Ok(GrayImage {
        width: x1 - x0,
        height: y1 - y0,
        pixels,
    })
}

/// Default fraction of the width removed from each side by [`trim_sides`].
pub const DEFAULT_TRIM_FRACTION: f64 = 0.02;

/// Columns removed from each side for a given width and fraction.
pub fn trim_amount(width: usize, fraction: f64) -> usize {
    math::floor(fraction * width as f64) as usize
}

/// Removes `floor(fraction * width)` columns from the left and right edges.
pub fn trim_sides(img: &GrayImage, fraction: f64) -> Result<GrayImage, RasterError> {
    if !(0.0..=0.25).contains(&fraction) {
        return Err(RasterError::InvalidTrimFraction(fraction));
    }
    let cut = trim_amount(img.width, fraction);
    if cut == 0 {
        return Ok(img.clone());
    }
    let new_w = img.width - 2 * cut;
    let rect = PixelRect::new(cut as u32, 0, new_w as u32, img.height as u32)
        .expect("trimmed width is positive for fractions up to 0.25");
    crop(img, rect)
}
