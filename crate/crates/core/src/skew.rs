//! Skew estimation and correction for line crops.
//!
//! Two estimators run in sequence. The line estimator (LSkew) accumulates the
//! edge pixels of the dilated ink in a standard rho-theta Hough space limited
//! to near-horizontal angles and averages the angles of every strong peak.
//! When no peak clears the vote threshold the crop is upscaled and the
//! dimension estimator (DSkew) takes over: a probabilistic Hough transform
//! extracts segments, each segment votes for one of six inclination buckets,
//! and the winning bucket's mean inclination is mapped to a rotation.
//!
//! Angles are in degrees. Hough lines use `rho = x cos(theta) + y sin(theta)`
//! with `y` growing downward, so a horizontal text line sits at
//! `theta = 90`. The signed skew is `theta - 90`: positive when the line
//! descends to the right on screen, corrected by an anticlockwise turn;
//! negative skew is corrected clockwise.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::math;
use crate::raster::{
    binarize, canny, dilate3x3, rotate_about_center, upscale_preserve_aspect, BinaryImage,
    GrayImage, RasterError, RotationDirection,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SkewError {
    #[error("cannot vote on an empty segment list")]
    NoSegments,
    #[error("inclination {0} outside [-90, 90]")]
    DegreeOutOfRange(f64),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// A line in Hough normal form.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HoughLine {
    /// Signed distance from the origin in pixels.
    pub rho: f64,
    /// Angle of the normal in degrees, `[0, 180)`.
    pub theta: f64,
    pub votes: u32,
}

/// A segment found by the probabilistic transform.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HoughSegment {
    pub x1: i32,
    pub y1: i32,
    pub x2: i32,
    pub y2: i32,
    /// Inclination in `[-90, 90]`, positive when descending to the right.
    pub degree: f64,
}

impl HoughSegment {
    /// Builds a segment with endpoints ordered left to right (top to bottom
    /// for verticals) and the inclination derived from them.
    pub fn from_endpoints(x1: i32, y1: i32, x2: i32, y2: i32) -> Self {
        let (x1, y1, x2, y2) = if (x1, y1) <= (x2, y2) {
            (x1, y1, x2, y2)
        } else {
            (x2, y2, x1, y1)
        };
        let degree = if x1 == x2 {
            90.0
        } else if y1 == y2 {
            0.0
        } else {
            math::atan2((y2 - y1) as f64, (x2 - x1) as f64).to_degrees()
        };
        Self {
            x1,
            y1,
            x2,
            y2,
            degree,
        }
    }

    pub fn length(&self) -> f64 {
        let dx = (self.x2 - self.x1) as f64;
        let dy = (self.y2 - self.y1) as f64;
        math::sqrt(dx * dx + dy * dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SkewMethod {
    LSkew,
    DSkew,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SkewEstimate {
    pub method: SkewMethod,
    /// Signed skew used for correction.
    pub theta_avg: f64,
    /// Voted mean segment inclination (DSkew only).
    pub degree_avg: Option<f64>,
    pub direction: Option<RotationDirection>,
    /// Whether the crop was actually rotated.
    pub applied: bool,
}

impl SkewEstimate {
    pub fn none() -> Self {
        Self {
            method: SkewMethod::None,
            theta_avg: 0.0,
            degree_avg: None,
            direction: None,
            applied: false,
        }
    }

    /// Rotation performed on the crop, if any.
    pub fn rotation(&self) -> Option<(f64, RotationDirection)> {
        match (self.applied, self.direction) {
            (true, Some(dir)) => Some((self.theta_avg.abs(), dir)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum VoteCategory {
    Vertical,
    Straight,
    PositiveSkew,
    NegativeSkew,
}

/// Result of the six-bucket vote.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VoteOutcome {
    pub category: VoteCategory,
    pub degree_avg: f64,
    /// Votes per bucket, in table order: vertical, straight, `[-45, 0]`,
    /// `[-90, -45)`, `(0, 45]`, `(45, 90]`.
    pub bucket_counts: [usize; 6],
    /// Index of the winning bucket into `bucket_counts`.
    pub winner: usize,
}

/// Tunables for [`correct_skew`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewParams {
    pub sht_window_deg: f64,
    pub sht_threshold_frac: f64,
    pub canny_low: f32,
    pub canny_high: f32,
    pub dskew_height: usize,
    pub pht_min_len_frac: f64,
    pub pht_max_gap: u32,
    pub pht_vote_threshold: u32,
    pub pht_seed: u64,
    pub min_correction_deg: f64,
}

impl Default for SkewParams {
    fn default() -> Self {
        Self {
            sht_window_deg: 45.0,
            sht_threshold_frac: 0.5,
            canny_low: 50.0,
            canny_high: 150.0,
            dskew_height: 128,
            pht_min_len_frac: 0.15,
            pht_max_gap: 10,
            pht_vote_threshold: 30,
            pht_seed: 0x5EED,
            min_correction_deg: 1.0,
        }
    }
}

/// Hough lines, segments and vote behind an estimate, for debugging.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SkewTrace {
    pub lines: Vec<HoughLine>,
    pub segments: Vec<HoughSegment>,
    pub vote: Option<VoteOutcome>,
}

/// Binarize, dilate with a 3x3 element, then run Canny on the dilated mask.
pub fn preprocess(img: &GrayImage, canny_low: f32, canny_high: f32) -> Result<BinaryImage, RasterError> {
    let ink = dilate3x3(&binarize(img));
    canny(&ink.to_gray(), canny_low, canny_high)
}

/// Half-size of the window used for peak suppression in the accumulator.
const PEAK_RADIUS: isize = 2;

struct Accumulator {
    thetas: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    offset: isize,
    n_rho: usize,
    votes: Vec<u32>,
}

impl Accumulator {
    fn new(thetas: Vec<f64>, w: usize, h: usize) -> Self {
        let cos = thetas.iter().map(|&t| math::sin_cos_deg(t).1).collect();
        let sin = thetas.iter().map(|&t| math::sin_cos_deg(t).0).collect();
        let offset = (w + h) as isize;
        let n_rho = 2 * (w + h) + 1;
        let votes = vec![0; n_rho * thetas.len()];
        Self {
            thetas,
            cos,
            sin,
            offset,
            n_rho,
            votes,
        }
    }

    #[inline]
    fn rho_index(&self, t: usize, x: usize, y: usize) -> usize {
        let r = math::round(x as f64 * self.cos[t] + y as f64 * self.sin[t]) as isize;
        (r + self.offset) as usize
    }

    fn add(&mut self, x: usize, y: usize) {
        for t in 0..self.thetas.len() {
            let r = self.rho_index(t, x, y);
            self.votes[t * self.n_rho + r] += 1;
        }
    }

    /// Adds a point and returns the strongest cell it touched.
    fn add_tracking_max(&mut self, x: usize, y: usize) -> (usize, u32) {
        let mut best = (0, 0);
        for t in 0..self.thetas.len() {
            let r = self.rho_index(t, x, y);
            let v = &mut self.votes[t * self.n_rho + r];
            *v += 1;
            if *v > best.1 {
                best = (t, *v);
            }
        }
        best
    }

    fn remove(&mut self, x: usize, y: usize) {
        for t in 0..self.thetas.len() {
            let r = self.rho_index(t, x, y);
            let v = &mut self.votes[t * self.n_rho + r];
            *v = v.saturating_sub(1);
        }
    }

    /// Cells with at least `min_votes` that dominate their neighbourhood.
    /// On plateaus the first cell in scan order wins.
    fn peaks(&self, min_votes: u32) -> Vec<HoughLine> {
        let n_t = self.thetas.len() as isize;
        let n_r = self.n_rho as isize;
        let mut out = Vec::new();
        for t in 0..n_t {
            for r in 0..n_r {
                let idx = (t * n_r + r) as usize;
                let v = self.votes[idx];
                if v < min_votes {
                    continue;
                }
                let mut is_peak = true;
                'scan: for dt in -PEAK_RADIUS..=PEAK_RADIUS {
                    let tt = t + dt;
                    if tt < 0 || tt >= n_t {
                        continue;
                    }
                    for dr in -PEAK_RADIUS..=PEAK_RADIUS {
                        let rr = r + dr;
                        if rr < 0 || rr >= n_r || (dt == 0 && dr == 0) {
                            continue;
                        }
                        let j = (tt * n_r + rr) as usize;
                        let n = self.votes[j];
                        if n > v || (n == v && j < idx) {
                            is_peak = false;
                            break 'scan;
                        }
                    }
                }
                if is_peak {
                    out.push(HoughLine {
                        rho: (r - self.offset) as f64,
                        theta: self.thetas[t as usize],
                        votes: v,
                    });
                }
            }
        }
        out.sort_by(|a, b| {
            b.votes
                .cmp(&a.votes)
                .then(a.theta.total_cmp(&b.theta))
                .then(a.rho.total_cmp(&b.rho))
        });
        out
    }
}

/// Standard Hough transform restricted to near-horizontal lines.
///
/// Theta runs in 1 degree steps over `[90 - window, 90 + window]`, rho in
/// 1 pixel steps. Every accumulator peak with at least
/// `threshold_frac * width` votes is returned, strongest first.
pub fn sht_lines(edges: &BinaryImage, theta_window_deg: f64, threshold_frac: f64) -> Vec<HoughLine> {
    let lo = math::ceil(90.0 - theta_window_deg) as i32;
    let hi = math::floor(90.0 + theta_window_deg) as i32;
    let thetas: Vec<f64> = (lo..=hi).map(|t| t as f64).collect();
    let mut acc = Accumulator::new(thetas, edges.width(), edges.height());
    let mut any = false;
    for (x, y) in edges.foreground() {
        acc.add(x, y);
        any = true;
    }
    if !any {
        return Vec::new();
    }
    let min_votes = (math::ceil(threshold_frac * edges.width() as f64) as u32).max(1);
    acc.peaks(min_votes)
}

/// Outcome of the line estimator.
#[derive(Debug, Clone, PartialEq)]
pub enum LSkew {
    Estimated {
        estimate: SkewEstimate,
        lines: Vec<HoughLine>,
    },
    /// No accumulator cell reached the threshold.
    ShtFailed,
}

fn direction_for(theta: f64) -> Option<RotationDirection> {
    if theta < 0.0 {
        Some(RotationDirection::Clockwise)
    } else if theta > 0.0 {
        Some(RotationDirection::AntiClockwise)
    } else {
        None
    }
}

/// Line skew of an edge image: mean theta of the detected lines minus 90.
pub fn lskew_from_edges(edges: &BinaryImage, params: &SkewParams) -> LSkew {
    let lines = sht_lines(edges, params.sht_window_deg, params.sht_threshold_frac);
    if lines.is_empty() {
        return LSkew::ShtFailed;
    }
    // Only theta matters for the rotation; rho is not averaged.
    let mean_theta = lines.iter().map(|l| l.theta).sum::<f64>() / lines.len() as f64;
    let theta_avg = mean_theta - 90.0;
    LSkew::Estimated {
        estimate: SkewEstimate {
            method: SkewMethod::LSkew,
            theta_avg,
            degree_avg: None,
            direction: direction_for(theta_avg),
            applied: false,
        },
        lines,
    }
}

/// Line skew of a line crop (preprocessing included).
pub fn estimate_lskew(line_img: &GrayImage, params: &SkewParams) -> Result<LSkew, SkewError> {
    let edges = preprocess(line_img, params.canny_low, params.canny_high)?;
    Ok(lskew_from_edges(&edges, params))
}

const FIXED_SHIFT: i64 = 16;

/// Probabilistic Hough transform.
///
/// Edge pixels are drawn in a seeded random order and voted into a full
/// 0-180 degree accumulator. When a pixel lifts a cell to `vote_threshold`
/// the line through it is walked both ways, bridging gaps of up to `max_gap`
/// pixels. Walked pixels are consumed; if the span is at least
/// `min_len_frac * width` long it becomes a segment and its votes are
/// withdrawn.
pub fn pht_segments(
    edges: &BinaryImage,
    min_len_frac: f64,
    max_gap: u32,
    vote_threshold: u32,
    seed: u64,
) -> Vec<HoughSegment> {
    let (w, h) = (edges.width(), edges.height());
    let mut points: Vec<(usize, usize)> = edges.foreground().collect();
    if points.is_empty() {
        return Vec::new();
    }
    let thetas: Vec<f64> = (0..180).map(|t| t as f64).collect();
    let mut acc = Accumulator::new(thetas, w, h);
    let mut live = edges.mask().to_vec();
    let min_len = min_len_frac * w as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut segments = Vec::new();

    let mut remaining = points.len();
    while remaining > 0 {
        let pick = rng.random_range(0..remaining);
        let (x, y) = points[pick];
        points.swap(pick, remaining - 1);
        remaining -= 1;

        if !live[y * w + x] {
            continue;
        }
        let (best_t, best_votes) = acc.add_tracking_max(x, y);
        if best_votes < vote_threshold.max(1) {
            continue;
        }

        // Direction of the line is perpendicular to its normal.
        let a = -acc.sin[best_t];
        let b = acc.cos[best_t];
        let (x_major, dx0, dy0, start_x, start_y);
        if a.abs() > b.abs() {
            x_major = true;
            dx0 = if a > 0.0 { 1 } else { -1 };
            dy0 = math::round(b * (1i64 << FIXED_SHIFT) as f64 / a.abs()) as i64;
            start_x = x as i64;
            start_y = ((y as i64) << FIXED_SHIFT) + (1 << (FIXED_SHIFT - 1));
        } else {
            x_major = false;
            dy0 = if b > 0.0 { 1 } else { -1 };
            dx0 = math::round(a * (1i64 << FIXED_SHIFT) as f64 / b.abs()) as i64;
            start_x = ((x as i64) << FIXED_SHIFT) + (1 << (FIXED_SHIFT - 1));
            start_y = y as i64;
        }
        let to_pixel = |px: i64, py: i64| -> (i64, i64) {
            if x_major {
                (px, py >> FIXED_SHIFT)
            } else {
                (px >> FIXED_SHIFT, py)
            }
        };
        let inside = |j: i64, i: i64| j >= 0 && i >= 0 && j < w as i64 && i < h as i64;

        let mut ends = [(x as i64, y as i64); 2];
        for (k, end) in ends.iter_mut().enumerate() {
            let (sx, sy) = if k == 0 { (dx0, dy0) } else { (-dx0, -dy0) };
            let (mut px, mut py) = (start_x, start_y);
            let mut gap = 0u32;
            loop {
                let (j, i) = to_pixel(px, py);
                if !inside(j, i) {
                    break;
                }
                if live[i as usize * w + j as usize] {
                    gap = 0;
                    *end = (j, i);
                } else {
                    gap += 1;
                    if gap > max_gap {
                        break;
                    }
                }
                px += sx;
                py += sy;
            }
        }

        let seg = HoughSegment::from_endpoints(
            ends[0].0 as i32,
            ends[0].1 as i32,
            ends[1].0 as i32,
            ends[1].1 as i32,
        );
        let good = seg.length() >= min_len;

        for (k, end) in ends.iter().enumerate() {
            let (sx, sy) = if k == 0 { (dx0, dy0) } else { (-dx0, -dy0) };
            let (mut px, mut py) = (start_x, start_y);
            loop {
                let (j, i) = to_pixel(px, py);
                if !inside(j, i) {
                    break;
                }
                let idx = i as usize * w + j as usize;
                if live[idx] {
                    if good {
                        acc.remove(j as usize, i as usize);
                    }
                    live[idx] = false;
                }
                if (j, i) == *end {
                    break;
                }
                px += sx;
                py += sy;
            }
        }

        if good {
            segments.push(seg);
        }
    }
    segments
}

fn bucket_of(seg: &HoughSegment) -> usize {
    let d = seg.degree;
    if seg.x1 == seg.x2 {
        0
    } else if seg.y1 == seg.y2 {
        1
    } else if (-45.0..=0.0).contains(&d) {
        2
    } else if d < -45.0 {
        3
    } else if d <= 45.0 {
        4
    } else {
        5
    }
}

const BUCKET_CATEGORY: [VoteCategory; 6] = [
    VoteCategory::Vertical,
    VoteCategory::Straight,
    VoteCategory::PositiveSkew,
    VoteCategory::NegativeSkew,
    VoteCategory::NegativeSkew,
    VoteCategory::PositiveSkew,
];

/// Six-bucket vote over segment inclinations.
///
/// The bucket with the most segments wins; ties go to the bucket with the
/// smaller mean absolute inclination, then to the straight bucket, then to
/// the earlier bucket. The result is the winning bucket's mean inclination,
/// forced to 90 for vertical and 0 for straight winners.
pub fn vote_dskew(segments: &[HoughSegment]) -> Result<VoteOutcome, SkewError> {
    if segments.is_empty() {
        return Err(SkewError::NoSegments);
    }
    let mut counts = [0usize; 6];
    let mut sums = [0f64; 6];
    let mut abs_sums = [0f64; 6];
    for seg in segments {
        let b = bucket_of(seg);
        counts[b] += 1;
        sums[b] += seg.degree;
        abs_sums[b] += seg.degree.abs();
    }
    let mean_abs = |b: usize| match b {
        0 => 90.0,
        1 => 0.0,
        _ => abs_sums[b] / counts[b] as f64,
    };
    let mut winner = 0usize;
    for b in 1..6 {
        if counts[b] == 0 {
            continue;
        }
        let better = if counts[winner] == 0 || counts[b] > counts[winner] {
            true
        } else if counts[b] < counts[winner] {
            false
        } else {
            let (mb, mw) = (mean_abs(b), mean_abs(winner));
            mb < mw || (mb == mw && b == 1)
        };
        if better {
            winner = b;
        }
    }
    let degree_avg = match winner {
        0 => 90.0,
        1 => 0.0,
        b => sums[b] / counts[b] as f64,
    };
    Ok(VoteOutcome {
        category: BUCKET_CATEGORY[winner],
        degree_avg,
        bucket_counts: counts,
        winner,
    })
}

/// Maps a voted inclination to the correcting skew angle and direction.
pub fn dskew_rotation(degree_avg: f64) -> Result<(f64, RotationDirection), SkewError> {
    use RotationDirection::*;
    let d = degree_avg;
    if (-45.0..=0.0).contains(&d) {
        Ok((d, Clockwise))
    } else if (-90.0..-45.0).contains(&d) {
        Ok((d + 90.0, AntiClockwise))
    } else if d > 0.0 && d <= 45.0 {
        Ok((d, AntiClockwise))
    } else if d > 45.0 && d <= 90.0 {
        Ok((d - 90.0, Clockwise))
    } else {
        Err(SkewError::DegreeOutOfRange(d))
    }
}

/// A corrected line crop together with how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewCorrection {
    pub image: GrayImage,
    pub estimate: SkewEstimate,
    pub trace: SkewTrace,
}

/// Estimates the skew of a line crop and rotates it level.
///
/// The line estimator runs first; if it finds no line the crop is upscaled to
/// `dskew_height` for the dimension estimator, whose angle is applied to the
/// original crop. Rotations smaller than `min_correction_deg` are skipped.
/// When neither estimator finds anything the crop is returned unchanged with
/// method [`SkewMethod::None`].
pub fn correct_skew(line_img: &GrayImage, params: &SkewParams) -> Result<SkewCorrection, SkewError> {
    let mut trace = SkewTrace::default();
    let mut estimate = match estimate_lskew(line_img, params)? {
        LSkew::Estimated { estimate, lines } => {
            trace.lines = lines;
            estimate
        }
        LSkew::ShtFailed => {
            let target = params.dskew_height.max(line_img.height());
            let scaled = upscale_preserve_aspect(line_img, target)?;
            let edges = preprocess(&scaled, params.canny_low, params.canny_high)?;
            let segments = pht_segments(
                &edges,
                params.pht_min_len_frac,
                params.pht_max_gap,
                params.pht_vote_threshold,
                params.pht_seed,
            );
            if segments.is_empty() {
                return Ok(SkewCorrection {
                    image: line_img.clone(),
                    estimate: SkewEstimate::none(),
                    trace,
                });
            }
            let vote = vote_dskew(&segments)?;
            let (theta_avg, direction) = dskew_rotation(vote.degree_avg)?;
            trace.segments = segments;
            trace.vote = Some(vote);
            SkewEstimate {
                method: SkewMethod::DSkew,
                theta_avg,
                degree_avg: Some(vote.degree_avg),
                direction: Some(direction),
                applied: false,
            }
        }
    };

    let magnitude = estimate.theta_avg.abs();
    let image = match estimate.direction {
        Some(dir) if magnitude >= params.min_correction_deg && magnitude > 0.0 => {
            estimate.applied = true;
            rotate_about_center(line_img, magnitude, dir)
        }
        _ => line_img.clone(),
    };
    Ok(SkewCorrection {
        image,
        estimate,
        trace,
    })
}
