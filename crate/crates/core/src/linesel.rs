//! Line candidate filtering on the page and final line selection on the
//! corrected crop.

use alloc::vec::Vec;

use crate::detect::{filter_by_confidence, DetectionSet};
use crate::geometry::{norm_to_rect, overlaps, Detection, PixelRect};

/// A first-pass detection with its rectangle in the page frame.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LineCandidate {
    pub detection: Detection,
    pub rect: PixelRect,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstPassParams {
    pub conf_threshold: f64,
    pub height_factor: f64,
    pub overlap_frac: f64,
    pub high_conf: f64,
}

impl Default for FirstPassParams {
    fn default() -> Self {
        Self {
            conf_threshold: 0.3,
            height_factor: 1.7,
            overlap_frac: 0.5,
            high_conf: 0.5,
        }
    }
}

fn median_height(cands: &[LineCandidate]) -> f64 {
    let mut hs: Vec<u32> = cands.iter().map(|c| c.rect.h).collect();
    hs.sort_unstable();
    let n = hs.len();
    if n % 2 == 1 {
        hs[n / 2] as f64
    } else {
        (hs[n / 2 - 1] as f64 + hs[n / 2] as f64) / 2.0
    }
}

/// Drops low-confidence detections and tall, unsure boxes that overlap other
/// lines. The survivors are returned top to bottom.
///
/// A box is removed when it is taller than `height_factor` times the median
/// height, its confidence is below `high_conf`, and it covers at least
/// `overlap_frac` of (or is covered by) some other survivor. The most
/// confident detection is always kept.
pub fn filter_first_pass(set: &DetectionSet, params: &FirstPassParams) -> Vec<LineCandidate> {
    let kept = filter_by_confidence(set, params.conf_threshold);
    let mut cands: Vec<(usize, LineCandidate)> = kept
        .detections
        .iter()
        .enumerate()
        .map(|(i, d)| {
            (
                i,
                LineCandidate {
                    detection: *d,
                    rect: norm_to_rect(d.bbox, set.image_w, set.image_h),
                },
            )
        })
        .collect();
    cands.sort_by(|(ia, a), (ib, b)| {
        a.rect
            .center_y2()
            .cmp(&b.rect.center_y2())
            .then(a.rect.x.cmp(&b.rect.x))
            .then(ia.cmp(ib))
    });
    let cands: Vec<LineCandidate> = cands.into_iter().map(|(_, c)| c).collect();
    if cands.len() < 2 {
        return cands;
    }
    let median = median_height(&cands);
    let top_conf = cands
        .iter()
        .map(|c| c.detection.confidence)
        .fold(f64::NEG_INFINITY, f64::max);
    let removed: Vec<bool> = cands
        .iter()
        .enumerate()
        .map(|(i, c)| {
            c.detection.confidence < top_conf
                && c.rect.h as f64 > params.height_factor * median
                && c.detection.confidence < params.high_conf
                && cands
                    .iter()
                    .enumerate()
                    .any(|(j, o)| j != i && overlaps(&c.rect, &o.rect, params.overlap_frac))
        })
        .collect();
    cands
        .into_iter()
        .zip(removed)
        .filter(|(_, r)| !r)
        .map(|(c, _)| c)
        .collect()
}

/// Which selection rule produced a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SelectionRule {
    /// No second-pass detection survived.
    NoDetection,
    /// One box narrower than 40% of the crop.
    SingleNarrow,
    SingleCrop,
    /// Two boxes, one at least half the crop wide.
    PairWidest,
    PairMostConfident,
    TripleMiddle,
    ManyWidest,
}

impl SelectionRule {
    /// Rule number, 0 for the empty case.
    pub fn number(self) -> u8 {
        match self {
            Self::NoDetection => 0,
            Self::SingleNarrow | Self::SingleCrop => 1,
            Self::PairWidest | Self::PairMostConfident => 2,
            Self::TripleMiddle => 3,
            Self::ManyWidest => 4,
        }
    }

    pub fn sub_case(self) -> &'static str {
        match self {
            Self::NoDetection => "empty",
            Self::SingleNarrow => "narrow",
            Self::SingleCrop => "crop",
            Self::PairWidest => "widest",
            Self::PairMostConfident => "most-confident",
            Self::TripleMiddle => "middle",
            Self::ManyWidest => "widest",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum LineAction {
    CropTo(PixelRect),
    KeepWhole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FinalLineDecision {
    pub action: LineAction,
    pub rule: SelectionRule,
}

impl FinalLineDecision {
    pub fn crop_rect(&self) -> Option<PixelRect> {
        match self.action {
            LineAction::CropTo(r) => Some(r),
            LineAction::KeepWhole => None,
        }
    }
}

struct Boxed {
    rect: PixelRect,
    conf: f64,
    index: usize,
}

fn widest(boxes: &[Boxed]) -> &Boxed {
    boxes
        .iter()
        .min_by(|a, b| {
            b.rect
                .w
                .cmp(&a.rect.w)
                .then(b.conf.total_cmp(&a.conf))
                .then(a.rect.center_y2().cmp(&b.rect.center_y2()))
                .then(a.index.cmp(&b.index))
        })
        .expect("non-empty")
}

fn most_confident(boxes: &[Boxed]) -> &Boxed {
    boxes
        .iter()
        .min_by(|a, b| {
            b.conf
                .total_cmp(&a.conf)
                .then(a.rect.center_y2().cmp(&b.rect.center_y2()))
                .then(a.index.cmp(&b.index))
        })
        .expect("non-empty")
}

/// Chooses the final line inside a corrected crop from the second-pass
/// detections, which must already be confidence-filtered.
pub fn select_final_line(set: &DetectionSet, line_w: u32, line_h: u32) -> FinalLineDecision {
    let mut boxes: Vec<Boxed> = set
        .detections
        .iter()
        .enumerate()
        .map(|(index, d)| Boxed {
            rect: norm_to_rect(d.bbox, line_w, line_h),
            conf: d.confidence,
            index,
        })
        .collect();
    let crop = |b: &Boxed, rule| FinalLineDecision {
        action: LineAction::CropTo(b.rect),
        rule,
    };
    let w = line_w as f64;
    match boxes.len() {
        0 => FinalLineDecision {
            action: LineAction::KeepWhole,
            rule: SelectionRule::NoDetection,
        },
        1 => {
            if (boxes[0].rect.w as f64) < 0.4 * w {
                FinalLineDecision {
                    action: LineAction::KeepWhole,
                    rule: SelectionRule::SingleNarrow,
                }
            } else {
                crop(&boxes[0], SelectionRule::SingleCrop)
            }
        }
        2 => {
            let wide = widest(&boxes);
            if wide.rect.w as f64 >= 0.5 * w {
                crop(wide, SelectionRule::PairWidest)
            } else {
                crop(most_confident(&boxes), SelectionRule::PairMostConfident)
            }
        }
        3 => {
            boxes.sort_by(|a, b| {
                a.rect
                    .center_y2()
                    .cmp(&b.rect.center_y2())
                    .then(a.rect.x.cmp(&b.rect.x))
                    .then(a.index.cmp(&b.index))
            });
            crop(&boxes[1], SelectionRule::TripleMiddle)
        }
        _ => crop(widest(&boxes), SelectionRule::ManyWidest),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rect_to_norm, NormBox};
    use alloc::vec;
    use proptest::prelude::*;

    fn det(r: PixelRect, conf: f64, w: u32, h: u32) -> Detection {
        Detection::new(0, rect_to_norm(r, w, h).unwrap(), conf).unwrap()
    }

    fn rect(x: u32, y: u32, w: u32, h: u32) -> PixelRect {
        PixelRect::new(x, y, w, h).unwrap()
    }

    fn page(dets: Vec<Detection>) -> DetectionSet {
        DetectionSet::new("p", 200, 200).with_detections(dets)
    }

    #[test]
    fn single_detection_kept() {
        let out = filter_first_pass(
            &page(vec![det(rect(10, 10, 100, 20), 0.9, 200, 200)]),
            &FirstPassParams::default(),
        );
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn stacked_lines_kept_in_order() {
        let dets = vec![
            det(rect(10, 120, 150, 20), 0.8, 200, 200),
            det(rect(10, 10, 150, 20), 0.9, 200, 200),
            det(rect(10, 60, 150, 20), 0.7, 200, 200),
        ];
        let out = filter_first_pass(&page(dets), &FirstPassParams::default());
        let ys: Vec<u32> = out.iter().map(|c| c.rect.y).collect();
        assert_eq!(ys, vec![10, 60, 120]);
    }

    #[test]
    fn tall_unsure_spanning_box_removed() {
        let dets = vec![
            det(rect(10, 10, 150, 20), 0.9, 200, 200),
            det(rect(10, 40, 150, 20), 0.8, 200, 200),
            det(rect(10, 70, 150, 20), 0.85, 200, 200),
            det(rect(10, 10, 150, 50), 0.35, 200, 200),
        ];
        let out = filter_first_pass(&page(dets), &FirstPassParams::default());
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|c| c.rect.h == 20));
    }

    #[test]
    fn each_removal_condition_is_needed() {
        let base = |tall_conf: f64, tall_h: u32, tall_y: u32| {
            vec![
                det(rect(10, 10, 150, 20), 0.9, 200, 200),
                det(rect(10, 40, 150, 20), 0.8, 200, 200),
                det(rect(10, 70, 150, 20), 0.85, 200, 200),
                det(rect(10, tall_y, 150, tall_h), tall_conf, 200, 200),
            ]
        };
        let p = FirstPassParams::default();
        // confident enough
        assert_eq!(filter_first_pass(&page(base(0.6, 50, 10)), &p).len(), 4);
        // not tall enough
        assert_eq!(filter_first_pass(&page(base(0.35, 30, 10)), &p).len(), 4);
        // no overlap
        assert_eq!(filter_first_pass(&page(base(0.35, 50, 120)), &p).len(), 4);
    }

    #[test]
    fn confidence_threshold_applied_first() {
        let dets = vec![
            det(rect(10, 10, 150, 20), 0.29, 200, 200),
            det(rect(10, 40, 150, 20), 0.3, 200, 200),
        ];
        let out = filter_first_pass(&page(dets), &FirstPassParams::default());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].detection.confidence, 0.3);
    }

    fn line_set(dets: Vec<Detection>) -> DetectionSet {
        DetectionSet::new("l", 100, 40).with_detections(dets)
    }

    #[test]
    fn narrow_single_kept_whole() {
        let d = line_set(vec![det(rect(0, 5, 30, 20), 0.9, 100, 40)]);
        let dec = select_final_line(&d, 100, 40);
        assert_eq!(dec.action, LineAction::KeepWhole);
        assert_eq!(dec.rule, SelectionRule::SingleNarrow);
        assert_eq!(dec.rule.number(), 1);
        let d = line_set(vec![det(rect(0, 5, 40, 20), 0.9, 100, 40)]);
        assert_eq!(select_final_line(&d, 100, 40).rule, SelectionRule::SingleCrop);
    }

    #[test]
    fn pair_rules() {
        let wide = rect(0, 10, 80, 20);
        let d = line_set(vec![
            det(rect(0, 2, 30, 10), 0.95, 100, 40),
            det(wide, 0.6, 100, 40),
        ]);
        let dec = select_final_line(&d, 100, 40);
        assert_eq!(dec.action, LineAction::CropTo(wide));
        assert_eq!(dec.rule, SelectionRule::PairWidest);

        let sure = rect(50, 10, 40, 20);
        let d = line_set(vec![
            det(rect(0, 10, 45, 20), 0.6, 100, 40),
            det(sure, 0.9, 100, 40),
        ]);
        let dec = select_final_line(&d, 100, 40);
        assert_eq!(dec.action, LineAction::CropTo(sure));
        assert_eq!(dec.rule, SelectionRule::PairMostConfident);
    }

    #[test]
    fn triple_takes_middle() {
        let mid = rect(0, 35, 100, 10);
        let set = DetectionSet::new("l", 100, 80).with_detections(vec![
            det(rect(0, 65, 100, 10), 0.9, 100, 80),
            det(mid, 0.5, 100, 80),
            det(rect(0, 5, 100, 10), 0.9, 100, 80),
        ]);
        let dec = select_final_line(&set, 100, 80);
        assert_eq!(dec.action, LineAction::CropTo(mid));
        assert_eq!(dec.rule, SelectionRule::TripleMiddle);
    }

    #[test]
    fn many_takes_widest() {
        let wide = rect(5, 20, 70, 10);
        let set = DetectionSet::new("l", 100, 80).with_detections(vec![
            det(rect(0, 0, 30, 10), 0.99, 100, 80),
            det(wide, 0.5, 100, 80),
            det(rect(0, 40, 60, 10), 0.9, 100, 80),
            det(rect(0, 60, 20, 10), 0.9, 100, 80),
        ]);
        let dec = select_final_line(&set, 100, 80);
        assert_eq!(dec.action, LineAction::CropTo(wide));
        assert_eq!(dec.rule, SelectionRule::ManyWidest);
    }

    #[test]
    fn empty_set_kept_whole() {
        let dec = select_final_line(&line_set(vec![]), 100, 40);
        assert_eq!(dec.action, LineAction::KeepWhole);
        assert_eq!(dec.rule.number(), 0);
    }

    fn arb_detection() -> impl Strategy<Value = Detection> {
        (0.05f64..0.95, 0.05f64..0.95, 0.01f64..0.5, 0.01f64..0.5, 0.0f64..=1.0).prop_map(
            |(cx, cy, w, h, c)| {
                let w = w.min(2.0 * cx).min(2.0 * (1.0 - cx));
                let h = h.min(2.0 * cy).min(2.0 * (1.0 - cy));
                Detection::new(0, NormBox::new(cx, cy, w, h).unwrap(), c).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn first_pass_sorted_subset_keeps_best(dets in proptest::collection::vec(arb_detection(), 0..12)) {
            let set = page(dets.clone());
            let out = filter_first_pass(&set, &FirstPassParams::default());
            for pair in out.windows(2) {
                prop_assert!(pair[0].rect.center_y2() <= pair[1].rect.center_y2());
            }
            for c in &out {
                prop_assert!(c.detection.confidence >= 0.3);
                prop_assert!(dets.contains(&c.detection));
            }
            let best = dets.iter().filter(|d| d.confidence >= 0.3).map(|d| d.confidence).fold(f64::NEG_INFINITY, f64::max);
            if best.is_finite() {
                prop_assert!(out.iter().any(|c| c.detection.confidence == best));
            }
        }

        #[test]
        fn selection_crop_inside_line(dets in proptest::collection::vec(arb_detection(), 0..8), w in 8u32..300, h in 4u32..80) {
            let set = DetectionSet::new("l", w, h).with_detections(dets);
            let dec = select_final_line(&set, w, h);
            if let Some(r) = dec.crop_rect() {
                prop_assert!(r.fits_in(w, h));
            }
        }

        #[test]
        fn selection_independent_of_input_order(dets in proptest::collection::vec(arb_detection(), 0..7)) {
            // Distinct confidences make every tie chain resolve before the index.
            let dets: Vec<Detection> = dets.into_iter().enumerate().map(|(i, mut d)| {
                d.confidence = 0.5 + i as f64 * 0.01;
                d
            }).collect();
            let mut rev = dets.clone();
            rev.reverse();
            let a = select_final_line(&line_set(dets), 100, 40);
            let b = select_final_line(&line_set(rev), 100, 40);
            prop_assert_eq!(a.rule, b.rule);
            if a.rule != SelectionRule::TripleMiddle {
                prop_assert_eq!(a, b);
            }
        }
    }
}
