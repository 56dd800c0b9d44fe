//! Word detection on final line images and left-to-right indexing.

use alloc::vec::Vec;

use crate::detect::{filter_by_confidence, DetectError, DetectionSet, Detector, DetectorRole};
use crate::geometry::{norm_to_rect, PixelRect};
use crate::raster::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WordRecord {
    /// 1-based position within the line.
    pub index: usize,
    /// Rectangle in the final line's frame.
    pub rect: PixelRect,
    pub confidence: f64,
}

/// Filters detections at `conf_threshold` and orders them left to right.
///
/// Ties on horizontal centre fall back to vertical centre, then left edge, so
/// the order never depends on the order the detector reported.
pub fn order_words(set: &DetectionSet, conf_threshold: f64) -> Vec<WordRecord> {
    let kept = filter_by_confidence(set, conf_threshold);
    let mut words: Vec<WordRecord> = kept
        .detections
        .iter()
        .map(|d| WordRecord {
            index: 0,
            rect: norm_to_rect(d.bbox, set.image_w, set.image_h),
            confidence: d.confidence,
        })
        .collect();
    words.sort_by(|a, b| {
        a.rect
            .center_x2()
            .cmp(&b.rect.center_x2())
            .then(a.rect.center_y2().cmp(&b.rect.center_y2()))
            .then(a.rect.x.cmp(&b.rect.x))
            .then(a.rect.cmp(&b.rect))
            .then(a.confidence.total_cmp(&b.confidence))
    });
    for (i, w) in words.iter_mut().enumerate() {
        w.index = i + 1;
    }
    words
}

/// Runs the word detector on a final line image and orders its output.
pub fn segment_words<D: Detector + ?Sized>(
    final_line: &GrayImage,
    detector: &D,
    conf_threshold: f64,
    line_id: &str,
) -> Result<Vec<WordRecord>, DetectError> {
    let set = detector.detect(DetectorRole::WordDetector, final_line, line_id)?;
    Ok(order_words(&set, conf_threshold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::MapDetector;
    use crate::geometry::{rect_to_norm, Detection, NormBox};
    use alloc::vec;
    use proptest::prelude::*;

    fn det(x: u32, y: u32, w: u32, h: u32, conf: f64) -> Detection {
        let r = PixelRect::new(x, y, w, h).unwrap();
        Detection::new(0, rect_to_norm(r, 100, 30).unwrap(), conf).unwrap()
    }

    fn set(dets: Vec<Detection>) -> DetectionSet {
        DetectionSet::new("l", 100, 30).with_detections(dets)
    }

    #[test]
    fn empty_detection_set() {
        assert!(order_words(&set(vec![]), 0.4).is_empty());
    }

    #[test]
    fn right_to_left_input_reordered() {
        let words = order_words(
            &set(vec![
                det(70, 5, 20, 10, 0.9),
                det(40, 5, 20, 10, 0.8),
                det(5, 5, 20, 10, 0.7),
            ]),
            0.4,
        );
        let xs: Vec<u32> = words.iter().map(|w| w.rect.x).collect();
        assert_eq!(xs, vec![5, 40, 70]);
        assert_eq!(words.iter().map(|w| w.index).collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn equal_center_x_tie_goes_to_upper() {
        let words = order_words(
            &set(vec![det(10, 15, 20, 10, 0.9), det(10, 0, 20, 10, 0.9)]),
            0.4,
        );
        assert_eq!(words[0].rect.y, 0);
        assert_eq!(words[0].index, 1);
    }

    #[test]
    fn low_confidence_dropped() {
        let words = order_words(&set(vec![det(10, 5, 20, 10, 0.39), det(40, 5, 20, 10, 0.4)]), 0.4);
        assert_eq!(words.len(), 1);
        assert_eq!(words[0].rect.x, 40);
    }

    #[test]
    fn detector_errors_propagate() {
        let img = GrayImage::filled(100, 30, 255).unwrap();
        let det = MapDetector::new(DetectorRole::WordDetector);
        assert!(matches!(
            segment_words(&img, &det, 0.4, "missing"),
            Err(DetectError::MissingPrediction(_))
        ));
        let det = MapDetector::new(DetectorRole::LineDetector);
        assert!(segment_words(&img, &det, 0.4, "x").is_err());
    }

    fn arb_det() -> impl Strategy<Value = Detection> {
        (0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0)
            .prop_map(|(cx, cy, w, h, c)| Detection::new(0, NormBox::new(cx, cy, w, h).unwrap(), c).unwrap())
    }

    proptest! {
        #[test]
        fn ordering_is_permutation_invariant(dets in proptest::collection::vec(arb_det(), 0..10), seed in any::<u64>()) {
            let mut shuffled = dets.clone();
            // Deterministic shuffle driven by the seed.
            let n = shuffled.len();
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (s >> 33) as usize % (i + 1));
            }
            let a = order_words(&set(dets), 0.4);
            let b = order_words(&set(shuffled), 0.4);
            prop_assert_eq!(&a, &b);
            for (i, w) in a.iter().enumerate() {
                prop_assert_eq!(w.index, i + 1);
                prop_assert!(w.rect.fits_in(100, 30));
            }
            for pair in a.windows(2) {
                prop_assert!(pair[0].rect.center_x2() <= pair[1].rect.center_x2());
            }
        }
    }
}
