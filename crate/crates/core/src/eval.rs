//! One-to-one box matching and detection-rate / recognition-accuracy scores.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::geometry::{intersection_area, PixelRect};

pub const DEFAULT_TA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("acceptance threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),
    #[error("{o2o} matches exceed min({n}, {m})")]
    TooManyMatches { n: u64, m: u64, o2o: u64 },
    #[error("reports were computed at different thresholds ({0} vs {1})")]
    ThresholdMismatch(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ClassLabel {
    Line,
    Word,
}

impl ClassLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Line => "line",
            Self::Word => "word",
        }
    }
}

fn check_ta(ta: f64) -> Result<(), EvalError> {
    if ta > 0.0 && ta <= 1.0 {
        Ok(())
    } else {
        Err(EvalError::InvalidThreshold(ta))
    }
}

/// Whether `g` and `p` cover each other by at least `ta` of their own area.
pub fn admissible(g: &PixelRect, p: &PixelRect, ta: f64) -> bool {
    let inter = intersection_area(g, p);
    inter > 0 && inter as f64 >= ta * g.area() as f64 && inter as f64 >= ta * p.area() as f64
}

/// Pairs ground-truth and predicted boxes one to one.
///
/// A pair is admissible when the intersection covers at least `ta` of both
/// boxes. Admissible pairs are first taken greedily by descending
/// intersection area (ties by ground-truth then prediction index); the
/// greedy matching is then extended along augmenting paths so the result has
/// maximum cardinality. Pairs are returned sorted by ground-truth index.
pub fn match_one_to_one(
    gt: &[PixelRect],
    pred: &[PixelRect],
    ta: f64,
) -> Result<Vec<(usize, usize)>, EvalError> {
    check_ta(ta)?;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); gt.len()];
    let mut pairs: Vec<(u64, usize, usize)> = Vec::new();
    for (gi, g) in gt.iter().enumerate() {
        for (pi, p) in pred.iter().enumerate() {
            if admissible(g, p, ta) {
                adj[gi].push(pi);
                pairs.push((intersection_area(g, p), gi, pi));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut gt_match: Vec<Option<usize>> = vec![None; gt.len()];
    let mut pred_match: Vec<Option<usize>> = vec![None; pred.len()];
    for &(_, gi, pi) in &pairs {
        if gt_match[gi].is_none() && pred_match[pi].is_none() {
            gt_match[gi] = Some(pi);
            pred_match[pi] = Some(gi);
        }
    }

    let mut visited = vec![false; pred.len()];
    for gi in 0..gt.len() {
        if gt_match[gi].is_some() || adj[gi].is_empty() {
            continue;
        }
        visited.iter_mut().for_each(|v| *v = false);
        augment(gi, &adj, &mut gt_match, &mut pred_match, &mut visited);
    }

    Ok(gt_match
        .iter()
        .enumerate()
        .filter_map(|(gi, m)| m.map(|pi| (gi, pi)))
        .collect())
}

fn augment(
    gi: usize,
    adj: &[Vec<usize>],
    gt_match: &mut [Option<usize>],
    pred_match: &mut [Option<usize>],
    visited: &mut [bool],
) -> bool {
    for &pi in &adj[gi] {
        if visited[pi] {
            continue;
        }
        visited[pi] = true;
        let free = match pred_match[pi] {
            None => true,
            Some(other) => augment(other, adj, gt_match, pred_match, visited),
        };
        if free {
            gt_match[gi] = Some(pi);
            pred_match[pi] = Some(gi);
            return true;
        }
    }
    false
}

/// Ground-truth, prediction and match counts, summable across documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatchCounts {
    pub n: u64,
    pub m: u64,
    pub o2o: u64,
}

impl MatchCounts {
    pub fn of(gt: &[PixelRect], pred: &[PixelRect], ta: f64) -> Result<Self, EvalError> {
        let pairs = match_one_to_one(gt, pred, ta)?;
        Ok(Self {
            n: gt.len() as u64,
            m: pred.len() as u64,
            o2o: pairs.len() as u64,
        })
    }
}

impl core::ops::AddAssign for MatchCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.n += rhs.n;
        self.m += rhs.m;
        self.o2o += rhs.o2o;
    }
}

impl core::iter::Sum for MatchCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        let mut total = Self::default();
        for c in iter {
            total += c;
        }
        total
    }
}

/// Scores for one class. Rates are fractions in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub class: ClassLabel,
    pub n: u64,
    pub m: u64,
    pub o2o: u64,
    pub dr: f64,
    pub ra: f64,
    pub fm: f64,
    pub ta: f64,
}

/// Detection rate `o2o / n`, recognition accuracy `o2o / m` and their
/// harmonic mean. Empty sides score zero.
pub fn compute_metrics(
    n: u64,
    m: u64,
    o2o: u64,
    ta: f64,
    class: ClassLabel,
) -> Result<EvalReport, EvalError> {
    check_ta(ta)?;
    if o2o > n.min(m) {
        return Err(EvalError::TooManyMatches { n, m, o2o });
    }
    let dr = if n > 0 { o2o as f64 / n as f64 } else { 0.0 };
    let ra = if m > 0 { o2o as f64 / m as f64 } else { 0.0 };
    let fm = if dr + ra > 0.0 {
        2.0 * dr * ra / (dr + ra)
    } else {
        0.0
    };
    Ok(EvalReport {
        class,
        n,
        m,
        o2o,
        dr,
        ra,
        fm,
        ta,
    })
}

impl EvalReport {
    pub fn from_counts(c: MatchCounts, ta: f64, class: ClassLabel) -> Result<Self, EvalError> {
        compute_metrics(c.n, c.m, c.o2o, ta, class)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SummaryReport {
    pub line: EvalReport,
    pub word: EvalReport,
    /// Mean of the line and word F-measures.
    pub sm: f64,
}

pub fn summarize(line: EvalReport, word: EvalReport) -> Result<SummaryReport, EvalError> {
    if line.ta != word.ta {
        return Err(EvalError::ThresholdMismatch(line.ta, word.ta));
    }
    Ok(SummaryReport {
        line,
        word,
        sm: (line.fm + word.fm) / 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(x: u32, y: u32, w: u32, h: u32) -> PixelRect {
        PixelRect::new(x, y, w, h).unwrap()
    }

    /// Maximum matching by exhaustive search over prediction assignments.
    fn brute_force_max(gt: &[PixelRect], pred: &[PixelRect], ta: f64) -> usize {
        fn go(i: usize, gt: &[PixelRect], pred: &[PixelRect], used: &mut [bool], ta: f64) -> usize {
            if i == gt.len() {
                return 0;
            }
            let mut best = go(i + 1, gt, pred, used, ta);
            for j in 0..pred.len() {
                if !used[j] && admissible(&gt[i], &pred[j], ta) {
                    used[j] = true;
                    best = best.max(1 + go(i + 1, gt, pred, used, ta));
                    used[j] = false;
                }
            }
            best
        }
        go(0, gt, pred, &mut vec![false; pred.len()], ta)
    }

    #[test]
    fn identical_lists_fully_matched() {
        let boxes = [r(0, 0, 10, 10), r(20, 0, 10, 10), r(0, 20, 5, 5)];
        let m = match_one_to_one(&boxes, &boxes, 1.0).unwrap();
        assert_eq!(m, vec![(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn disjoint_rects_unmatched() {
        let m = match_one_to_one(&[r(0, 0, 10, 10)], &[r(50, 50, 10, 10)], 0.1).unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn split_prediction_matches_once() {
        let gt = [r(0, 0, 100, 10)];
        let pred = [r(0, 0, 50, 10), r(50, 0, 50, 10)];
        let m = match_one_to_one(&gt, &pred, 0.5).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(brute_force_max(&gt, &pred, 0.5), 1);
    }

    #[test]
    fn greedy_alone_is_augmented() {
        // The largest-overlap pair (g0, p0) blocks g1, whose only partner is p0.
        let gt = [r(0, 0, 10, 10), r(0, 1, 10, 9)];
        let pred = [r(0, 0, 10, 10), r(0, 0, 10, 9)];
        assert!(!admissible(&gt[1], &pred[1], 0.9));
        let m = match_one_to_one(&gt, &pred, 0.9).unwrap();
        assert_eq!(m, vec![(0, 1), (1, 0)]);
        assert_eq!(brute_force_max(&gt, &pred, 0.9), 2);
    }

    #[test]
    fn threshold_validated() {
        assert!(match_one_to_one(&[], &[], 0.0).is_err());
        assert!(match_one_to_one(&[], &[], 1.5).is_err());
        assert!(compute_metrics(1, 1, 1, f64::NAN, ClassLabel::Line).is_err());
    }

    #[test]
    fn metrics_formulas() {
        let rep = compute_metrics(4, 5, 3, 0.5, ClassLabel::Word).unwrap();
        assert_eq!(rep.dr, 0.75);
        assert_eq!(rep.ra, 0.6);
        assert!((rep.fm - 2.0 * 0.75 * 0.6 / 1.35).abs() < 1e-15);
        let perfect = compute_metrics(7, 7, 7, 0.5, ClassLabel::Line).unwrap();
        assert_eq!((perfect.dr, perfect.ra, perfect.fm), (1.0, 1.0, 1.0));
        let empty = compute_metrics(0, 0, 0, 0.5, ClassLabel::Line).unwrap();
        assert_eq!((empty.dr, empty.ra, empty.fm), (0.0, 0.0, 0.0));
        assert_eq!(
            compute_metrics(3, 2, 3, 0.5, ClassLabel::Line),
            Err(EvalError::TooManyMatches { n: 3, m: 2, o2o: 3 })
        );
    }

    #[test]
    fn summary_mean_and_threshold_check() {
        let a = compute_metrics(10, 10, 8, 0.5, ClassLabel::Line).unwrap();
        let s = summarize(a, a).unwrap();
        assert_eq!(s.sm, a.fm);
        let b = compute_metrics(10, 10, 8, 0.6, ClassLabel::Word).unwrap();
        assert!(summarize(a, b).is_err());
    }

    fn arb_rect() -> impl Strategy<Value = PixelRect> {
        (0u32..40, 0u32..40, 1u32..25, 1u32..25).prop_map(|(x, y, w, h)| r(x, y, w, h))
    }

    proptest! {
        #[test]
        fn fm_symmetric(n in 0u64..500, m in 0u64..500, k in 0u64..500) {
            let o = k.min(n).min(m);
            let a = compute_metrics(n, m, o, 0.5, ClassLabel::Line).unwrap();
            let b = compute_metrics(m, n, o, 0.5, ClassLabel::Line).unwrap();
            prop_assert!((a.fm - b.fm).abs() < 1e-12);
        }

        #[test]
        fn matching_is_valid_and_maximum(
            gt in proptest::collection::vec(arb_rect(), 0..7),
            pred in proptest::collection::vec(arb_rect(), 0..7),
            ta in 0.05f64..=1.0,
        ) {
            let m = match_one_to_one(&gt, &pred, ta).unwrap();
            let mut seen_p = vec![false; pred.len()];
            for w in m.windows(2) {
                prop_assert!(w[0].0 < w[1].0);
            }
            for &(g, p) in &m {
                prop_assert!(!seen_p[p]);
                seen_p[p] = true;
                prop_assert!(admissible(&gt[g], &pred[p], ta));
            }
            prop_assert_eq!(m.len(), brute_force_max(&gt, &pred, ta));
        }

        #[test]
        fn o2o_monotone_in_threshold(
            gt in proptest::collection::vec(arb_rect(), 0..7),
            pred in proptest::collection::vec(arb_rect(), 0..7),
            a in 0.05f64..=1.0,
            b in 0.05f64..=1.0,
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let m_lo = match_one_to_one(&gt, &pred, lo).unwrap().len();
            let m_hi = match_one_to_one(&gt, &pred, hi).unwrap().len();
            prop_assert!(m_hi <= m_lo);
        }
    }
}
