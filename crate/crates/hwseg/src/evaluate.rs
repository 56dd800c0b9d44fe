//! Corpus-level evaluation of prediction files against ground truth files.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use hwseg_core::eval::{ClassLabel, EvalReport, MatchCounts};
use hwseg_core::geometry::norm_to_rect;
use hwseg_core::PixelRect;

use crate::error::{Error, Result};
use crate::io::ensure_dir;
use crate::predictions::load_yolo_predictions;

/// Side of the square frame normalised boxes are expanded into. Coverage
/// ratios do not depend on the frame's aspect, so a large virtual frame keeps
/// rounding negligible without knowing the image sizes.
pub const VIRTUAL_FRAME: u32 = 10_000;

/// Whether a prediction file stem belongs to `class`.
pub fn stem_class(stem: &str) -> Option<ClassLabel> {
    if !stem.contains('#') {
        Some(ClassLabel::Line)
    } else if stem.contains("#line") && !stem.ends_with("#pass2") {
        Some(ClassLabel::Word)
    } else {
        None
    }
}

fn stems(dir: &Path, class: ClassLabel) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let stem = crate::io::stem(&path);
        if stem_class(&stem) == Some(class) {
            out.insert(stem);
        }
    }
    Ok(out)
}

fn load_rects(path: &Path) -> Result<Vec<PixelRect>> {
    Ok(load_yolo_predictions(path)?
        .into_iter()
        .map(|d| norm_to_rect(d.bbox, VIRTUAL_FRAME, VIRTUAL_FRAME))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunEvaluation {
    pub report: EvalReport,
    /// Stems present on only one side; they still count towards N or M.
    pub unpaired: Vec<String>,
    pub documents: usize,
}

/// Sums `(N, M, o2o)` over every file of `class` and scores the totals.
pub fn evaluate_run(gt_dir: &Path, pred_dir: &Path, class: ClassLabel, ta: f64) -> Result<RunEvaluation> {
    ensure_dir(gt_dir)?;
    ensure_dir(pred_dir)?;
    let gt = stems(gt_dir, class)?;
    let pred = stems(pred_dir, class)?;
    let mut totals = MatchCounts::default();
    let mut unpaired = Vec::new();
    for stem in gt.union(&pred) {
        let g = if gt.contains(stem) {
            load_rects(&gt_dir.join(format!("{stem}.txt")))?
        } else {
            Vec::new()
        };
        let p = if pred.contains(stem) {
            load_rects(&pred_dir.join(format!("{stem}.txt")))?
        } else {
            Vec::new()
        };
        if !(gt.contains(stem) && pred.contains(stem)) {
            log::warn!("unpaired {} file: {stem}", class.as_str());
            unpaired.push(stem.clone());
        }
        totals += MatchCounts::of(&g, &p, ta).map_err(|e| Error::ConfigFile {
            path: "--ta".into(),
            message: e.to_string(),
        })?;
    }
    let report = EvalReport::from_counts(totals, ta, class).map_err(|e| Error::ConfigFile {
        path: "--ta".into(),
        message: e.to_string(),
    })?;
    Ok(RunEvaluation {
        report,
        unpaired,
        documents: gt.union(&pred).count(),
    })
}

/// Plain-text table with columns N, M, o2o, DR, RA, FM (rates in percent).
pub fn format_table(reports: &[EvalReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<6} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "class", "N", "M", "o2o", "DR(%)", "RA(%)", "FM(%)"
    );
    for r in reports {
        let _ = writeln!(
            s,
            "{:<6} {:>8} {:>8} {:>8} {:>8.2} {:>8.2} {:>8.2}",
            r.class.as_str(),
            r.n,
            r.m,
            r.o2o,
            r.dr * 100.0,
            r.ra * 100.0,
            r.fm * 100.0
        );
    }
    s
}
