#![allow(dead_code)]

use std::path::Path;

use hwseg::synth_out::write_page;
use hwseg_core::linesel::{FinalLineDecision, LineAction, SelectionRule};
use hwseg_core::skew::{SkewMethod, SkewTrace};
use hwseg_core::synth::generate_page;
use hwseg_core::words::WordRecord;
use hwseg_core::{LineRecord, PageSegmentation, PixelRect, RotationDirection, SkewEstimate};
use rand::{Rng, RngCore};

pub fn rect_in(rng: &mut impl RngCore, w: u32, h: u32) -> PixelRect {
    let x = rng.random_range(0..w);
    let y = rng.random_range(0..h);
    let rw = rng.random_range(1..=w - x);
    let rh = rng.random_range(1..=h - y);
    PixelRect::new(x, y, rw, rh).unwrap()
}

/// A structurally valid segmentation with random geometry. About half the
/// lines are unrotated windows of the page.
pub fn random_segmentation(rng: &mut impl RngCore, id: &str) -> PageSegmentation {
    let image_w = rng.random_range(64..4000);
    let image_h = rng.random_range(64..4000);
    let n_lines = rng.random_range(0..6);
    let lines = (1..=n_lines)
        .map(|line_index| {
            let page_rect = rect_in(rng, image_w, image_h);
            let rotated = rng.random_bool(0.5);
            let (skew, corrected_size) = if rotated {
                let theta: f64 = rng.random_range(-40.0..40.0);
                let est = SkewEstimate {
                    method: SkewMethod::LSkew,
                    theta_avg: theta,
                    degree_avg: None,
                    direction: Some(if theta < 0.0 {
                        RotationDirection::Clockwise
                    } else {
                        RotationDirection::AntiClockwise
                    }),
                    applied: true,
                };
                (est, (page_rect.w + rng.random_range(0..50), page_rect.h + rng.random_range(0..50)))
            } else {
                (SkewEstimate::none(), (page_rect.w, page_rect.h))
            };
            let (final_rect, decision) = if rng.random_bool(0.5) {
                let r = rect_in(rng, corrected_size.0, corrected_size.1);
                (
                    Some(r),
                    FinalLineDecision {
                        action: LineAction::CropTo(r),
                        rule: SelectionRule::ManyWidest,
                    },
                )
            } else {
                (
                    None,
                    FinalLineDecision {
                        action: LineAction::KeepWhole,
                        rule: SelectionRule::NoDetection,
                    },
                )
            };
            let final_size = final_rect.map_or(corrected_size, |r| (r.w, r.h));
            let words = (1..=rng.random_range(0..8))
                .map(|index| WordRecord {
                    index,
                    rect: rect_in(rng, final_size.0, final_size.1),
                    confidence: rng.random_range(0.0..=1.0),
                })
                .collect();
            LineRecord {
                line_index,
                page_rect,
                skew,
                decision,
                final_rect,
                corrected_size,
                final_size,
                words,
                trace: SkewTrace::default(),
            }
        })
        .collect();
    PageSegmentation {
        image_id: id.to_string(),
        image_w,
        image_h,
        lines,
        config_fingerprint: "0123456789abcdef".into(),
    }
}

/// Writes `pages` synthetic pages with mixed skews under `root`.
pub fn synth_corpus(root: &Path, pages: usize) {
    const SKEWS: [f64; 7] = [-14.0, -6.0, 0.0, 3.0, 8.0, 12.0, -2.0];
    for p in 0..pages {
        let skews: Vec<f64> = (0..4).map(|i| SKEWS[(p * 3 + i) % SKEWS.len()]).collect();
        let page = generate_page(4, &skews, 100 + p as u64).unwrap();
        write_page(&page, root).unwrap();
    }
}

fn words_frame(line: &LineRecord) -> (u32, u32) {
    line.final_size
}

/// Exports YOLO files and reads them back; every box must survive at six
/// decimals and expand to the original rectangle.
pub fn check_yolo_round_trip(seg: &PageSegmentation, dir: &Path) -> Result<(), String> {
    use hwseg::export::export_yolo;
    use hwseg::predictions::load_yolo_predictions;
    use hwseg_core::geometry::{norm_to_rect, rect_to_norm};

    let paths = export_yolo(seg, dir).map_err(|e| e.to_string())?;
    let mut frames: Vec<(Vec<PixelRect>, (u32, u32))> =
        vec![(seg.lines.iter().map(|l| l.page_rect).collect(), (seg.image_w, seg.image_h))];
    for line in &seg.lines {
        frames.push((line.words.iter().map(|w| w.rect).collect(), words_frame(line)));
    }
    if paths.len() != frames.len() {
        return Err(format!("{} files for {} frames", paths.len(), frames.len()));
    }
    for (path, (rects, (w, h))) in paths.iter().zip(&frames) {
        let dets = load_yolo_predictions(path).map_err(|e| e.to_string())?;
        if dets.len() != rects.len() {
            return Err(format!("{}: {} of {} boxes", path.display(), dets.len(), rects.len()));
        }
        for (d, &r) in dets.iter().zip(rects) {
            let want = rect_to_norm(r, *w, *h).unwrap();
            let got = d.bbox;
            for (a, b) in [(got.cx, want.cx), (got.cy, want.cy), (got.w, want.w), (got.h, want.h)] {
                if (a - b).abs() > 5e-7 + 1e-12 {
                    return Err(format!("{}: {a} vs {b}", path.display()));
                }
            }
            let back = norm_to_rect(got, *w, *h);
            if back != r {
                return Err(format!("{}: {back:?} vs {r:?}", path.display()));
            }
        }
    }
    Ok(())
}

fn voc_objects(xml: &str) -> Result<(String, u32, u32, Vec<(String, PixelRect)>), String> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| e.to_string())?;
    let root = doc.root_element();
    if root.tag_name().name() != "annotation" {
        return Err("root is not <annotation>".into());
    }
    let child = |n: roxmltree::Node, tag: &str| -> Result<String, String> {
        n.children()
            .find(|c| c.has_tag_name(tag))
            .and_then(|c| c.text())
            .map(str::to_string)
            .ok_or_else(|| format!("missing <{tag}>"))
    };
    let num = |n: roxmltree::Node, tag: &str| -> Result<u32, String> {
        child(n, tag)?.parse().map_err(|e| format!("<{tag}>: {e}"))
    };
    let filename = child(root, "filename")?;
    let size = root.children().find(|c| c.has_tag_name("size")).ok_or("missing <size>")?;
    let (w, h) = (num(size, "width")?, num(size, "height")?);
    let mut objects = Vec::new();
    for obj in root.children().filter(|c| c.has_tag_name("object")) {
        let name = child(obj, "name")?;
        let b = obj.children().find(|c| c.has_tag_name("bndbox")).ok_or("missing <bndbox>")?;
        let rect = PixelRect::from_corners(num(b, "xmin")?, num(b, "ymin")?, num(b, "xmax")? + 1, num(b, "ymax")? + 1)
            .map_err(|e| e.to_string())?;
        objects.push((name, rect));
    }
    Ok((filename, w, h, objects))
}

/// Exports VOC files and parses them back with an independent XML parser.
pub fn check_voc_round_trip(seg: &PageSegmentation, dir: &Path) -> Result<(), String> {
    use hwseg::export::export_voc;
    use hwseg_core::detect::word_image_id;

    let paths = export_voc(seg, dir).map_err(|e| e.to_string())?;
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| e.to_string());
    let (filename, w, h, objects) = voc_objects(&read(&paths[0])?)?;
    if filename != format!("{}.png", seg.image_id) || (w, h) != (seg.image_w, seg.image_h) {
        return Err(format!("page header {filename} {w}x{h}"));
    }
    let mut want: Vec<(String, PixelRect)> = seg.lines.iter().map(|l| ("line".to_string(), l.page_rect)).collect();
    let mut local = Vec::new();
    for line in &seg.lines {
        match line.words_in_page() {
            Some(words) => want.extend(words.into_iter().map(|r| ("word".to_string(), r))),
            None => local.push(line),
        }
    }
    if objects != want {
        return Err(format!("page objects differ: {objects:?} vs {want:?}"));
    }
    if paths.len() != 1 + local.len() {
        return Err(format!("{} files for {} rotated lines", paths.len(), local.len()));
    }
    for (path, line) in paths[1..].iter().zip(local) {
        let (filename, w, h, objects) = voc_objects(&read(path)?)?;
        let id = word_image_id(&seg.image_id, line.line_index);
        if filename != format!("{id}.png") || (w, h) != line.final_size {
            return Err(format!("line header {filename} {w}x{h}"));
        }
        let want: Vec<(String, PixelRect)> = line.words.iter().map(|wd| ("word".to_string(), wd.rect)).collect();
        if objects != want {
            return Err(format!("{id}: objects differ"));
        }
    }
    Ok(())
}
