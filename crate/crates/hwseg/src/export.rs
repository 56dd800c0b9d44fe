//! YOLO, Pascal VOC and JSON manifest output for segmented pages.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hwseg_core::detect::{format_yolo, word_image_id};
use hwseg_core::geometry::rect_to_norm;
use hwseg_core::linesel::LineAction;
use hwseg_core::skew::{SkewMethod, SkewTrace};
use hwseg_core::{Detection, LineRecord, PageSegmentation, PipelineConfig, PixelRect, RotationDirection};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::io::write_atomic;

fn to_detection(r: PixelRect, w: u32, h: u32) -> Detection {
    Detection::new(0, rect_to_norm(r, w, h).expect("rect inside its frame"), 1.0)
        .expect("unit confidence")
}

/// YOLO text for the page's line boxes.
pub fn yolo_lines(seg: &PageSegmentation) -> String {
    let dets: Vec<Detection> = seg
        .lines
        .iter()
        .map(|l| to_detection(l.page_rect, seg.image_w, seg.image_h))
        .collect();
    format_yolo(&dets, false)
}

/// YOLO text for one line's words in its final frame, in reading order.
pub fn yolo_words(line: &LineRecord) -> String {
    let (w, h) = line.final_size;
    let dets: Vec<Detection> = line.words.iter().map(|wd| to_detection(wd.rect, w, h)).collect();
    format_yolo(&dets, false)
}

/// Writes `{id}.txt` and `{id}#line{i}.txt` into `out_dir`; returns the paths.
pub fn export_yolo(seg: &PageSegmentation, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::with_capacity(seg.lines.len() + 1);
    let page = out_dir.join(format!("{}.txt", seg.image_id));
    write_atomic(&page, yolo_lines(seg).as_bytes())?;
    written.push(page);
    for line in &seg.lines {
        let path = out_dir.join(format!("{}.txt", word_image_id(&seg.image_id, line.line_index)));
        write_atomic(&path, yolo_words(line).as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn voc_document(filename: &str, w: u32, h: u32, objects: &[(&str, PixelRect)]) -> String {
    let mut xml = String::new();
    xml.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<annotation>\n");
    let _ = writeln!(xml, "  <filename>{}</filename>", xml_escape(filename));
    let _ = writeln!(
        xml,
        "  <size>\n    <width>{w}</width>\n    <height>{h}</height>\n    <depth>1</depth>\n  </size>"
    );
    for (name, r) in objects {
        let _ = writeln!(
            xml,
            "  <object>\n    <name>{name}</name>\n    <bndbox>\n      <xmin>{}</xmin>\n      <ymin>{}</ymin>\n      <xmax>{}</xmax>\n      <ymax>{}</ymax>\n    </bndbox>\n  </object>",
            r.x,
            r.y,
            r.x + r.w - 1,
            r.y + r.h - 1
        );
    }
    xml.push_str("</annotation>\n");
    xml
}

/// Page-level VOC XML: every line box plus the words of unrotated lines
/// mapped into the page frame.
pub fn voc_page(seg: &PageSegmentation) -> String {
    let mut objects: Vec<(&str, PixelRect)> = seg.lines.iter().map(|l| ("line", l.page_rect)).collect();
    for line in &seg.lines {
        if let Some(words) = line.words_in_page() {
            objects.extend(words.into_iter().map(|r| ("word", r)));
        }
    }
    voc_document(&format!("{}.png", seg.image_id), seg.image_w, seg.image_h, &objects)
}

/// Line-local VOC XML with word boxes in the final line frame.
pub fn voc_line(seg: &PageSegmentation, line: &LineRecord) -> String {
    let objects: Vec<(&str, PixelRect)> = line.words.iter().map(|w| ("word", w.rect)).collect();
    let id = word_image_id(&seg.image_id, line.line_index);
    voc_document(&format!("{id}.png"), line.final_size.0, line.final_size.1, &objects)
}

/// Writes `{id}.xml`, plus `{id}#line{i}.xml` for each line whose words
/// cannot be expressed as axis-aligned page boxes.
pub fn export_voc(seg: &PageSegmentation, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let page = out_dir.join(format!("{}.xml", seg.image_id));
    write_atomic(&page, voc_page(seg).as_bytes())?;
    written.push(page);
    for line in &seg.lines {
        if line.words_in_page().is_none() {
            let id = word_image_id(&seg.image_id, line.line_index);
            let path = out_dir.join(format!("{id}.xml"));
            write_atomic(&path, voc_line(seg, line).as_bytes())?;
            written.push(path);
        }
    }
    Ok(written)
}

fn rect_json(r: PixelRect) -> Value {
    json!({ "x": r.x, "y": r.y, "w": r.w, "h": r.h })
}

fn method_name(m: SkewMethod) -> &'static str {
    match m {
        SkewMethod::LSkew => "lskew",
        SkewMethod::DSkew => "dskew",
        SkewMethod::None => "none",
    }
}

fn direction_name(d: Option<RotationDirection>) -> Value {
    match d {
        Some(RotationDirection::Clockwise) => json!("clockwise"),
        Some(RotationDirection::AntiClockwise) => json!("anticlockwise"),
        None => Value::Null,
    }
}

fn line_json(line: &LineRecord) -> Value {
    let action = match line.decision.action {
        LineAction::CropTo(_) => "crop",
        LineAction::KeepWhole => "keep_whole",
    };
    json!({
        "index": line.line_index,
        "page_rect": rect_json(line.page_rect),
        "skew": {
            "method": method_name(line.skew.method),
            "theta_avg": line.skew.theta_avg,
            "degree_avg": line.skew.degree_avg,
            "direction": direction_name(line.skew.direction),
            "applied": line.skew.applied,
        },
        "decision": {
            "rule": line.decision.rule.number(),
            "sub_case": line.decision.rule.sub_case(),
            "action": action,
        },
        "final_rect": line.final_rect.map(rect_json),
        "corrected_size": [line.corrected_size.0, line.corrected_size.1],
        "final_size": [line.final_size.0, line.final_size.1],
        "words": line.words.iter().map(|w| json!({
            "index": w.index,
            "rect": rect_json(w.rect),
            "confidence": w.confidence,
        })).collect::<Vec<_>>(),
    })
}

pub fn config_json(config: &PipelineConfig) -> Value {
    serde_json::to_value(config).expect("config serialises")
}

/// Manifest document: page metadata, effective configuration and per-line
/// provenance. Keys are emitted in sorted order.
pub fn manifest(seg: &PageSegmentation, config: &PipelineConfig) -> Value {
    json!({
        "image_id": seg.image_id,
        "image_width": seg.image_w,
        "image_height": seg.image_h,
        "config_fingerprint": seg.config_fingerprint,
        "config": config_json(config),
        "lines": seg.lines.iter().map(line_json).collect::<Vec<_>>(),
    })
}

pub fn manifest_string(seg: &PageSegmentation, config: &PipelineConfig) -> String {
    let mut s = serde_json::to_string_pretty(&manifest(seg, config)).expect("manifest serialises");
    s.push('\n');
    s
}

pub fn export_manifest(seg: &PageSegmentation, config: &PipelineConfig, path: &Path) -> Result<()> {
    write_atomic(path, manifest_string(seg, config).as_bytes())
}

pub fn trace_json(trace: &SkewTrace) -> Value {
    serde_json::to_value(trace).expect("trace serialises")
}

/// Per-line skew debug records for a page.
pub fn skew_debug(seg: &PageSegmentation) -> Value {
    Value::Array(
        seg.lines
            .iter()
            .map(|l| {
                json!({
                    "index": l.line_index,
                    "method": method_name(l.skew.method),
                    "theta_avg": l.skew.theta_avg,
                    "degree_avg": l.skew.degree_avg,
                    "applied": l.skew.applied,
                    "bucket_counts": l.trace.vote.map(|v| v.bucket_counts),
                    "lines": trace_json(&l.trace)["lines"],
                    "segments": trace_json(&l.trace)["segments"],
                })
            })
            .collect(),
    )
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// Skew estimate plus trace as JSON, as printed by the debug command.
pub fn skew_estimate_json(est: &hwseg_core::SkewEstimate, trace: &SkewTrace) -> Value {
    json!({
        "method": method_name(est.method),
        "theta_avg": est.theta_avg,
        "degree_avg": est.degree_avg,
        "direction": direction_name(est.direction),
        "applied": est.applied,
        "bucket_counts": trace.vote.map(|v| v.bucket_counts),
        "lines": trace_json(trace)["lines"],
        "segments": trace_json(trace)["segments"],
    })
}
