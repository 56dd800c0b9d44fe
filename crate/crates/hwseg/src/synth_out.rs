//! Writes synthetic corpora in the directory layout the batch runner reads.
//!
//! ```text
//! images/{id}.png
//! line-preds/{id}.txt, line-preds/{id}#line{i}#pass2.txt
//! word-preds/{id}#line{i}.txt
//! gt/{id}.txt (line boxes), gt/{id}#line{i}.txt (word boxes)
//! ```

use std::path::Path;

use hwseg_core::detect::{format_yolo, word_image_id};
use hwseg_core::geometry::rect_to_norm;
use hwseg_core::synth::{PageTruth, SynthLine, SynthPage};
use hwseg_core::{Detection, PixelRect};
use serde_json::json;

use crate::error::Result;
use crate::export::write_json;
use crate::io::{save_png, write_atomic};

fn truth_text(rects: &[PixelRect], w: u32, h: u32) -> String {
    let dets: Vec<Detection> = rects
        .iter()
        .map(|&r| Detection::new(0, rect_to_norm(r, w, h).expect("truth inside frame"), 1.0).expect("unit"))
        .collect();
    format_yolo(&dets, false)
}

fn write_predictions(truth: &PageTruth, out: &Path) -> Result<()> {
    for (id, set) in &truth.line_predictions {
        write_atomic(
            &out.join("line-preds").join(format!("{id}.txt")),
            format_yolo(&set.detections, true).as_bytes(),
        )?;
    }
    for (id, set) in &truth.word_predictions {
        write_atomic(
            &out.join("word-preds").join(format!("{id}.txt")),
            format_yolo(&set.detections, true).as_bytes(),
        )?;
    }
    Ok(())
}

pub fn write_page(page: &SynthPage, out: &Path) -> Result<()> {
    let t = &page.truth;
    let (w, h) = (page.image.width() as u32, page.image.height() as u32);
    save_png(&out.join("images").join(format!("{}.png", t.image_id)), &page.image)?;
    write_predictions(t, out)?;
    let gt = out.join("gt");
    write_atomic(&gt.join(format!("{}.txt", t.image_id)), truth_text(&t.line_boxes, w, h).as_bytes())?;
    for (i, (words, &(fw, fh))) in t.line_words.iter().zip(&t.final_sizes).enumerate() {
        let id = word_image_id(&t.image_id, i + 1);
        write_atomic(&gt.join(format!("{id}.txt")), truth_text(words, fw, fh).as_bytes())?;
    }
    write_json(
        &gt.join(format!("{}.skew.json", t.image_id)),
        &json!({ "image_id": t.image_id, "skews": t.skews }),
    )
}

pub fn write_line(line: &SynthLine, image_id: &str, out: &Path) -> Result<()> {
    let (w, h) = (line.image.width() as u32, line.image.height() as u32);
    save_png(&out.join("images").join(format!("{image_id}.png")), &line.image)?;
    let gt = out.join("gt");
    write_atomic(&gt.join(format!("{image_id}.txt")), truth_text(&[line.line_box], w, h).as_bytes())?;
    write_atomic(
        &gt.join(format!("{image_id}#words.txt")),
        truth_text(&line.word_boxes, w, h).as_bytes(),
    )?;
    write_json(
        &gt.join(format!("{image_id}.skew.json")),
        &json!({ "image_id": image_id, "skew_deg": line.skew_deg }),
    )
}
