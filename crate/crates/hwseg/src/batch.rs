//! Segmentation of a directory of page images on a bounded worker pool.

use std::path::{Path, PathBuf};

use hwseg_core::detect::DetectorRole;
use hwseg_core::pipeline::{process_document, PipelineError};
use hwseg_core::{PageSegmentation, PipelineConfig};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::export::{export_manifest, export_voc, export_yolo, skew_debug, write_json};
use crate::io::{ensure_dir, list_images, load_gray, stem};
use crate::predictions::FileDetector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Emit {
    pub yolo: bool,
    pub voc: bool,
    pub manifest: bool,
    pub skew_debug: bool,
}

impl Emit {
    pub fn all() -> Self {
        Self {
            yolo: true,
            voc: true,
            manifest: true,
            skew_debug: false,
        }
    }

    /// Parses a comma-separated list of `yolo`, `voc`, `manifest`.
    pub fn parse(list: &str) -> std::result::Result<Self, String> {
        let mut emit = Self::default();
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "yolo" => emit.yolo = true,
                "voc" => emit.voc = true,
                "manifest" => emit.manifest = true,
                other => return Err(format!("unknown emitter {other:?}")),
            }
        }
        Ok(emit)
    }
}

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub images: PathBuf,
    pub line_preds: PathBuf,
    pub word_preds: PathBuf,
    pub out: PathBuf,
    pub config: PipelineConfig,
    pub emit: Emit,
    /// Worker count; `None` uses the available parallelism.
    pub jobs: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum DocError {
    #[error(transparent)]
    Input(Error),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Output(Error),
}

#[derive(Debug)]
pub struct DocOutcome {
    pub image_id: String,
    pub result: std::result::Result<usize, DocError>,
}

#[derive(Debug, Default)]
pub struct BatchReport {
    pub outcomes: Vec<DocOutcome>,
}

impl BatchReport {
    pub fn failures(&self) -> impl Iterator<Item = &DocOutcome> {
        self.outcomes.iter().filter(|o| o.result.is_err())
    }

    pub fn failed(&self) -> usize {
        self.failures().count()
    }
}

/// Writes every requested output of one page under `out`.
pub fn write_outputs(seg: &PageSegmentation, config: &PipelineConfig, out: &Path, emit: Emit) -> Result<()> {
    if emit.yolo {
        export_yolo(seg, &out.join("yolo"))?;
    }
    if emit.voc {
        export_voc(seg, &out.join("voc"))?;
    }
    if emit.manifest {
        export_manifest(seg, config, &out.join("manifest").join(format!("{}.json", seg.image_id)))?;
    }
    if emit.skew_debug {
        write_json(&out.join("skew").join(format!("{}.json", seg.image_id)), &skew_debug(seg))?;
    }
    Ok(())
}

fn process_one(path: &Path, opts: &BatchOptions, lines: &FileDetector, words: &FileDetector) -> DocOutcome {
    let image_id = stem(path);
    let result = (|| {
        let image = load_gray(path).map_err(DocError::Input)?;
        let seg = process_document(&image, &image_id, lines, words, &opts.config)?;
        write_outputs(&seg, &opts.config, &opts.out, opts.emit).map_err(DocError::Output)?;
        Ok(seg.lines.len())
    })();
    match &result {
        Ok(n) => log::info!("{image_id}: {n} lines"),
        Err(e) => log::error!("{image_id}: {e}"),
    }
    DocOutcome { image_id, result }
}

/// Segments every image in `opts.images`. Per-document failures are
/// reported in the result; only setup problems are returned as errors.
pub fn run_batch(opts: &BatchOptions) -> Result<BatchReport> {
    opts.config.validate()?;
    ensure_dir(&opts.line_preds)?;
    ensure_dir(&opts.word_preds)?;
    let images = list_images(&opts.images)?;
    std::fs::create_dir_all(&opts.out).map_err(|e| Error::io(&opts.out, e))?;
    let lines = FileDetector::new(DetectorRole::LineDetector, &opts.line_preds);
    let words = FileDetector::new(DetectorRole::WordDetector, &opts.word_preds);

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.jobs {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| Error::ConfigFile {
        path: "--jobs".into(),
        message: e.to_string(),
    })?;
    let outcomes = pool.install(|| {
        images
            .par_iter()
            .map(|p| process_one(p, opts, &lines, &words))
            .collect::<Vec<_>>()
    });
    Ok(BatchReport { outcomes })
}
