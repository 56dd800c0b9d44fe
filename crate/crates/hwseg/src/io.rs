//! Image decoding and atomic file output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use hwseg_core::GrayImage;
use image::{DynamicImage, ImageFormat};

use crate::error::{Error, Result};

/// Extensions recognised as input images.
pub const IMAGE_EXTENSIONS: [&str; 4] = ["png", "pgm", "ppm", "pnm"];

/// Luma of an sRGB pixel, `round(0.299 R + 0.587 G + 0.114 B)`.
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64)
        .round()
        .clamp(0.0, 255.0) as u8
}

pub fn to_gray(img: &DynamicImage) -> GrayImage {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let pixels = match img {
        DynamicImage::ImageLuma8(g) => g.as_raw().clone(),
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| luma(p[0], p[1], p[2]))
            .collect(),
    };
    GrayImage::new(w, h, pixels).expect("decoded images are non-empty")
}

pub fn load_gray(path: &Path) -> Result<GrayImage> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    if img.width() == 0 || img.height() == 0 {
        return Err(Error::Image {
            path: path.to_path_buf(),
            source: image::ImageError::Limits(image::error::LimitError::from_kind(
                image::error::LimitErrorKind::DimensionError,
            )),
        });
    }
    Ok(to_gray(&img))
}

pub fn encode_png(img: &GrayImage) -> Vec<u8> {
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, img.pixels().to_vec())
        .expect("buffer matches dimensions");
    let mut out = std::io::Cursor::new(Vec::new());
    DynamicImage::ImageLuma8(buf)
        .write_to(&mut out, ImageFormat::Png)
        .expect("PNG encoding into memory cannot fail");
    out.into_inner()
}

pub fn save_png(path: &Path, img: &GrayImage) -> Result<()> {
    write_atomic(path, &encode_png(img))
}

/// Writes through a temporary file in the same directory and renames it
/// into place, creating parent directories as needed.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Error::NotADirectory(path.to_path_buf()))
    }
}

/// Input images in `dir`, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let known = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if known && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// File name without its final extension.
pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}
