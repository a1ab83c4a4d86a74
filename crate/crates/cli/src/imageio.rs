//! Image decode/encode and input discovery.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use image::{ColorType, DynamicImage, ExtendedColorType, ImageFormat, ImageReader};
use smo_enhance_core::RgbImage8;

/// File extensions picked up when an input is a directory.
pub const EXTENSIONS: [&str; 4] = ["png", "bmp", "tif", "tiff"];

fn has_image_extension(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Expands directories into their image files (sorted, non-recursive).
/// Plain file arguments are kept as given, even unreadable ones, so the
/// caller can report them as failed rows.
pub fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && has_image_extension(f))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        bail!("no input images");
    }
    Ok(out)
}

/// Rejects an output directory that is, or holds, one of the inputs.
pub fn check_output_dir(out: &Path, inputs: &[PathBuf]) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let out_abs = out.canonicalize()?;
    for p in inputs {
        let Ok(abs) = p.canonicalize() else { continue };
        let dir = if abs.is_dir() { abs.clone() } else { abs.parent().map(Path::to_path_buf).unwrap_or_default() };
        if dir == out_abs {
            bail!("output directory {} must differ from input location {}", out.display(), p.display());
        }
    }
    Ok(())
}

/// Decodes an 8-bit gray or RGB image; alpha is dropped.
pub fn read_rgb(path: &Path) -> Result<RgbImage8> {
    let img = ImageReader::open(path)
        .with_context(|| format!("opening {}", path.display()))?
        .with_guessed_format()?
        .decode()
        .with_context(|| format!("decoding {}", path.display()))?;
    to_rgb(img).with_context(|| format!("{}", path.display()))
}

fn to_rgb(img: DynamicImage) -> Result<RgbImage8> {
    match img.color() {
        ColorType::L8 | ColorType::La8 | ColorType::Rgb8 | ColorType::Rgba8 => {}
        ColorType::L16 | ColorType::La16 | ColorType::Rgb16 | ColorType::Rgba16 => {
            bail!("16-bit images are not supported; convert to 8 bits per channel")
        }
        other => bail!("unsupported pixel type {other:?}; expected 8 bits per channel"),
    }
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    Ok(RgbImage8::new(w as usize, h as usize, rgb.into_raw())?)
}

/// Encodes by extension: PNG, BMP or TIFF.
pub fn write_rgb(path: &Path, img: &RgbImage8) -> Result<()> {
    let format = ImageFormat::from_path(path).with_context(|| format!("unknown image extension {}", path.display()))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Bmp | ImageFormat::Tiff) {
        bail!("unsupported output format {format:?}");
    }
    image::save_buffer_with_format(
        path,
        img.data(),
        img.width() as u32,
        img.height() as u32,
        ExtendedColorType::Rgb8,
        format,
    )
    .with_context(|| format!("writing {}", path.display()))
}
