use std::path::Path;

use crate::error::{Error, Result};
use crate::io_util::write_atomic;
use crate::render::RenderOutput;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Ppm,
    Png,
}

impl ImageFormat {
    /// Picks the format from a `.ppm` or `.png` extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
            Some(e) if e == "ppm" => Ok(ImageFormat::Ppm),
            Some(e) if e == "png" => Ok(ImageFormat::Png),
            _ => Err(Error::Image(format!("{}: expected a .ppm or .png file name", path.display()))),
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Ppm => "ppm",
            ImageFormat::Png => "png",
        }
    }
}

/// 8-bit quantization with round-half-up.
pub fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

/// Binary PPM (P6, maxval 255).
pub fn encode_ppm(width: usize, height: usize, rgb: &[[f64; 3]]) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.reserve(rgb.len() * 3);
    for px in rgb {
        out.extend(px.iter().map(|&c| to_u8(c)));
    }
    out
}

pub fn encode_png(width: usize, height: usize, rgb: &[[f64; 3]]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| Error::Image(e.to_string()))?;
        let data: Vec<u8> = rgb.iter().flat_map(|px| px.map(to_u8)).collect();
        writer.write_image_data(&data).map_err(|e| Error::Image(e.to_string()))?;
    }
    Ok(out)
}

pub fn encode_image(width: usize, height: usize, rgb: &[[f64; 3]], format: ImageFormat) -> Result<Vec<u8>> {
    match format {
        ImageFormat::Ppm => Ok(encode_ppm(width, height, rgb)),
        ImageFormat::Png => encode_png(width, height, rgb),
    }
}

/// Disparity scaled so the largest value maps to white.
pub fn disparity_gray(output: &RenderOutput) -> Vec<[f64; 3]> {
    let max = output.disparity.iter().cloned().fold(0.0, f64::max);
    output
        .disparity
        .iter()
        .map(|&d| {
            let v = if max > 0.0 { d / max } else { 0.0 };
            [v; 3]
        })
        .collect()
}

pub fn write_opacity(output: &RenderOutput, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let gray: Vec<[f64; 3]> = output.opacity.iter().map(|&a| [a; 3]).collect();
    let bytes = encode_image(output.width, output.height, &gray, format)?;
    write_atomic(path.as_ref(), &bytes)
}

pub fn write_image(output: &RenderOutput, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let bytes = encode_image(output.width, output.height, &output.rgb, format)?;
    write_atomic(path.as_ref(), &bytes)
}

pub fn write_disparity(output: &RenderOutput, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let bytes = encode_image(output.width, output.height, &disparity_gray(output), format)?;
    write_atomic(path.as_ref(), &bytes)
}
