//! Raster types and portable image I/O.
//!
//! Coordinates are row-major with the origin at the top-left pixel and `y`
//! growing downward. Pixel `(x, y)` is centred on the real coordinate
//! `(x, y)`; sub-pixel quantities elsewhere in the crate use that convention.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Single-channel 8-bit image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::Dimensions { width, height });
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        GrayImage {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    /// 256-bin intensity histogram.
    pub fn histogram(&self) -> [u64; 256] {
        let mut hist = [0u64; 256];
        for &v in &self.pixels {
            hist[v as usize] += 1;
        }
        hist
    }

    /// Pixel-replicating upscale, used to build scaled copies of test pages.
    pub fn scale_nearest(&self, factor: usize) -> GrayImage {
        let factor = factor.max(1);
        let (w, h) = (self.width * factor, self.height * factor);
        let mut pixels = Vec::with_capacity(w * h);
        for y in 0..h {
            let row = &self.pixels[(y / factor) * self.width..][..self.width];
            pixels.extend((0..w).map(|x| row[x / factor]));
        }
        GrayImage {
            width: w,
            height: h,
            pixels,
        }
    }
}

/// Foreground mask. `true` always means "part of a Braille dot".
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    pixels: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, pixels: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::Dimensions { width, height });
        }
        Ok(BinaryImage {
            width,
            height,
            pixels,
        })
    }

    /// All-background image.
    ///
    /// # Panics
    /// If either dimension is zero.
    pub fn empty(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        BinaryImage {
            width,
            height,
            pixels: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[bool] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.pixels[y * self.width + x] = value;
    }

    pub fn count_foreground(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }
}

/// Visualisation: foreground becomes black (0), background white (255).
pub fn binary_to_gray(img: &BinaryImage) -> GrayImage {
    GrayImage {
        width: img.width,
        height: img.height,
        pixels: img
            .pixels
            .iter()
            .map(|&fg| if fg { 0 } else { 255 })
            .collect(),
    }
}

/// Integer luma used for colour input: `(r + 2g + b) / 4`, floored.
#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    ((r as u32 + 2 * g as u32 + b as u32) / 4) as u8
}

/// Loads a P5 graymap or a PNG as 8-bit grey.
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P5") {
        decode_pgm(&bytes).map_err(|reason| Error::Format {
            path: path.to_path_buf(),
            reason,
        })
    } else if bytes.starts_with(b"\x89PNG") {
        decode_png(&bytes).map_err(|reason| Error::Format {
            path: path.to_path_buf(),
            reason,
        })
    } else {
        Err(Error::Format {
            path: path.to_path_buf(),
            reason: "expected a P5 graymap or a PNG file".into(),
        })
    }
}

/// Writes a PNG when the path ends in `.png`, otherwise a binary P5
/// graymap with maxval 255.
pub fn save_gray(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let is_png = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let bytes = if is_png {
        encode_png(img).map_err(|reason| Error::Format {
            path: path.to_path_buf(),
            reason,
        })?
    } else {
        encode_pgm(img)
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_png(img: &GrayImage) -> std::result::Result<Vec<u8>, String> {
    use image::ImageEncoder;

    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(
            &img.pixels,
            img.width as u32,
            img.height as u32,
            image::ExtendedColorType::L8,
        )
        .map_err(|e| e.to_string())?;
    Ok(out)
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(img.pixels.len() + 20);
    write!(out, "P5\n{} {}\n255\n", img.width, img.height).expect("write to Vec");
    out.extend_from_slice(&img.pixels);
    out
}

pub fn decode_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and '#' comments may separate header fields
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or("header value out of range")?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err("missing whitespace after header".into());
    }
    pos += 1;

    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(format!("zero dimension {width}x{height}"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} out of range"));
    }
    let count = width
        .checked_mul(height)
        .ok_or("image dimensions overflow")?;
    let data = &bytes[pos..];
    let pixels: Vec<u8> = if maxval < 256 {
        if data.len() < count {
            return Err("truncated pixel data".into());
        }
        let data = &data[..count];
        if maxval == 255 {
            data.to_vec()
        } else {
            data.iter()
                .map(|&v| ((v.min(maxval as u8) as usize * 255 + maxval / 2) / maxval) as u8)
                .collect()
        }
    } else {
        if data.len() < 2 * count {
            return Err("truncated pixel data".into());
        }
        let shift = (usize::BITS - maxval.leading_zeros()).saturating_sub(8);
        data.chunks_exact(2)
            .take(count)
            .map(|c| (u16::from_be_bytes([c[0], c[1]]) >> shift) as u8)
            .collect()
    };
    GrayImage::new(width, height, pixels).map_err(|e| e.to_string())
}

fn decode_png(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    use image::DynamicImage;

    let decoded = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| e.to_string())?;
    let (width, height) = (decoded.width() as usize, decoded.height() as usize);
    let pixels: Vec<u8> = match decoded {
        DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0]).collect(),
        DynamicImage::ImageLuma16(buf) => buf.pixels().map(|p| (p.0[0] >> 8) as u8).collect(),
        DynamicImage::ImageLumaA16(buf) => buf.pixels().map(|p| (p.0[0] >> 8) as u8).collect(),
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| luma(p.0[0], p.0[1], p.0[2]))
            .collect(),
    };
    GrayImage::new(width, height, pixels).map_err(|e| e.to_string())
}
