//! 8-bit image buffers and PNM (P5/P6) file I/O, plus PNG behind the `png` feature.

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("i/o error")]
    Io(#[from] std::io::Error),
    #[error("malformed image header: {0}")]
    Malformed(String),
    #[error("truncated pixel data: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("unsupported bit depth: maxval {0} (only 255 is supported)")]
    UnsupportedDepth(u32),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("invalid image: {0}")]
    Invalid(String),
}

/// Interleaved 8-bit samples, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    samples: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, samples: Vec<u8>) -> Result<Self, ImageError> {
        if channels != 1 && channels != 3 {
            return Err(ImageError::Invalid(format!("channels must be 1 or 3, got {channels}")));
        }
        if width == 0 || height == 0 {
            return Err(ImageError::Invalid(format!("empty image {width}x{height}")));
        }
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| ImageError::Invalid("image dimensions overflow".into()))?;
        if samples.len() != expected {
            return Err(ImageError::Invalid(format!(
                "{} samples for a {width}x{height}x{channels} image",
                samples.len()
            )));
        }
        Ok(Self { width, height, channels, samples })
    }

    /// Image filled with one value per channel.
    pub fn filled(width: usize, height: usize, pixel: &[u8]) -> Result<Self, ImageError> {
        let samples = pixel.iter().copied().cycle().take(width * height * pixel.len()).collect();
        Self::new(width, height, pixel.len(), samples)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.samples[(y * self.width + x) * self.channels + c]
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }
}

/// Loads a PPM/PGM file, or a PNG when the `png` feature is enabled.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageBuffer, ImageError> {
    let bytes = fs::read(path.as_ref())?;
    if bytes.starts_with(b"\x89PNG") {
        return decode_png(&bytes);
    }
    parse_pnm(&bytes)
}

/// Writes `img` as binary PNM (P5 for gray, P6 for RGB), or PNG when the
/// path ends in `.png` and the feature is enabled.
pub fn save_image(img: &ImageBuffer, path: impl AsRef<Path>) -> Result<(), ImageError> {
    let path = path.as_ref();
    let is_png = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let bytes = if is_png { encode_png(img)? } else { encode_pnm(img) };
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn encode_pnm(img: &ImageBuffer) -> Vec<u8> {
    let magic = if img.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.samples);
    out
}

pub fn parse_pnm(bytes: &[u8]) -> Result<ImageBuffer, ImageError> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        Some(m) if m.first() == Some(&b'P') => {
            return Err(ImageError::UnsupportedFormat(String::from_utf8_lossy(m).into_owned()))
        }
        _ => return Err(ImageError::Malformed("missing P5/P6 magic".into())),
    };
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in &mut fields {
        *field = read_header_uint(bytes, &mut pos)?;
    }
    let [width, height, maxval] = fields;
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(ImageError::Malformed("missing whitespace after maxval".into())),
    }
    if maxval != 255 {
        return Err(ImageError::UnsupportedDepth(maxval));
    }
    if width == 0 || height == 0 {
        return Err(ImageError::Malformed(format!("zero dimension {width}x{height}")));
    }
    let expected = width as usize * height as usize * channels;
    let data = &bytes[pos..];
    if data.len() < expected {
        return Err(ImageError::Truncated { expected, found: data.len() });
    }
    ImageBuffer::new(width as usize, height as usize, channels, data[..expected].to_vec())
}

fn read_header_uint(bytes: &[u8], pos: &mut usize) -> Result<u32, ImageError> {
    // Skip whitespace and '#' comments.
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' || b == b'\r' {
                        break;
                    }
                }
            }
            Some(_) => break,
            None => return Err(ImageError::Malformed("header ended early".into())),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    if start == *pos {
        return Err(ImageError::Malformed(format!("expected a number at byte {start}")));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| ImageError::Malformed("header number out of range".into()))
}

#[cfg(feature = "png")]
fn decode_png(bytes: &[u8]) -> Result<ImageBuffer, ImageError> {
    let decoder = png::Decoder::new(bytes);
    let mut reader = decoder.read_info().map_err(|e| ImageError::Malformed(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).map_err(|e| ImageError::Malformed(e.to_string()))?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(ImageError::UnsupportedDepth((1u32 << info.bit_depth as u32) - 1));
    }
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        other => return Err(ImageError::UnsupportedFormat(format!("PNG color type {other:?}"))),
    };
    buf.truncate(info.buffer_size());
    ImageBuffer::new(info.width as usize, info.height as usize, channels, buf)
}

#[cfg(not(feature = "png"))]
fn decode_png(_bytes: &[u8]) -> Result<ImageBuffer, ImageError> {
    Err(ImageError::UnsupportedFormat("PNG support not compiled in (enable the `png` feature)".into()))
}

#[cfg(feature = "png")]
fn encode_png(img: &ImageBuffer) -> Result<Vec<u8>, ImageError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width as u32, img.height as u32);
        enc.set_color(if img.channels == 1 { png::ColorType::Grayscale } else { png::ColorType::Rgb });
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().map_err(|e| ImageError::Malformed(e.to_string()))?;
        w.write_image_data(&img.samples).map_err(|e| ImageError::Malformed(e.to_string()))?;
    }
    Ok(out)
}

#[cfg(not(feature = "png"))]
fn encode_png(_img: &ImageBuffer) -> Result<Vec<u8>, ImageError> {
    Err(ImageError::UnsupportedFormat("PNG support not compiled in (enable the `png` feature)".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn parses_small_p6_verbatim() {
        let mut bytes = b"P6\n# tiny\n2 2\n255\n".to_vec();
        let px: Vec<u8> = (0..12).map(|i| i * 20).collect();
        bytes.extend_from_slice(&px);
        let img = parse_pnm(&bytes).unwrap();
        assert_eq!((img.width(), img.height(), img.channels()), (2, 2, 3));
        assert_eq!(img.samples(), &px[..]);
    }

    #[test]
    fn rejects_bad_headers() {
        assert!(matches!(parse_pnm(b"P6\n2 2\n65535\n"), Err(ImageError::UnsupportedDepth(65535))));
        assert!(matches!(parse_pnm(b"P6\n2 2\n15\n"), Err(ImageError::UnsupportedDepth(15))));
        assert!(matches!(parse_pnm(b"P6\n2 2\n255\n\x01\x02"), Err(ImageError::Truncated { .. })));
        assert!(matches!(parse_pnm(b"P3\n2 2\n255\n"), Err(ImageError::UnsupportedFormat(_))));
        assert!(matches!(parse_pnm(b"JUNK"), Err(ImageError::Malformed(_))));
        assert!(matches!(parse_pnm(b"P5\n2"), Err(ImageError::Malformed(_))));
        assert!(matches!(parse_pnm(b"P5\n0 2\n255\n"), Err(ImageError::Malformed(_))));
    }

    #[test]
    fn save_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for &(w, h, c) in &[(1, 1, 1), (7, 5, 3), (33, 17, 1)] {
            let samples = (0..w * h * c).map(|_| rng.gen()).collect();
            let img = ImageBuffer::new(w, h, c, samples).unwrap();
            let path = dir.path().join(format!("img_{w}_{h}_{c}.ppm"));
            save_image(&img, &path).unwrap();
            assert_eq!(load_image(&path).unwrap(), img);
        }
    }

    #[cfg(feature = "png")]
    #[test]
    fn png_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let img = ImageBuffer::new(3, 2, 3, (0..18).collect()).unwrap();
        let path = dir.path().join("x.png");
        save_image(&img, &path).unwrap();
        assert_eq!(load_image(&path).unwrap(), img);
    }

    #[test]
    fn buffer_validation() {
        assert!(ImageBuffer::new(2, 2, 2, vec![0; 8]).is_err());
        assert!(ImageBuffer::new(2, 2, 1, vec![0; 3]).is_err());
        assert!(ImageBuffer::new(0, 2, 1, vec![]).is_err());
        let f = ImageBuffer::filled(2, 1, &[1, 2, 3]).unwrap();
        assert_eq!(f.samples(), &[1, 2, 3, 1, 2, 3]);
    }
}
