//! Block-DCT image codec with a generalized Gaussian entropy model.
//!
//! Pipeline per image:
//!
//! 1. optional BT.601 YCbCr conversion, level shift by -128, edge-replicated
//!    padding to a multiple of 8;
//! 2. orthonormal 8×8 DCT per block, coefficients read in zigzag order;
//! 3. uniform quantization `ŷ = round(y / Δ)`; the DC index is replaced by
//!    its difference from the previous block's DC index (raster order);
//! 4. per (channel, zigzag index) subband: a `GGM(0, α, β)` moment fit, `α`
//!    snapped to a 64-level geometric grid, and the subband's largest
//!    magnitude `K`. `K` and the grid index form the side-information
//!    stream, coded with fixed uniform tables;
//! 5. each channel's symbols are range coded with tables built from
//!    `GGM(μ, α̂, β)` over `[-K, K]` (subbands with `K = 0` cost nothing).
//!    With the checkerboard context enabled, blocks of odd parity are coded
//!    in a second pass and their AC symbols use `μ = ρ · mean(4-neighbours)`.
//!
//! The decoder inverts the same steps; the encoder's reconstruction is
//! produced by the very same routine, so both match bit for bit.

pub mod dct;
pub mod format;
pub mod image;
mod sweep;

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coder::{CoderError, RangeDecoder, RangeEncoder};
use crate::ggm::{self, CdfTable, DiscretePmf, GgmError, GgmParams, Location, ALPHA_MIN, TABLE_BITS};

pub use dct::{dct8_forward, dct8_inverse, Block, ZIGZAG};
pub use format::{EncodedImage, Header};
pub use image::{load_image, save_image, ImageBuffer, ImageError};
pub use sweep::rd_sweep;

/// Smallest quantizer step accepted by the codec.
pub const DELTA_MIN: f64 = 0.25;
pub const ALPHA_MAX: f64 = 4096.0;
pub const ALPHA_LEVELS: usize = 64;
/// Largest per-subband symbol magnitude a table can hold.
const MAX_SYMBOL: i64 = (1 << 15) - 1;

/// Lagrange multipliers of the six-point RD grid.
pub const LAMBDAS: [f64; 6] = [0.0018, 0.0035, 0.0067, 0.0130, 0.0250, 0.0483];

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("invalid codec configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("not a GGLC bitstream (bad magic)")]
    BadMagic,
    #[error("unsupported bitstream version {found} (expected {expected})")]
    VersionMismatch { found: u8, expected: u8 },
    #[error("payload CRC mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    CrcMismatch { stored: u32, computed: u32 },
    #[error("bitstream truncated")]
    Truncated,
    #[error("malformed bitstream: {0}")]
    Format(String),
    #[error("entropy coder: {0}")]
    Coder(#[from] CoderError),
    #[error("entropy model: {0}")]
    Model(#[from] GgmError),
    #[error("image dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize, usize), (usize, usize, usize)),
    #[error("{0}")]
    Input(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodecConfig {
    /// Quantizer step in DCT-coefficient units.
    pub delta: f64,
    pub beta: f64,
    pub color_transform: bool,
    pub context_enabled: bool,
    /// Weight of the neighbour mean used as `μ` in the second pass.
    pub context_rho: f64,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self {
            delta: 4.0,
            beta: ggm::DEFAULT_BETA,
            color_transform: false,
            context_enabled: false,
            context_rho: 0.0,
        }
    }
}

impl CodecConfig {
    pub fn with_delta(delta: f64) -> Self {
        Self { delta, ..Self::default() }
    }

    /// This configuration with the colour transform dropped for gray images.
    pub fn for_channels(&self, channels: usize) -> Self {
        Self { color_transform: self.color_transform && channels == 3, ..*self }
    }

    pub fn validate(&self) -> Result<(), CodecError> {
        if !(self.delta >= DELTA_MIN) || !self.delta.is_finite() {
            return Err(CodecError::Config(format!("delta must be >= {DELTA_MIN}, got {}", self.delta)));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(CodecError::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if !(0.0..=1.0).contains(&self.context_rho) {
            return Err(CodecError::Config(format!("context_rho must be in [0, 1], got {}", self.context_rho)));
        }
        Ok(())
    }

    pub(crate) fn validate_for(&self, channels: usize) -> Result<(), CodecError> {
        self.validate()?;
        if self.color_transform && channels != 3 {
            return Err(CodecError::Config("color transform needs a 3-channel image".into()));
        }
        Ok(())
    }

    /// The configuration exactly as the container stores it (reals as binary32).
    pub fn stored(&self) -> Self {
        Self {
            delta: self.delta as f32 as f64,
            beta: self.beta as f32 as f64,
            context_rho: self.context_rho as f32 as f64,
            ..*self
        }
    }
}

/// One rate-distortion measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    pub bpp: f64,
    pub psnr: f64,
    /// Mean squared error on the 0–255 sample scale.
    pub mse: f64,
}

impl RdPoint {
    pub fn from_rate_mse(bpp: f64, mse: f64) -> Self {
        Self { bpp, psnr: psnr_from_mse(mse), mse }
    }

    /// A point known only by rate and PSNR (e.g. read from a curve file).
    pub fn from_rate_psnr(bpp: f64, psnr: f64) -> Self {
        Self { bpp, psnr, mse: 255.0 * 255.0 / 10f64.powf(psnr / 10.0) }
    }
}

/// `10·log10(255² / mse)`; infinite for `mse == 0`.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0 * 255.0 / mse).log10()
    }
}

pub fn mse(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64, CodecError> {
    let da = (a.width(), a.height(), a.channels());
    let db = (b.width(), b.height(), b.channels());
    if da != db {
        return Err(CodecError::DimensionMismatch(da, db));
    }
    let sse: u64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(&x, &y)| {
            let d = i64::from(x) - i64::from(y);
            (d * d) as u64
        })
        .sum();
    Ok(sse as f64 / a.samples().len() as f64)
}

/// PSNR in dB over all samples. Identical images yield `f64::INFINITY`,
/// the sentinel for "no distortion".
pub fn psnr(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64, CodecError> {
    Ok(psnr_from_mse(mse(a, b)?))
}

/// Rate-distortion loss `bpp + λ · MSE`.
pub fn rd_loss(point: &RdPoint, lambda: f64) -> Result<f64, CodecError> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(CodecError::Config(format!("lambda must be positive, got {lambda}")));
    }
    Ok(point.bpp + lambda * point.mse)
}

/// Value of grid level `index` on the geometric scale grid.
pub fn alpha_level(index: usize) -> f64 {
    let t = index as f64 / (ALPHA_LEVELS - 1) as f64;
    ALPHA_MIN * (ALPHA_MAX / ALPHA_MIN).powf(t)
}

/// Nearest grid level (in log domain) for `alpha`.
pub fn alpha_index(alpha: f64) -> usize {
    let t = (alpha / ALPHA_MIN).ln() / (ALPHA_MAX / ALPHA_MIN).ln();
    (t * (ALPHA_LEVELS - 1) as f64).round().clamp(0.0, (ALPHA_LEVELS - 1) as f64) as usize
}

/// Quantized symbols of one channel, one zigzag-ordered array per block.
/// Entry 0 is the DC index difference.
pub type ChannelSymbols = Vec<[i64; 64]>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Geometry {
    width: usize,
    height: usize,
    blocks_x: usize,
    blocks_y: usize,
}

impl Geometry {
    fn new(width: usize, height: usize) -> Self {
        Self { width, height, blocks_x: width.div_ceil(8), blocks_y: height.div_ceil(8) }
    }

    fn blocks(&self) -> usize {
        self.blocks_x * self.blocks_y
    }

    fn padded_width(&self) -> usize {
        self.blocks_x * 8
    }

    /// Blocks in coding order, each tagged with whether it belongs to the
    /// refined second pass.
    fn coding_order(&self, checkerboard: bool) -> Vec<(usize, bool)> {
        if !checkerboard {
            return (0..self.blocks()).map(|b| (b, false)).collect();
        }
        let parity = |b: usize| (b % self.blocks_x + b / self.blocks_x) % 2 == 1;
        let first = (0..self.blocks()).filter(|&b| !parity(b)).map(|b| (b, false));
        let second = (0..self.blocks()).filter(|&b| parity(b)).map(|b| (b, true));
        first.chain(second).collect()
    }

    fn neighbours(&self, b: usize) -> impl Iterator<Item = usize> + '_ {
        let (bx, by) = (b % self.blocks_x, b / self.blocks_x);
        let cand = [
            (bx > 0).then(|| b - 1),
            (bx + 1 < self.blocks_x).then(|| b + 1),
            (by > 0).then(|| b - self.blocks_x),
            (by + 1 < self.blocks_y).then(|| b + self.blocks_x),
        ];
        cand.into_iter().flatten()
    }
}

/// Side information for one subband.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubbandInfo {
    /// Largest symbol magnitude; the table spans `[-max_abs, max_abs]`.
    pub max_abs: i64,
    /// Level on the scale grid; meaningless when `max_abs == 0`.
    pub alpha_index: usize,
}

/// Everything the encoder knows after coding one image.
#[derive(Debug, Clone)]
pub struct EncodeReport {
    pub encoded: EncodedImage,
    pub point: RdPoint,
    pub reconstruction: ImageBuffer,
    pub symbols: Vec<ChannelSymbols>,
    pub subbands: Vec<[SubbandInfo; 64]>,
    /// Ideal (model) cost of the side stream in bits.
    pub side_bits_estimate: f64,
    /// Ideal cost of each coefficient stream in bits, `Σ -log2 q(ŷ)`.
    pub coeff_bits_estimate: Vec<f64>,
}

/// Encodes `img`; returns the container and its rate-distortion point.
pub fn encode_image(img: &ImageBuffer, cfg: &CodecConfig) -> Result<(EncodedImage, RdPoint), CodecError> {
    let report = encode_image_detailed(img, cfg)?;
    Ok((report.encoded, report.point))
}

pub fn encode_image_detailed(img: &ImageBuffer, cfg: &CodecConfig) -> Result<EncodeReport, CodecError> {
    cfg.validate_for(img.channels())?;
    let cfg = cfg.stored();
    let geom = Geometry::new(img.width(), img.height());
    let symbols = analyze(img, &cfg, &geom);

    let mut subbands = Vec::with_capacity(symbols.len());
    for ch in &symbols {
        subbands.push(fit_subbands(ch, cfg.beta)?);
    }

    let tables = SideTables::get();
    let mut side = RangeEncoder::new();
    let mut side_bits_estimate = 0.0;
    for ch in &subbands {
        for info in ch {
            for (sym, table) in side_symbols(info, tables) {
                side_bits_estimate += table.bits(sym);
                side.encode(sym, table)?;
            }
        }
    }

    let mut coeff_streams = Vec::with_capacity(symbols.len());
    let mut coeff_bits_estimate = Vec::with_capacity(symbols.len());
    for (ch, info) in symbols.iter().zip(&subbands) {
        let mut models = ChannelModels::new(info, &cfg)?;
        let mut enc = RangeEncoder::new();
        let mut est = 0.0;
        for (b, second_pass) in geom.coding_order(cfg.context_enabled) {
            for z in 0..64 {
                if info[z].max_abs == 0 {
                    continue;
                }
                let (pmf, table) = models.model(z, b, second_pass, ch, &geom)?;
                let s = ch[b][z];
                est += pmf.bits(s);
                enc.encode(s, table)?;
            }
        }
        coeff_streams.push(enc.finish());
        coeff_bits_estimate.push(est);
    }

    let encoded = EncodedImage {
        header: Header {
            width: img.width() as u32,
            height: img.height() as u32,
            channels: img.channels() as u8,
            config: cfg,
        },
        side_stream: side.finish(),
        coeff_streams,
    };
    let reconstruction = reconstruct(&symbols, &geom, img.channels(), &cfg)?;
    let bpp = encoded.bit_len() as f64 / img.pixel_count() as f64;
    let point = RdPoint::from_rate_mse(bpp, mse(img, &reconstruction)?);
    Ok(EncodeReport {
        encoded,
        point,
        reconstruction,
        symbols,
        subbands,
        side_bits_estimate,
        coeff_bits_estimate,
    })
}

/// Recovers the quantized symbols of every channel.
pub fn decode_symbols(enc: &EncodedImage) -> Result<Vec<ChannelSymbols>, CodecError> {
    let h = &enc.header;
    let cfg = h.config;
    cfg.validate_for(h.channels as usize)?;
    if enc.coeff_streams.len() != h.channels as usize {
        return Err(CodecError::Format(format!(
            "{} coefficient streams for {} channels",
            enc.coeff_streams.len(),
            h.channels
        )));
    }
    let geom = Geometry::new(h.width as usize, h.height as usize);
    let tables = SideTables::get();
    let mut side = RangeDecoder::new(&enc.side_stream.bytes)?;
    let mut subbands = Vec::with_capacity(h.channels as usize);
    for _ in 0..h.channels {
        let mut ch = [SubbandInfo { max_abs: 0, alpha_index: 0 }; 64];
        for info in ch.iter_mut() {
            *info = read_side(&mut side, tables)?;
        }
        subbands.push(ch);
    }

    let mut out = Vec::with_capacity(h.channels as usize);
    for (stream, info) in enc.coeff_streams.iter().zip(&subbands) {
        let mut models = ChannelModels::new(info, &cfg)?;
        let mut ch: ChannelSymbols = vec![[0; 64]; geom.blocks()];
        let mut dec = RangeDecoder::new(&stream.bytes)?;
        for (b, second_pass) in geom.coding_order(cfg.context_enabled) {
            for z in 0..64 {
                if info[z].max_abs == 0 {
                    continue;
                }
                let (_, table) = models.model(z, b, second_pass, &ch, &geom)?;
                ch[b][z] = dec.decode(table)?;
            }
        }
        out.push(ch);
    }
    Ok(out)
}

pub fn decode_image(enc: &EncodedImage) -> Result<ImageBuffer, CodecError> {
    let symbols = decode_symbols(enc)?;
    let h = &enc.header;
    let geom = Geometry::new(h.width as usize, h.height as usize);
    reconstruct(&symbols, &geom, h.channels as usize, &h.config)
}

/// Parses and decodes a serialized container.
pub fn decode_bytes(bytes: &[u8]) -> Result<ImageBuffer, CodecError> {
    decode_image(&EncodedImage::from_bytes(bytes)?)
}

// ---------------------------------------------------------------------------
// Analysis and synthesis

const YCBCR: [[f64; 3]; 3] = [
    [0.299, 0.587, 0.114],
    [-0.168_736, -0.331_264, 0.5],
    [0.5, -0.418_688, -0.081_312],
];

fn ycbcr_inverse() -> &'static [[f64; 3]; 3] {
    static INV: OnceLock<[[f64; 3]; 3]> = OnceLock::new();
    INV.get_or_init(|| invert3(&YCBCR))
}

fn invert3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let mut inv = [[0.0; 3]; 3];
    for (i, row) in inv.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            *v = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
        }
    }
    inv
}

/// Level-shifted, padded planes of `img`.
fn to_planes(img: &ImageBuffer, cfg: &CodecConfig, geom: &Geometry) -> Vec<Vec<f64>> {
    let (pw, ph) = (geom.padded_width(), geom.blocks_y * 8);
    let nc = img.channels();
    let mut planes = vec![vec![0.0; pw * ph]; nc];
    for y in 0..ph {
        let sy = y.min(img.height() - 1);
        for x in 0..pw {
            let sx = x.min(img.width() - 1);
            if cfg.color_transform {
                let rgb = [0, 1, 2].map(|c| f64::from(img.get(sx, sy, c)));
                for (c, row) in YCBCR.iter().enumerate() {
                    // Chroma carries a +128 offset that the level shift removes again.
                    let luma_shift = if c == 0 { 128.0 } else { 0.0 };
                    planes[c][y * pw + x] = row[0] * rgb[0] + row[1] * rgb[1] + row[2] * rgb[2] - luma_shift;
                }
            } else {
                for (c, plane) in planes.iter_mut().enumerate() {
                    plane[y * pw + x] = f64::from(img.get(sx, sy, c)) - 128.0;
                }
            }
        }
    }
    planes
}

fn analyze(img: &ImageBuffer, cfg: &CodecConfig, geom: &Geometry) -> Vec<ChannelSymbols> {
    let pw = geom.padded_width();
    to_planes(img, cfg, geom)
        .iter()
        .map(|plane| {
            let mut prev_dc = 0i64;
            let mut out = Vec::with_capacity(geom.blocks());
            for b in 0..geom.blocks() {
                let (bx, by) = (b % geom.blocks_x, b / geom.blocks_x);
                let mut block = [0.0; 64];
                for y in 0..8 {
                    let row = (by * 8 + y) * pw + bx * 8;
                    block[y * 8..y * 8 + 8].copy_from_slice(&plane[row..row + 8]);
                }
                let coeffs = dct8_forward(&block);
                let mut syms = [0i64; 64];
                for (z, &pos) in ZIGZAG.iter().enumerate() {
                    syms[z] = (coeffs[pos] / cfg.delta).round() as i64;
                }
                let dc = syms[0];
                syms[0] = dc - prev_dc;
                prev_dc = dc;
                out.push(syms);
            }
            out
        })
        .collect()
}

fn reconstruct(
    symbols: &[ChannelSymbols],
    geom: &Geometry,
    channels: usize,
    cfg: &CodecConfig,
) -> Result<ImageBuffer, CodecError> {
    let pw = geom.padded_width();
    let planes: Vec<Vec<f64>> = symbols
        .iter()
        .map(|ch| {
            let mut plane = vec![0.0; pw * geom.blocks_y * 8];
            let mut dc = 0i64;
            for (b, syms) in ch.iter().enumerate() {
                dc += syms[0];
                let mut coeffs = [0.0; 64];
                coeffs[0] = dc as f64 * cfg.delta;
                for z in 1..64 {
                    coeffs[ZIGZAG[z]] = syms[z] as f64 * cfg.delta;
                }
                let block = dct8_inverse(&coeffs);
                let (bx, by) = (b % geom.blocks_x, b / geom.blocks_x);
                for y in 0..8 {
                    let row = (by * 8 + y) * pw + bx * 8;
                    plane[row..row + 8].copy_from_slice(&block[y * 8..y * 8 + 8]);
                }
            }
            plane
        })
        .collect();

    let to_u8 = |v: f64| v.round().clamp(0.0, 255.0) as u8;
    let mut samples = Vec::with_capacity(geom.width * geom.height * channels);
    for y in 0..geom.height {
        for x in 0..geom.width {
            let i = y * pw + x;
            if cfg.color_transform {
                let ycc = [planes[0][i] + 128.0, planes[1][i], planes[2][i]];
                for row in ycbcr_inverse() {
                    samples.push(to_u8(row[0] * ycc[0] + row[1] * ycc[1] + row[2] * ycc[2]));
                }
            } else {
                for plane in &planes {
                    samples.push(to_u8(plane[i] + 128.0));
                }
            }
        }
    }
    Ok(ImageBuffer::new(geom.width, geom.height, channels, samples)?)
}

// ---------------------------------------------------------------------------
// Entropy models

fn fit_subbands(ch: &ChannelSymbols, beta: f64) -> Result<[SubbandInfo; 64], CodecError> {
    let mut out = [SubbandInfo { max_abs: 0, alpha_index: 0 }; 64];
    let mut samples = Vec::with_capacity(ch.len());
    for (z, info) in out.iter_mut().enumerate() {
        samples.clear();
        samples.extend(ch.iter().map(|s| s[z] as f64));
        let max_abs = ch.iter().map(|s| s[z].abs()).max().unwrap_or(0);
        if max_abs > MAX_SYMBOL {
            return Err(CodecError::Input(format!("subband {z} symbol magnitude {max_abs} exceeds {MAX_SYMBOL}")));
        }
        let fit = ggm::ggm_fit_moment(&samples, beta, Location::Fixed(0.0))?;
        *info = SubbandInfo { max_abs, alpha_index: alpha_index(fit.alpha) };
    }
    Ok(out)
}

/// Fixed uniform tables of the side-information stream.
struct SideTables {
    /// Bit length of `max_abs`, 0..=15.
    length: CdfTable,
    /// `mantissa[b]` codes the low `b` bits of `max_abs`.
    mantissa: Vec<CdfTable>,
    alpha: CdfTable,
}

impl SideTables {
    fn get() -> &'static Self {
        static TABLES: OnceLock<SideTables> = OnceLock::new();
        TABLES.get_or_init(|| SideTables {
            length: CdfTable::uniform(0, 16, TABLE_BITS).expect("static table"),
            mantissa: (0..15)
                .map(|b| CdfTable::uniform(0, 1 << b, TABLE_BITS).expect("static table"))
                .collect(),
            alpha: CdfTable::uniform(0, ALPHA_LEVELS as u32, TABLE_BITS).expect("static table"),
        })
    }
}

fn side_symbols<'t>(info: &SubbandInfo, t: &'t SideTables) -> Vec<(i64, &'t CdfTable)> {
    let k = info.max_abs;
    let len = 64 - k.leading_zeros() as i64;
    let mut out = vec![(len, &t.length)];
    if len >= 2 {
        let b = (len - 1) as usize;
        out.push((k - (1 << b), &t.mantissa[b]));
    }
    if k > 0 {
        out.push((info.alpha_index as i64, &t.alpha));
    }
    out
}

fn read_side(dec: &mut RangeDecoder<'_>, t: &SideTables) -> Result<SubbandInfo, CodecError> {
    let len = dec.decode(&t.length)?;
    let max_abs = match len {
        0 => 0,
        1 => 1,
        _ => {
            let b = (len - 1) as usize;
            (1 << b) + dec.decode(&t.mantissa[b])?
        }
    };
    let alpha_index = if max_abs > 0 { dec.decode(&t.alpha)? as usize } else { 0 };
    Ok(SubbandInfo { max_abs, alpha_index })
}

type Model = (DiscretePmf, CdfTable);

/// Per-channel cache of coding models: one base model per subband plus the
/// location-shifted ones needed by the refinement pass.
struct ChannelModels<'a> {
    info: &'a [SubbandInfo; 64],
    cfg: &'a CodecConfig,
    base: Vec<Option<Model>>,
    shifted: HashMap<(usize, i64, usize), Model>,
}

impl<'a> ChannelModels<'a> {
    fn new(info: &'a [SubbandInfo; 64], cfg: &'a CodecConfig) -> Result<Self, CodecError> {
        let base = info
            .iter()
            .map(|s| (s.max_abs > 0).then(|| build_model(s, 0.0, cfg.beta)).transpose())
            .collect::<Result<_, _>>()?;
        Ok(Self { info, cfg, base, shifted: HashMap::new() })
    }

    fn model(
        &mut self,
        z: usize,
        block: usize,
        second_pass: bool,
        coded: &ChannelSymbols,
        geom: &Geometry,
    ) -> Result<&Model, CodecError> {
        if second_pass && z > 0 && self.cfg.context_rho != 0.0 {
            let (mut sum, mut count) = (0i64, 0usize);
            for n in geom.neighbours(block) {
                sum += coded[n][z];
                count += 1;
            }
            if sum != 0 {
                let key = (z, sum, count);
                if !self.shifted.contains_key(&key) {
                    let mu = self.cfg.context_rho * sum as f64 / count as f64;
                    let m = build_model(&self.info[z], mu, self.cfg.beta)?;
                    self.shifted.insert(key, m);
                }
                return Ok(&self.shifted[&key]);
            }
        }
        Ok(self.base[z].as_ref().expect("model exists for every coded subband"))
    }
}

fn build_model(info: &SubbandInfo, mu: f64, beta: f64) -> Result<Model, CodecError> {
    let params = GgmParams::new(mu, alpha_level(info.alpha_index), beta)?;
    let pmf = DiscretePmf::new(&params, -info.max_abs, info.max_abs)?;
    let table = CdfTable::from_pmf(&pmf, TABLE_BITS)?;
    Ok((pmf, table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    #[test]
    fn psnr_examples() {
        let a = ImageBuffer::filled(4, 4, &[100, 50, 200]).unwrap();
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let b = ImageBuffer::filled(4, 4, &[101, 49, 201]).unwrap();
        assert!((psnr(&a, &b).unwrap() - 48.130_803_608_679_1).abs() < 1e-9);
        let black = ImageBuffer::filled(2, 2, &[0]).unwrap();
        let white = ImageBuffer::filled(2, 2, &[255]).unwrap();
        assert_eq!(psnr(&black, &white).unwrap(), 0.0);
        assert!(matches!(psnr(&a, &black), Err(CodecError::DimensionMismatch(..))));
    }

    #[test]
    fn rd_loss_examples() {
        let p = RdPoint::from_rate_mse(0.5, 0.0);
        assert_eq!(rd_loss(&p, 0.013).unwrap(), 0.5);
        let p = RdPoint::from_rate_mse(0.5, 30.0);
        assert!((rd_loss(&p, 0.013).unwrap() - 0.89).abs() < 1e-12);
        let losses: Vec<f64> = LAMBDAS.iter().map(|&l| rd_loss(&p, l).unwrap()).collect();
        assert!(losses.windows(2).all(|w| w[0] < w[1]));
        assert!(rd_loss(&p, 0.0).is_err());
    }

    #[test]
    fn alpha_grid_endpoints_and_snapping() {
        assert!((alpha_level(0) - ALPHA_MIN).abs() < 1e-15);
        assert!((alpha_level(63) - ALPHA_MAX).abs() < 1e-9);
        for i in 0..ALPHA_LEVELS {
            assert_eq!(alpha_index(alpha_level(i)), i);
        }
        assert_eq!(alpha_index(1e-9), 0);
        assert_eq!(alpha_index(1e9), 63);
    }

    #[test]
    fn color_inverse_is_exact() {
        let inv = ycbcr_inverse();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| inv[i][k] * YCBCR[k][j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(CodecConfig::with_delta(0.1).validate().is_err());
        assert!(CodecConfig::with_delta(f64::NAN).validate().is_err());
        assert!(CodecConfig { context_rho: 1.5, ..CodecConfig::default() }.validate().is_err());
        assert!(CodecConfig { beta: 0.0, ..CodecConfig::default() }.validate().is_err());
        let gray = ImageBuffer::filled(8, 8, &[7]).unwrap();
        let color = CodecConfig { color_transform: true, ..CodecConfig::default() };
        assert!(matches!(encode_image(&gray, &color), Err(CodecError::Config(_))));
        assert!(encode_image(&gray, &color.for_channels(1)).is_ok());
    }

    #[test]
    fn uniform_gray_is_nearly_free() {
        let img = ImageBuffer::filled(256, 256, &[128, 128, 128]).unwrap();
        for &delta in &[0.25, 1.0, 7.0, 40.0] {
            let cfg = CodecConfig { color_transform: true, ..CodecConfig::with_delta(delta) };
            let report = encode_image_detailed(&img, &cfg).unwrap();
            for ch in &report.symbols {
                assert!(ch.iter().all(|s| s[1..].iter().all(|&v| v == 0)));
            }
            assert!(report.point.bpp < 0.05, "bpp = {}", report.point.bpp);
            assert!(report.point.psnr > 50.0);
        }
        let img = ImageBuffer::filled(256, 256, &[77]).unwrap();
        let cfg = CodecConfig { color_transform: false, ..CodecConfig::with_delta(3.0) };
        let (_, p) = encode_image(&img, &cfg).unwrap();
        assert!(p.bpp < 0.05 && p.psnr > 50.0);
    }

    #[test]
    fn roundtrip_matches_encoder_reconstruction() {
        for (i, img) in synthetic::corpus(4, 45, 29).into_iter().enumerate() {
            for cfg in [
                CodecConfig::with_delta(2.0),
                CodecConfig { context_enabled: true, context_rho: 0.5, ..CodecConfig::with_delta(1.0) },
                CodecConfig { color_transform: true, ..CodecConfig::with_delta(9.5) },
            ] {
                let cfg = cfg.for_channels(img.channels());
                let report = encode_image_detailed(&img, &cfg).unwrap();
                let bytes = report.encoded.to_bytes();
                let parsed = EncodedImage::from_bytes(&bytes).unwrap();
                assert_eq!(decode_symbols(&parsed).unwrap(), report.symbols, "image {i}");
                assert_eq!(decode_image(&parsed).unwrap(), report.reconstruction, "image {i}");
            }
        }
    }

    #[test]
    fn single_pixel_image() {
        let img = ImageBuffer::new(1, 1, 3, vec![10, 200, 90]).unwrap();
        let (enc, _) = encode_image(&img, &CodecConfig::with_delta(0.5)).unwrap();
        let out = decode_bytes(&enc.to_bytes()).unwrap();
        assert_eq!((out.width(), out.height(), out.channels()), (1, 1, 3));
        for (a, b) in out.samples().iter().zip(img.samples()) {
            assert!((i32::from(*a) - i32::from(*b)).abs() <= 1);
        }
    }

    #[test]
    fn corrupted_payload_fails_crc() {
        let img = &synthetic::corpus(1, 32, 32)[0];
        let cfg = CodecConfig { color_transform: true, ..CodecConfig::with_delta(2.0) };
        let (enc, _) = encode_image(img, &cfg).unwrap();
        let mut bytes = enc.to_bytes();
        let last = bytes.len() - 1;
        bytes[last] ^= 0xA5;
        assert!(matches!(decode_bytes(&bytes), Err(CodecError::CrcMismatch { .. })));
    }

    #[test]
    fn coarser_quantizer_costs_fewer_bits() {
        let img = &synthetic::corpus(1, 64, 48)[0];
        let mut last: Option<RdPoint> = None;
        for &d in &[0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
            let (_, p) = encode_image(img, &CodecConfig::with_delta(d)).unwrap();
            if let Some(prev) = last {
                assert!(p.bpp < prev.bpp && p.psnr <= prev.psnr, "delta {d}: {p:?} vs {prev:?}");
            }
            last = Some(p);
        }
    }

    #[test]
    fn zero_rho_context_matches_plain_rate() {
        let img = &synthetic::corpus(3, 96, 64)[2];
        let plain = encode_image_detailed(img, &CodecConfig::with_delta(2.0)).unwrap();
        let ctx = encode_image_detailed(
            img,
            &CodecConfig { context_enabled: true, context_rho: 0.0, ..CodecConfig::with_delta(2.0) },
        )
        .unwrap();
        for (a, b) in plain.encoded.coeff_streams.iter().zip(&ctx.encoded.coeff_streams) {
            let (a, b) = (a.bit_len() as f64, b.bit_len() as f64);
            assert!((a - b).abs() <= 1e-3 * a + 64.0);
        }
        assert_eq!(plain.reconstruction, ctx.reconstruction);
    }
}
