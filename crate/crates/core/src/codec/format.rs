//! Container layout, all integers big-endian:
//!
//! ```text
//! "GGLC"        4 bytes magic
//! version       u8 (= 1)
//! width         u32
//! height        u32
//! channels      u8 (1 or 3)
//! flags         u8  bit0 = YCbCr, bit1 = checkerboard context
//! delta         f32
//! beta          f32
//! context_rho   f32
//! crc32         u32 over every byte that follows this field
//! side length   u32, then the side-information stream
//! per channel:  u32 length, then the coefficient stream
//! ```

use crate::coder::Bitstream;

use super::{CodecConfig, CodecError};

pub const MAGIC: [u8; 4] = *b"GGLC";
pub const VERSION: u8 = 1;
const FLAG_COLOR: u8 = 1;
const FLAG_CONTEXT: u8 = 2;
const FIXED_HEADER_LEN: usize = 4 + 1 + 4 + 4 + 1 + 1 + 4 + 4 + 4 + 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub width: u32,
    pub height: u32,
    pub channels: u8,
    /// Configuration as stored, i.e. with its reals rounded to binary32.
    pub config: CodecConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedImage {
    pub header: Header,
    pub side_stream: Bitstream,
    pub coeff_streams: Vec<Bitstream>,
}

impl EncodedImage {
    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut payload = Vec::new();
        push_stream(&mut payload, &self.side_stream);
        for s in &self.coeff_streams {
            push_stream(&mut payload, s);
        }
        let mut out = Vec::with_capacity(FIXED_HEADER_LEN + payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&h.width.to_be_bytes());
        out.extend_from_slice(&h.height.to_be_bytes());
        out.push(h.channels);
        let mut flags = 0;
        if h.config.color_transform {
            flags |= FLAG_COLOR;
        }
        if h.config.context_enabled {
            flags |= FLAG_CONTEXT;
        }
        out.push(flags);
        out.extend_from_slice(&(h.config.delta as f32).to_be_bytes());
        out.extend_from_slice(&(h.config.beta as f32).to_be_bytes());
        out.extend_from_slice(&(h.config.context_rho as f32).to_be_bytes());
        out.extend_from_slice(&crc32fast::hash(&payload).to_be_bytes());
        out.extend_from_slice(&payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(CodecError::BadMagic);
        }
        let version = r.u8()?;
        if version != VERSION {
            return Err(CodecError::VersionMismatch { found: version, expected: VERSION });
        }
        let width = r.u32()?;
        let height = r.u32()?;
        let channels = r.u8()?;
        let flags = r.u8()?;
        let delta = f32::from_bits(r.u32()?) as f64;
        let beta = f32::from_bits(r.u32()?) as f64;
        let context_rho = f32::from_bits(r.u32()?) as f64;
        let crc = r.u32()?;
        let payload = &bytes[r.pos..];
        let actual = crc32fast::hash(payload);
        if actual != crc {
            return Err(CodecError::CrcMismatch { stored: crc, computed: actual });
        }
        if flags & !(FLAG_COLOR | FLAG_CONTEXT) != 0 {
            return Err(CodecError::Format(format!("unknown flag bits {flags:#04x}")));
        }
        if channels != 1 && channels != 3 {
            return Err(CodecError::Format(format!("unsupported channel count {channels}")));
        }
        if width == 0 || height == 0 {
            return Err(CodecError::Format(format!("empty image {width}x{height}")));
        }
        let config = CodecConfig {
            delta,
            beta,
            color_transform: flags & FLAG_COLOR != 0,
            context_enabled: flags & FLAG_CONTEXT != 0,
            context_rho,
        };
        config.validate_for(channels as usize)?;
        let side_stream = r.stream()?;
        let coeff_streams = (0..channels).map(|_| r.stream()).collect::<Result<_, _>>()?;
        if r.pos != bytes.len() {
            return Err(CodecError::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Self { header: Header { width, height, channels, config }, side_stream, coeff_streams })
    }

    /// Size of the serialized container in bits.
    pub fn bit_len(&self) -> u64 {
        let streams: usize =
            self.coeff_streams.iter().map(|s| 4 + s.bytes.len()).sum::<usize>() + 4 + self.side_stream.bytes.len();
        ((FIXED_HEADER_LEN + streams) * 8) as u64
    }
}

fn push_stream(out: &mut Vec<u8>, s: &Bitstream) {
    out.extend_from_slice(&(s.bytes.len() as u32).to_be_bytes());
    out.extend_from_slice(&s.bytes);
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or(CodecError::Truncated)?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn stream(&mut self) -> Result<Bitstream, CodecError> {
        let n = self.u32()? as usize;
        Ok(Bitstream { bytes: self.take(n)?.to_vec() })
    }
}
