//! Multi-symbol range coder driven by [`CdfTable`]s.
//!
//! Stream format: the encoder keeps a 33-bit `low` and a 32-bit `range`.
//! Each symbol narrows the interval to
//! `low += (range >> bits) * start; range = (range >> bits) * freq`, and
//! whenever `range < 2^24` the top byte of `low` is shifted out. Bytes are
//! emitted most-significant first; a carry out of bit 32 is propagated into
//! the last held byte and any run of pending `0xFF` bytes. Finishing flushes
//! the four bytes of `low`, so an empty message is exactly four zero bytes
//! and the decoder primes itself by reading four bytes big-endian.

use thiserror::Error;

use crate::ggm::CdfTable;

const TOP: u32 = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoderError {
    #[error("symbol {symbol} at position {index} is outside table range [{min}, {max}]")]
    SymbolOutOfRange { index: usize, symbol: i64, min: i64, max: i64 },
    #[error("{symbols} symbols but {tables} tables")]
    LengthMismatch { symbols: usize, tables: usize },
    #[error("{tables} tables supplied for {requested} symbols")]
    NotEnoughTables { tables: usize, requested: usize },
    #[error("stream truncated after {0} bytes")]
    Truncated(usize),
}

/// Encoded bytes produced by [`rc_encode`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bitstream {
    pub bytes: Vec<u8>,
}

impl Bitstream {
    pub fn bit_len(&self) -> u64 {
        self.bytes.len() as u64 * 8
    }
}

impl From<Vec<u8>> for Bitstream {
    fn from(bytes: Vec<u8>) -> Self {
        Self { bytes }
    }
}

/// Incremental encoder.
#[derive(Debug, Clone)]
pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: Option<u8>,
    pending_ff: u64,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        Self { low: 0, range: u32::MAX, cache: None, pending_ff: 0, out: Vec::new() }
    }

    /// Codes `symbol` under `table`.
    pub fn encode(&mut self, symbol: i64, table: &CdfTable) -> Result<(), CoderError> {
        let (start, freq) = table.interval(symbol).ok_or(CoderError::SymbolOutOfRange {
            index: 0,
            symbol,
            min: table.min_symbol(),
            max: table.max_symbol(),
        })?;
        self.encode_interval(start, freq, table.total_bits());
        Ok(())
    }

    #[inline]
    pub fn encode_interval(&mut self, start: u32, freq: u32, total_bits: u32) {
        let r = self.range >> total_bits;
        self.low += u64::from(r) * u64::from(start);
        self.range = r * freq;
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    fn shift_low(&mut self) {
        if self.low < 0xFF00_0000 || self.low > 0xFFFF_FFFF {
            let carry = (self.low >> 32) as u8;
            if let Some(c) = self.cache {
                self.out.push(c.wrapping_add(carry));
            }
            for _ in 0..self.pending_ff {
                self.out.push(0xFFu8.wrapping_add(carry));
            }
            self.pending_ff = 0;
            self.cache = Some((self.low >> 24) as u8);
        } else {
            self.pending_ff += 1;
        }
        self.low = (self.low << 8) & 0xFFFF_FFFF;
    }

    pub fn finish(mut self) -> Bitstream {
        for _ in 0..5 {
            self.shift_low();
        }
        Bitstream { bytes: self.out }
    }
}

/// Incremental decoder over a byte slice.
#[derive(Debug, Clone)]
pub struct RangeDecoder<'a> {
    code: u32,
    range: u32,
    input: &'a [u8],
    pos: usize,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(input: &'a [u8]) -> Result<Self, CoderError> {
        let mut dec = Self { code: 0, range: u32::MAX, input, pos: 0 };
        for _ in 0..4 {
            dec.code = (dec.code << 8) | u32::from(dec.next_byte()?);
        }
        Ok(dec)
    }

    fn next_byte(&mut self) -> Result<u8, CoderError> {
        let b = *self.input.get(self.pos).ok_or(CoderError::Truncated(self.input.len()))?;
        self.pos += 1;
        Ok(b)
    }

    /// Decodes one symbol under `table`.
    ///
    /// A stream that was not produced with the same tables decodes to
    /// arbitrary in-range symbols; only running out of bytes is detected.
    pub fn decode(&mut self, table: &CdfTable) -> Result<i64, CoderError> {
        let r = self.range >> table.total_bits();
        let target = (self.code / r).min(table.total() - 1);
        let (symbol, start, freq) = table.lookup(target);
        self.code -= r * start;
        self.range = r * freq;
        while self.range < TOP {
            self.code = (self.code << 8) | u32::from(self.next_byte()?);
            self.range <<= 8;
        }
        Ok(symbol)
    }

    /// Bytes consumed so far.
    pub fn position(&self) -> usize {
        self.pos
    }
}

/// Encodes `symbols[i]` under `tables[i]`.
pub fn rc_encode(symbols: &[i64], tables: &[&CdfTable]) -> Result<Bitstream, CoderError> {
    if symbols.len() != tables.len() {
        return Err(CoderError::LengthMismatch { symbols: symbols.len(), tables: tables.len() });
    }
    let mut enc = RangeEncoder::new();
    for (index, (&s, t)) in symbols.iter().zip(tables).enumerate() {
        enc.encode(s, t).map_err(|e| match e {
            CoderError::SymbolOutOfRange { symbol, min, max, .. } => {
                CoderError::SymbolOutOfRange { index, symbol, min, max }
            }
            other => other,
        })?;
    }
    Ok(enc.finish())
}

/// Decodes `n` symbols, the `i`-th under `tables[i]`.
pub fn rc_decode(stream: &Bitstream, tables: &[&CdfTable], n: usize) -> Result<Vec<i64>, CoderError> {
    if tables.len() < n {
        return Err(CoderError::NotEnoughTables { tables: tables.len(), requested: n });
    }
    let mut dec = RangeDecoder::new(&stream.bytes)?;
    tables[..n].iter().map(|t| dec.decode(t)).collect()
}
