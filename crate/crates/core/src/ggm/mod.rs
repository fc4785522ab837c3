//! Generalized Gaussian entropy model.
//!
//! A latent `y` is modeled as `N_β(μ, α)` with density proportional to
//! `exp(-(|y - μ| / α)^β)`. Integer symbols get the probability mass of the
//! unit bin around them, `c(k - μ + 0.5) - c(k - μ - 0.5)`, where `c` is the
//! CDF. This module evaluates that CDF, turns it into floored discrete PMFs,
//! quantizes those into fixed-point tables for the range coder and measures
//! the ideal code length of a symbol sequence.

mod special;

pub use special::{log_gamma, reg_lower_incomplete_gamma};

use thiserror::Error;

/// Probability floor applied to every integer bin.
pub const P_MIN: f64 = 1.0 / 65536.0;
/// Smallest scale the moment estimator will return.
pub const ALPHA_MIN: f64 = 0.01;
pub const DEFAULT_BETA: f64 = 1.5;
/// Fixed-point precision of coder tables.
pub const TABLE_BITS: u32 = 16;

/// Beyond this value of `(|x - μ| / α)^β` the tail mass is below 1e-26 and
/// the CDF is taken as exactly 0 or 1 when building discrete PMFs.
const TAIL_CUTOFF: f64 = 60.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GgmError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid generalized Gaussian parameters: mu={mu}, alpha={alpha}, beta={beta}")]
    InvalidParams { mu: f64, alpha: f64, beta: f64 },
    #[error("length mismatch: {params} parameter sets for {symbols} symbols")]
    LengthMismatch { params: usize, symbols: usize },
    #[error("symbol range [{min}, {max}] does not fit a {bits}-bit table")]
    RangeTooWide { min: i64, max: i64, bits: u32 },
    #[error("empty symbol range [{min}, {max}]")]
    EmptyRange { min: i64, max: i64 },
    #[error("table precision must be in 8..=16 bits, got {0}")]
    BadPrecision(u32),
    #[error("moment fit needs at least one sample")]
    NoSamples,
}

/// Location, scale and shape of a generalized Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgmParams {
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl GgmParams {
    pub fn new(mu: f64, alpha: f64, beta: f64) -> Result<Self, GgmError> {
        let p = Self { mu, alpha, beta };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with the default shape `β = 1.5`.
    pub fn with_default_shape(mu: f64, alpha: f64) -> Result<Self, GgmError> {
        Self::new(mu, alpha, DEFAULT_BETA)
    }

    pub fn validate(&self) -> Result<(), GgmError> {
        let ok = self.mu.is_finite()
            && self.alpha.is_finite()
            && self.alpha > 0.0
            && self.beta.is_finite()
            && self.beta > 0.0;
        if ok {
            Ok(())
        } else {
            Err(GgmError::InvalidParams { mu: self.mu, alpha: self.alpha, beta: self.beta })
        }
    }

    /// `(|x - μ| / α)^β`, the argument handed to the incomplete gamma.
    fn radial(&self, x: f64) -> f64 {
        ((x - self.mu).abs() / self.alpha).powf(self.beta)
    }
}

/// CDF of the generalized Gaussian:
/// `1/2 + sign(x - μ)/2 · P(1/β, (|x - μ|/α)^β)`.
pub fn ggm_cdf(params: &GgmParams, x: f64) -> f64 {
    0.5 + centered_cdf(params, x)
}

/// `c(x) - 1/2`, kept separate so bin masses avoid cancellation against 1/2.
fn centered_cdf(params: &GgmParams, x: f64) -> f64 {
    let d = x - params.mu;
    if d == 0.0 {
        return 0.0;
    }
    let half = 0.5 * special::p_unchecked(1.0 / params.beta, params.radial(x));
    if d > 0.0 { half } else { -half }
}

/// Probability of integer symbol `k`, floored at [`P_MIN`] (not renormalized).
pub fn ggm_pmf_integer(params: &GgmParams, k: i64) -> f64 {
    let k = k as f64;
    let hi = centered_cdf(params, k + 0.5);
    let lo = centered_cdf(params, k - 0.5);
    (hi - lo).max(P_MIN)
}

/// Ideal code length in bits, `Σ -log2 q(ŷ_i)`, using the floored PMF of
/// [`ggm_pmf_integer`].
pub fn rate_bits(params_seq: &[GgmParams], symbols: &[i64]) -> Result<f64, GgmError> {
    if params_seq.len() != symbols.len() {
        return Err(GgmError::LengthMismatch { params: params_seq.len(), symbols: symbols.len() });
    }
    let mut bits = 0.0;
    for (p, &s) in params_seq.iter().zip(symbols) {
        p.validate()?;
        bits -= ggm_pmf_integer(p, s).log2();
    }
    Ok(bits)
}

/// How the moment estimator chooses the location parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location {
    Fixed(f64),
    SampleMean,
}

/// Moment-matching scale estimate: `E|X - μ| = α · Γ(2/β) / Γ(1/β)`.
///
/// The returned `α` is clamped to [`ALPHA_MIN`] so that all-zero subbands
/// still produce a valid model.
pub fn ggm_fit_moment(samples: &[f64], beta: f64, location: Location) -> Result<GgmParams, GgmError> {
    if samples.is_empty() {
        return Err(GgmError::NoSamples);
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(GgmError::InvalidParams { mu: f64::NAN, alpha: f64::NAN, beta });
    }
    let n = samples.len() as f64;
    let mu = match location {
        Location::Fixed(m) => m,
        Location::SampleMean => samples.iter().sum::<f64>() / n,
    };
    let mean_abs = samples.iter().map(|x| (x - mu).abs()).sum::<f64>() / n;
    let ratio =
        (special::ln_gamma_unchecked(1.0 / beta) - special::ln_gamma_unchecked(2.0 / beta)).exp();
    let alpha = (mean_abs * ratio).max(ALPHA_MIN);
    GgmParams::new(mu, alpha, beta)
}

/// PMF over a contiguous symbol range `[min_symbol, min_symbol + len)`.
///
/// Tail mass outside the range is folded into the two boundary bins, then
/// every bin is floored at [`P_MIN`] and the rest renormalized so the
/// entries sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePmf {
    min_symbol: i64,
    probs: Vec<f64>,
}

impl DiscretePmf {
    pub fn new(params: &GgmParams, min_symbol: i64, max_symbol: i64) -> Result<Self, GgmError> {
        params.validate()?;
        if min_symbol > max_symbol {
            return Err(GgmError::EmptyRange { min: min_symbol, max: max_symbol });
        }
        let n = (max_symbol - min_symbol + 1) as u64;
        if n > (1u64 << TABLE_BITS) {
            return Err(GgmError::RangeTooWide { min: min_symbol, max: max_symbol, bits: TABLE_BITS });
        }
        let edge_cdf = |x: f64| -> f64 {
            if params.radial(x) > TAIL_CUTOFF {
                if x > params.mu { 0.5 } else { -0.5 }
            } else {
                centered_cdf(params, x)
            }
        };
        let mut probs = Vec::with_capacity(n as usize);
        let mut lo = -0.5;
        for k in min_symbol..=max_symbol {
            let hi = if k == max_symbol { 0.5 } else { edge_cdf(k as f64 + 0.5) };
            probs.push((hi - lo).max(0.0));
            lo = hi;
        }
        Ok(Self { min_symbol, probs: apply_floor(probs) })
    }

    pub fn min_symbol(&self) -> i64 {
        self.min_symbol
    }

    pub fn max_symbol(&self) -> i64 {
        self.min_symbol + self.probs.len() as i64 - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of `symbol`, or `None` outside the range.
    pub fn prob(&self, symbol: i64) -> Option<f64> {
        let idx = symbol.checked_sub(self.min_symbol)?;
        usize::try_from(idx).ok().and_then(|i| self.probs.get(i).copied())
    }

    /// `-log2 q(symbol)`; infinite outside the range.
    pub fn bits(&self, symbol: i64) -> f64 {
        self.prob(symbol).map_or(f64::INFINITY, |p| -p.log2())
    }
}

/// Raise every entry to `P_MIN` and rescale the others so the total stays 1.
fn apply_floor(mut probs: Vec<f64>) -> Vec<f64> {
    let mut floored = vec![false; probs.len()];
    loop {
        let n_floor = floored.iter().filter(|&&f| f).count();
        let free: f64 = probs.iter().zip(&floored).filter(|(_, &f)| !f).map(|(p, _)| p).sum();
        let budget = 1.0 - n_floor as f64 * P_MIN;
        if free <= 0.0 {
            // Everything floored: the range holds exactly 1/P_MIN symbols.
            let share = 1.0 / probs.len() as f64;
            probs.iter_mut().for_each(|p| *p = share);
            return probs;
        }
        let scale = budget / free;
        let mut changed = false;
        for (p, f) in probs.iter().zip(floored.iter_mut()) {
            if !*f && p * scale < P_MIN {
                *f = true;
                changed = true;
            }
        }
        if !changed {
            for (p, f) in probs.iter_mut().zip(&floored) {
                *p = if *f { P_MIN } else { *p * scale };
            }
            return probs;
        }
    }
}

/// Fixed-point cumulative frequency table for the range coder.
///
/// Symbol `min_symbol + i` owns the interval `[cum[i], cum[i + 1])` out of
/// `total = 2^total_bits`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CdfTable {
    total_bits: u32,
    min_symbol: i64,
    cum_freqs: Vec<u32>,
}

impl CdfTable {
    /// Quantizes a PMF; every symbol keeps a frequency of at least one and
    /// rounding slack is absorbed by the largest bins.
    pub fn from_pmf(pmf: &DiscretePmf, total_bits: u32) -> Result<Self, GgmError> {
        check_bits(total_bits)?;
        let total = 1i64 << total_bits;
        let n = pmf.probs.len();
        if n as i64 > total {
            return Err(GgmError::RangeTooWide {
                min: pmf.min_symbol,
                max: pmf.max_symbol(),
                bits: total_bits,
            });
        }
        let mut freqs: Vec<i64> =
            pmf.probs.iter().map(|p| ((p * total as f64).round() as i64).max(1)).collect();
        let mut diff = total - freqs.iter().sum::<i64>();
        if diff != 0 {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| freqs[b].cmp(&freqs[a]));
            if diff > 0 {
                freqs[order[0]] += diff;
                diff = 0;
            }
            while diff < 0 {
                for &i in &order {
                    if diff == 0 {
                        break;
                    }
                    if freqs[i] > 1 {
                        freqs[i] -= 1;
                        diff += 1;
                    }
                }
            }
        }
        let mut cum_freqs = Vec::with_capacity(n + 1);
        let mut acc = 0u32;
        cum_freqs.push(0);
        for f in freqs {
            acc += f as u32;
            cum_freqs.push(acc);
        }
        debug_assert_eq!(acc as i64, total);
        Ok(Self { total_bits, min_symbol: pmf.min_symbol, cum_freqs })
    }

    /// Near-uniform table over `count` symbols starting at `min_symbol`.
    pub fn uniform(min_symbol: i64, count: u32, total_bits: u32) -> Result<Self, GgmError> {
        check_bits(total_bits)?;
        let total = 1u32 << total_bits;
        if count == 0 {
            return Err(GgmError::EmptyRange { min: min_symbol, max: min_symbol - 1 });
        }
        if count > total {
            return Err(GgmError::RangeTooWide {
                min: min_symbol,
                max: min_symbol + count as i64 - 1,
                bits: total_bits,
            });
        }
        let base = total / count;
        let extra = total % count;
        let mut cum_freqs = Vec::with_capacity(count as usize + 1);
        let mut acc = 0;
        cum_freqs.push(0);
        for i in 0..count {
            acc += base + u32::from(i < extra);
            cum_freqs.push(acc);
        }
        Ok(Self { total_bits, min_symbol, cum_freqs })
    }

    /// Builds a table from raw frequencies (each ≥ 1, summing to `2^total_bits`).
    pub fn from_frequencies(min_symbol: i64, freqs: &[u32], total_bits: u32) -> Result<Self, GgmError> {
        check_bits(total_bits)?;
        if freqs.is_empty() {
            return Err(GgmError::EmptyRange { min: min_symbol, max: min_symbol - 1 });
        }
        let mut cum_freqs = Vec::with_capacity(freqs.len() + 1);
        let mut acc = 0u64;
        cum_freqs.push(0);
        for &f in freqs {
            if f == 0 {
                return Err(GgmError::Domain("zero frequency in table".into()));
            }
            acc += u64::from(f);
            cum_freqs.push(acc.min(u64::from(u32::MAX)) as u32);
        }
        if acc != 1u64 << total_bits {
            return Err(GgmError::Domain(format!(
                "frequencies sum to {acc}, expected {}",
                1u64 << total_bits
            )));
        }
        Ok(Self { total_bits, min_symbol, cum_freqs })
    }

    pub fn total_bits(&self) -> u32 {
        self.total_bits
    }

    pub fn total(&self) -> u32 {
        1 << self.total_bits
    }

    pub fn min_symbol(&self) -> i64 {
        self.min_symbol
    }

    pub fn max_symbol(&self) -> i64 {
        self.min_symbol + self.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.cum_freqs.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cum_freqs(&self) -> &[u32] {
        &self.cum_freqs
    }

    /// `(start, freq)` of `symbol`, or `None` if it is out of range.
    #[inline]
    pub fn interval(&self, symbol: i64) -> Option<(u32, u32)> {
        let idx = usize::try_from(symbol.checked_sub(self.min_symbol)?).ok()?;
        if idx >= self.len() {
            return None;
        }
        let lo = self.cum_freqs[idx];
        Some((lo, self.cum_freqs[idx + 1] - lo))
    }

    /// Symbol whose interval contains `target`, with its `(start, freq)`.
    #[inline]
    pub fn lookup(&self, target: u32) -> (i64, u32, u32) {
        // First index whose cumulative frequency exceeds target, minus one.
        let idx = self.cum_freqs.partition_point(|&c| c <= target) - 1;
        let idx = idx.min(self.len() - 1);
        let lo = self.cum_freqs[idx];
        (self.min_symbol + idx as i64, lo, self.cum_freqs[idx + 1] - lo)
    }

    /// `-log2(freq / total)` for `symbol`; infinite when out of range.
    pub fn bits(&self, symbol: i64) -> f64 {
        self.interval(symbol)
            .map_or(f64::INFINITY, |(_, f)| self.total_bits as f64 - (f as f64).log2())
    }
}

fn check_bits(bits: u32) -> Result<(), GgmError> {
    if (8..=16).contains(&bits) {
        Ok(())
    } else {
        Err(GgmError::BadPrecision(bits))
    }
}

/// Floored GGM PMF over `[min_symbol, max_symbol]` quantized to a
/// `2^total_bits` table.
pub fn build_cdf_table(
    params: &GgmParams,
    min_symbol: i64,
    max_symbol: i64,
    total_bits: u32,
) -> Result<CdfTable, GgmError> {
    check_bits(total_bits)?;
    if min_symbol <= max_symbol && (max_symbol - min_symbol + 1) > (1i64 << total_bits) {
        return Err(GgmError::RangeTooWide { min: min_symbol, max: max_symbol, bits: total_bits });
    }
    let pmf = DiscretePmf::new(params, min_symbol, max_symbol)?;
    CdfTable::from_pmf(&pmf, total_bits)
}
