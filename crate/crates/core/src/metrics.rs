//! Bjøntegaard deltas between RD curves, and Pearson correlation.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::RdPoint;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("curve '{label}' has {found} points, at least {needed} required")]
    TooFewPoints { label: String, found: usize, needed: usize },
    #[error("curve '{0}' is not strictly increasing in both rate and PSNR")]
    NonMonotone(String),
    #[error("curve '{0}' contains non-finite or non-positive values")]
    BadValue(String),
    #[error("curves do not overlap on the integration axis ({lo:.6} >= {hi:.6})")]
    NoOverlap { lo: f64, hi: f64 },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("zero variance input")]
    ZeroVariance,
    #[error("expected CSV header 'bpp,psnr', found '{0}'")]
    BadHeader(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Rate-distortion curve, sorted by bpp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdCurve {
    pub label: String,
    pub points: Vec<RdPoint>,
}

impl RdCurve {
    pub fn new(label: impl Into<String>, mut points: Vec<RdPoint>) -> Self {
        points.sort_by(|a, b| a.bpp.total_cmp(&b.bpp));
        Self { label: label.into(), points }
    }

    /// Checks the BD-metric preconditions: at least `min_points`, finite
    /// positive rates, both coordinates strictly increasing.
    pub fn validate(&self, min_points: usize) -> Result<(), MetricsError> {
        if self.points.len() < min_points {
            return Err(MetricsError::TooFewPoints {
                label: self.label.clone(),
                found: self.points.len(),
                needed: min_points,
            });
        }
        if self.points.iter().any(|p| !(p.bpp > 0.0) || !p.bpp.is_finite() || !p.psnr.is_finite()) {
            return Err(MetricsError::BadValue(self.label.clone()));
        }
        if self.points.windows(2).any(|w| !(w[0].bpp < w[1].bpp) || !(w[0].psnr < w[1].psnr)) {
            return Err(MetricsError::NonMonotone(self.label.clone()));
        }
        Ok(())
    }

    fn log_rates(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.bpp.log10()).collect()
    }

    fn psnrs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.psnr).collect()
    }
}

/// How each curve is interpolated before integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BdMethod {
    /// Least-squares cubic polynomial (the classic method).
    #[default]
    Cubic,
    /// Piecewise cubic Hermite with Fritsch–Carlson slopes.
    Pchip,
}

const BD_MIN_POINTS: usize = 4;

/// Average rate difference of `test` against `anchor` at equal PSNR, in percent.
/// Negative means `test` needs fewer bits.
pub fn bd_rate(anchor: &RdCurve, test: &RdCurve) -> Result<f64, MetricsError> {
    bd_rate_with(anchor, test, BdMethod::Cubic)
}

pub fn bd_rate_with(anchor: &RdCurve, test: &RdCurve, method: BdMethod) -> Result<f64, MetricsError> {
    let delta = bd_log_rate_delta(anchor, test, method)?;
    Ok((10f64.powf(delta) - 1.0) * 100.0)
}

/// Mean difference of `log10(bpp)` (test minus anchor) over the shared PSNR range.
pub fn bd_log_rate_delta(anchor: &RdCurve, test: &RdCurve, method: BdMethod) -> Result<f64, MetricsError> {
    anchor.validate(BD_MIN_POINTS)?;
    test.validate(BD_MIN_POINTS)?;
    mean_gap(&anchor.psnrs(), &anchor.log_rates(), &test.psnrs(), &test.log_rates(), method)
}

/// Average PSNR difference of `test` against `anchor` at equal rate, in dB.
pub fn bd_psnr(anchor: &RdCurve, test: &RdCurve) -> Result<f64, MetricsError> {
    bd_psnr_with(anchor, test, BdMethod::Cubic)
}

pub fn bd_psnr_with(anchor: &RdCurve, test: &RdCurve, method: BdMethod) -> Result<f64, MetricsError> {
    anchor.validate(BD_MIN_POINTS)?;
    test.validate(BD_MIN_POINTS)?;
    mean_gap(&anchor.log_rates(), &anchor.psnrs(), &test.log_rates(), &test.psnrs(), method)
}

/// Mean of `g_test(x) - g_anchor(x)` over the overlap of the two x ranges.
fn mean_gap(xa: &[f64], ya: &[f64], xt: &[f64], yt: &[f64], method: BdMethod) -> Result<f64, MetricsError> {
    let lo = xa[0].max(xt[0]);
    let hi = xa[xa.len() - 1].min(xt[xt.len() - 1]);
    if !(lo < hi) {
        return Err(MetricsError::NoOverlap { lo, hi });
    }
    let integral = |x: &[f64], y: &[f64]| match method {
        BdMethod::Cubic => cubic_integral(x, y, lo, hi),
        BdMethod::Pchip => pchip_integral(x, y, lo, hi),
    };
    Ok((integral(xt, yt) - integral(xa, ya)) / (hi - lo))
}

/// Integral over `[lo, hi]` of the least-squares cubic through `(x, y)`.
fn cubic_integral(x: &[f64], y: &[f64], lo: f64, hi: f64) -> f64 {
    // Fit on t = (x - c) / s so the normal equations stay well conditioned.
    let c = 0.5 * (lo + hi);
    let s = x.iter().map(|v| (v - c).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut ata = [[0.0; 4]; 4];
    let mut aty = [0.0; 4];
    for (&xi, &yi) in x.iter().zip(y) {
        let t = (xi - c) / s;
        let pow = [1.0, t, t * t, t * t * t];
        for i in 0..4 {
            aty[i] += pow[i] * yi;
            for j in 0..4 {
                ata[i][j] += pow[i] * pow[j];
            }
        }
    }
    let coef = solve4(ata, aty);
    let antideriv = |t: f64| coef[0] * t + coef[1] * t * t / 2.0 + coef[2] * t.powi(3) / 3.0 + coef[3] * t.powi(4) / 4.0;
    (antideriv((hi - c) / s) - antideriv((lo - c) / s)) * s
}

/// Gaussian elimination with partial pivoting.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> [f64; 4] {
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap_or(col);
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let s: f64 = (row + 1..4).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Fritsch–Carlson derivative estimates (same end conditions as SciPy's PCHIP).
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut m = vec![0.0; n];
    for k in 1..n - 1 {
        if d[k - 1] * d[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            m[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let v = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if v.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && v.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            v
        }
    };
    if n == 2 {
        m[0] = d[0];
        m[1] = d[0];
    } else {
        m[0] = end(h[0], h[1], d[0], d[1]);
        m[n - 1] = end(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    }
    m
}

fn pchip_integral(x: &[f64], y: &[f64], lo: f64, hi: f64) -> f64 {
    let m = pchip_slopes(x, y);
    let mut total = 0.0;
    for k in 0..x.len() - 1 {
        let (a, b) = (x[k].max(lo), x[k + 1].min(hi));
        if a >= b {
            continue;
        }
        let h = x[k + 1] - x[k];
        let delta = (y[k + 1] - y[k]) / h;
        let c2 = (3.0 * delta - 2.0 * m[k] - m[k + 1]) / h;
        let c3 = (m[k] + m[k + 1] - 2.0 * delta) / (h * h);
        let f = |s: f64| y[k] * s + m[k] * s * s / 2.0 + c2 * s.powi(3) / 3.0 + c3 * s.powi(4) / 4.0;
        total += f(b - x[k]) - f(a - x[k]);
    }
    total
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, MetricsError> {
    if xs.len() != ys.len() {
        return Err(MetricsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(MetricsError::TooFewPoints { label: "pearson".into(), found: xs.len(), needed: 2 });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    bpp: f64,
    psnr: f64,
}

/// Reads a "bpp,psnr" CSV into a curve sorted by bpp.
pub fn read_rd_csv(reader: impl Read, label: impl Into<String>) -> Result<RdCurve, MetricsError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if headers != ["bpp", "psnr"] {
        return Err(MetricsError::BadHeader(headers.join(",")));
    }
    let points = rdr
        .deserialize::<CsvRow>()
        .map(|r| r.map(|row| RdPoint::from_rate_psnr(row.bpp, row.psnr)))
        .collect::<Result<_, _>>()?;
    Ok(RdCurve::new(label, points))
}

/// Writes a curve as "bpp,psnr" with six decimals.
pub fn write_rd_csv(curve: &RdCurve, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "bpp,psnr")?;
    for p in &curve.points {
        writeln!(out, "{:.6},{:.6}", p.bpp, p.psnr)?;
    }
    Ok(())
}
