//! Scaling-law analysis: power-law fits with and without an irreducible
//! floor, compute-optimal (Pareto) frontiers, forecasts and training-compute
//! accounting.

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{pearson, MetricsError};

#[derive(Debug, Error)]
pub enum ScalingError {
    #[error("need at least {needed} points, got {found}")]
    TooFewPoints { found: usize, needed: usize },
    #[error("value must be positive and finite: {0}")]
    NonPositive(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("empty input")]
    Empty,
    #[error("curve '{0}' compute values are not strictly increasing")]
    NotIncreasing(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("reference data: {0}")]
    Reference(String),
}

/// A resource level (model size in billions of parameters, or compute in
/// PFLOPs) and the loss reached there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalePoint {
    pub x: f64,
    pub loss: f64,
}

impl ScalePoint {
    pub fn new(x: f64, loss: f64) -> Self {
        Self { x, loss }
    }
}

/// `L(x) = floor + gamma · x^(-alpha_exp)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub gamma: f64,
    pub alpha_exp: f64,
    pub floor: Option<f64>,
    /// Correlation of the log pairs the fit was computed on.
    pub pearson_r: f64,
    pub n_points: usize,
}

impl PowerLawFit {
    /// A law given by its constants rather than fitted.
    pub fn from_constants(gamma: f64, alpha_exp: f64) -> Self {
        Self { gamma, alpha_exp, floor: None, pearson_r: f64::NAN, n_points: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingCurve {
    pub model_id: String,
    pub n_params_billions: f64,
    /// `(compute_pflops, loss)` in increasing compute order.
    pub samples: Vec<(f64, f64)>,
}

impl TrainingCurve {
    pub fn validate(&self) -> Result<(), ScalingError> {
        if self.samples.is_empty() {
            return Err(ScalingError::Empty);
        }
        if self.samples.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(ScalingError::NotIncreasing(self.model_id.clone()));
        }
        for &(c, l) in &self.samples {
            if !(c > 0.0) || !(l > 0.0) || !c.is_finite() || !l.is_finite() {
                return Err(ScalingError::NonPositive(format!("{}: ({c}, {l})", self.model_id)));
            }
        }
        Ok(())
    }

    /// Lowest loss seen on the curve.
    pub fn best_loss(&self) -> f64 {
        self.samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min)
    }
}

/// One row of the model-configuration table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScaleRecord {
    pub name: String,
    /// Residual block counts `L1..L6`; 0 marks an absent stage.
    pub depths: [u32; 6],
    /// Channel widths `C1..C6`.
    pub channels: [u32; 6],
    /// Entropy block counts `N1..N3` of the first two stages; 0 marks a plain 1×1 conv.
    pub entropy_blocks_s12: [u32; 3],
    pub entropy_blocks_s3: [u32; 3],
    pub params_millions: f64,
}

fn check_points(points: &[ScalePoint], needed: usize) -> Result<(), ScalingError> {
    if points.len() < needed {
        return Err(ScalingError::TooFewPoints { found: points.len(), needed });
    }
    for p in points {
        if !(p.x > 0.0) || !(p.loss > 0.0) || !p.x.is_finite() || !p.loss.is_finite() {
            return Err(ScalingError::NonPositive(format!("({}, {})", p.x, p.loss)));
        }
    }
    if points.iter().all(|p| p.x == points[0].x) {
        return Err(ScalingError::Degenerate("all x values are equal".into()));
    }
    Ok(())
}

struct Ols {
    slope: f64,
    intercept: f64,
    /// Coefficient of determination; `None` if `y` is constant.
    r2: Option<f64>,
}

fn ols(xs: &[f64], ys: &[f64]) -> Ols {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let r2 = (syy > 0.0).then(|| sxy * sxy / (sxx * syy));
    Ols { slope, intercept: my - slope * mx, r2 }
}

fn law_from_logs(lx: &[f64], ly: &[f64], floor: Option<f64>) -> PowerLawFit {
    let fit = ols(lx, ly);
    let pearson_r = match pearson(lx, ly) {
        Ok(r) => r,
        Err(MetricsError::ZeroVariance) => 0.0,
        Err(_) => f64::NAN,
    };
    PowerLawFit { gamma: fit.intercept.exp(), alpha_exp: -fit.slope, floor, pearson_r, n_points: lx.len() }
}

/// Least squares on `(ln x, ln loss)`.
pub fn fit_power_law(points: &[ScalePoint]) -> Result<PowerLawFit, ScalingError> {
    check_points(points, 2)?;
    let lx: Vec<f64> = points.iter().map(|p| p.x.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.loss.ln()).collect();
    Ok(law_from_logs(&lx, &ly, None))
}

const FLOOR_GRID: usize = 512;
const FLOOR_REFINE: usize = 10;

/// Fits `L = L∞ + A·x^(-α)`: `L∞` is searched on a 512-point grid over
/// `[0, (1 - 1e-3)·min loss]`, keeping the value whose log-log fit of
/// `loss - L∞` has the highest R², then refined once at ten times the
/// resolution around the winner. Ties go to the smaller `L∞`.
pub fn fit_power_law_floor(points: &[ScalePoint]) -> Result<PowerLawFit, ScalingError> {
    check_points(points, 4)?;
    let min_loss = points.iter().map(|p| p.loss).fold(f64::INFINITY, f64::min);
    if points.iter().all(|p| p.loss == points[0].loss) {
        return Err(ScalingError::Degenerate("loss is constant".into()));
    }
    let lx: Vec<f64> = points.iter().map(|p| p.x.ln()).collect();
    let r2_at = |floor: f64| {
        let ly: Vec<f64> = points.iter().map(|p| (p.loss - floor).ln()).collect();
        ols(&lx, &ly).r2.unwrap_or(f64::NEG_INFINITY)
    };
    let argmax = |candidates: &mut dyn Iterator<Item = f64>| {
        let mut best = (f64::NAN, f64::NEG_INFINITY);
        for f in candidates {
            let r2 = r2_at(f);
            if r2 > best.1 {
                best = (f, r2);
            }
        }
        best.0
    };

    let top = (1.0 - 1e-3) * min_loss;
    let step = top / (FLOOR_GRID - 1) as f64;
    let coarse = argmax(&mut (0..FLOOR_GRID).map(|i| i as f64 * step));
    let fine_step = step / FLOOR_REFINE as f64;
    let lo = coarse - step;
    let floor = argmax(
        &mut (0..=2 * FLOOR_REFINE).map(|i| lo + i as f64 * fine_step).filter(|&f| (0.0..=top).contains(&f)),
    );
    if floor.is_nan() {
        return Err(ScalingError::Degenerate("no floor value gives a usable fit".into()));
    }
    let ly: Vec<f64> = points.iter().map(|p| (p.loss - floor).ln()).collect();
    Ok(law_from_logs(&lx, &ly, Some(floor)))
}

pub fn evaluate_fit(fit: &PowerLawFit, x: f64) -> Result<f64, ScalingError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(ScalingError::NonPositive(format!("x = {x}")));
    }
    Ok(fit.floor.unwrap_or(0.0) + fit.gamma * x.powf(-fit.alpha_exp))
}

/// Compute-optimal frontier: each curve's loss is replaced by its running
/// minimum, all points are merged in compute order (lower loss first on
/// ties), and every point that strictly lowers the best loss so far is kept.
pub fn pareto_frontier(curves: &[TrainingCurve]) -> Result<Vec<ScalePoint>, ScalingError> {
    if curves.is_empty() {
        return Err(ScalingError::Empty);
    }
    let mut merged = Vec::new();
    for c in curves {
        c.validate()?;
        let mut best = f64::INFINITY;
        for &(x, loss) in &c.samples {
            best = best.min(loss);
            merged.push(ScalePoint::new(x, best));
        }
    }
    merged.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.loss.total_cmp(&b.loss)));
    let mut best = f64::INFINITY;
    Ok(merged
        .into_iter()
        .filter(|p| {
            let keep = p.loss < best;
            best = best.min(p.loss);
            keep
        })
        .collect())
}

/// Training compute in PFLOPs: `steps·batch·pixels·kMACs·10³·2·backward / 10¹⁵`.
pub fn compute_pflops(
    macs_per_pixel_k: f64,
    pixels_per_sample: u64,
    batch: u64,
    steps: u64,
    backward_factor: f64,
) -> Result<f64, ScalingError> {
    for (name, v) in [
        ("macs_per_pixel_k", macs_per_pixel_k),
        ("pixels_per_sample", pixels_per_sample as f64),
        ("batch", batch as f64),
        ("backward_factor", backward_factor),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(ScalingError::NonPositive(format!("{name} = {v}")));
        }
    }
    Ok(steps as f64 * batch as f64 * pixels_per_sample as f64 * macs_per_pixel_k * 1e3 * 2.0 * backward_factor / 1e15)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub x: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastReport {
    /// Loss against model size (billions of parameters).
    pub size_law: PowerLawFit,
    /// Loss against compute-optimal training compute (PFLOPs), if curves were given.
    pub compute_law: Option<PowerLawFit>,
    pub size_forecasts: Vec<Forecast>,
    pub model_points: Vec<ScalePoint>,
    pub frontier: Vec<ScalePoint>,
}

impl ForecastReport {
    /// Report for laws known by their constants.
    pub fn from_laws(size_law: PowerLawFit, compute_law: Option<PowerLawFit>, targets: &[f64]) -> Result<Self, ScalingError> {
        let size_forecasts = targets
            .iter()
            .map(|&x| evaluate_fit(&size_law, x).map(|loss| Forecast { x, loss }))
            .collect::<Result<_, _>>()?;
        Ok(Self { size_law, compute_law, size_forecasts, model_points: Vec::new(), frontier: Vec::new() })
    }
}

/// Fits the size law on `model_points` and the compute law on the frontier
/// of `curves` (skipped when `curves` is empty), then evaluates the size law
/// at each target.
pub fn forecast_report(
    model_points: &[ScalePoint],
    curves: &[TrainingCurve],
    targets: &[f64],
    with_floor: bool,
) -> Result<ForecastReport, ScalingError> {
    let fit = |pts: &[ScalePoint]| if with_floor { fit_power_law_floor(pts) } else { fit_power_law(pts) };
    let size_law = fit(model_points)?;
    let frontier = if curves.is_empty() { Vec::new() } else { pareto_frontier(curves)? };
    let compute_law = if curves.is_empty() { None } else { Some(fit(&frontier)?) };
    let mut report = ForecastReport::from_laws(size_law, compute_law, targets)?;
    report.model_points = model_points.to_vec();
    report.frontier = frontier;
    Ok(report)
}

/// One point per curve: its size and best loss.
pub fn model_points(curves: &[TrainingCurve]) -> Vec<ScalePoint> {
    curves.iter().map(|c| ScalePoint::new(c.n_params_billions, c.best_loss())).collect()
}

#[derive(Debug, Deserialize)]
struct LogRow {
    model_id: String,
    n_params_billions: f64,
    compute_pflops: f64,
    loss: f64,
}

/// Reads a "model_id,n_params_billions,compute_pflops,loss" CSV. Curves keep
/// the order of their first appearance; samples are sorted by compute.
pub fn read_training_log(reader: impl Read) -> Result<Vec<TrainingCurve>, ScalingError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut curves: Vec<TrainingCurve> = Vec::new();
    for row in rdr.deserialize::<LogRow>() {
        let row = row?;
        match curves.iter_mut().find(|c| c.model_id == row.model_id) {
            Some(c) => {
                if c.n_params_billions != row.n_params_billions {
                    return Err(ScalingError::Degenerate(format!(
                        "model '{}' listed with two sizes",
                        row.model_id
                    )));
                }
                c.samples.push((row.compute_pflops, row.loss));
            }
            None => curves.push(TrainingCurve {
                model_id: row.model_id,
                n_params_billions: row.n_params_billions,
                samples: vec![(row.compute_pflops, row.loss)],
            }),
        }
    }
    if curves.is_empty() {
        return Err(ScalingError::Empty);
    }
    for c in &mut curves {
        c.samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        c.validate()?;
        if !(c.n_params_billions > 0.0) {
            return Err(ScalingError::NonPositive(format!("{} size {}", c.model_id, c.n_params_billions)));
        }
    }
    Ok(curves)
}

#[derive(Debug, Deserialize)]
struct PointRow {
    x: f64,
    loss: f64,
}

/// Reads an "x,loss" CSV.
pub fn read_points(reader: impl Read) -> Result<Vec<ScalePoint>, ScalingError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let pts = rdr
        .deserialize::<PointRow>()
        .map(|r| r.map(|p| ScalePoint::new(p.x, p.loss)))
        .collect::<Result<Vec<_>, _>>()?;
    if pts.is_empty() {
        return Err(ScalingError::Empty);
    }
    Ok(pts)
}

/// Published constants bundled with the crate.
#[derive(Debug, Clone, Deserialize)]
pub struct ReferenceData {
    pub source: String,
    pub model_size_law: ReferenceLaw,
    pub compute_law: ReferenceLaw,
    pub rd: ReferenceRd,
    pub models: Vec<ModelScaleRecord>,
    pub codecs: Vec<ReferenceCodec>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ReferenceLaw {
    pub gamma: f64,
    pub alpha_exp: f64,
    #[serde(default)]
    pub pearson_r: Option<f64>,
    pub unit: String,
    #[serde(default)]
    pub forecasts: Vec<Forecast>,
}

impl ReferenceLaw {
    pub fn law(&self) -> PowerLawFit {
        PowerLawFit { pearson_r: self.pearson_r.unwrap_or(f64::NAN), ..PowerLawFit::from_constants(self.gamma, self.alpha_exp) }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct ReferenceRd {
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ReferenceCodec {
    pub name: String,
    pub kmacs_per_pixel: f64,
    pub params_millions: f64,
    pub bd_rate: ReferenceBdRate,
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct ReferenceBdRate {
    pub kodak: f64,
    pub clic_pro_valid: f64,
    pub tecnick: f64,
}

const REFERENCE_TOML: &str = include_str!("../data/reference.toml");

pub fn reference_data() -> Result<ReferenceData, ScalingError> {
    toml::from_str(REFERENCE_TOML).map_err(|e| ScalingError::Reference(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn pts(xs: &[f64], mut f: impl FnMut(f64) -> f64) -> Vec<ScalePoint> {
        xs.iter().map(|&x| ScalePoint::new(x, f(x))).collect()
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let fit = fit_power_law(&pts(&[1.0, 2.0, 4.0, 8.0], |x| 2.0 * x.powf(-0.5))).unwrap();
        assert!((fit.gamma - 2.0).abs() < 1e-9);
        assert!((fit.alpha_exp - 0.5).abs() < 1e-9);
        assert!((fit.pearson_r + 1.0).abs() < 1e-12);
        assert_eq!(fit.floor, None);
        assert_eq!(fit.n_points, 4);
    }

    #[test]
    fn two_points_interpolate() {
        let p = [ScalePoint::new(0.3, 0.9), ScalePoint::new(7.0, 0.4)];
        let fit = fit_power_law(&p).unwrap();
        for q in &p {
            assert!((evaluate_fit(&fit, q.x).unwrap() - q.loss).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_closed_form_ols_in_base_ten() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let p = pts(&[0.07, 0.12, 0.25, 0.54, 1.0], |x| 0.72 * x.powf(-0.015) * (1.0 + rng.gen_range(-0.01..0.01)));
        let fit = fit_power_law(&p).unwrap();
        // Oracle: slope = (nΣxy − ΣxΣy) / (nΣx² − (Σx)²) on base-10 logs.
        let n = p.len() as f64;
        let lx: Vec<f64> = p.iter().map(|q| q.x.log10()).collect();
        let ly: Vec<f64> = p.iter().map(|q| q.loss.log10()).collect();
        let (sx, sy) = (lx.iter().sum::<f64>(), ly.iter().sum::<f64>());
        let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| a * b).sum();
        let sxx: f64 = lx.iter().map(|a| a * a).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let intercept = (sy - slope * sx) / n;
        assert!((fit.alpha_exp + slope).abs() < 1e-12);
        assert!((fit.gamma - 10f64.powf(intercept)).abs() < 1e-12);
    }

    #[test]
    fn scale_covariance() {
        let p = [ScalePoint::new(1.0, 0.9), ScalePoint::new(2.0, 0.8), ScalePoint::new(5.0, 0.77), ScalePoint::new(9.0, 0.7)];
        let base = fit_power_law(&p).unwrap();
        let k = 37.0;
        let scaled: Vec<ScalePoint> = p.iter().map(|q| ScalePoint::new(q.x * k, q.loss)).collect();
        let fit = fit_power_law(&scaled).unwrap();
        assert!((fit.alpha_exp - base.alpha_exp).abs() < 1e-9);
        assert!((fit.gamma - base.gamma * k.powf(base.alpha_exp)).abs() < 1e-9);
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(fit_power_law(&[ScalePoint::new(1.0, 1.0)]), Err(ScalingError::TooFewPoints { .. })));
        assert!(matches!(
            fit_power_law(&[ScalePoint::new(1.0, 1.0), ScalePoint::new(-1.0, 1.0)]),
            Err(ScalingError::NonPositive(_))
        ));
        assert!(matches!(
            fit_power_law(&[ScalePoint::new(2.0, 1.0), ScalePoint::new(2.0, 0.5)]),
            Err(ScalingError::Degenerate(_))
        ));
        let flat = pts(&[1.0, 2.0, 3.0, 4.0], |_| 0.5);
        assert!(matches!(fit_power_law_floor(&flat), Err(ScalingError::Degenerate(_))));
        assert!(matches!(fit_power_law_floor(&flat[..3]), Err(ScalingError::TooFewPoints { .. })));
        assert!(evaluate_fit(&PowerLawFit::from_constants(1.0, 0.1), 0.0).is_err());
    }

    #[test]
    fn floor_fit_recovers_synthetic_law() {
        let xs: Vec<f64> = (0..8).map(|i| 64f64.powf(i as f64 / 7.0)).collect();
        let fit = fit_power_law_floor(&pts(&xs, |x| 0.5 + x.powf(-0.3))).unwrap();
        let floor = fit.floor.unwrap();
        assert!((0.49..=0.51).contains(&floor), "floor {floor}");
        assert!((0.29..=0.31).contains(&fit.alpha_exp), "alpha {}", fit.alpha_exp);
    }

    #[test]
    fn zero_floor_reduces_to_plain_fit() {
        let xs = [1.0, 2.0, 4.0, 8.0, 16.0];
        let p = pts(&xs, |x| 2.0 * x.powf(-0.5));
        let plain = fit_power_law(&p).unwrap();
        let floored = fit_power_law_floor(&p).unwrap();
        assert_eq!(floored.floor, Some(0.0));
        assert!((floored.gamma - plain.gamma).abs() < 1e-9);
        assert!((floored.alpha_exp - plain.alpha_exp).abs() < 1e-9);
    }

    #[test]
    fn published_forecasts() {
        let law = PowerLawFit::from_constants(0.7172, 0.0147);
        assert!((evaluate_fit(&law, 2.0).unwrap() - 0.7099).abs() < 5e-4);
        assert!((evaluate_fit(&law, 10.0).unwrap() - 0.6933).abs() < 5e-4);
        let c = PowerLawFit::from_constants(0.8354, 0.0172);
        assert_eq!(evaluate_fit(&c, 1.0).unwrap(), 0.8354);
        let ys: Vec<f64> = (1..50).map(|x| evaluate_fit(&law, x as f64).unwrap()).collect();
        assert!(ys.windows(2).all(|w| w[1] < w[0]));
    }

    fn curve(id: &str, s: &[(f64, f64)]) -> TrainingCurve {
        TrainingCurve { model_id: id.into(), n_params_billions: 1.0, samples: s.to_vec() }
    }

    #[test]
    fn frontier_of_two_curves() {
        let a = curve("a", &[(1.0, 0.9), (2.0, 0.7), (4.0, 0.6)]);
        let b = curve("b", &[(1.5, 0.95), (3.0, 0.65), (6.0, 0.5)]);
        let f = pareto_frontier(&[a.clone(), b]).unwrap();
        let got: Vec<(f64, f64)> = f.iter().map(|p| (p.x, p.loss)).collect();
        assert_eq!(got, vec![(1.0, 0.9), (2.0, 0.7), (3.0, 0.65), (4.0, 0.6), (6.0, 0.5)]);
        let single = pareto_frontier(&[a.clone()]).unwrap();
        assert_eq!(single.iter().map(|p| (p.x, p.loss)).collect::<Vec<_>>(), a.samples);
        assert!(matches!(pareto_frontier(&[]), Err(ScalingError::Empty)));
        assert!(matches!(
            pareto_frontier(&[curve("bad", &[(2.0, 0.5), (1.0, 0.4)])]),
            Err(ScalingError::NotIncreasing(_))
        ));
    }

    #[test]
    fn noisy_curve_is_smoothed() {
        let a = curve("a", &[(1.0, 0.9), (2.0, 0.95), (3.0, 0.8)]);
        let f = pareto_frontier(&[a]).unwrap();
        assert_eq!(f.iter().map(|p| (p.x, p.loss)).collect::<Vec<_>>(), vec![(1.0, 0.9), (3.0, 0.8)]);
    }

    #[test]
    fn compute_accounting() {
        let c = compute_pflops(9625.24, 65536, 32, 1, 3.0).unwrap();
        assert!((c - 0.121_114).abs() < 1e-4);
        assert_eq!(compute_pflops(9625.24, 65536, 32, 0, 1.0).unwrap(), 0.0);
        assert_eq!(compute_pflops(10.0, 64, 8, 14, 3.0).unwrap(), 2.0 * compute_pflops(10.0, 64, 8, 7, 3.0).unwrap());
        assert!(compute_pflops(0.0, 64, 8, 1, 3.0).is_err());
        assert!(compute_pflops(1.0, 0, 8, 1, 3.0).is_err());
    }

    #[test]
    fn report_composes_individual_ops() {
        let curves: Vec<TrainingCurve> = [0.07, 0.12, 0.25, 0.54, 1.0]
            .iter()
            .enumerate()
            .map(|(i, &n)| TrainingCurve {
                model_id: format!("m{i}"),
                n_params_billions: n,
                samples: (1..=6).map(|k| (k as f64 * (1.0 + n), 0.9 * (k as f64 * (1.0 + n)).powf(-0.02) * (1.0 - 0.01 * n))).collect(),
            })
            .collect();
        let mp = model_points(&curves);
        let report = forecast_report(&mp, &curves, &[2.0, 10.0], false).unwrap();
        assert_eq!(report.size_law, fit_power_law(&mp).unwrap());
        let frontier = pareto_frontier(&curves).unwrap();
        assert_eq!(report.frontier, frontier);
        assert_eq!(report.compute_law, Some(fit_power_law(&frontier).unwrap()));
        assert_eq!(report.size_forecasts[1].loss, evaluate_fit(&report.size_law, 10.0).unwrap());
        let bare = forecast_report(&mp, &[], &[], false).unwrap();
        assert!(bare.size_forecasts.is_empty() && bare.compute_law.is_none());
    }

    #[test]
    fn training_log_parsing() {
        let text = "model_id,n_params_billions,compute_pflops,loss\nb,0.5,2,0.8\na,0.1,1,0.9\nb,0.5,1,0.85\n";
        let curves = read_training_log(text.as_bytes()).unwrap();
        assert_eq!(curves.len(), 2);
        assert_eq!(curves[0].model_id, "b");
        assert_eq!(curves[0].samples, vec![(1.0, 0.85), (2.0, 0.8)]);
        let dup = "model_id,n_params_billions,compute_pflops,loss\na,1,1,0.9\na,1,1,0.8\n";
        assert!(matches!(read_training_log(dup.as_bytes()), Err(ScalingError::NotIncreasing(_))));
        assert!(read_training_log("model_id,n_params_billions,compute_pflops,loss\n".as_bytes()).is_err());
        assert!(read_training_log("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn reference_data_parses() {
        let r = reference_data().unwrap();
        assert_eq!(r.models.len(), 5);
        let params: Vec<f64> = r.models.iter().map(|m| m.params_millions).collect();
        assert_eq!(params, vec![68.50, 120.08, 246.43, 543.57, 1002.00]);
        let big = r.codecs.iter().find(|c| c.name == "HPCM-1B").unwrap();
        assert_eq!(big.kmacs_per_pixel, 9625.24);
        assert_eq!(big.bd_rate.kodak, -24.21);
        assert_eq!(r.rd.lambdas, crate::codec::LAMBDAS.to_vec());
        for f in &r.model_size_law.forecasts {
            assert!((evaluate_fit(&r.model_size_law.law(), f.x).unwrap() - f.loss).abs() < 5e-4);
        }
    }
}
