use rayon::prelude::*;

use super::{encode_image, CodecConfig, CodecError, ImageBuffer, RdPoint};
use crate::metrics::RdCurve;

/// Encodes every image at every step in `deltas` (other settings from `cfg`)
/// and averages per step: mean bpp, and PSNR of the mean MSE. The colour
/// transform, if requested, applies to the RGB images only.
///
/// Pairs run on the current rayon pool; results are gathered in input order
/// and reduced sequentially, so the curve does not depend on scheduling.
pub fn rd_sweep(images: &[ImageBuffer], deltas: &[f64], cfg: &CodecConfig) -> Result<RdCurve, CodecError> {
    if images.is_empty() {
        return Err(CodecError::Input("rd sweep needs at least one image".into()));
    }
    if deltas.len() < 2 {
        return Err(CodecError::Input(format!("rd sweep needs at least two deltas, got {}", deltas.len())));
    }
    let jobs: Vec<(usize, usize)> = (0..deltas.len()).flat_map(|d| (0..images.len()).map(move |i| (d, i))).collect();
    let results: Vec<RdPoint> = jobs
        .par_iter()
        .map(|&(d, i)| {
            let c = CodecConfig { delta: deltas[d], ..cfg.for_channels(images[i].channels()) };
            encode_image(&images[i], &c).map(|(_, p)| p)
        })
        .collect::<Result<_, _>>()?;

    let n = images.len() as f64;
    let mut points: Vec<RdPoint> = results
        .chunks(images.len())
        .map(|per_image| {
            let bpp = per_image.iter().map(|p| p.bpp).sum::<f64>() / n;
            let mse = per_image.iter().map(|p| p.mse).sum::<f64>() / n;
            RdPoint::from_rate_mse(bpp, mse)
        })
        .collect();
    points.sort_by(|a, b| a.bpp.total_cmp(&b.bpp));
    Ok(RdCurve { label: String::new(), points })
}
