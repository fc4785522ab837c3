use rdlab_core::codec::{
    decode_bytes, decode_symbols, encode_image, encode_image_detailed, rd_sweep, CodecConfig, EncodedImage, RdPoint,
};
use rdlab_core::synthetic;

#[test]
fn entropy_layer_is_lossless_on_corpus() {
    for img in synthetic::corpus(6, 72, 40) {
        for cfg in [
            CodecConfig::with_delta(0.25),
            CodecConfig { color_transform: true, ..CodecConfig::with_delta(3.0) },
            CodecConfig { context_enabled: true, context_rho: 0.8, ..CodecConfig::with_delta(1.5) },
        ] {
            let cfg = cfg.for_channels(img.channels());
            let report = encode_image_detailed(&img, &cfg).unwrap();
            let parsed = EncodedImage::from_bytes(&report.encoded.to_bytes()).unwrap();
            assert_eq!(decode_symbols(&parsed).unwrap(), report.symbols);
        }
    }
}

#[test]
fn odd_sizes_roundtrip() {
    for (w, h) in [(1, 9), (9, 1), (7, 13), (17, 8), (8, 8)] {
        for img in synthetic::corpus(2, w, h) {
            let report = encode_image_detailed(&img, &CodecConfig::with_delta(1.0)).unwrap();
            let out = decode_bytes(&report.encoded.to_bytes()).unwrap();
            assert_eq!(out, report.reconstruction, "{w}x{h}");
            assert_eq!((out.width(), out.height()), (w, h));
        }
    }
}

#[test]
fn context_refinement_changes_rate_not_distortion() {
    let img = &synthetic::corpus(2, 128, 128)[1];
    let base = encode_image(img, &CodecConfig::with_delta(1.0)).unwrap().1;
    let ctx = encode_image(img, &CodecConfig { context_enabled: true, context_rho: 0.5, ..CodecConfig::with_delta(1.0) })
        .unwrap()
        .1;
    assert!(ctx.bpp < base.bpp * 1.05, "{ctx:?} vs {base:?}");
    assert_eq!(ctx.mse, base.mse);
}

#[test]
fn sweep_averages_like_an_oracle() {
    // A 24-image set, as in the usual test protocol, at desk scale.
    let images = synthetic::corpus(24, 48, 32);
    let deltas = [1.0, 3.0, 9.0];
    let cfg = CodecConfig::default();
    let curve = rd_sweep(&images, &deltas, &cfg).unwrap();
    let mut oracle: Vec<RdPoint> = deltas
        .iter()
        .map(|&d| {
            let pts: Vec<RdPoint> =
                images.iter().map(|img| encode_image(img, &CodecConfig::with_delta(d)).unwrap().1).collect();
            let bpp = pts.iter().map(|p| p.bpp).sum::<f64>() / 24.0;
            let mse = pts.iter().map(|p| p.mse).sum::<f64>() / 24.0;
            RdPoint { bpp, psnr: 10.0 * (255.0f64 * 255.0 / mse).log10(), mse }
        })
        .collect();
    oracle.sort_by(|a, b| a.bpp.total_cmp(&b.bpp));
    for (got, want) in curve.points.iter().zip(&oracle) {
        assert!((got.bpp - want.bpp).abs() < 1e-12);
        assert!((got.mse - want.mse).abs() < 1e-12);
        assert!((got.psnr - want.psnr).abs() < 1e-12);
    }
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let images = synthetic::corpus(5, 40, 24);
    let deltas = [0.5, 2.0, 8.0];
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| rd_sweep(&images, &deltas, &CodecConfig::default()).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}
