//! WebAssembly bindings for the demo page in `www/`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

use ncc::channel::SimDist;
use ncc::codecs::{compress_bytes, CompressOptions, LOSSLESS};
use ncc::models::Categorical;
use ncc::quant::{conditional_entropy_binned, dither_mutual_information_gaussian, dithered_quantize, dithered_reconstruct, DitherStream};
use ncc::rd::{ba_curve, BaOptions, DistortionMatrix};
use ncc::stats::{ks_critical, ks_statistic};

fn js_err(e: ncc::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Rate-distortion curve of a Bernoulli(p) source under Hamming distortion,
/// flattened as `[d0, r0, d1, r1, ...]` over `points` slopes.
#[wasm_bindgen]
pub fn bernoulli_rd_curve(p: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    let src = Categorical::new(vec![1.0 - p, p]).map_err(js_err)?;
    let lambdas: Vec<f64> = (0..points).map(|i| 0.05 + 12.0 * i as f64 / points.max(2) as f64).collect();
    let curve = ba_curve(&src, &DistortionMatrix::hamming(2), &lambdas, BaOptions::default()).map_err(js_err)?;
    Ok(curve.iter().flat_map(|r| [r.distortion, r.rate]).collect())
}

/// Dithered quantization of `n` draws from N(0, sigma²).
/// Returns `[H(k|u) bits, I(y; y+u) bits, KS statistic, KS critical value at 0.001]`.
#[wasm_bindgen]
pub fn dither_demo(sigma: f64, n: usize, seed: u64) -> Result<Vec<f64>, JsValue> {
    let source = SimDist::gaussian(0.0, sigma).map_err(js_err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y: Vec<f64> = (0..n).map(|_| source.sample(&mut rng)).collect();
    let u = DitherStream::new(seed ^ 0x5eed).take(n);
    let k = dithered_quantize(&y, &u).map_err(js_err)?;
    let recon = dithered_reconstruct(&k, &u).map_err(js_err)?;
    let noisy: Vec<f64> = y.iter().map(|v| v + rng.gen_range(-0.5..0.5)).collect();
    Ok(vec![
        conditional_entropy_binned(&k, &u, 64),
        dither_mutual_information_gaussian(sigma).map_err(js_err)?,
        ks_statistic(&recon, &noisy),
        ks_critical(n, n, 0.001),
    ])
}

/// Comma-separated names of the lossless codecs, in the order `coder_rates` reports.
#[wasm_bindgen]
pub fn codec_names() -> String {
    LOSSLESS.iter().map(|c| c.name()).collect::<Vec<_>>().join(",")
}

/// Container size of `text` under each lossless codec, bits per input byte.
#[wasm_bindgen]
pub fn coder_rates(text: &str) -> Result<Vec<f64>, JsValue> {
    let data = text.as_bytes();
    let n = data.len().max(1) as f64;
    LOSSLESS
        .iter()
        .map(|&codec| {
            let c = compress_bytes(codec, data, &CompressOptions::default()).map_err(js_err)?;
            Ok(8.0 * c.to_bytes().len() as f64 / n)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fair_coin_curve_matches_closed_form() {
        let h2 = |d: f64| -d * d.log2() - (1.0 - d) * (1.0 - d).log2();
        let flat = bernoulli_rd_curve(0.5, 20).unwrap();
        assert_eq!(flat.len(), 40);
        for pair in flat.chunks(2) {
            let (d, r) = (pair[0], pair[1]);
            if d > 1e-6 && d < 0.5 - 1e-6 {
                assert!((r - (1.0 - h2(d))).abs() < 1e-3, "{d} {r}");
            }
        }
    }

    #[test]
    fn dither_reconstruction_looks_like_additive_noise() {
        let out = dither_demo(3.0, 20_000, 1).unwrap();
        assert!((out[0] - out[1]).abs() / out[1] < 0.05, "{out:?}");
        assert!(out[2] < out[3]);
    }

    #[test]
    fn rates_cover_every_codec() {
        let text = "the quick brown fox jumps over the lazy dog ".repeat(50);
        let rates = coder_rates(&text).unwrap();
        let names = codec_names();
        let names: Vec<&str> = names.split(',').collect();
        assert_eq!(rates.len(), names.len());
        assert!(rates.iter().all(|&r| r > 0.0), "{rates:?}");
        // bits-back carries its posterior tables, so only the adaptive coders must beat raw bytes here
        for (name, r) in names.iter().zip(&rates) {
            if name.starts_with("context") {
                assert!(*r < 8.0, "{name} {r}");
            }
        }
    }
}
