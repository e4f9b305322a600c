//! WebAssembly bindings for the demo page in `www/`.
//!
//! Every export takes plain numbers/strings and returns a JSON string, so the
//! page needs no bundler. The `*_json` functions hold the logic and are
//! usable (and tested) natively.

use serde_json::json;
use wasm_bindgen::prelude::*;

use sbnd_core::baselines::{Decoder, HardDecoder, MapDecoder, MapMode, OsdDecoder};
use sbnd_core::channel::{bpsk_map, hard_decision, random_message, transmit_additive, transmit_multiplicative, SnrPoint};
use sbnd_core::codes::{bhattacharyya_parameters, polar_build, FrozenPolicy, PolarSpec};
use sbnd_core::eval::{monte_carlo, EvalReport, StopRule};
use sbnd_core::plot::render_svg;
use sbnd_core::rng;

/// Keeps a single request from freezing the tab.
const MAX_FRAMES: u64 = 200_000;
const MAX_BITS: usize = 2_000_000;

pub fn polar_design_json(n: usize, k: usize, epsilon: f64) -> Result<String, String> {
    let code = polar_build(&PolarSpec::new(n, k).with_policy(FrozenPolicy::Bhattacharyya(epsilon)))
        .map_err(|e| e.to_string())?;
    let z = bhattacharyya_parameters(n, epsilon);
    let info = code.polar_rows().unwrap_or_default().to_vec();
    let frozen: Vec<usize> = (0..n).filter(|i| !info.contains(i)).collect();
    Ok(json!({
        "n": n,
        "k": k,
        "rate": code.rate(),
        "bhattacharyya": z,
        "info_rows": info,
        "frozen_rows": frozen,
    })
    .to_string())
}

fn q_function(x: f64) -> f64 {
    // Abramowitz–Stegun 7.1.26 complementary error function, |error| < 1.5e-7.
    let t = 1.0 / (1.0 + 0.3275911 * x.abs() / std::f64::consts::SQRT_2);
    let poly = t * (0.254829592 + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let erfc = poly * (-(x * x) / 2.0).exp();
    if x >= 0.0 {
        erfc / 2.0
    } else {
        1.0 - erfc / 2.0
    }
}

pub fn flip_rates_json(sigma: f64, bits: usize, seed: u64) -> Result<String, String> {
    if sigma.is_nan() || sigma <= 0.0 || bits == 0 || bits > MAX_BITS {
        return Err(format!("need sigma > 0 and 1 ≤ bits ≤ {MAX_BITS}"));
    }
    let mut r = rng::seeded(seed);
    let u = random_message(bits, &mut r);
    let x = bpsk_map(&u);
    let ya = transmit_additive(&x, sigma, &mut r).map_err(|e| e.to_string())?;
    let (ym, _) = transmit_multiplicative(&x, sigma, &mut r).map_err(|e| e.to_string())?;
    let rate = |y: &[f64]| hard_decision(y).xor(&u).map(|e| e.count_ones() as f64 / bits as f64);
    let q = q_function(1.0 / sigma);
    Ok(json!({
        "sigma": sigma,
        "bits": bits,
        "q": q,
        "std": (q * (1.0 - q) / bits as f64).sqrt(),
        "additive": rate(&ya).map_err(|e| e.to_string())?,
        "multiplicative": rate(&ym).map_err(|e| e.to_string())?,
    })
    .to_string())
}

pub fn baseline_sweep_json(
    n: usize,
    k: usize,
    decoders: &str,
    ebn0: &str,
    frames: u64,
    seed: u64,
) -> Result<String, String> {
    if frames == 0 || frames > MAX_FRAMES {
        return Err(format!("frames per point must lie in 1..={MAX_FRAMES}"));
    }
    let code = polar_build(&PolarSpec::new(n, k)).map_err(|e| e.to_string())?;
    let code = code.standardized().map_err(|e| e.to_string())?;
    let points: Vec<f64> = ebn0
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("invalid Eb/N0 value {s:?}")))
        .collect::<Result<_, _>>()?;
    let stop = StopRule {
        target_frame_errors: 0,
        min_frames: frames,
        max_frames: frames,
        ..StopRule::default()
    };
    let mut report = EvalReport::default();
    for name in decoders.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let dec: Box<dyn Decoder> = match name {
            "hard" => Box::new(HardDecoder::new(&code)),
            "map" => Box::new(MapDecoder::new(&code, MapMode::Block).map_err(|e| e.to_string())?),
            "map-bit" => Box::new(MapDecoder::new(&code, MapMode::Bitwise).map_err(|e| e.to_string())?),
            other => match other.strip_prefix("osd").and_then(|o| o.parse().ok()) {
                Some(order) => Box::new(OsdDecoder::new(&code, order)),
                None => return Err(format!("unknown decoder {other:?}")),
            },
        };
        for (i, &e) in points.iter().enumerate() {
            let snr = SnrPoint::new(e, code.rate()).map_err(|e| e.to_string())?;
            let row = monte_carlo(&code, dec.as_ref(), &snr, &stop, seed, i as u64).map_err(|e| e.to_string())?;
            report.rows.push(row);
        }
    }
    let csv = report.to_csv();
    let svg = render_svg(&EvalReport::from_csv(&csv).map_err(|e| e.to_string())?);
    Ok(json!({ "csv": csv, "svg": svg }).to_string())
}

/// Bhattacharyya frozen-set design of a polar code.
#[wasm_bindgen]
pub fn polar_design(n: usize, k: usize, epsilon: f64) -> Result<String, JsError> {
    polar_design_json(n, k, epsilon).map_err(|e| JsError::new(&e))
}

/// Empirical hard-decision flip rates of both channel models next to `Q(1/σ)`.
#[wasm_bindgen]
pub fn flip_rates(sigma: f64, bits: usize, seed: u64) -> Result<String, JsError> {
    flip_rates_json(sigma, bits, seed).map_err(|e| JsError::new(&e))
}

/// Fixed-length BER/FER sweep of classical decoders on a polar code; returns CSV and SVG.
#[wasm_bindgen]
pub fn baseline_sweep(n: usize, k: usize, decoders: &str, ebn0: &str, frames: u64, seed: u64) -> Result<String, JsError> {
    baseline_sweep_json(n, k, decoders, ebn0, frames, seed).map_err(|e| JsError::new(&e))
}
