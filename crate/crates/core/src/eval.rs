//! The syndrome-based decode pipeline and Monte Carlo BER/FER estimation.

use std::fmt::Write as _;

use crate::baselines::{hard_decode, DecodeResult, Decoder};
use crate::channel::{bpsk_map, hard_decision, random_message, transmit_additive, write_estimator_input, SnrPoint};
use crate::codes::LinearCode;
use crate::error::{dim_err, Error, Result};
use crate::estimator::{forward_batch, soft_to_flips, EstimatorParams, Scalar};
use crate::gf2::BitVector;
use crate::rng;

/// `û = A·bin(y) ⊕ ŵ`, with `ŵ` the estimator's flip prediction.
pub fn sbnd_decode<S: Scalar>(code: &LinearCode, params: &EstimatorParams<S>, y: &[f64]) -> Result<DecodeResult> {
    check_dims(code, params)?;
    let noisy = hard_decode(code, y)?.u_hat;
    let mut input = Vec::with_capacity(2 * code.n() - code.k());
    write_estimator_input(y, code.parity_check(), &mut input)?;
    let input: Vec<S> = input.into_iter().map(S::from_f64).collect();
    let (soft, _) = forward_batch(params, &input, 1)?;
    Ok(DecodeResult {
        u_hat: noisy.xor(&soft_to_flips(&soft))?,
        metric: 0.0,
    })
}

fn check_dims<S: Scalar>(code: &LinearCode, params: &EstimatorParams<S>) -> Result<()> {
    let c = params.config();
    if c.n != code.n() || c.k != code.k() {
        return dim_err(format!(
            "estimator built for ({}, {}) but code is ({}, {})",
            c.n,
            c.k,
            code.n(),
            code.k()
        ));
    }
    Ok(())
}

/// The estimator-corrected decoder, batching frames through one forward pass.
#[derive(Clone, Debug)]
pub struct SbndDecoder {
    code: LinearCode,
    params: EstimatorParams<f32>,
}

impl SbndDecoder {
    pub fn new(code: &LinearCode, params: EstimatorParams<f32>) -> Result<Self> {
        check_dims(code, &params)?;
        Ok(SbndDecoder {
            code: code.clone(),
            params,
        })
    }

    pub fn params(&self) -> &EstimatorParams<f32> {
        &self.params
    }
}

impl Decoder for SbndDecoder {
    fn name(&self) -> String {
        "sbnd".into()
    }
    fn k(&self) -> usize {
        self.code.k()
    }
    fn n(&self) -> usize {
        self.code.n()
    }

    fn decode(&self, y: &[f64], _sigma: f64) -> Result<DecodeResult> {
        sbnd_decode(&self.code, &self.params, y)
    }

    fn decode_batch(&self, ys: &[f64], _sigma: f64) -> Result<Vec<BitVector>> {
        let (n, k) = (self.code.n(), self.code.k());
        if !ys.len().is_multiple_of(n) {
            return dim_err(format!("batch of {} values is not a multiple of n = {n}", ys.len()));
        }
        let count = ys.len() / n;
        let mut inputs = Vec::with_capacity(count * (2 * n - k));
        for y in ys.chunks_exact(n) {
            write_estimator_input(y, self.code.parity_check(), &mut inputs)?;
        }
        let inputs: Vec<f32> = inputs.into_iter().map(|v| v as f32).collect();
        let (soft, _) = forward_batch(&self.params, &inputs, count)?;
        ys.chunks_exact(n)
            .zip(soft.chunks_exact(k))
            .map(|(y, s)| self.code.pseudo_inverse(&hard_decision(y))?.xor(&soft_to_flips(s)))
            .collect()
    }
}

/// When a Monte Carlo point stops.
///
/// A point ends at the first batch boundary where both `target_frame_errors`
/// and `min_frames` are reached, or when `max_frames` frames have been sent.
/// Batches are cut at `min_frames` and `max_frames`, so those counts are hit exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StopRule {
    pub target_frame_errors: u64,
    pub min_frames: u64,
    pub max_frames: u64,
    pub batch_size: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            target_frame_errors: 300,
            min_frames: 10_000,
            max_frames: 10_000_000,
            batch_size: 256,
        }
    }
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_frames == 0 {
            return Err(Error::Config("batch size and frame cap must be positive".into()));
        }
        if self.min_frames > self.max_frames {
            return Err(Error::Config(format!(
                "minimum of {} frames exceeds the cap of {}",
                self.min_frames, self.max_frames
            )));
        }
        Ok(())
    }

    /// Frame range `[start, end)` of chunk `index`.
    fn chunk(&self, index: u64) -> (u64, u64) {
        // Regular batches, with an extra cut at min_frames; the cap truncates.
        let cut = self.min_frames.min(self.max_frames);
        let before = cut.div_ceil(self.batch_size);
        let (start, end) = if index < before {
            (index * self.batch_size, ((index + 1) * self.batch_size).min(cut))
        } else {
            let j = index - before;
            (cut + j * self.batch_size, cut + (j + 1) * self.batch_size)
        };
        (start.min(self.max_frames), end.min(self.max_frames))
    }

    pub fn is_done(&self, frames: u64, frame_errors: u64) -> bool {
        frames >= self.max_frames || (frame_errors >= self.target_frame_errors && frames >= self.min_frames)
    }
}

/// Error counts of one decoder at one operating point.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRow {
    pub ebn0_db: f64,
    pub frames: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub k: usize,
    pub decoder: String,
    pub code: String,
    pub seed: u64,
}

impl EvalRow {
    pub fn ber(&self) -> f64 {
        if self.frames == 0 {
            return 0.0;
        }
        self.bit_errors as f64 / (self.frames as f64 * self.k as f64)
    }

    pub fn fer(&self) -> f64 {
        if self.frames == 0 {
            return 0.0;
        }
        self.frame_errors as f64 / self.frames as f64
    }
}

pub const CSV_HEADER: &str = "ebn0_db,frames,bit_errors,frame_errors,ber,fer,decoder,code,seed";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{:e},{:e},{},{},{}",
                r.ebn0_db,
                r.frames,
                r.bit_errors,
                r.frame_errors,
                r.ber(),
                r.fer(),
                csv_field(&r.decoder),
                csv_field(&r.code),
                r.seed
            );
        }
        s
    }

    /// Parses CSV written by [`to_csv`](Self::to_csv). Message length is
    /// recovered from the stored BER when bit errors are present.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("expected header `{CSV_HEADER}`"),
                })
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            let bad = |msg: String| Error::Parse { line: i + 1, msg };
            let f = split_csv(line);
            if f.len() != 9 {
                return Err(bad(format!("expected 9 fields, found {}", f.len())));
            }
            let num = |j: usize| f[j].trim().parse::<f64>().map_err(|e| bad(format!("field {}: {e}", j + 1)));
            let int = |j: usize| f[j].trim().parse::<u64>().map_err(|e| bad(format!("field {}: {e}", j + 1)));
            let (frames, bit_errors, ber) = (int(1)?, int(2)?, num(4)?);
            let k = if bit_errors > 0 && ber > 0.0 {
                (bit_errors as f64 / (ber * frames as f64)).round() as usize
            } else {
                1
            };
            rows.push(EvalRow {
                ebn0_db: num(0)?,
                frames,
                bit_errors,
                frame_errors: int(3)?,
                k,
                decoder: f[6].clone(),
                code: f[7].clone(),
                seed: int(8)?,
            });
        }
        Ok(EvalReport { rows })
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn split_csv(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            '"' => quoted = !quoted,
            ',' if !quoted => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Counts {
    frames: u64,
    bit_errors: u64,
    frame_errors: u64,
}

/// Transmits `count` random messages over the additive channel.
/// Returns the messages and the received words back to back.
fn simulate_frames(
    code: &LinearCode,
    sigma: f64,
    count: usize,
    stream: &mut rng::SimRng,
) -> Result<(Vec<BitVector>, Vec<f64>)> {
    let mut msgs = Vec::with_capacity(count);
    let mut ys = Vec::with_capacity(count * code.n());
    for _ in 0..count {
        let u = random_message(code.k(), stream);
        let x = bpsk_map(&code.encode(&u)?);
        ys.extend(transmit_additive(&x, sigma, stream)?);
        msgs.push(u);
    }
    Ok((msgs, ys))
}

fn count_errors(msgs: &[BitVector], decoded: &[BitVector]) -> Result<Counts> {
    if msgs.len() != decoded.len() {
        return dim_err(format!("{} frames decoded into {} messages", msgs.len(), decoded.len()));
    }
    let mut c = Counts {
        frames: msgs.len() as u64,
        ..Counts::default()
    };
    for (u, u_hat) in msgs.iter().zip(decoded) {
        let e = u.xor(u_hat)?.count_ones() as u64;
        c.bit_errors += e;
        c.frame_errors += u64::from(e > 0);
    }
    Ok(c)
}

fn run_chunk(
    code: &LinearCode,
    decoder: &dyn Decoder,
    snr: &SnrPoint,
    seed: u64,
    snr_index: u64,
    index: u64,
    (start, end): (u64, u64),
) -> Result<Counts> {
    let mut stream = rng::stream(seed, &[snr_index, index]);
    let (msgs, ys) = simulate_frames(code, snr.sigma, (end - start) as usize, &mut stream)?;
    let decoded = decoder.decode_batch(&ys, snr.sigma)?;
    count_errors(&msgs, &decoded)
}

#[cfg(feature = "parallel")]
fn run_round(
    code: &LinearCode,
    decoder: &dyn Decoder,
    snr: &SnrPoint,
    seed: u64,
    snr_index: u64,
    chunks: &[(u64, (u64, u64))],
) -> Vec<Result<Counts>> {
    use rayon::prelude::*;
    chunks
        .par_iter()
        .map(|&(i, range)| run_chunk(code, decoder, snr, seed, snr_index, i, range))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn run_round(
    code: &LinearCode,
    decoder: &dyn Decoder,
    snr: &SnrPoint,
    seed: u64,
    snr_index: u64,
    chunks: &[(u64, (u64, u64))],
) -> Vec<Result<Counts>> {
    chunks
        .iter()
        .map(|&(i, range)| run_chunk(code, decoder, snr, seed, snr_index, i, range))
        .collect()
}

fn round_width() -> usize {
    #[cfg(feature = "parallel")]
    {
        2 * rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Simulates one operating point until `stop` is satisfied.
///
/// Chunk `i` of point `snr_index` draws from its own stream keyed by
/// `(seed, snr_index, i)`, and chunks are merged in index order, so the
/// result does not depend on the number of worker threads. Decoders sharing
/// a seed and index see the same frames.
pub fn monte_carlo(
    code: &LinearCode,
    decoder: &dyn Decoder,
    snr: &SnrPoint,
    stop: &StopRule,
    seed: u64,
    snr_index: u64,
) -> Result<EvalRow> {
    stop.validate()?;
    if decoder.n() != code.n() || decoder.k() != code.k() {
        return dim_err(format!(
            "decoder for ({}, {}) used on ({}, {})",
            decoder.n(),
            decoder.k(),
            code.n(),
            code.k()
        ));
    }
    let mut total = Counts::default();
    let mut next = 0u64;
    let width = round_width();
    'outer: loop {
        let chunks: Vec<(u64, (u64, u64))> = (next..next + width as u64).map(|i| (i, stop.chunk(i))).collect();
        next += width as u64;
        for res in run_round(code, decoder, snr, seed, snr_index, &chunks) {
            let c = res?;
            total.frames += c.frames;
            total.bit_errors += c.bit_errors;
            total.frame_errors += c.frame_errors;
            if stop.is_done(total.frames, total.frame_errors) {
                break 'outer;
            }
        }
    }
    Ok(EvalRow {
        ebn0_db: snr.ebn0_db,
        frames: total.frames,
        bit_errors: total.bit_errors,
        frame_errors: total.frame_errors,
        k: code.k(),
        decoder: decoder.name(),
        code: code.name().to_string(),
        seed,
    })
}

/// One [`monte_carlo`] row per `Eb/N0` value, in the given order.
pub fn sweep(code: &LinearCode, decoder: &dyn Decoder, ebn0_db: &[f64], stop: &StopRule, seed: u64) -> Result<EvalReport> {
    if ebn0_db.is_empty() {
        return Err(Error::Config("no Eb/N0 values to simulate".into()));
    }
    let rows = ebn0_db
        .iter()
        .enumerate()
        .map(|(i, &e)| monte_carlo(code, decoder, &SnrPoint::new(e, code.rate())?, stop, seed, i as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport { rows })
}

/// Runs several decoders on exactly the same `frames` frames.
pub fn compare_on_stream(
    code: &LinearCode,
    decoders: &[&dyn Decoder],
    snr: &SnrPoint,
    frames: u64,
    seed: u64,
) -> Result<Vec<EvalRow>> {
    let stop = StopRule {
        target_frame_errors: 0,
        min_frames: frames,
        max_frames: frames,
        ..StopRule::default()
    };
    decoders.iter().map(|d| monte_carlo(code, *d, snr, &stop, seed, 0)).collect()
}
