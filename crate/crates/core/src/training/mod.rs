//! On-the-fly training of the bit-flip estimator from a single message.
//!
//! Every batch encodes the all-ones message, sends it through the
//! multiplicative AWGN channel and asks the estimator to predict the flips
//! between the hard-decision message `A·bin(y)` and the truth.

mod checkpoint;

pub use checkpoint::{checkpoint_bytes, load_checkpoint, parse_checkpoint, save_checkpoint};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::channel::{apply_noise, hard_decision, write_estimator_input, SnrPoint};
use crate::codes::LinearCode;
use crate::error::{dim_err, Error, Result};
use crate::estimator::{backward, forward_batch, EstimatorConfig, EstimatorParams, Scalar};
use crate::gf2::BitVector;
use crate::rng;

/// Hyperparameters; defaults follow the reference training setup
/// (M=6, T=5, D=5, batch 4096, 3 dB, learning rate 1e-3).
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub train_ebn0_db: f64,
    pub learning_rate: f64,
    pub steps: usize,
    pub seed: u64,
    pub scale: usize,
    pub time_steps: usize,
    pub depth: usize,
    pub loss_epsilon: f64,
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 1 << 12,
            train_ebn0_db: 3.0,
            learning_rate: 1e-3,
            steps: 20_000,
            seed: 0,
            scale: 6,
            time_steps: 5,
            depth: 5,
            loss_epsilon: 1e-7,
            log_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(self.loss_epsilon > 0.0 && self.loss_epsilon < 0.5) {
            return Err(Error::Config("loss epsilon must lie in (0, 0.5)".into()));
        }
        if self.log_every == 0 {
            return Err(Error::Config("log interval must be at least 1".into()));
        }
        Ok(())
    }

    pub fn estimator_config(&self, code: &LinearCode) -> Result<EstimatorConfig> {
        EstimatorConfig::new(code.n(), code.k(), self.scale, self.time_steps, self.depth)
    }
}

/// A training batch, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub size: usize,
    pub input_dim: usize,
    pub k: usize,
    /// `size × (2n − k)` estimator inputs.
    pub inputs: Vec<f64>,
    /// `size × k` flip targets in sign form (`+1` no flip, `−1` flip).
    pub targets: Vec<f64>,
}

impl Batch {
    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.k..(i + 1) * self.k]
    }
}

/// Builds a batch from explicit messages and multiplicative noise vectors.
pub fn batch_from_noise(code: &LinearCode, messages: &[BitVector], noise: &[Vec<f64>]) -> Result<Batch> {
    if messages.len() != noise.len() {
        return dim_err(format!("{} messages with {} noise vectors", messages.len(), noise.len()));
    }
    let (n, k) = (code.n(), code.k());
    let input_dim = 2 * n - k;
    let mut inputs = Vec::with_capacity(messages.len() * input_dim);
    let mut targets = Vec::with_capacity(messages.len() * k);
    for (u, z) in messages.iter().zip(noise) {
        let y = apply_noise(&code.encode(u)?, z)?;
        write_estimator_input(&y, code.parity_check(), &mut inputs)?;
        let noisy = code.pseudo_inverse(&hard_decision(&y))?;
        let flips = noisy.xor(u)?;
        targets.extend(flips.iter().map(|f| if f { -1.0 } else { 1.0 }));
    }
    Ok(Batch {
        size: messages.len(),
        input_dim,
        k,
        inputs,
        targets,
    })
}

/// Draws `size` multiplicative noise vectors `z ~ N(1, σ²)^n`.
pub fn draw_noise<R: Rng + ?Sized>(n: usize, sigma: f64, size: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Config(format!("noise deviation {sigma} must be positive")));
    }
    let dist = Normal::new(1.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
    Ok((0..size).map(|_| (0..n).map(|_| dist.sample(rng)).collect()).collect())
}

/// A batch built from the all-ones message.
pub fn make_batch<R: Rng + ?Sized>(code: &LinearCode, snr: &SnrPoint, size: usize, rng: &mut R) -> Result<Batch> {
    let noise = draw_noise(code.n(), snr.sigma, size, rng)?;
    let ones = vec![BitVector::ones(code.k()); size];
    batch_from_noise(code, &ones, &noise)
}

/// Scaled binary cross-entropy of one sample.
///
/// Both vectors are mapped to `[0, 1]` via `a = (1 − w)/2`; the prediction is
/// clamped to `[eps, 1 − eps]` and the loss is `−Σ a·ln â + (1 − a)·ln(1 − â)`.
pub fn loss(target: &[f64], soft: &[f64], eps: f64) -> Result<f64> {
    if target.len() != soft.len() {
        return dim_err(format!("target length {} vs output length {}", target.len(), soft.len()));
    }
    Ok(target.iter().zip(soft).map(|(&w, &s)| bce_term(w, s, eps).0).sum())
}

/// `(loss, d loss / d soft)` for one coordinate.
#[inline]
fn bce_term(w: f64, s: f64, eps: f64) -> (f64, f64) {
    let a = (1.0 - w) / 2.0;
    let raw = (1.0 - s) / 2.0;
    let p = raw.clamp(eps, 1.0 - eps);
    let l = -(a * p.ln() + (1.0 - a) * (1.0 - p).ln());
    let g = if raw > eps && raw < 1.0 - eps {
        0.5 * (a / p - (1.0 - a) / (1.0 - p))
    } else {
        0.0
    };
    (l, g)
}

/// Mean per-sample loss of a batch and its gradient with respect to the soft outputs.
pub fn batch_loss<S: Scalar>(targets: &[f64], soft: &[S], size: usize, eps: f64) -> Result<(f64, Vec<S>)> {
    if targets.len() != soft.len() || size == 0 || !soft.len().is_multiple_of(size) {
        return dim_err(format!("{} targets, {} outputs, batch {size}", targets.len(), soft.len()));
    }
    let scale = 1.0 / size as f64;
    let mut total = 0.0;
    let grad = targets
        .iter()
        .zip(soft)
        .map(|(&w, &s)| {
            let (l, g) = bce_term(w, s.as_f64(), eps);
            total += l;
            S::from_f64(g * scale)
        })
        .collect();
    Ok((total * scale, grad))
}

/// Adam moments, one buffer per parameter block.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<S> {
    pub first_moment: Vec<Vec<S>>,
    pub second_moment: Vec<Vec<S>>,
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(params: &EstimatorParams<S>) -> Self {
        let zeros: Vec<Vec<S>> = params.blocks().iter().map(|b| vec![S::zero(); b.len()]).collect();
        AdamState {
            first_moment: zeros.clone(),
            second_moment: zeros,
            step_count: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step<S: Scalar>(
    params: &mut EstimatorParams<S>,
    grads: &EstimatorParams<S>,
    state: &mut AdamState<S>,
    lr: f64,
) -> Result<()> {
    if params.config() != grads.config() || state.first_moment.len() != params.blocks().len() {
        return dim_err("gradient or optimizer state does not match parameters");
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2) = (S::from_f64(state.beta1), S::from_f64(state.beta2));
    let (c1, c2) = (S::one() - b1, S::one() - b2);
    let step = S::from_f64(lr * (1.0 - state.beta2.powi(t)).sqrt() / (1.0 - state.beta1.powi(t)));
    let eps_hat = S::from_f64(state.epsilon * (1.0 - state.beta2.powi(t)).sqrt());
    let gblocks = grads.blocks();
    for (((p, g), m), v) in params
        .blocks_mut()
        .into_iter()
        .zip(gblocks)
        .zip(&mut state.first_moment)
        .zip(&mut state.second_moment)
    {
        if m.len() != p.len() {
            return dim_err("optimizer state block size mismatch");
        }
        for i in 0..p.len() {
            let gi = g[i];
            m[i] = b1 * m[i] + c1 * gi;
            v[i] = b2 * v[i] + c2 * gi * gi;
            // lr·m̂/(√v̂ + ε) rewritten with the bias corrections folded into step and ε.
            p[i] = p[i] - step * m[i] / (v[i].sqrt() + eps_hat);
        }
    }
    Ok(())
}

/// Progress report handed to the training observer.
#[derive(Clone, Copy, Debug)]
pub struct TrainProgress {
    pub step: usize,
    /// Mean batch loss over the logging window ending at `step`.
    pub loss: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<S> {
    pub params: EstimatorParams<S>,
    /// Batch loss of every step.
    pub losses: Vec<f64>,
    /// Windowed means reported at each logging interval.
    pub log: Vec<TrainProgress>,
}

/// Runs `cfg.steps` iterations of batch synthesis, forward, loss, backward
/// and Adam on `code`.
pub fn train<S: Scalar>(
    code: &LinearCode,
    cfg: &TrainConfig,
    mut observer: impl FnMut(&TrainProgress),
) -> Result<TrainOutcome<S>> {
    cfg.validate()?;
    let est_cfg = cfg.estimator_config(code)?;
    let mut params = EstimatorParams::<S>::init(est_cfg, &mut rng::stream(cfg.seed, &[0]));
    let mut state = AdamState::new(&params);
    let mut data_rng = rng::stream(cfg.seed, &[1]);
    let snr = SnrPoint::new(cfg.train_ebn0_db, code.rate())?;

    let mut losses = Vec::with_capacity(cfg.steps);
    let mut log = Vec::new();
    let mut window = 0.0;
    let mut window_len = 0usize;
    for step in 1..=cfg.steps {
        let batch = make_batch(code, &snr, cfg.batch_size, &mut data_rng)?;
        let inputs: Vec<S> = batch.inputs.iter().map(|&v| S::from_f64(v)).collect();
        let (out, tape) = forward_batch(&params, &inputs, batch.size)?;
        let (l, grad) = batch_loss(&batch.targets, &out, batch.size, cfg.loss_epsilon)?;
        if !l.is_finite() {
            return Err(Error::NonFiniteLoss { step, loss: l });
        }
        let grads = backward(&params, &tape, &grad)?;
        adam_step(&mut params, &grads, &mut state, cfg.learning_rate)?;
        if !params.is_finite() {
            return Err(Error::NonFiniteLoss { step, loss: f64::NAN });
        }
        losses.push(l);
        window += l;
        window_len += 1;
        if step % cfg.log_every == 0 || step == cfg.steps {
            let p = TrainProgress {
                step,
                loss: window / window_len as f64,
            };
            observer(&p);
            log.push(p);
            window = 0.0;
            window_len = 0;
        }
    }
    Ok(TrainOutcome { params, losses, log })
}

/// The training log as CSV with a `step,loss` header.
pub fn log_csv(log: &[TrainProgress]) -> String {
    let mut s = String::from("step,loss\n");
    for p in log {
        s.push_str(&format!("{},{}\n", p.step, p.loss));
    }
    s
}

#[cfg(test)]
mod tests;
