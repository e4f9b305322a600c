//! Message bit-flip estimator: `D` stacked GRU cells unrolled over `T` time
//! steps, followed by a dense `tanh` layer with `k` outputs.
//!
//! The same input vector `(|y|, syndrome)` is presented at every time step.
//! Cell 1 consumes it, cell `i > 1` consumes the state of cell `i − 1` at the
//! same step, and the output is read from the top cell after the last step.
//! All hidden states start at zero.
//!
//! GRU convention (gate order update, reset, candidate):
//!
//! ```text
//! z  = σ(W_z x + U_z h + b_z)
//! r  = σ(W_r x + U_r h + b_r)
//! c  = tanh(W_c x + U_c (r ⊙ h) + b_c)
//! h' = (1 − z) ⊙ h + z ⊙ c
//! ```

mod linalg;

pub use linalg::Scalar;

use linalg::{gemm, View};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::channel::hard_decision;
use crate::error::{dim_err, Error, Result};
use crate::gf2::BitVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EstimatorConfig {
    pub n: usize,
    pub k: usize,
    /// Hidden width multiplier `M`: each cell has `M·(2n − k)` units.
    pub scale: usize,
    pub time_steps: usize,
    pub depth: usize,
}

impl EstimatorConfig {
    pub fn new(n: usize, k: usize, scale: usize, time_steps: usize, depth: usize) -> Result<Self> {
        let cfg = EstimatorConfig { n, k, scale, time_steps, depth };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.n {
            return Err(Error::Config(format!("invalid code dimensions n={} k={}", self.n, self.k)));
        }
        if self.scale == 0 || self.time_steps == 0 || self.depth == 0 {
            return Err(Error::Config("scale, time steps and depth must be at least 1".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        2 * self.n - self.k
    }

    pub fn hidden(&self) -> usize {
        self.scale * self.input_dim()
    }

    pub fn num_params(&self) -> usize {
        let h = self.hidden();
        let cell = |inp: usize| 3 * h * inp + 3 * h * h + 3 * h;
        cell(self.input_dim()) + (self.depth - 1) * cell(h) + self.k * h + self.k
    }
}

/// Weights of one GRU cell, row blocks ordered update, reset, candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct GruCellParams<S> {
    pub in_dim: usize,
    pub hidden: usize,
    /// `3·hidden × in_dim`, row-major.
    pub input_weights: Vec<S>,
    /// `3·hidden × hidden`, row-major.
    pub recurrent_weights: Vec<S>,
    /// `3·hidden`.
    pub bias: Vec<S>,
}

impl<S: Scalar> GruCellParams<S> {
    pub fn zeros(in_dim: usize, hidden: usize) -> Self {
        GruCellParams {
            in_dim,
            hidden,
            input_weights: vec![S::zero(); 3 * hidden * in_dim],
            recurrent_weights: vec![S::zero(); 3 * hidden * hidden],
            bias: vec![S::zero(); 3 * hidden],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorParams<S> {
    config: EstimatorConfig,
    pub cells: Vec<GruCellParams<S>>,
    /// `k × hidden`, row-major.
    pub out_weights: Vec<S>,
    pub out_bias: Vec<S>,
}

impl<S: Scalar> EstimatorParams<S> {
    pub fn zeros(config: EstimatorConfig) -> Self {
        let h = config.hidden();
        let cells = (0..config.depth)
            .map(|i| GruCellParams::zeros(if i == 0 { config.input_dim() } else { h }, h))
            .collect();
        EstimatorParams {
            config,
            cells,
            out_weights: vec![S::zero(); config.k * h],
            out_bias: vec![S::zero(); config.k],
        }
    }

    /// Glorot-uniform input and output weights, orthogonal recurrent blocks,
    /// zero biases.
    pub fn init<R: Rng + ?Sized>(config: EstimatorConfig, rng: &mut R) -> Self {
        let mut p = Self::zeros(config);
        let h = config.hidden();
        for cell in &mut p.cells {
            glorot(&mut cell.input_weights, cell.in_dim, 3 * h, rng);
            for gate in 0..3 {
                let block = orthogonal(h, rng);
                for (dst, src) in cell.recurrent_weights[gate * h * h..(gate + 1) * h * h].iter_mut().zip(block) {
                    *dst = S::from_f64(src);
                }
            }
        }
        glorot(&mut p.out_weights, h, config.k, rng);
        p
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    /// Parameter blocks in serialisation order: per cell input weights,
    /// recurrent weights, bias; then dense weights and dense bias.
    pub fn blocks(&self) -> Vec<&[S]> {
        let mut out: Vec<&[S]> = Vec::with_capacity(3 * self.cells.len() + 2);
        for c in &self.cells {
            out.push(&c.input_weights);
            out.push(&c.recurrent_weights);
            out.push(&c.bias);
        }
        out.push(&self.out_weights);
        out.push(&self.out_bias);
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [S]> {
        let mut out: Vec<&mut [S]> = Vec::with_capacity(3 * self.cells.len() + 2);
        for c in &mut self.cells {
            out.push(&mut c.input_weights);
            out.push(&mut c.recurrent_weights);
            out.push(&mut c.bias);
        }
        out.push(&mut self.out_weights);
        out.push(&mut self.out_bias);
        out
    }

    pub fn num_params(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    pub fn cast<T: Scalar>(&self) -> EstimatorParams<T> {
        let conv = |v: &[S]| v.iter().map(|x| T::from_f64(x.as_f64())).collect::<Vec<T>>();
        EstimatorParams {
            config: self.config,
            cells: self
                .cells
                .iter()
                .map(|c| GruCellParams {
                    in_dim: c.in_dim,
                    hidden: c.hidden,
                    input_weights: conv(&c.input_weights),
                    recurrent_weights: conv(&c.recurrent_weights),
                    bias: conv(&c.bias),
                })
                .collect(),
            out_weights: conv(&self.out_weights),
            out_bias: conv(&self.out_bias),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.blocks() {
            for v in b {
                h = (h ^ v.to_bits_u64()).wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

fn glorot<S: Scalar, R: Rng + ?Sized>(w: &mut [S], fan_in: usize, fan_out: usize, rng: &mut R) {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let dist = Uniform::new(-a, a).expect("finite bounds");
    for v in w {
        *v = S::from_f64(dist.sample(rng));
    }
}

/// A random `n×n` orthogonal matrix (Gram–Schmidt on Gaussian rows).
fn orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut q = vec![0.0f64; n * n];
    let mut i = 0;
    while i < n {
        let mut row: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        // Two passes of modified Gram–Schmidt for numerical orthogonality.
        for _ in 0..2 {
            for j in 0..i {
                let prev = &q[j * n..(j + 1) * n];
                let d: f64 = row.iter().zip(prev).map(|(a, b)| a * b).sum();
                for (r, p) in row.iter_mut().zip(prev) {
                    *r -= d * p;
                }
            }
        }
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        for (dst, v) in q[i * n..(i + 1) * n].iter_mut().zip(&row) {
            *dst = v / norm;
        }
        i += 1;
    }
    q
}

#[inline]
fn sigmoid<S: Scalar>(x: S) -> S {
    S::one() / (S::one() + (-x).exp())
}

/// One GRU step for a single sample, computed with plain loops.
pub fn gru_step<S: Scalar>(cell: &GruCellParams<S>, x: &[S], h: &[S]) -> Result<Vec<S>> {
    let hid = cell.hidden;
    if x.len() != cell.in_dim || h.len() != hid {
        return dim_err(format!(
            "gru_step with input {} (expected {}) and state {} (expected {hid})",
            x.len(),
            cell.in_dim,
            h.len()
        ));
    }
    let wx = |row: usize| -> S {
        let w = &cell.input_weights[row * cell.in_dim..(row + 1) * cell.in_dim];
        w.iter().zip(x).fold(S::zero(), |acc, (a, b)| acc + *a * *b)
    };
    let uh = |row: usize, v: &[S]| -> S {
        let u = &cell.recurrent_weights[row * hid..(row + 1) * hid];
        u.iter().zip(v).fold(S::zero(), |acc, (a, b)| acc + *a * *b)
    };
    let z: Vec<S> = (0..hid).map(|j| sigmoid(wx(j) + uh(j, h) + cell.bias[j])).collect();
    let r: Vec<S> = (0..hid).map(|j| sigmoid(wx(hid + j) + uh(hid + j, h) + cell.bias[hid + j])).collect();
    let rh: Vec<S> = r.iter().zip(h).map(|(a, b)| *a * *b).collect();
    Ok((0..hid)
        .map(|j| {
            let c = (wx(2 * hid + j) + uh(2 * hid + j, &rh) + cell.bias[2 * hid + j]).tanh();
            (S::one() - z[j]) * h[j] + z[j] * c
        })
        .collect())
}

/// Activations cached by [`forward_batch`] for [`backward`].
#[derive(Clone, Debug)]
pub struct Tape<S> {
    config: EstimatorConfig,
    fingerprint: u64,
    batch: usize,
    input: Vec<S>,
    /// `states[i·(T+1) + t]`: state of cell `i` before step `t` (`B×H`).
    states: Vec<Vec<S>>,
    /// Gate activations of cell `i` at step `t`, index `i·T + t`.
    z: Vec<Vec<S>>,
    r: Vec<Vec<S>>,
    c: Vec<Vec<S>>,
    output: Vec<S>,
}

impl<S> Tape<S> {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn output(&self) -> &[S] {
        &self.output
    }
}

fn add_bias_rows<S: Scalar>(m: &mut [S], bias: &[S]) {
    for row in m.chunks_exact_mut(bias.len()) {
        for (v, b) in row.iter_mut().zip(bias) {
            *v += *b;
        }
    }
}

fn col_sums_into<S: Scalar>(m: &[S], cols: usize, out: &mut [S]) {
    for row in m.chunks_exact(cols) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += *v;
        }
    }
}

/// Runs the estimator on `batch` inputs stored row-major in `inputs`.
/// Returns the `batch×k` soft outputs in `(−1, 1)` and the tape.
pub fn forward_batch<S: Scalar>(params: &EstimatorParams<S>, inputs: &[S], batch: usize) -> Result<(Vec<S>, Tape<S>)> {
    let cfg = params.config;
    let (d, t_max, h, k, in_dim) = (cfg.depth, cfg.time_steps, cfg.hidden(), cfg.k, cfg.input_dim());
    if inputs.len() != batch * in_dim {
        return dim_err(format!("{} input values for batch {batch} of width {in_dim}", inputs.len()));
    }
    let bh = batch * h;
    let mut states = vec![Vec::new(); d * (t_max + 1)];
    for i in 0..d {
        states[i * (t_max + 1)] = vec![S::zero(); bh];
    }
    let mut zs = vec![Vec::new(); d * t_max];
    let mut rs = vec![Vec::new(); d * t_max];
    let mut cs = vec![Vec::new(); d * t_max];

    // The first cell sees the same input at every step: project it once.
    let c0 = &params.cells[0];
    let mut gx0 = vec![S::zero(); batch * 3 * h];
    gemm(
        S::one(),
        View::new(inputs, batch, in_dim, in_dim),
        View::new(&c0.input_weights, 3 * h, in_dim, in_dim).t(),
        S::zero(),
        &mut gx0,
        3 * h,
    );
    add_bias_rows(&mut gx0, &c0.bias);

    let mut gx = vec![S::zero(); batch * 3 * h];
    let mut ghzr = vec![S::zero(); batch * 2 * h];
    let mut rh = vec![S::zero(); bh];
    let mut gc = vec![S::zero(); bh];
    for t in 0..t_max {
        for i in 0..d {
            let cell = &params.cells[i];
            let gx_ref: &[S] = if i == 0 {
                &gx0
            } else {
                let x = &states[(i - 1) * (t_max + 1) + t + 1];
                gemm(
                    S::one(),
                    View::new(x, batch, h, h),
                    View::new(&cell.input_weights, 3 * h, h, h).t(),
                    S::zero(),
                    &mut gx,
                    3 * h,
                );
                add_bias_rows(&mut gx, &cell.bias);
                &gx
            };
            let hp = &states[i * (t_max + 1) + t];
            let first = t == 0;
            if !first {
                gemm(
                    S::one(),
                    View::new(hp, batch, h, h),
                    View::new(&cell.recurrent_weights, 2 * h, h, h).t(),
                    S::zero(),
                    &mut ghzr,
                    2 * h,
                );
            }
            let mut z = vec![S::zero(); bh];
            let mut r = vec![S::zero(); bh];
            for b in 0..batch {
                for j in 0..h {
                    let (mut az, mut ar) = (gx_ref[b * 3 * h + j], gx_ref[b * 3 * h + h + j]);
                    if !first {
                        az += ghzr[b * 2 * h + j];
                        ar += ghzr[b * 2 * h + h + j];
                    }
                    z[b * h + j] = sigmoid(az);
                    r[b * h + j] = sigmoid(ar);
                }
            }
            if !first {
                for ((o, a), b) in rh.iter_mut().zip(&r).zip(hp) {
                    *o = *a * *b;
                }
                gemm(
                    S::one(),
                    View::new(&rh, batch, h, h),
                    View::new(&cell.recurrent_weights[2 * h * h..], h, h, h).t(),
                    S::zero(),
                    &mut gc,
                    h,
                );
            }
            let mut c = vec![S::zero(); bh];
            let mut hn = vec![S::zero(); bh];
            for b in 0..batch {
                for j in 0..h {
                    let mut a = gx_ref[b * 3 * h + 2 * h + j];
                    if !first {
                        a += gc[b * h + j];
                    }
                    let cv = a.tanh();
                    let idx = b * h + j;
                    c[idx] = cv;
                    hn[idx] = (S::one() - z[idx]) * hp[idx] + z[idx] * cv;
                }
            }
            zs[i * t_max + t] = z;
            rs[i * t_max + t] = r;
            cs[i * t_max + t] = c;
            states[i * (t_max + 1) + t + 1] = hn;
        }
    }

    let top = &states[(d - 1) * (t_max + 1) + t_max];
    let mut out = vec![S::zero(); batch * k];
    gemm(
        S::one(),
        View::new(top, batch, h, h),
        View::new(&params.out_weights, k, h, h).t(),
        S::zero(),
        &mut out,
        k,
    );
    add_bias_rows(&mut out, &params.out_bias);
    for v in &mut out {
        *v = v.tanh();
    }
    let tape = Tape {
        config: cfg,
        fingerprint: params.fingerprint(),
        batch,
        input: inputs.to_vec(),
        states,
        z: zs,
        r: rs,
        c: cs,
        output: out.clone(),
    };
    Ok((out, tape))
}

/// Single-sample forward pass.
pub fn forward<S: Scalar>(params: &EstimatorParams<S>, input: &[S]) -> Result<(Vec<S>, Tape<S>)> {
    forward_batch(params, input, 1)
}

/// Backpropagation through time: gradients of `Σ grad_out ⊙ output` with
/// respect to every parameter, summed over the batch.
pub fn backward<S: Scalar>(params: &EstimatorParams<S>, tape: &Tape<S>, grad_out: &[S]) -> Result<EstimatorParams<S>> {
    let cfg = params.config;
    if tape.config != cfg || tape.fingerprint != params.fingerprint() {
        return Err(Error::Dimension("tape does not belong to these parameters".into()));
    }
    let (d, t_max, h, k, in_dim, batch) =
        (cfg.depth, cfg.time_steps, cfg.hidden(), cfg.k, cfg.input_dim(), tape.batch);
    if grad_out.len() != batch * k {
        return dim_err(format!("output gradient of length {}, expected {}", grad_out.len(), batch * k));
    }
    let bh = batch * h;
    let mut grads = EstimatorParams::<S>::zeros(cfg);

    let mut dpre = vec![S::zero(); batch * k];
    for ((o, g), y) in dpre.iter_mut().zip(grad_out).zip(&tape.output) {
        *o = *g * (S::one() - *y * *y);
    }
    col_sums_into(&dpre, k, &mut grads.out_bias);
    let top = &tape.states[(d - 1) * (t_max + 1) + t_max];
    gemm(
        S::one(),
        View::new(&dpre, batch, k, k).t(),
        View::new(top, batch, h, h),
        S::zero(),
        &mut grads.out_weights,
        h,
    );
    let mut dh_top = vec![S::zero(); bh];
    gemm(
        S::one(),
        View::new(&dpre, batch, k, k),
        View::new(&params.out_weights, k, h, h),
        S::zero(),
        &mut dh_top,
        h,
    );

    let mut dh_time: Vec<Vec<S>> = vec![vec![S::zero(); bh]; d];
    let mut dga0_sum = vec![S::zero(); batch * 3 * h];
    let mut dga = vec![S::zero(); batch * 3 * h];
    let mut rh = vec![S::zero(); bh];
    let mut dx_above: Vec<S> = vec![S::zero(); bh];

    for t in (0..t_max).rev() {
        for i in (0..d).rev() {
            let cell = &params.cells[i];
            let gcell = &mut grads.cells[i];
            let mut dh = std::mem::take(&mut dh_time[i]);
            if i == d - 1 && t == t_max - 1 {
                for (a, b) in dh.iter_mut().zip(&dh_top) {
                    *a += *b;
                }
            }
            if i < d - 1 {
                for (a, b) in dh.iter_mut().zip(&dx_above) {
                    *a += *b;
                }
            }
            let hp = &tape.states[i * (t_max + 1) + t];
            let z = &tape.z[i * t_max + t];
            let r = &tape.r[i * t_max + t];
            let c = &tape.c[i * t_max + t];
            let first = t == 0;

            let mut dhp = vec![S::zero(); bh];
            for b in 0..batch {
                for j in 0..h {
                    let idx = b * h + j;
                    let (zv, cv, hv, g) = (z[idx], c[idx], hp[idx], dh[idx]);
                    dhp[idx] = g * (S::one() - zv);
                    dga[b * 3 * h + j] = g * (cv - hv) * zv * (S::one() - zv);
                    dga[b * 3 * h + 2 * h + j] = g * zv * (S::one() - cv * cv);
                    dga[b * 3 * h + h + j] = S::zero();
                }
            }
            if !first {
                // d(r⊙h) = dac·U_c, feeding both the reset gate and the previous state.
                let mut drh = vec![S::zero(); bh];
                gemm(
                    S::one(),
                    View::new(&dga[2 * h..], batch, h, 3 * h),
                    View::new(&cell.recurrent_weights[2 * h * h..], h, h, h),
                    S::zero(),
                    &mut drh,
                    h,
                );
                for idx in 0..bh {
                    let (rv, hv) = (r[idx], hp[idx]);
                    dhp[idx] += drh[idx] * rv;
                    let b = idx / h;
                    let j = idx % h;
                    dga[b * 3 * h + h + j] = drh[idx] * hv * rv * (S::one() - rv);
                    rh[idx] = rv * hv;
                }
                gemm(
                    S::one(),
                    View::new(&dga[2 * h..], batch, h, 3 * h).t(),
                    View::new(&rh, batch, h, h),
                    S::one(),
                    &mut gcell.recurrent_weights[2 * h * h..],
                    h,
                );
                gemm(
                    S::one(),
                    View::new(&dga, batch, 2 * h, 3 * h).t(),
                    View::new(hp, batch, h, h),
                    S::one(),
                    &mut gcell.recurrent_weights[..2 * h * h],
                    h,
                );
                gemm(
                    S::one(),
                    View::new(&dga, batch, 2 * h, 3 * h),
                    View::new(&cell.recurrent_weights, 2 * h, h, h),
                    S::one(),
                    &mut dhp,
                    h,
                );
            }
            if i == 0 {
                for (a, b) in dga0_sum.iter_mut().zip(&dga) {
                    *a += *b;
                }
            } else {
                let x = &tape.states[(i - 1) * (t_max + 1) + t + 1];
                gemm(
                    S::one(),
                    View::new(&dga, batch, 3 * h, 3 * h).t(),
                    View::new(x, batch, h, h),
                    S::one(),
                    &mut gcell.input_weights,
                    h,
                );
                col_sums_into(&dga, 3 * h, &mut gcell.bias);
                gemm(
                    S::one(),
                    View::new(&dga, batch, 3 * h, 3 * h),
                    View::new(&cell.input_weights, 3 * h, h, h),
                    S::zero(),
                    &mut dx_above,
                    h,
                );
            }
            dh.copy_from_slice(&dhp);
            dh_time[i] = dh;
        }
    }
    let g0 = &mut grads.cells[0];
    gemm(
        S::one(),
        View::new(&dga0_sum, batch, 3 * h, 3 * h).t(),
        View::new(&tape.input, batch, in_dim, in_dim),
        S::zero(),
        &mut g0.input_weights,
        in_dim,
    );
    col_sums_into(&dga0_sum, 3 * h, &mut g0.bias);
    Ok(grads)
}

/// Hard flip decisions: bit `i` is 1 unless the soft output is strictly positive.
pub fn predict_flips<S: Scalar>(params: &EstimatorParams<S>, input: &[S]) -> Result<BitVector> {
    let (out, _) = forward(params, input)?;
    Ok(soft_to_flips(&out))
}

pub fn soft_to_flips<S: Scalar>(soft: &[S]) -> BitVector {
    let v: Vec<f64> = soft.iter().map(|s| s.as_f64()).collect();
    hard_decision(&v)
}
