//! Reference decoders: hard decision, exhaustive MAP and ordered statistics.

use crate::channel::hard_decision;
use crate::codes::LinearCode;
use crate::error::{dim_err, Error, Result};
use crate::gf2::{BitMatrix, BitVector};

/// Largest message length accepted by [`MapDecoder`].
pub const MAP_MAX_K: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeResult {
    pub u_hat: BitVector,
    /// Decoder-specific score; squared Euclidean distance for MAP and OSD, 0 for hard decisions.
    pub metric: f64,
}

/// A message decoder for BPSK over AWGN.
pub trait Decoder: Send + Sync {
    fn name(&self) -> String;

    fn k(&self) -> usize;

    fn n(&self) -> usize;

    /// Decodes one received word; `sigma` is the channel noise deviation.
    fn decode(&self, y: &[f64], sigma: f64) -> Result<DecodeResult>;

    /// Decodes `ys.len() / n` words stored back to back.
    fn decode_batch(&self, ys: &[f64], sigma: f64) -> Result<Vec<BitVector>> {
        let n = self.n();
        if n == 0 || !ys.len().is_multiple_of(n) {
            return dim_err(format!("batch of {} values is not a multiple of n = {n}", ys.len()));
        }
        ys.chunks_exact(n).map(|y| self.decode(y, sigma).map(|r| r.u_hat)).collect()
    }
}

fn check_len(y: &[f64], n: usize) -> Result<()> {
    if y.len() != n {
        return dim_err(format!("received word of length {}, expected {n}", y.len()));
    }
    Ok(())
}

/// Threshold each symbol, then apply the code's pseudo-inverse.
#[derive(Clone, Debug)]
pub struct HardDecoder {
    code: LinearCode,
}

impl HardDecoder {
    pub fn new(code: &LinearCode) -> Self {
        HardDecoder { code: code.clone() }
    }
}

pub fn hard_decode(code: &LinearCode, y: &[f64]) -> Result<DecodeResult> {
    check_len(y, code.n())?;
    Ok(DecodeResult {
        u_hat: code.pseudo_inverse(&hard_decision(y))?,
        metric: 0.0,
    })
}

impl Decoder for HardDecoder {
    fn name(&self) -> String {
        "hard".into()
    }
    fn k(&self) -> usize {
        self.code.k()
    }
    fn n(&self) -> usize {
        self.code.n()
    }
    fn decode(&self, y: &[f64], _sigma: f64) -> Result<DecodeResult> {
        hard_decode(&self.code, y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapMode {
    /// Most likely message.
    Block,
    /// Most likely value of each message bit.
    Bitwise,
}

/// Exhaustive maximum a posteriori decoding over all `2^k` messages.
#[derive(Clone, Debug)]
pub struct MapDecoder {
    n: usize,
    k: usize,
    mode: MapMode,
    /// `2^k × n` BPSK images of every codeword, indexed by message integer.
    symbols: Vec<f64>,
}

impl MapDecoder {
    pub fn new(code: &LinearCode, mode: MapMode) -> Result<Self> {
        let (n, k) = (code.n(), code.k());
        if k > MAP_MAX_K {
            return Err(Error::TooLarge { k, limit: MAP_MAX_K });
        }
        let mut symbols = Vec::with_capacity(n << k);
        for m in 0..1u64 << k {
            let x = code.encode(&BitVector::from_u64(m, k))?;
            symbols.extend(x.iter().map(|b| if b { -1.0 } else { 1.0 }));
        }
        Ok(MapDecoder { n, k, mode, symbols })
    }

    fn correlations(&self, y: &[f64]) -> Vec<f64> {
        self.symbols
            .chunks_exact(self.n)
            .map(|x| x.iter().zip(y).map(|(a, b)| a * b).sum())
            .collect()
    }
}

fn squared_distance(y: &[f64], corr: f64) -> f64 {
    // ‖y − x‖² = ‖y‖² − 2⟨y, x⟩ + n for x ∈ {±1}ⁿ.
    y.iter().map(|v| v * v).sum::<f64>() - 2.0 * corr + y.len() as f64
}

impl Decoder for MapDecoder {
    fn name(&self) -> String {
        match self.mode {
            MapMode::Block => "map".into(),
            MapMode::Bitwise => "map-bit".into(),
        }
    }
    fn k(&self) -> usize {
        self.k
    }
    fn n(&self) -> usize {
        self.n
    }

    fn decode(&self, y: &[f64], sigma: f64) -> Result<DecodeResult> {
        check_len(y, self.n)?;
        let corr = self.correlations(y);
        let (best, &best_corr) = corr
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |acc, (i, c)| if *c > *acc.1 { (i, c) } else { acc });
        match self.mode {
            MapMode::Block => Ok(DecodeResult {
                u_hat: BitVector::from_u64(best as u64, self.k),
                metric: squared_distance(y, best_corr),
            }),
            MapMode::Bitwise => {
                if sigma.is_nan() || sigma <= 0.0 {
                    return Err(Error::Config(format!("bitwise MAP needs a positive sigma, got {sigma}")));
                }
                // Posterior ∝ exp(⟨y, x⟩/σ²); subtract the maximum before exponentiating.
                let inv = 1.0 / (sigma * sigma);
                let mut mass = vec![[0.0f64; 2]; self.k];
                for (m, c) in corr.iter().enumerate() {
                    let w = ((c - best_corr) * inv).exp();
                    for (j, acc) in mass.iter_mut().enumerate() {
                        acc[(m >> j) & 1] += w;
                    }
                }
                let bits: Vec<bool> = mass.iter().map(|p| p[1] > p[0]).collect();
                let u_hat = BitVector::from_bools(&bits);
                let m = u_hat.to_u64() as usize;
                Ok(DecodeResult {
                    u_hat,
                    metric: squared_distance(y, corr[m]),
                })
            }
        }
    }
}

/// Ordered statistics decoding of a given reprocessing order.
#[derive(Clone, Debug)]
pub struct OsdDecoder {
    code: LinearCode,
    order: usize,
}

impl OsdDecoder {
    pub fn new(code: &LinearCode, order: usize) -> Self {
        OsdDecoder {
            code: code.clone(),
            order: order.min(code.k()),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

/// Number of re-encoded candidates: `Σ_{i ≤ order} C(k, i)`.
pub fn candidate_count(k: usize, order: usize) -> u128 {
    let mut total = 0u128;
    let mut binom = 1u128;
    for i in 0..=order.min(k) {
        total += binom;
        binom = binom * (k - i) as u128 / (i + 1) as u128;
    }
    total
}

/// Positions sorted by decreasing reliability `|y_i|`, ties by index.
pub fn reliability_order(y: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..y.len()).collect();
    idx.sort_by(|&a, &b| y[b].abs().total_cmp(&y[a].abs()).then(a.cmp(&b)));
    idx
}

/// Most reliable basis: the generator reduced to identity on the `k` most
/// reliable independent positions, and those positions in row order.
pub fn most_reliable_basis(g: &BitMatrix, y: &[f64]) -> (BitMatrix, Vec<usize>) {
    g.rref_with_order(reliability_order(y))
}

/// Advances `idx` to the next `w`-subset of `0..k` in lexicographic order.
fn next_combination(idx: &mut [usize], k: usize) -> bool {
    let w = idx.len();
    for i in (0..w).rev() {
        if idx[i] < k - w + i {
            idx[i] += 1;
            for j in i + 1..w {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

impl Decoder for OsdDecoder {
    fn name(&self) -> String {
        format!("osd{}", self.order)
    }
    fn k(&self) -> usize {
        self.code.k()
    }
    fn n(&self) -> usize {
        self.code.n()
    }

    fn decode(&self, y: &[f64], _sigma: f64) -> Result<DecodeResult> {
        let (n, k) = (self.code.n(), self.code.k());
        check_len(y, n)?;
        let (basis, pivots) = most_reliable_basis(self.code.generator(), y);
        if pivots.len() != k {
            return Err(Error::RankDeficient { rank: pivots.len(), expected: k });
        }
        let rows: Vec<BitVector> = (0..k).map(|r| basis.row(r)).collect();
        let mut base = BitVector::zeros(n);
        for (r, &p) in pivots.iter().enumerate() {
            if y[p] <= 0.0 || y[p].is_nan() {
                base.xor_assign(&rows[r])?;
            }
        }
        let total: f64 = y.iter().sum();
        // ⟨y, x_s⟩ = Σy − 2·Σ_{c_i = 1} y_i.
        let correlation = |c: &BitVector| total - 2.0 * c.ones_iter().map(|i| y[i]).sum::<f64>();

        let mut best = base.clone();
        let mut best_corr = correlation(&base);
        for w in 1..=self.order {
            let mut idx: Vec<usize> = (0..w).collect();
            loop {
                let mut cand = base.clone();
                for &r in &idx {
                    cand.xor_assign(&rows[r])?;
                }
                let c = correlation(&cand);
                if c > best_corr {
                    best_corr = c;
                    best = cand;
                }
                if !next_combination(&mut idx, k) {
                    break;
                }
            }
        }
        Ok(DecodeResult {
            u_hat: self.code.pseudo_inverse(&best)?,
            metric: squared_distance(y, best_corr),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bpsk_map, random_message, transmit_additive};
    use crate::codes::{polar_build, PolarSpec};
    use crate::rng::seeded;
    use proptest::prelude::*;

    fn polar(n: usize, k: usize) -> LinearCode {
        polar_build(&PolarSpec::new(n, k)).unwrap()
    }

    fn all_decoders(code: &LinearCode) -> Vec<Box<dyn Decoder>> {
        vec![
            Box::new(HardDecoder::new(code)),
            Box::new(MapDecoder::new(code, MapMode::Block).unwrap()),
            Box::new(MapDecoder::new(code, MapMode::Bitwise).unwrap()),
            Box::new(OsdDecoder::new(code, 0)),
            Box::new(OsdDecoder::new(code, 1)),
            Box::new(OsdDecoder::new(code, 2)),
        ]
    }

    #[test]
    fn candidate_counts() {
        assert_eq!(candidate_count(51, 2), 1327);
        assert_eq!(candidate_count(8, 0), 1);
        assert_eq!(candidate_count(8, 8), 256);
        assert_eq!(candidate_count(4, 9), 16);
    }

    #[test]
    fn combinations_enumerate_in_order() {
        let mut idx = vec![0, 1];
        let mut seen = vec![idx.clone()];
        while next_combination(&mut idx, 4) {
            seen.push(idx.clone());
        }
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
    }

    #[test]
    fn noiseless_words_decode_exactly() {
        let code = polar(16, 8);
        let mut rng = seeded(1);
        for dec in all_decoders(&code) {
            for _ in 0..20 {
                let u = random_message(8, &mut rng);
                let y = bpsk_map(&code.encode(&u).unwrap());
                assert_eq!(dec.decode(&y, 0.5).unwrap().u_hat, u, "{}", dec.name());
            }
        }
    }

    #[test]
    fn hard_decode_hand_example() {
        // (4,2) polar: A = rows 2,3 of P_2ᵀ = [[0,0,1,1],[0,0,0,1]].
        // u = [1,0] → x = [1,0,1,0]; flipping y_1 hard-decides to [1,1,1,0].
        let code = polar(4, 2);
        let u = BitVector::from_bits(&[1, 0]);
        assert_eq!(code.encode(&u).unwrap(), BitVector::from_bits(&[1, 0, 1, 0]));
        let y = vec![-1.0, -1.0, -1.0, 1.0];
        let r = hard_decode(&code, &y).unwrap();
        assert_eq!(r.u_hat, BitVector::from_bits(&[1, 0]));
        // A flip on position 3 does change the estimate: A·[1,0,1,1] = [0,1].
        let y = vec![-1.0, 1.0, -1.0, -1.0];
        assert_eq!(hard_decode(&code, &y).unwrap().u_hat, BitVector::from_bits(&[0, 1]));
        assert_eq!(r.metric, 0.0);
    }

    #[test]
    fn map_ties_pick_message_zero() {
        let code = polar(8, 4);
        let r = MapDecoder::new(&code, MapMode::Block).unwrap().decode(&[0.0; 8], 1.0).unwrap();
        assert_eq!(r.u_hat, BitVector::zeros(4));
        assert!((r.metric - 8.0).abs() < 1e-12);
    }

    #[test]
    fn map_guard() {
        let code = polar(64, 32);
        assert!(matches!(
            MapDecoder::new(&code, MapMode::Block),
            Err(Error::TooLarge { k: 32, limit: 20 })
        ));
        let small = polar(8, 4);
        let bit = MapDecoder::new(&small, MapMode::Bitwise).unwrap();
        assert!(bit.decode(&[0.1; 8], 0.0).is_err());
        assert!(bit.decode(&[0.1; 7], 1.0).is_err());
    }

    #[test]
    fn osd_recovers_errors_outside_basis() {
        let code = polar(16, 8);
        let u = BitVector::from_bits(&[1, 0, 1, 1, 0, 0, 1, 0]);
        let x = bpsk_map(&code.encode(&u).unwrap());
        // Strong correct symbols everywhere, then weak wrong symbols on two positions
        // that cannot enter the basis because eight stronger independent ones exist.
        let mut y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let (_, pivots) = most_reliable_basis(code.generator(), &y);
        let outside: Vec<usize> = (0..16).filter(|i| !pivots.contains(i)).take(2).collect();
        for &i in &outside {
            y[i] = -0.1 * x[i];
        }
        let (_, pivots_after) = most_reliable_basis(code.generator(), &y);
        assert!(outside.iter().all(|i| !pivots_after.contains(i)));
        let r = OsdDecoder::new(&code, 0).decode(&y, 1.0).unwrap();
        assert_eq!(r.u_hat, u);
    }

    #[test]
    fn osd_output_is_a_codeword() {
        let code = polar(16, 8);
        let mut rng = seeded(9);
        for order in 0..3 {
            let dec = OsdDecoder::new(&code, order);
            for _ in 0..50 {
                let u = random_message(8, &mut rng);
                let y = transmit_additive(&bpsk_map(&code.encode(&u).unwrap()), 1.0, &mut rng).unwrap();
                let r = dec.decode(&y, 1.0).unwrap();
                let c = code.encode(&r.u_hat).unwrap();
                let corr: f64 = bpsk_map(&c).iter().zip(&y).map(|(a, b)| a * b).sum();
                assert!((r.metric - squared_distance(&y, corr)).abs() < 1e-9);
                assert!(code.syndrome(&c).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn full_order_osd_equals_block_map() {
        let code = polar(8, 4);
        let map = MapDecoder::new(&code, MapMode::Block).unwrap();
        let osd = OsdDecoder::new(&code, 4);
        let mut rng = seeded(10);
        for _ in 0..200 {
            let y = transmit_additive(&[1.0; 8], 1.2, &mut rng).unwrap();
            let a = map.decode(&y, 1.2).unwrap();
            let b = osd.decode(&y, 1.2).unwrap();
            assert!((a.metric - b.metric).abs() < 1e-9);
        }
    }

    #[test]
    fn osd_metric_improves_with_order() {
        let code = polar(16, 8);
        let mut rng = seeded(12);
        for _ in 0..100 {
            let y = transmit_additive(&[1.0; 16], 1.0, &mut rng).unwrap();
            let m: Vec<f64> = (0..3).map(|o| OsdDecoder::new(&code, o).decode(&y, 1.0).unwrap().metric).collect();
            assert!(m[1] <= m[0] + 1e-12 && m[2] <= m[1] + 1e-12);
        }
    }

    /// Brute force over every message with an independent distance computation.
    fn brute_block_map(code: &LinearCode, y: &[f64]) -> BitVector {
        let k = code.k();
        let mut best = (f64::INFINITY, 0u64);
        for m in 0..1u64 << k {
            let x = bpsk_map(&code.encode(&BitVector::from_u64(m, k)).unwrap());
            let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best.0 {
                best = (d, m);
            }
        }
        BitVector::from_u64(best.1, k)
    }

    /// Bitwise posteriors from Gaussian likelihoods without stabilization.
    fn brute_bit_map(code: &LinearCode, y: &[f64], sigma: f64) -> BitVector {
        let k = code.k();
        let mut p = vec![[0.0f64; 2]; k];
        for m in 0..1u64 << k {
            let u = BitVector::from_u64(m, k);
            let x = bpsk_map(&code.encode(&u).unwrap());
            let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            let l = (-d / (2.0 * sigma * sigma)).exp();
            for (j, acc) in p.iter_mut().enumerate() {
                acc[u.get(j) as usize] += l;
            }
        }
        BitVector::from_bools(&p.iter().map(|q| q[1] > q[0]).collect::<Vec<_>>())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn map_matches_brute_force(seed in any::<u64>(), sigma in 0.4f64..1.5) {
            let code = polar(8, 4);
            let mut rng = seeded(seed);
            let u = random_message(4, &mut rng);
            let y = transmit_additive(&bpsk_map(&code.encode(&u).unwrap()), sigma, &mut rng).unwrap();
            let block = MapDecoder::new(&code, MapMode::Block).unwrap().decode(&y, sigma).unwrap();
            prop_assert_eq!(block.u_hat, brute_block_map(&code, &y));
            let bit = MapDecoder::new(&code, MapMode::Bitwise).unwrap().decode(&y, sigma).unwrap();
            prop_assert_eq!(bit.u_hat, brute_bit_map(&code, &y, sigma));
        }
    }

    #[test]
    fn batch_decoding_matches_single() {
        let code = polar(8, 4);
        let dec = OsdDecoder::new(&code, 1);
        let mut rng = seeded(3);
        let ys = transmit_additive(&[1.0; 24], 1.0, &mut rng).unwrap();
        let batch = dec.decode_batch(&ys, 1.0).unwrap();
        for (i, u) in batch.iter().enumerate() {
            assert_eq!(*u, dec.decode(&ys[i * 8..(i + 1) * 8], 1.0).unwrap().u_hat);
        }
        assert!(dec.decode_batch(&ys[..7], 1.0).is_err());
    }
}
