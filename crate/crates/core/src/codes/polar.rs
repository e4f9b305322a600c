use crate::error::{Error, Result};
use crate::gf2::BitMatrix;

use super::LinearCode;

/// How the `k` kept rows of the polar kernel are chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum FrozenPolicy {
    /// Explicit 0-based row indices of the kernel kept in the generator.
    InfoSet(Vec<usize>),
    /// Bhattacharyya-parameter recursion for a BEC with this erasure probability.
    Bhattacharyya(f64),
}

impl Default for FrozenPolicy {
    fn default() -> Self {
        FrozenPolicy::Bhattacharyya(0.5)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolarSpec {
    pub n: usize,
    pub k: usize,
    pub policy: FrozenPolicy,
}

impl PolarSpec {
    pub fn new(n: usize, k: usize) -> Self {
        PolarSpec {
            n,
            k,
            policy: FrozenPolicy::default(),
        }
    }

    pub fn with_policy(mut self, policy: FrozenPolicy) -> Self {
        self.policy = policy;
        self
    }

    fn validate(&self) -> Result<u32> {
        if self.n < 2 || !self.n.is_power_of_two() {
            return Err(Error::Config(format!("polar length {} is not a power of two >= 2", self.n)));
        }
        if self.k == 0 || self.k > self.n {
            return Err(Error::Config(format!("polar k={} outside 1..={}", self.k, self.n)));
        }
        if let FrozenPolicy::Bhattacharyya(eps) = self.policy {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::Config(format!("design parameter {eps} outside (0,1)")));
            }
        }
        Ok(self.n.trailing_zeros())
    }
}

/// Bhattacharyya parameters of the `n` synthetic channels of `F^{⊗log2 n}`
/// in natural row order, starting from erasure probability `eps`.
pub fn bhattacharyya_parameters(n: usize, eps: f64) -> Vec<f64> {
    let mut z = vec![eps];
    while z.len() < n {
        z = z.iter().flat_map(|&v| [2.0 * v - v * v, v * v]).collect();
    }
    z
}

/// The 0-based kernel rows kept in the generator, sorted ascending.
///
/// Under the Bhattacharyya policy the `k` smallest parameters win; ties go
/// to the larger index.
pub fn polar_select_rows(spec: &PolarSpec) -> Result<Vec<usize>> {
    spec.validate()?;
    match &spec.policy {
        FrozenPolicy::InfoSet(rows) => {
            let mut sorted = rows.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != spec.k || rows.len() != spec.k {
                return Err(Error::Config(format!(
                    "information set has {} distinct rows, expected {}",
                    sorted.len(),
                    spec.k
                )));
            }
            if let Some(&bad) = sorted.iter().find(|&&r| r >= spec.n) {
                return Err(Error::Config(format!("row {bad} out of range for n={}", spec.n)));
            }
            Ok(sorted)
        }
        FrozenPolicy::Bhattacharyya(eps) => {
            Ok(most_reliable_rows(&bhattacharyya_parameters(spec.n, *eps), spec.k))
        }
    }
}

fn most_reliable_rows(z: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| z[a].total_cmp(&z[b]).then(b.cmp(&a)));
    let mut rows = order[..k].to_vec();
    rows.sort_unstable();
    rows
}

/// Builds a polar code with `G = V·P_n`, `H` from the columns of `P_n`
/// outside the kept set, and pseudo-inverse `A = V·P_nᵀ`.
pub fn polar_build(spec: &PolarSpec) -> Result<LinearCode> {
    let m = spec.validate()?;
    let rows = polar_select_rows(spec)?;
    let kernel = BitMatrix::from_rows(&[[1u8, 0], [1, 1]])?;
    let p = BitMatrix::kronecker_power(&kernel, m);
    let pt = p.transpose();

    let mut kept = vec![false; spec.n];
    for &r in &rows {
        kept[r] = true;
    }
    let frozen: Vec<usize> = (0..spec.n).filter(|&i| !kept[i]).collect();

    let g = p.select_rows(&rows);
    let h = pt.select_rows(&frozen);
    let pinv = pt.select_rows(&rows);
    let name = format!("polar({},{})", spec.n, spec.k);
    Ok(LinearCode::new(name, g, h, pinv, None)?.with_polar_rows(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::BitVector;

    fn m(rows: &[&[u8]]) -> BitMatrix {
        BitMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn bhattacharyya_hand_recursion() {
        let z = bhattacharyya_parameters(4, 0.5);
        let expect = [0.9375, 0.5625, 0.4375, 0.0625];
        for (a, b) in z.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let rows = polar_select_rows(&PolarSpec::new(4, 2)).unwrap();
        assert_eq!(rows, vec![2, 3]);
    }

    #[test]
    fn rate_one_keeps_all_rows() {
        assert_eq!(polar_select_rows(&PolarSpec::new(2, 2)).unwrap(), vec![0, 1]);
        let code = polar_build(&PolarSpec::new(2, 2)).unwrap();
        assert_eq!(code.parity_check().rows(), 0);
        assert_eq!(code.syndrome(&BitVector::from_bits(&[1, 0])).unwrap().len(), 0);
    }

    #[test]
    fn explicit_set_passes_through() {
        let spec = PolarSpec::new(4, 2).with_policy(FrozenPolicy::InfoSet(vec![3, 2]));
        assert_eq!(polar_select_rows(&spec).unwrap(), vec![2, 3]);
        let bad = PolarSpec::new(4, 2).with_policy(FrozenPolicy::InfoSet(vec![1, 2, 3]));
        assert!(polar_select_rows(&bad).is_err());
        let dup = PolarSpec::new(4, 2).with_policy(FrozenPolicy::InfoSet(vec![1, 1]));
        assert!(polar_select_rows(&dup).is_err());
        let oob = PolarSpec::new(4, 2).with_policy(FrozenPolicy::InfoSet(vec![1, 4]));
        assert!(polar_select_rows(&oob).is_err());
    }

    #[test]
    fn ties_go_to_larger_index() {
        let z = [0.5, 0.25, 0.25, 0.75];
        assert_eq!(most_reliable_rows(&z, 1), vec![2]);
        assert_eq!(most_reliable_rows(&z, 2), vec![1, 2]);
        assert_eq!(most_reliable_rows(&[0.3, 0.3, 0.3], 2), vec![1, 2]);
    }

    #[test]
    fn invalid_specs() {
        assert!(polar_build(&PolarSpec::new(6, 3)).is_err());
        assert!(polar_build(&PolarSpec::new(8, 0)).is_err());
        assert!(polar_build(&PolarSpec::new(8, 9)).is_err());
        let spec = PolarSpec::new(8, 4).with_policy(FrozenPolicy::Bhattacharyya(1.0));
        assert!(polar_build(&spec).is_err());
    }

    #[test]
    fn polar_4_2_matrices() {
        let code = polar_build(&PolarSpec::new(4, 2)).unwrap();
        assert_eq!(code.generator(), &m(&[&[1, 0, 1, 0], &[1, 1, 1, 1]]));
        assert_eq!(code.parity_check(), &m(&[&[1, 1, 1, 1], &[0, 1, 0, 1]]));
        assert!(code.generator().matmul(&code.parity_check().transpose()).unwrap().is_zero());

        let u = BitVector::from_bits(&[1, 0]);
        let x = code.encode(&u).unwrap();
        assert_eq!(x, BitVector::from_bits(&[1, 0, 1, 0]));
        assert_eq!(code.pseudo_inverse(&x).unwrap(), u);

        assert_eq!(
            code.encode(&BitVector::from_bits(&[1, 1])).unwrap(),
            BitVector::from_bits(&[0, 1, 0, 1])
        );
        assert!(code.encode(&BitVector::zeros(2)).unwrap().is_zero());
        assert!(code.pseudo_inverse(&BitVector::zeros(4)).unwrap().is_zero());
        for w in 0u64..4 {
            let u = BitVector::from_u64(w, 2);
            assert_eq!(code.pseudo_inverse(&code.encode(&u).unwrap()).unwrap(), u);
        }
    }

    #[test]
    fn parity_rows_match_kernel_columns() {
        for (n, k) in [(8, 4), (16, 8), (32, 20), (64, 32)] {
            let code = polar_build(&PolarSpec::new(n, k)).unwrap();
            assert_eq!(code.parity_check().rows(), n - k);
            let p = BitMatrix::kronecker_power(&m(&[&[1, 0], &[1, 1]]), n.trailing_zeros());
            let rows = code.polar_rows().unwrap();
            let frozen: Vec<usize> = (0..n).filter(|i| !rows.contains(i)).collect();
            for (r, &c) in frozen.iter().enumerate() {
                for i in 0..n {
                    assert_eq!(code.parity_check().get(r, i), p.get(i, c));
                }
            }
        }
    }

    #[test]
    fn larger_codes_are_valid() {
        for (n, k) in [(16, 8), (64, 32), (128, 64), (256, 100)] {
            let code = polar_build(&PolarSpec::new(n, k)).unwrap();
            assert_eq!(code.parity_check().rank(), n - k);
            let ones = code.encode(&BitVector::ones(k)).unwrap();
            assert!(code.syndrome(&ones).unwrap().is_zero());
        }
    }
}
