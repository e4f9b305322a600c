//! Linear block codes: generator, parity-check and pseudo-inverse matrices.

mod io;
mod polar;

pub use io::{load_pc_matrix, parse_alist, parse_pc, parse_pc_text, to_alist, to_pc_text};
pub use polar::{bhattacharyya_parameters, polar_build, polar_select_rows, FrozenPolicy, PolarSpec};

use crate::error::{dim_err, Error, Result};
use crate::gf2::{BitMatrix, BitVector};

/// An `(n, k)` binary linear code.
///
/// Holds a generator `g` (k×n), a parity-check matrix `h` ((n−k)×n) and a
/// pseudo-inverse `pinv` (k×n) with `pinv · gᵀ = I_k`. All three are checked
/// against each other on construction.
#[derive(Clone, Debug)]
pub struct LinearCode {
    name: String,
    n: usize,
    k: usize,
    g: BitMatrix,
    h: BitMatrix,
    pinv: BitMatrix,
    info_set: Option<Vec<usize>>,
    polar_rows: Option<Vec<usize>>,
}

impl LinearCode {
    pub fn new(
        name: impl Into<String>,
        g: BitMatrix,
        h: BitMatrix,
        pinv: BitMatrix,
        info_set: Option<Vec<usize>>,
    ) -> Result<Self> {
        let code = LinearCode {
            name: name.into(),
            n: g.cols(),
            k: g.rows(),
            g,
            h,
            pinv,
            info_set,
            polar_rows: None,
        };
        code.check_invariants()?;
        Ok(code)
    }

    pub(crate) fn with_polar_rows(mut self, rows: Vec<usize>) -> Self {
        self.polar_rows = Some(rows);
        self
    }

    /// Verifies `G·Hᵀ = 0`, `A·Gᵀ = I_k`, the rank conditions, and that
    /// `[Hᵀ, Aᵀ]` has full column rank.
    pub fn check_invariants(&self) -> Result<()> {
        let (n, k) = (self.n, self.k);
        if k > n {
            return Err(Error::InvalidCode(format!("k={k} exceeds n={n}")));
        }
        if self.h.cols() != n || self.h.rows() != n - k {
            return Err(Error::InvalidCode(format!(
                "parity-check matrix is {}x{}, expected {}x{n}",
                self.h.rows(),
                self.h.cols(),
                n - k
            )));
        }
        if self.pinv.rows() != k || self.pinv.cols() != n {
            return Err(Error::InvalidCode(format!(
                "pseudo-inverse is {}x{}, expected {k}x{n}",
                self.pinv.rows(),
                self.pinv.cols()
            )));
        }
        let rank_g = self.g.rank();
        if rank_g != k {
            return Err(Error::RankDeficient { rank: rank_g, expected: k });
        }
        let rank_h = self.h.rank();
        if rank_h != n - k {
            return Err(Error::RankDeficient { rank: rank_h, expected: n - k });
        }
        if !self.g.matmul(&self.h.transpose())?.is_zero() {
            return Err(Error::InvalidCode("G·Hᵀ is not zero".into()));
        }
        if self.pinv.matmul(&self.g.transpose())? != BitMatrix::identity(k) {
            return Err(Error::InvalidCode("A·Gᵀ is not the identity".into()));
        }
        if let Some(info) = &self.info_set {
            if info.len() != k || info.iter().any(|&i| i >= n) {
                return Err(Error::InvalidCode("information set has wrong size".into()));
            }
        }
        let stacked = self.h.vstack(&self.pinv)?;
        if stacked.rank() != n {
            return Err(Error::InvalidCode("[Hᵀ, Aᵀ] is not full column rank".into()));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn generator(&self) -> &BitMatrix {
        &self.g
    }

    pub fn parity_check(&self) -> &BitMatrix {
        &self.h
    }

    pub fn pinv_matrix(&self) -> &BitMatrix {
        &self.pinv
    }

    /// Systematic coordinates, when the code was built from a parity-check matrix.
    pub fn info_set(&self) -> Option<&[usize]> {
        self.info_set.as_deref()
    }

    /// Rows of the polar kernel kept in the generator (0-based), for polar codes.
    pub fn polar_rows(&self) -> Option<&[usize]> {
        self.polar_rows.as_deref()
    }

    /// Codeword `x = Gᵀu`.
    pub fn encode(&self, u: &BitVector) -> Result<BitVector> {
        if u.len() != self.k {
            return dim_err(format!("message of length {}, expected {}", u.len(), self.k));
        }
        self.g.vecmat(u)
    }

    /// `A·v`: the originating message when `v` is a codeword.
    pub fn pseudo_inverse(&self, v: &BitVector) -> Result<BitVector> {
        if v.len() != self.n {
            return dim_err(format!("word of length {}, expected {}", v.len(), self.n));
        }
        self.pinv.matvec(v)
    }

    pub fn syndrome(&self, v: &BitVector) -> Result<BitVector> {
        self.h.matvec(v)
    }

    /// Replaces the parity-check matrix by another one spanning the same row space.
    pub fn with_parity_check(&self, h: BitMatrix) -> Result<LinearCode> {
        let mut code = self.clone();
        code.h = h;
        code.check_invariants()?;
        Ok(code)
    }

    /// The same code with its parity-check matrix in row-reduced form.
    pub fn standardized(&self) -> Result<LinearCode> {
        self.with_parity_check(standardize_pc(&self.h)?)
    }
}

/// Row-only reduction of a full-rank parity-check matrix.
///
/// Columns are never swapped, so the identity appears on the (possibly
/// scattered) pivot columns and the row space is unchanged.
pub fn standardize_pc(h: &BitMatrix) -> Result<BitMatrix> {
    let (r, pivots) = h.rref_rows();
    if pivots.len() != h.rows() {
        return Err(Error::RankDeficient {
            rank: pivots.len(),
            expected: h.rows(),
        });
    }
    Ok(r)
}

/// Builds a systematic code from a full-rank parity-check matrix.
///
/// The pivot columns of the reduced `H` carry parity; the remaining `k`
/// columns form the information set, and the pseudo-inverse simply reads them.
pub fn code_from_pc(name: impl Into<String>, h: &BitMatrix) -> Result<LinearCode> {
    let n = h.cols();
    let (r, pivots) = h.rref_rows();
    if pivots.len() != h.rows() {
        return Err(Error::RankDeficient {
            rank: pivots.len(),
            expected: h.rows(),
        });
    }
    let mut is_pivot = vec![false; n];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let info: Vec<usize> = (0..n).filter(|&j| !is_pivot[j]).collect();
    let k = info.len();

    let mut g = BitMatrix::zeros(k, n);
    let mut pinv = BitMatrix::zeros(k, n);
    for (m, &j) in info.iter().enumerate() {
        g.set(m, j, true);
        pinv.set(m, j, true);
        // Row `row` of the reduced H reads x[p] + Σ_j R[row][j] x[j] = 0.
        for (row, &p) in pivots.iter().enumerate() {
            if r.get(row, j) {
                g.set(m, p, true);
            }
        }
    }
    LinearCode::new(name, g, h.clone(), pinv, Some(info))
}
