//! Schatten p-(quasi)norms, Hölder combinations, and block pinching on
//! finite kernel matrices.
//!
//! Singular values below `sigma_1 * N * 1e-14` are treated as exact zeros;
//! without the cutoff, numerical noise at the 1e-16 level would pollute
//! quasi-norms with p < 1 (noise^0.25 is 1e-4).

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// A Schatten exponent: finite `p > 0` or the operator norm at `p = infinity`.
///
/// Infinity is a distinguished value rather than a float sentinel; configs
/// spell it `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SchattenP {
    Finite(f64),
    Inf,
}

impl SchattenP {
    pub fn finite(p: f64) -> Self {
        assert!(p > 0.0 && p.is_finite());
        SchattenP::Finite(p)
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            SchattenP::Finite(p) => *p,
            SchattenP::Inf => f64::INFINITY,
        }
    }
}

impl std::fmt::Display for SchattenP {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SchattenP::Finite(p) => write!(f, "{p}"),
            SchattenP::Inf => write!(f, "inf"),
        }
    }
}

/// A finite section of an S_2 kernel: an N x N complex matrix whose rows and
/// columns are labeled by a strictly increasing grid.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    entries: DMatrix<Complex64>,
    grid: Arc<Vec<f64>>,
}

impl KernelMatrix {
    pub fn new(entries: DMatrix<Complex64>, grid: Arc<Vec<f64>>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: entries.nrows(),
            });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NumericalFailure("non-finite matrix entry".into()));
        }
        Ok(KernelMatrix { entries, grid })
    }

    pub fn from_fn(grid: Arc<Vec<f64>>, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let n = grid.len();
        let entries = DMatrix::from_fn(n, n, f);
        KernelMatrix { entries, grid }
    }

    pub fn zeros(grid: Arc<Vec<f64>>) -> Self {
        let n = grid.len();
        KernelMatrix {
            entries: DMatrix::zeros(n, n),
            grid,
        }
    }

    /// The matrix unit `e_{ij}`.
    pub fn matrix_unit(grid: Arc<Vec<f64>>, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(grid);
        m.entries[(i, j)] = Complex64::new(1.0, 0.0);
        m
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut DMatrix<Complex64> {
        &mut self.entries
    }

    pub fn grid(&self) -> &Arc<Vec<f64>> {
        &self.grid
    }

    pub fn same_grid(&self, other: &KernelMatrix) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }
}

/// Singular values, non-increasing, with the small-value cutoff applied.
pub fn singular_values(x: &KernelMatrix) -> Result<Vec<f64>> {
    singular_values_of(x.entries())
}

pub(crate) fn singular_values_of(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let svd = m
        .clone()
        .try_svd(false, false, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
    let mut s: Vec<f64> = svd.singular_values.iter().map(|&v| v.max(0.0)).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if let Some(&top) = s.first() {
        let cut = top * s.len() as f64 * 1e-14;
        for v in s.iter_mut() {
            if *v <= cut {
                *v = 0.0;
            }
        }
    }
    Ok(s)
}

/// `(sum sigma_i^p)^{1/p}`, or the largest singular value at `p = inf`.
pub fn schatten_norm(x: &KernelMatrix, p: SchattenP) -> f64 {
    schatten_norm_of(x.entries(), p)
}

pub(crate) fn schatten_norm_of(m: &DMatrix<Complex64>, p: SchattenP) -> f64 {
    let s = singular_values_of(m).expect("SVD convergence");
    schatten_norm_of_values(&s, p)
}

pub(crate) fn schatten_norm_of_values(s: &[f64], p: SchattenP) -> f64 {
    match p {
        SchattenP::Inf => s.first().copied().unwrap_or(0.0),
        SchattenP::Finite(p) => s
            .iter()
            .filter(|&&v| v > 0.0)
            .map(|&v| v.powf(p))
            .sum::<f64>()
            .powf(1.0 / p),
    }
}

/// Hölder combination `(sum 1/p_i)^{-1}`.
pub fn holder_combine(p_list: &[f64]) -> f64 {
    assert!(p_list.iter().all(|&p| p > 0.0));
    1.0 / p_list.iter().map(|&p| 1.0 / p).sum::<f64>()
}

/// Exponents `(p_1, ..., p_n)` with their Hölder combination and regime flags.
#[derive(Clone, Debug)]
pub struct ExponentTuple {
    p_list: Vec<f64>,
    p: f64,
    p_sharp: Option<SchattenP>,
    main_regime: bool,
}

impl ExponentTuple {
    /// Validates the tuple and records which regime applies. Entries must be
    /// positive; the main-theorem regime additionally needs every `p_i` in
    /// `[1, inf)`, `p <= 1`, and both reduced Hölder combinations in
    /// `[1, inf)` (vacuous at n = 1).
    pub fn new(p_list: Vec<f64>) -> Result<Self> {
        if p_list.is_empty() {
            return Err(Error::ConfigInvalid("empty exponent tuple".into()));
        }
        if p_list.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "exponents must be finite and positive, got {p_list:?}"
            )));
        }
        let p = holder_combine(&p_list);
        let p_sharp = if p < 1.0 - 1e-12 {
            Some(SchattenP::Finite(p / (1.0 - p)))
        } else if p <= 1.0 + 1e-12 {
            Some(SchattenP::Inf)
        } else {
            None
        };
        let n = p_list.len();
        let all_banach = p_list.iter().all(|&q| q >= 1.0);
        let tail_ok = n == 1 || holder_combine(&p_list[1..]) >= 1.0 - 1e-12;
        let head_ok = n == 1 || holder_combine(&p_list[..n - 1]) >= 1.0 - 1e-12;
        let main_regime = p <= 1.0 + 1e-12 && all_banach && tail_ok && head_ok;
        Ok(ExponentTuple {
            p_list,
            p,
            p_sharp,
            main_regime,
        })
    }

    pub fn n(&self) -> usize {
        self.p_list.len()
    }

    pub fn p_list(&self) -> &[f64] {
        &self.p_list
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `p/(1-p)` for p < 1, infinity at p = 1, absent for p > 1.
    pub fn p_sharp(&self) -> Option<SchattenP> {
        self.p_sharp
    }

    pub fn in_main_regime(&self) -> bool {
        self.main_regime
    }
}

/// Disjoint index ranges; indices outside every block are discarded by the
/// conditional expectation.
#[derive(Clone, Debug)]
pub struct BlockPartition {
    blocks: Vec<std::ops::Range<usize>>,
}

impl BlockPartition {
    pub fn new(blocks: Vec<std::ops::Range<usize>>) -> Self {
        let mut sorted = blocks.clone();
        sorted.sort_by_key(|r| r.start);
        for w in sorted.windows(2) {
            assert!(w[0].end <= w[1].start, "blocks must be disjoint");
        }
        BlockPartition { blocks }
    }

    pub fn blocks(&self) -> &[std::ops::Range<usize>] {
        &self.blocks
    }
}

/// Block-diagonal conditional expectation: keeps entries inside
/// `block x same-block` squares, zeroes all others. Trace is preserved when
/// the blocks cover every index.
pub fn block_expectation(x: &KernelMatrix, partition: &BlockPartition) -> Result<KernelMatrix> {
    let n = x.n();
    for b in partition.blocks() {
        if b.end > n {
            return Err(Error::IndexOutOfRange {
                index: b.end - 1,
                len: n,
            });
        }
    }
    let mut out = KernelMatrix::zeros(x.grid().clone());
    for b in partition.blocks() {
        for i in b.clone() {
            for j in b.clone() {
                out.entries_mut()[(i, j)] = x.entries()[(i, j)];
            }
        }
    }
    Ok(out)
}
