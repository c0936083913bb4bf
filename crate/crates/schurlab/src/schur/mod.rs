//! Discrete multilinear Schur multipliers: sampled symbols, cutoff and
//! indicator symbols, the inductive symbol decomposition, and the
//! multiplier-norm lower-bound optimizer.
//!
//! Finite-section semantics throughout: a continuum multiplier is
//! represented by its restriction to a uniform grid, and every reported
//! norm is a certified lower bound indexed by `(N, range)`.

mod optimize;

pub use optimize::{estimate_norm, NormEstimate, OptimizerOptions};

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::funcs::{divdiff_eval, NodeList, ScalarFn};
use crate::schatten::KernelMatrix;

/// Largest tensor that will be materialized densely (2^24 entries).
pub const DENSE_CAP: usize = 1 << 24;

/// Structure tag of a sampled symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structure {
    Dense,
    ToeplitzDiff,
    Product,
}

#[derive(Clone)]
enum SymbolKind {
    Dense(Arc<Vec<Complex64>>),
    Lazy(Arc<dyn Fn(&[usize]) -> Complex64 + Send + Sync>),
    ToeplitzDiff(Arc<ScalarFn>),
    Product(Arc<Vec<SymbolGrid>>),
}

/// An (n+1)-variable symbol sampled on `grid^{n+1}`.
///
/// `arity = n` is the number of kernel-matrix slots of the associated
/// multiplier. Evaluation may be lazy but is always deterministic.
#[derive(Clone)]
pub struct SymbolGrid {
    arity: usize,
    grid: Arc<Vec<f64>>,
    kind: SymbolKind,
}

impl std::fmt::Debug for SymbolGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymbolGrid")
            .field("arity", &self.arity)
            .field("n", &self.grid.len())
            .field("structure", &self.structure())
            .finish()
    }
}

impl SymbolGrid {
    pub fn from_fn(
        grid: Arc<Vec<f64>>,
        arity: usize,
        f: impl Fn(&[usize]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        assert!(!grid.is_empty());
        SymbolGrid {
            arity,
            grid,
            kind: SymbolKind::Lazy(Arc::new(f)),
        }
    }

    pub fn from_dense(grid: Arc<Vec<f64>>, arity: usize, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), grid.len().pow(arity as u32 + 1));
        SymbolGrid {
            arity,
            grid,
            kind: SymbolKind::Dense(Arc::new(values)),
        }
    }

    pub fn constant(grid: Arc<Vec<f64>>, arity: usize, c: Complex64) -> Self {
        SymbolGrid::from_fn(grid, arity, move |_| c)
    }

    /// Pointwise product of symbols on the same grid with the same arity.
    pub fn product(parts: Vec<SymbolGrid>) -> Self {
        assert!(!parts.is_empty());
        let arity = parts[0].arity;
        let grid = parts[0].grid.clone();
        assert!(parts.iter().all(|p| p.arity == arity && *p.grid == *grid));
        SymbolGrid {
            arity,
            grid,
            kind: SymbolKind::Product(Arc::new(parts)),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn grid(&self) -> &Arc<Vec<f64>> {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.len()
    }

    pub fn structure(&self) -> Structure {
        match &self.kind {
            SymbolKind::Dense(_) | SymbolKind::Lazy(_) => Structure::Dense,
            SymbolKind::ToeplitzDiff(_) => Structure::ToeplitzDiff,
            SymbolKind::Product(_) => Structure::Product,
        }
    }

    pub fn eval(&self, idx: &[usize]) -> Complex64 {
        debug_assert_eq!(idx.len(), self.arity + 1);
        debug_assert!(idx.iter().all(|&i| i < self.grid.len()));
        match &self.kind {
            SymbolKind::Dense(v) => {
                let n = self.grid.len();
                let mut flat = 0usize;
                for &i in idx {
                    flat = flat * n + i;
                }
                v[flat]
            }
            SymbolKind::Lazy(f) => f(idx),
            SymbolKind::ToeplitzDiff(g) => g.eval(self.grid[idx[0]] - self.grid[idx[1]], 0),
            SymbolKind::Product(parts) => parts.iter().map(|p| p.eval(idx)).product(),
        }
    }

    /// Dense materialization; capped at [`DENSE_CAP`] entries.
    pub fn densify(&self) -> Arc<Vec<Complex64>> {
        if let SymbolKind::Dense(v) = &self.kind {
            return v.clone();
        }
        let n = self.grid.len();
        let len = n.pow(self.arity as u32 + 1);
        assert!(len <= DENSE_CAP, "symbol tensor exceeds dense cap");
        let mut values = Vec::with_capacity(len);
        let mut idx = vec![0usize; self.arity + 1];
        for _ in 0..len {
            values.push(self.eval(&idx));
            for pos in (0..idx.len()).rev() {
                idx[pos] += 1;
                if idx[pos] < n {
                    break;
                }
                idx[pos] = 0;
            }
        }
        Arc::new(values)
    }

    pub fn max_abs(&self) -> f64 {
        self.densify().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Index of the entry with the largest modulus.
    pub fn argmax_abs(&self) -> Vec<usize> {
        let dense = self.densify();
        let (mut best, mut best_flat) = (-1.0, 0usize);
        for (flat, z) in dense.iter().enumerate() {
            if z.norm() > best {
                best = z.norm();
                best_flat = flat;
            }
        }
        let n = self.grid.len();
        let mut idx = vec![0usize; self.arity + 1];
        let mut f = best_flat;
        for pos in (0..=self.arity).rev() {
            idx[pos] = f % n;
            f /= n;
        }
        idx
    }
}

/// Spec of the smooth cutoff `rho_R`.
#[derive(Clone, Copy, Debug)]
pub struct CutoffSpec {
    pub r: f64,
}

impl CutoffSpec {
    pub fn new(r: f64) -> Self {
        assert!(r > 0.0);
        CutoffSpec { r }
    }
}

/// Smooth bump: 1 on `[-R, R]`, 0 outside `[-2R, 2R]`, monotone on each
/// transition band. `rho(xi) = h(2-|u|)/(h(2-|u|)+h(|u|-1))`, `u = xi/R`,
/// `h(t) = exp(-1/t)` for positive t.
pub fn cutoff_rho(spec: CutoffSpec, xi: f64) -> f64 {
    let u = xi.abs() / spec.r;
    if u <= 1.0 {
        return 1.0;
    }
    if u >= 2.0 {
        return 0.0;
    }
    let h = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let a = h(2.0 - u);
    let b = h(u - 1.0);
    a / (a + b)
}

/// Arity-1 symbol `psi(i, j) = g(grid[i] - grid[j])`.
pub fn toeplitz_symbol(g: &ScalarFn, grid: Arc<Vec<f64>>) -> SymbolGrid {
    SymbolGrid {
        arity: 1,
        grid,
        kind: SymbolKind::ToeplitzDiff(Arc::new(g.clone())),
    }
}

/// Numerical `||ghat||_1` with its truncation-tail estimate; the two belong
/// together in every report.
#[derive(Clone, Copy, Debug)]
pub struct FourierL1Bound {
    pub value: f64,
    pub tail: f64,
}

/// FFT quadrature of `||ghat||_{L^1}` for `g` sampled on
/// `[-halfwidth, halfwidth)`, convention `ghat(xi) = int g(t) e^{-2 pi i t xi} dt`.
///
/// `tail` is the spectral mass of the top octave `|xi| >= xi_nyquist / 2`;
/// it doubles as the Nyquist check: if it exceeds 1e-3 of the total the
/// sampling cannot resolve g's oscillation.
pub fn fourier_l1_bound(g: &ScalarFn, halfwidth: f64, resolution: usize) -> Result<FourierL1Bound> {
    assert!(halfwidth > 0.0 && resolution >= 16);
    let m = resolution;
    let dt = 2.0 * halfwidth / m as f64;
    let mut buf: Vec<Complex64> = (0..m)
        .map(|i| g.eval(-halfwidth + i as f64 * dt, 0))
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    // |ghat(j/(2W))| = dt * |FFT_j|; the xi-grid spacing is 1/(2W), so the
    // L^1 Riemann sum is (1/m) * sum |FFT_j|.
    let mut value = 0.0;
    let mut tail = 0.0;
    for (j, z) in buf.iter().enumerate() {
        let signed = if j <= m / 2 { j as i64 } else { j as i64 - m as i64 };
        let a = z.norm() / m as f64;
        value += a;
        if signed.unsigned_abs() as usize >= m / 4 {
            tail += a;
        }
    }
    if value > 0.0 && tail > 1e-3 * value {
        return Err(Error::ResolutionTooLow { value, tail });
    }
    Ok(FourierL1Bound { value, tail })
}

/// Block-diagonal indicator `b_{r_1..r_n, l}`: 1 iff `t_0` lies in the unit
/// cell `[l, l+1)` and each `t_m` lies in `[l + r_1 + .. + r_m, +1)`.
pub fn block_indicator(r_list: &[i64], l: i64, grid: Arc<Vec<f64>>) -> SymbolGrid {
    let offsets: Vec<i64> = std::iter::once(0)
        .chain(r_list.iter().scan(0i64, |acc, &r| {
            *acc += r;
            Some(*acc)
        }))
        .collect();
    let g = grid.clone();
    SymbolGrid::from_fn(grid, r_list.len(), move |idx| {
        for (m, &i) in idx.iter().enumerate() {
            let lo = (l + offsets[m]) as f64;
            let t = g[i];
            if !(lo <= t && t < lo + 1.0) {
                return Complex64::ZERO;
            }
        }
        Complex64::new(1.0, 0.0)
    })
}

/// `b_{r_1..r_n} = sum_l b_{r_1..r_n, l}`: 1 iff consecutive unit cells
/// differ by exactly `r_m`.
pub fn block_indicator_sum(r_list: &[i64], grid: Arc<Vec<f64>>) -> SymbolGrid {
    let r: Vec<i64> = r_list.to_vec();
    let g = grid.clone();
    SymbolGrid::from_fn(grid, r_list.len(), move |idx| {
        for m in 1..idx.len() {
            let a = g[idx[m - 1]].floor() as i64;
            let b = g[idx[m]].floor() as i64;
            if b - a != r[m - 1] {
                return Complex64::ZERO;
            }
        }
        Complex64::new(1.0, 0.0)
    })
}

/// The n+1 summands of the inductive symbol decomposition of `f^[n]`:
/// for `k = 0..n-1` the off-diagonal pieces
/// `(f^[n-1](.., t_k omitted, ..) - f^[n-1](.., t_{k+1} omitted, ..))
///  * rho_R(t_0-t_1) .. rho_R(t_{k-1}-t_k) * (1-rho_R)(t_k-t_{k+1})/(t_{k+1}-t_k)`,
/// plus the fully diagonal piece `f^[n] * prod rho_R`.
///
/// The components sum pointwise to `f^[n]` at every multi-index: the cutoff
/// factors telescope, and on each off-diagonal piece the difference quotient
/// reproduces `f^[n]` wherever `(1-rho_R)` is nonzero (there `t_k != t_{k+1}`).
pub fn split_symbol(
    f: &ScalarFn,
    n: usize,
    r: f64,
    grid: Arc<Vec<f64>>,
) -> Result<Vec<SymbolGrid>> {
    assert!(n >= 1);
    if f.order() < n {
        return Err(Error::OrderMismatch {
            expected: n,
            got: f.order(),
        });
    }
    let spec = CutoffSpec::new(r);
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..n {
        let f = f.clone();
        let g = grid.clone();
        out.push(SymbolGrid::from_fn(grid.clone(), n, move |idx| {
            let t: Vec<f64> = idx.iter().map(|&i| g[i]).collect();
            let u = t[k] - t[k + 1];
            let omr = 1.0 - cutoff_rho(spec, u);
            if omr == 0.0 {
                return Complex64::ZERO;
            }
            let mut rho_prod = 1.0;
            for m in 1..=k {
                rho_prod *= cutoff_rho(spec, t[m - 1] - t[m]);
                if rho_prod == 0.0 {
                    return Complex64::ZERO;
                }
            }
            let omit = |skip: usize| -> Complex64 {
                let nodes: Vec<f64> = t
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                divdiff_eval(&f, &NodeList::new(nodes), n - 1).expect("order checked")
            };
            let diff = omit(k) - omit(k + 1);
            // (1-rho)(t_k - t_{k+1}) / (t_{k+1} - t_k) = -omr / u
            diff * (rho_prod * (-omr / u))
        }));
    }
    let f = f.clone();
    let g = grid.clone();
    out.push(SymbolGrid::from_fn(grid, n, move |idx| {
        let t: Vec<f64> = idx.iter().map(|&i| g[i]).collect();
        let mut rho_prod = 1.0;
        for m in 1..=n {
            rho_prod *= cutoff_rho(spec, t[m - 1] - t[m]);
            if rho_prod == 0.0 {
                return Complex64::ZERO;
            }
        }
        divdiff_eval(&f, &NodeList::new(t), n).expect("order checked") * rho_prod
    }));
    Ok(out)
}

/// `phi_{alpha,lambda}(t) = sum_k alpha[k] phi(lambda t - k)`, with
/// derivatives inherited termwise and the support computed from phi's.
///
/// `alpha` is the coefficient slice for `k = alpha_start, alpha_start+1, ..`.
pub fn phi_alpha_lambda(
    phi: &ScalarFn,
    alpha_start: i64,
    alpha: &[f64],
    lambda: f64,
) -> ScalarFn {
    assert!(lambda > 0.0);
    let (s0, s1) = phi
        .support_hint()
        .expect("phi_alpha_lambda requires a compactly supported phi");
    let support = if alpha.iter().all(|&a| a == 0.0) || alpha.is_empty() {
        (0.0, 0.0)
    } else {
        let ks: Vec<i64> = alpha
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0.0)
            .map(|(i, _)| alpha_start + i as i64)
            .collect();
        let kmin = *ks.iter().min().unwrap() as f64;
        let kmax = *ks.iter().max().unwrap() as f64;
        ((s0 + kmin) / lambda, (s1 + kmax) / lambda)
    };
    let phi = phi.clone();
    let alpha = alpha.to_vec();
    ScalarFn::new(phi.order(), Some(support), move |t, d| {
        let mut acc = Complex64::ZERO;
        for (i, &a) in alpha.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let k = (alpha_start + i as i64) as f64;
            acc += a * phi.eval(lambda * t - k, d);
        }
        acc * lambda.powi(d as i32)
    })
}

/// The discrete multilinear Schur contraction
/// `out[i_0, i_n] = sum_{i_1..i_{n-1}} psi(i_0..i_n) x_1[i_0,i_1] .. x_n[i_{n-1},i_n]`.
///
/// For n = 1 this is the entrywise (Hadamard) product with the symbol matrix.
pub fn apply_schur(psi: &SymbolGrid, xs: &[KernelMatrix]) -> Result<KernelMatrix> {
    let n = psi.arity();
    if xs.len() != n {
        return Err(Error::ArityMismatch {
            expected: n,
            got: xs.len(),
        });
    }
    for x in xs {
        if x.grid().len() != psi.n() || !(Arc::ptr_eq(x.grid(), psi.grid()) || **x.grid() == **psi.grid()) {
            return Err(Error::GridMismatch);
        }
    }
    let dense = psi.densify();
    let mats: Vec<&DMatrix<Complex64>> = xs.iter().map(|x| x.entries()).collect();
    let out = contract_dense(&dense, n, psi.n(), &mats);
    KernelMatrix::new(out, psi.grid().clone())
}

/// Dense contraction used by both `apply_schur` and the optimizer.
pub(crate) fn contract_dense(
    psi: &[Complex64],
    n: usize,
    size: usize,
    xs: &[&DMatrix<Complex64>],
) -> DMatrix<Complex64> {
    let mut out = DMatrix::<Complex64>::zeros(size, size);
    match n {
        1 => {
            for i in 0..size {
                for j in 0..size {
                    out[(i, j)] = psi[i * size + j] * xs[0][(i, j)];
                }
            }
        }
        2 => {
            for i0 in 0..size {
                for i1 in 0..size {
                    let a = xs[0][(i0, i1)];
                    if a == Complex64::ZERO {
                        continue;
                    }
                    let base = (i0 * size + i1) * size;
                    for i2 in 0..size {
                        out[(i0, i2)] += psi[base + i2] * a * xs[1][(i1, i2)];
                    }
                }
            }
        }
        _ => {
            let mut idx = vec![0usize; n + 1];
            for (flat, &c) in psi.iter().enumerate() {
                if c != Complex64::ZERO {
                    decode_index(flat, size, &mut idx);
                    let mut w = c;
                    for m in 1..=n {
                        w *= xs[m - 1][(idx[m - 1], idx[m])];
                        if w == Complex64::ZERO {
                            break;
                        }
                    }
                    out[(idx[0], idx[n])] += w;
                }
            }
        }
    }
    out
}

pub(crate) fn decode_index(mut flat: usize, size: usize, idx: &mut [usize]) {
    for pos in (0..idx.len()).rev() {
        idx[pos] = flat % size;
        flat /= size;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schatten::{schatten_norm, SchattenP};
    use crate::util::{complex_normal, stream_rng, uniform_grid};

    #[test]
    fn constant_symbol_factors_out() {
        let grid = uniform_grid(4, 4.0);
        let mut rng = stream_rng(1, 0);
        let x1 = KernelMatrix::from_fn(grid.clone(), |_, _| complex_normal(&mut rng));
        let x2 = KernelMatrix::from_fn(grid.clone(), |_, _| complex_normal(&mut rng));
        let c = Complex64::new(2.5, -0.5);
        let psi = SymbolGrid::constant(grid.clone(), 2, c);
        let out = apply_schur(&psi, &[x1.clone(), x2.clone()]).unwrap();
        let expect = (x1.entries() * x2.entries()) * c;
        assert!((out.entries() - expect).norm() < 1e-12);
    }

    #[test]
    fn delta_symbol_extracts_diagonal() {
        let grid = uniform_grid(5, 5.0);
        let mut rng = stream_rng(2, 0);
        let x = KernelMatrix::from_fn(grid.clone(), |_, _| complex_normal(&mut rng));
        let psi = SymbolGrid::from_fn(grid.clone(), 1, |idx| {
            if idx[0] == idx[1] {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::ZERO
            }
        });
        let out = apply_schur(&psi, &[x.clone()]).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j { x.entries()[(i, j)] } else { Complex64::ZERO };
                assert_eq!(out.entries()[(i, j)], expect);
            }
        }
    }

    #[test]
    fn middle_index_symbol_hand_sum() {
        // n=2, N=2, psi = value of middle index, x1 = x2 = all-ones:
        // out[i0,i2] = sum_{i1} i1 = 1 at every entry.
        let grid = uniform_grid(2, 2.0);
        let ones = KernelMatrix::from_fn(grid.clone(), |_, _| Complex64::new(1.0, 0.0));
        let psi = SymbolGrid::from_fn(grid.clone(), 2, |idx| Complex64::new(idx[1] as f64, 0.0));
        let out = apply_schur(&psi, &[ones.clone(), ones]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(out.entries()[(i, j)].re, 1.0);
            }
        }
    }

    #[test]
    fn mismatches_are_rejected() {
        let grid = uniform_grid(4, 4.0);
        let other = uniform_grid(4, 8.0);
        let x = KernelMatrix::zeros(other);
        let psi = SymbolGrid::constant(grid.clone(), 1, Complex64::new(1.0, 0.0));
        assert!(matches!(
            apply_schur(&psi, &[x]),
            Err(Error::GridMismatch)
        ));
        let y = KernelMatrix::zeros(grid);
        assert!(matches!(
            apply_schur(&psi, &[y.clone(), y]),
            Err(Error::ArityMismatch { .. })
        ));
    }

    #[test]
    fn s2_contraction_bound() {
        // ||T_psi(xs)||_2 <= max|psi| prod ||x_i||_2
        let grid = uniform_grid(6, 6.0);
        for seed in 0..10 {
            let mut rng = stream_rng(40 + seed, 0);
            let vals: Vec<Complex64> = (0..6usize.pow(3)).map(|_| complex_normal(&mut rng)).collect();
            let psi = SymbolGrid::from_dense(grid.clone(), 2, vals);
            let x1 = KernelMatrix::from_fn(grid.clone(), |_, _| complex_normal(&mut rng));
            let x2 = KernelMatrix::from_fn(grid.clone(), |_, _| complex_normal(&mut rng));
            let out = apply_schur(&psi, &[x1.clone(), x2.clone()]).unwrap();
            let lhs = schatten_norm(&out, SchattenP::finite(2.0));
            let rhs = psi.max_abs()
                * schatten_norm(&x1, SchattenP::finite(2.0))
                * schatten_norm(&x2, SchattenP::finite(2.0));
            assert!(lhs <= rhs + 1e-9, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn cutoff_rho_plateau_and_support() {
        let s1 = CutoffSpec::new(1.0);
        assert_eq!(cutoff_rho(s1, 0.0), 1.0);
        assert_eq!(cutoff_rho(s1, 3.0), 0.0);
        assert_eq!(cutoff_rho(CutoffSpec::new(2.0), -2.0), 1.0);
        let v = cutoff_rho(s1, 1.5);
        assert!(v > 0.0 && v < 1.0);
    }

    #[test]
    fn toeplitz_symbol_structure_and_values() {
        let grid = uniform_grid(4, 4.0);
        let ones = toeplitz_symbol(&ScalarFn::constant(1.0, 0), grid.clone());
        assert_eq!(ones.structure(), Structure::ToeplitzDiff);
        assert_eq!(ones.eval(&[2, 3]).re, 1.0);
        // rho with grid spacing > 2R: support only on the diagonal
        let rho = toeplitz_symbol(&ScalarFn::cutoff(0.4, 0), grid.clone());
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_eq!(rho.eval(&[i, j]).re, expect);
            }
        }
        // (1 - rho_1(t))/t at t = 0 -> 0
        let g = ScalarFn::one_minus_cutoff_over_t(1.0, 0);
        let sym = toeplitz_symbol(&g, grid);
        assert_eq!(sym.eval(&[1, 1]).re, 0.0);
    }

    #[test]
    fn fourier_l1_gaussian_is_one() {
        let g = ScalarFn::gaussian(0);
        let b = fourier_l1_bound(&g, 40.0, 1 << 14).unwrap();
        assert!((b.value - 1.0).abs() < 1e-6, "value {}", b.value);
        assert!(b.tail < 1e-9);
    }

    #[test]
    fn fourier_l1_zero_and_self_consistency() {
        let z = ScalarFn::zero(0);
        let b = fourier_l1_bound(&z, 10.0, 1 << 10).unwrap();
        assert_eq!(b.value, 0.0);
        let rho = ScalarFn::cutoff(1.0, 0);
        let b1 = fourier_l1_bound(&rho, 8.0, 1 << 12).unwrap();
        let b2 = fourier_l1_bound(&rho, 8.0, 1 << 14).unwrap();
        assert!((b1.value - b2.value).abs() < 1e-4);
    }

    #[test]
    fn fourier_l1_flags_undersampling() {
        // A rapidly oscillating function at 16 samples over [-8, 8): aliased.
        let osc = ScalarFn::new(0, None, |t, _| Complex64::new((40.0 * t).sin(), 0.0));
        assert!(matches!(
            fourier_l1_bound(&osc, 8.0, 16),
            Err(Error::ResolutionTooLow { .. })
        ));
    }

    #[test]
    fn block_indicator_cells() {
        let grid = uniform_grid(8, 1.0); // all points in [0, 1)
        let b = block_indicator(&[0], 0, grid.clone());
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(b.eval(&[i, j]).re, 1.0);
            }
        }
        let off = block_indicator(&[5], 0, grid.clone());
        assert_eq!(off.eval(&[0, 0]).re, 0.0);
        // sum over l of b_{r,l} equals b_r on any finite grid
        let grid2 = uniform_grid(12, 3.0);
        let br = block_indicator_sum(&[1], grid2.clone());
        for i in 0..12 {
            for j in 0..12 {
                let total: f64 = (-4..8)
                    .map(|l| block_indicator(&[1], l, grid2.clone()).eval(&[i, j]).re)
                    .sum();
                assert_eq!(total, br.eval(&[i, j]).re);
            }
        }
    }

    #[test]
    fn split_symbol_partitions_exactly() {
        let grid = uniform_grid(10, 5.0);
        let f = ScalarFn::sin(3);
        for n in [2usize, 3] {
            let pieces = split_symbol(&f, n, 1.0, grid.clone()).unwrap();
            assert_eq!(pieces.len(), n + 1);
            let mut idx = vec![0usize; n + 1];
            let mut worst = 0.0f64;
            for flat in 0..grid.len().pow(n as u32 + 1) {
                decode_index(flat, grid.len(), &mut idx);
                let total: Complex64 = pieces.iter().map(|p| p.eval(&idx)).sum();
                let nodes: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
                let expect = divdiff_eval(&f, &NodeList::new(nodes), n).unwrap();
                worst = worst.max((total - expect).norm());
            }
            assert!(worst <= 1e-9, "n={n}: residual {worst}");
        }
    }

    #[test]
    fn split_symbol_large_r_is_all_diagonal() {
        let grid = uniform_grid(6, 3.0);
        let f = ScalarFn::sin(2);
        let n = 2;
        // R beyond the grid diameter: rho == 1 on range, off-diagonal pieces vanish
        let pieces = split_symbol(&f, n, 10.0, grid.clone()).unwrap();
        let mut idx = vec![0usize; n + 1];
        for flat in 0..grid.len().pow(n as u32 + 1) {
            decode_index(flat, grid.len(), &mut idx);
            for p in &pieces[..n] {
                assert_eq!(p.eval(&idx), Complex64::ZERO);
            }
            let nodes: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
            let expect = divdiff_eval(&f, &NodeList::new(nodes), n).unwrap();
            assert!((pieces[n].eval(&idx) - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn split_symbol_spot_value() {
        // n=2, f = t^2, R=1, nodes (0, 0.5, 3): evaluate the k-pieces by hand.
        let grid = Arc::new(vec![0.0, 0.5, 3.0]);
        let f = ScalarFn::monomial(2, 2);
        let pieces = split_symbol(&f, 2, 1.0, grid.clone()).unwrap();
        let idx = [0usize, 1, 2];
        let spec = CutoffSpec::new(1.0);
        // k=0: (f^[1](0.5,3) - f^[1](0,3)) * (1-rho)(0-0.5)/(0.5-0) = 0 since |0-0.5|<=1
        assert_eq!(pieces[0].eval(&idx), Complex64::ZERO);
        // k=1: (f^[1](0,3) - f^[1](0,0.5)) * rho(0-0.5) * (1-rho)(0.5-3)/(3-0.5)
        let omr = 1.0 - cutoff_rho(spec, -2.5);
        let expect = ((0.0 + 3.0) - (0.0 + 0.5)) * 1.0 * omr / 2.5;
        assert!((pieces[1].eval(&idx).re - expect).abs() < 1e-12);
        // diagonal piece: f^[2] * rho(-0.5) * rho(-2.5) = 1 * 1 * rho(-2.5)
        let expect_diag = cutoff_rho(spec, -2.5);
        assert!((pieces[2].eval(&idx).re - expect_diag).abs() < 1e-12);
        // and the three pieces sum to f^[2] = 1
        let total: Complex64 = pieces.iter().map(|p| p.eval(&idx)).sum();
        assert!((total.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phi_alpha_examples() {
        let phi = ScalarFn::bump(0.0, 1.0, 3);
        // alpha = delta_0, lambda = 1: phi itself
        let same = phi_alpha_lambda(&phi, 0, &[1.0], 1.0);
        for t in [-0.9, -0.3, 0.0, 0.4, 0.8] {
            assert!((same.eval(t, 1) - phi.eval(t, 1)).norm() < 1e-14);
        }
        // alpha = 0: zero function
        let zero = phi_alpha_lambda(&phi, -2, &[0.0, 0.0, 0.0], 2.0);
        assert_eq!(zero.value(0.3), Complex64::ZERO);
        // translation structure: alpha = delta_k
        let shifted = phi_alpha_lambda(&phi, 3, &[1.0], 1.0);
        assert!((shifted.value(3.2) - phi.value(0.2)).norm() < 1e-15);
    }

    #[test]
    fn phi_alpha_dilation_identity() {
        // phi_{alpha,lambda}^[n](t) = lambda^n phi_{alpha,1}^[n](lambda t)
        let phi = ScalarFn::bump(0.0, 1.0, 4);
        let alpha = [0.7, -0.4, 1.1];
        let lambda = 2.0;
        let fl = phi_alpha_lambda(&phi, -1, &alpha, lambda);
        let f1 = phi_alpha_lambda(&phi, -1, &alpha, 1.0);
        let n = 3;
        let nodes = [0.21, -0.4, 0.55, 0.9];
        let scaled: Vec<f64> = nodes.iter().map(|&t| lambda * t).collect();
        let lhs = divdiff_eval(&fl, &NodeList::new(nodes.to_vec()), n).unwrap();
        let rhs = divdiff_eval(&f1, &NodeList::new(scaled), n).unwrap()
            * lambda.powi(n as i32);
        assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
    }

    #[test]
    fn translation_covariance() {
        // (tau_k f)^[n] = tau_k (f^[n]) pointwise
        let f = ScalarFn::bump(0.0, 2.0, 3);
        let k = 1.25;
        let fk = f.translate(k);
        let nodes = [0.3, -0.7, 1.1, 0.9];
        let shifted: Vec<f64> = nodes.iter().map(|&t| t - k).collect();
        let a = divdiff_eval(&fk, &NodeList::new(nodes.to_vec()), 3).unwrap();
        let b = divdiff_eval(&f, &NodeList::new(shifted), 3).unwrap();
        assert!((a - b).norm() <= 1e-10 * (1.0 + b.norm()));
    }
}
