//! Fourier series on the circle, monomial divided-difference expansions,
//! U-twisted multiple operator integrals, and Cayley transfer between the
//! line and the circle.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::funcs::{divdiff_eval, enumerate_compositions, NodeList, ScalarFn};
use crate::schatten::KernelMatrix;

/// Finitely supported Fourier coefficients on `Z^{arity+1}`.
///
/// `arity = 0` is a single-variable series (tuples of length 1); `arity = n`
/// is a symbol series on the (n+1)-torus.
#[derive(Clone, Debug, Default)]
pub struct FourierSeries {
    arity: usize,
    coeffs: BTreeMap<Vec<i64>, Complex64>,
}

impl FourierSeries {
    pub fn new(arity: usize) -> Self {
        FourierSeries {
            arity,
            coeffs: BTreeMap::new(),
        }
    }

    /// Single-variable series from `(k, coefficient)` pairs.
    pub fn univariate(terms: &[(i64, Complex64)]) -> Self {
        let mut s = FourierSeries::new(0);
        for &(k, c) in terms {
            s.add_term(vec![k], c);
        }
        s
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn add_term(&mut self, tuple: Vec<i64>, c: Complex64) {
        assert_eq!(tuple.len(), self.arity + 1);
        if c == Complex64::ZERO {
            return;
        }
        let entry = self.coeffs.entry(tuple).or_insert(Complex64::ZERO);
        *entry += c;
        if *entry == Complex64::ZERO {
            // keep the support honest after cancellation
            let key: Vec<Vec<i64>> = self
                .coeffs
                .iter()
                .filter(|(_, v)| **v == Complex64::ZERO)
                .map(|(k, _)| k.clone())
                .collect();
            for k in key {
                self.coeffs.remove(&k);
            }
        }
    }

    pub fn coeffs(&self) -> &BTreeMap<Vec<i64>, Complex64> {
        &self.coeffs
    }

    pub fn support_size(&self) -> usize {
        self.coeffs.len()
    }

    /// Largest |k_i| over the support.
    pub fn truncation(&self) -> i64 {
        self.coeffs
            .keys()
            .flat_map(|t| t.iter().map(|k| k.abs()))
            .max()
            .unwrap_or(0)
    }

    /// `(sum |c|^p)^{1/p}`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        assert!(p > 0.0);
        self.coeffs
            .values()
            .map(|c| c.norm().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }

    /// Evaluates the series as a function at torus points.
    pub fn eval_at(&self, zs: &[Complex64]) -> Complex64 {
        assert_eq!(zs.len(), self.arity + 1);
        let mut acc = Complex64::ZERO;
        for (tuple, &c) in &self.coeffs {
            let mut term = c;
            for (z, &k) in zs.iter().zip(tuple) {
                term *= z.powi(k as i32);
            }
            acc += term;
        }
        acc
    }

    /// Terms as `(tuple, re, im)` rows for serialization.
    pub fn to_terms(&self) -> Vec<(Vec<i64>, f64, f64)> {
        self.coeffs
            .iter()
            .map(|(t, c)| (t.clone(), c.re, c.im))
            .collect()
    }
}

/// `U = diag(e^{i theta_j})`.
#[derive(Clone, Debug)]
pub struct DiagonalUnitary {
    phases: Vec<f64>,
}

impl DiagonalUnitary {
    pub fn new(phases: Vec<f64>) -> Self {
        assert!(!phases.is_empty());
        DiagonalUnitary { phases }
    }

    /// Discretization of the multiplication operator by Cayley transfer:
    /// `U = G^{-1}(H)` for `H = diag(grid)`.
    pub fn from_grid_cayley(grid: &[f64]) -> Self {
        DiagonalUnitary {
            phases: grid.iter().map(|&t| cayley(t).arg()).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.phases.len()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    fn phase_pow(&self, i: usize, k: i64) -> Complex64 {
        Complex64::from_polar(1.0, k as f64 * self.phases[i])
    }
}

/// The U-twisted sum `sum psihat(k_0..k_n) U^{k_0} x_1 U^{k_1} .. x_n U^{k_n}`.
pub fn moi_apply(
    psihat: &FourierSeries,
    u: &DiagonalUnitary,
    xs: &[KernelMatrix],
) -> Result<KernelMatrix> {
    let n = psihat.arity();
    if xs.len() != n {
        return Err(Error::ArityMismatch {
            expected: n,
            got: xs.len(),
        });
    }
    let size = u.n();
    for x in xs {
        if x.n() != size {
            return Err(Error::DimensionMismatch {
                expected: size,
                got: x.n(),
            });
        }
    }
    let mut out = DMatrix::<Complex64>::zeros(size, size);
    for (tuple, &c) in psihat.coeffs() {
        // U^{k_0} x_1: row scaling; then alternately column-scale and multiply.
        let mut acc = xs[0].entries().clone();
        for i in 0..size {
            let ph = u.phase_pow(i, tuple[0]);
            for j in 0..size {
                acc[(i, j)] *= ph;
            }
        }
        for m in 1..=n {
            for j in 0..size {
                let ph = u.phase_pow(j, tuple[m]);
                for i in 0..size {
                    acc[(i, j)] *= ph;
                }
            }
            if m < n {
                acc = acc * xs[m].entries();
            }
        }
        out += acc * c;
    }
    KernelMatrix::new(out, xs[0].grid().clone())
}

/// Fourier expansion of `(z^k)^{[n]}` on the torus.
///
/// For `k >= n`: unit coefficients on all exponent tuples summing to `k - n`.
/// For `0 <= k < n`: empty. For `k < 0`: coefficients `(-1)^n` on the tuples
/// `(-a_0 - 1, .., -a_n - 1)` with `sum a_i = |k| - 1`.
pub fn monomial_divdiff_coeffs(k: i64, n: usize) -> FourierSeries {
    let mut s = FourierSeries::new(n);
    if k >= 0 {
        if (k as usize) < n {
            return s;
        }
        for comp in enumerate_compositions(n + 1, k as usize - n) {
            s.add_term(
                comp.parts.iter().map(|&a| a as i64).collect(),
                Complex64::new(1.0, 0.0),
            );
        }
    } else {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        for comp in enumerate_compositions(n + 1, (-k) as usize - 1) {
            s.add_term(
                comp.parts.iter().map(|&a| -(a as i64) - 1).collect(),
                Complex64::new(sign, 0.0),
            );
        }
    }
    s
}

/// Linear combination `sum_k phihat(k) (z^k)^{[n]}` for a single-variable
/// series. The lp norms of the result are available via
/// [`FourierSeries::lp_norm`].
pub fn divdiff_fourier(phihat: &FourierSeries, n: usize) -> FourierSeries {
    assert_eq!(phihat.arity(), 0, "divdiff_fourier takes an arity-0 series");
    let mut out = FourierSeries::new(n);
    for (tuple, &c) in phihat.coeffs() {
        let mono = monomial_divdiff_coeffs(tuple[0], n);
        for (t, &m) in mono.coeffs() {
            out.add_term(t.clone(), c * m);
        }
    }
    out
}

/// `G^{-1}: R -> T \ {1}`, `lambda -> (lambda + i)/(lambda - i)`.
pub fn cayley(lambda: f64) -> Complex64 {
    (Complex64::new(lambda, 1.0)) / (Complex64::new(lambda, -1.0))
}

/// `G: T \ {1} -> R`, `z -> i(z+1)/(z-1)`; inverse of [`cayley`].
pub fn cayley_inv(z: Complex64) -> Result<f64> {
    if (z - Complex64::new(1.0, 0.0)).norm() <= 1e-12 {
        return Err(Error::PoleAtOne);
    }
    debug_assert!((z.norm() - 1.0).abs() <= 1e-9, "input must lie on the circle");
    let g = Complex64::i() * (z + 1.0) / (z - 1.0);
    Ok(g.re)
}

/// Newton-table divided difference over distinct complex nodes.
pub fn divdiff_complex(
    f: impl Fn(Complex64) -> Complex64,
    nodes: &[Complex64],
) -> Result<Complex64> {
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if (nodes[i] - nodes[j]).norm() < 1e-13 {
                return Err(Error::NodeCoincidence);
            }
        }
    }
    let mut col: Vec<Complex64> = nodes.iter().map(|&z| f(z)).collect();
    for j in 1..nodes.len() {
        let mut next = Vec::with_capacity(col.len() - 1);
        for i in 0..col.len() - 1 {
            next.push((col[i + 1] - col[i]) / (nodes[i + j] - nodes[i]));
        }
        col = next;
    }
    Ok(col[0])
}

/// Both sides of the Cayley transfer identity for `phi^[n]`.
///
/// `lhs = phi^[n](lambda_0..lambda_n)` on the line. `rhs` transfers through
/// `psi = phi o G` on the circle:
///
/// ```text
/// rhs = (i/2)^n  sum_{k=1}^{n}  sum_{0 = i_0 < .. < i_k = n}
///       psi^[k](z_{i_0}, .., z_{i_k})
///       * prod_{j=1}^{k-1} (z_{i_j} - 1)^2
///       * prod_{l not in {i_1..i_{k-1}}} (z_l - 1)
/// ```
///
/// The shape (interior breakpoints squared, everything else single) follows
/// from the divided-difference chain rule applied to the Moebius map
/// `G^{-1}(lambda) = (lambda+i)/(lambda-i)`, whose block divided differences
/// are `(-1)^m (2i)^{-m} prod (z_l - 1)` over each block; the prefactor
/// `(i/2)^n` is independent of k. Empty interior products are 1.
pub fn cayley_transfer_check(
    phi: &ScalarFn,
    lambda_nodes: &[f64],
) -> Result<(Complex64, Complex64)> {
    let n = lambda_nodes.len() - 1;
    assert!(n >= 1);
    for i in 0..lambda_nodes.len() {
        for j in i + 1..lambda_nodes.len() {
            if (lambda_nodes[i] - lambda_nodes[j]).abs() < 1e-9 {
                return Err(Error::NodeCoincidence);
            }
        }
    }
    let lhs = divdiff_eval(phi, &NodeList::new(lambda_nodes.to_vec()), n)?;

    let zs: Vec<Complex64> = lambda_nodes.iter().map(|&l| cayley(l)).collect();
    let psi = |z: Complex64| -> Complex64 {
        if (z - Complex64::new(1.0, 0.0)).norm() <= 1e-12 {
            // phi is compactly supported: psi extends continuously by 0 at 1
            return Complex64::ZERO;
        }
        let g = Complex64::i() * (z + 1.0) / (z - 1.0);
        phi.eval(g.re, 0)
    };
    let pref = (Complex64::i() / 2.0).powi(n as i32);
    let mut rhs = Complex64::ZERO;
    for k in 1..=n {
        let interior: Vec<usize> = (1..n).collect();
        for combo in combinations(&interior, k - 1) {
            let mut idxs = Vec::with_capacity(k + 1);
            idxs.push(0);
            idxs.extend_from_slice(&combo);
            idxs.push(n);
            let sel: Vec<Complex64> = idxs.iter().map(|&i| zs[i]).collect();
            let dd = divdiff_complex(&psi, &sel)?;
            let mut prod = Complex64::new(1.0, 0.0);
            for &i in &combo {
                prod *= (zs[i] - 1.0) * (zs[i] - 1.0);
            }
            for (l, &z) in zs.iter().enumerate() {
                if !combo.contains(&l) {
                    prod *= z - 1.0;
                }
            }
            rhs += dd * prod;
        }
    }
    rhs *= pref;
    Ok((lhs, rhs))
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        for mut rest in combinations(&items[i + 1..], k - 1) {
            let mut v = vec![x];
            v.append(&mut rest);
            out.push(v);
        }
    }
    out
}
