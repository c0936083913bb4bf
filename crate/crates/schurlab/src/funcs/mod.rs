//! Scalar functions with analytic derivatives, confluent divided differences,
//! and stars-and-bars composition enumeration.

mod jet;

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::schur::SymbolGrid;
use crate::util::factorial;
use jet::{h_bump, Jet};

/// A function together with its derivatives up to a declared order.
///
/// `eval(t, d)` returns the d-th derivative at `t`; construction guarantees
/// `d <= order` is meaningful. When a support hint is present the function
/// (and every derivative) is identically zero outside it; `eval` enforces
/// this so closures do not have to.
#[derive(Clone)]
pub struct ScalarFn {
    order: usize,
    support: Option<(f64, f64)>,
    eval: Arc<dyn Fn(f64, usize) -> Complex64 + Send + Sync>,
}

impl std::fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarFn")
            .field("order", &self.order)
            .field("support", &self.support)
            .finish()
    }
}

impl ScalarFn {
    pub fn new(
        order: usize,
        support: Option<(f64, f64)>,
        eval: impl Fn(f64, usize) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        ScalarFn {
            order,
            support,
            eval: Arc::new(eval),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn support_hint(&self) -> Option<(f64, f64)> {
        self.support
    }

    /// d-th derivative at t. Panics if `d > order`.
    pub fn eval(&self, t: f64, d: usize) -> Complex64 {
        assert!(
            d <= self.order,
            "derivative order {} exceeds declared order {}",
            d,
            self.order
        );
        if let Some((a, b)) = self.support {
            if t < a || t > b {
                return Complex64::ZERO;
            }
        }
        (self.eval)(t, d)
    }

    pub fn value(&self, t: f64) -> Complex64 {
        self.eval(t, 0)
    }

    pub fn zero(order: usize) -> Self {
        ScalarFn::new(order, None, |_, _| Complex64::ZERO)
    }

    pub fn constant(c: f64, order: usize) -> Self {
        ScalarFn::new(order, None, move |_, d| {
            if d == 0 {
                Complex64::new(c, 0.0)
            } else {
                Complex64::ZERO
            }
        })
    }

    /// Polynomial with real coefficients, `coeffs[k] t^k`.
    pub fn poly(coeffs: &[f64], order: usize) -> Self {
        let coeffs = coeffs.to_vec();
        ScalarFn::new(order, None, move |t, d| {
            let mut acc = 0.0;
            for (k, &c) in coeffs.iter().enumerate().skip(d) {
                // d-th derivative of t^k: k!/(k-d)! t^{k-d}
                let fall: f64 = (k - d + 1..=k).map(|i| i as f64).product();
                acc += c * fall * t.powi((k - d) as i32);
            }
            Complex64::new(acc, 0.0)
        })
    }

    pub fn monomial(m: usize, order: usize) -> Self {
        let mut coeffs = vec![0.0; m + 1];
        coeffs[m] = 1.0;
        ScalarFn::poly(&coeffs, order)
    }

    pub fn sin(order: usize) -> Self {
        ScalarFn::new(order, None, |t, d| {
            Complex64::new((t + d as f64 * std::f64::consts::FRAC_PI_2).sin(), 0.0)
        })
    }

    pub fn cos(order: usize) -> Self {
        ScalarFn::new(order, None, |t, d| {
            Complex64::new((t + d as f64 * std::f64::consts::FRAC_PI_2).cos(), 0.0)
        })
    }

    /// `exp(-t^2/2)`; unnormalized Gaussian.
    pub fn gaussian(order: usize) -> Self {
        ScalarFn::new(order, None, move |t, d| {
            let arg = Jet::var(t, d + 1);
            let g = arg.mul(&arg).scale(-0.5).exp();
            Complex64::new(g.derivative(d), 0.0)
        })
    }

    /// Smooth bump `exp(-1/(1-u^2))` for `u = (t-center)/halfwidth`, zero
    /// outside `|u| < 1`. C-infinity with compact support.
    pub fn bump(center: f64, halfwidth: f64, order: usize) -> Self {
        assert!(halfwidth > 0.0);
        ScalarFn::new(
            order,
            Some((center - halfwidth, center + halfwidth)),
            move |t, d| {
                let u = Jet::var(t, d + 1)
                    .sub(&Jet::constant(center, d + 1))
                    .scale(1.0 / halfwidth);
                let v = Jet::constant(1.0, d + 1).sub(&u.mul(&u));
                if v.c[0] <= 0.0 {
                    return Complex64::ZERO;
                }
                let g = Jet::constant(1.0, d + 1).div(&v).neg().exp();
                Complex64::new(g.derivative(d), 0.0)
            },
        )
    }

    /// The canonical smooth cutoff `rho_R`: 1 on `[-R, R]`, 0 outside
    /// `[-2R, 2R]`, built from the partition `h(2-|u|)/(h(2-|u|)+h(|u|-1))`
    /// with `h(t) = exp(-1/t)`.
    pub fn cutoff(r: f64, order: usize) -> Self {
        assert!(r > 0.0);
        ScalarFn::new(order, Some((-2.0 * r, 2.0 * r)), move |t, d| {
            Complex64::new(cutoff_jet(r, t, d + 1).derivative(d), 0.0)
        })
    }

    /// `G(t) = (1 - rho_R(t))/t`, with `G(0) = 0`. Smooth: the numerator
    /// vanishes identically on `[-R, R]`.
    pub fn one_minus_cutoff_over_t(r: f64, order: usize) -> Self {
        assert!(r > 0.0);
        ScalarFn::new(order, None, move |t, d| {
            if t.abs() <= r {
                return Complex64::ZERO;
            }
            let len = d + 1;
            let num = Jet::constant(1.0, len).sub(&cutoff_jet(r, t, len));
            let g = num.div(&Jet::var(t, len));
            Complex64::new(g.derivative(d), 0.0)
        })
    }

    /// `t -> f(t - k)`.
    pub fn translate(&self, k: f64) -> Self {
        let inner = self.clone();
        let support = self.support.map(|(a, b)| (a + k, b + k));
        ScalarFn::new(self.order, support, move |t, d| inner.eval(t - k, d))
    }

    /// `t -> f(lambda t)`, derivatives picking up `lambda^d`.
    pub fn dilate(&self, lambda: f64) -> Self {
        assert!(lambda != 0.0);
        let inner = self.clone();
        let support = self.support.map(|(a, b)| {
            let (x, y) = (a / lambda, b / lambda);
            (x.min(y), x.max(y))
        });
        ScalarFn::new(self.order, support, move |t, d| {
            lambda.powi(d as i32) * inner.eval(lambda * t, d)
        })
    }

    /// `t -> c * f(t)`.
    pub fn scale(&self, c: f64) -> Self {
        let inner = self.clone();
        ScalarFn::new(self.order, self.support, move |t, d| c * inner.eval(t, d))
    }
}

fn cutoff_jet(r: f64, t: f64, len: usize) -> Jet {
    let u = t.abs() / r;
    if u <= 1.0 {
        return Jet::constant(1.0, len);
    }
    if u >= 2.0 {
        return Jet::constant(0.0, len);
    }
    // On (1, 2) the cutoff is smooth in |t|; chain through the sign of t.
    let sign = if t >= 0.0 { 1.0 } else { -1.0 };
    let uj = Jet::var(t, len).scale(sign / r);
    let a = h_bump(&Jet::constant(2.0, len).sub(&uj));
    let b = h_bump(&uj.sub(&Jet::constant(1.0, len)));
    a.div(&a.add(&b))
}

/// Divided-difference nodes with a coincidence tolerance.
///
/// Two nodes are treated as coincident iff their distance is at most
/// `coincidence_tol`; coincident groups consume derivatives in the confluent
/// Newton table. Near-coincident nodes above the tolerance go through the
/// subtractive formula, with the cancellation that entails.
#[derive(Clone, Debug)]
pub struct NodeList {
    pub nodes: Vec<f64>,
    pub coincidence_tol: f64,
}

pub const DEFAULT_COINCIDENCE_TOL: f64 = 1e-12;

impl NodeList {
    pub fn new(nodes: Vec<f64>) -> Self {
        assert!(!nodes.is_empty());
        NodeList {
            nodes,
            coincidence_tol: DEFAULT_COINCIDENCE_TOL,
        }
    }

    pub fn with_tol(nodes: Vec<f64>, coincidence_tol: f64) -> Self {
        assert!(!nodes.is_empty() && coincidence_tol >= 0.0);
        NodeList {
            nodes,
            coincidence_tol,
        }
    }
}

/// A composition of `total` into `parts.len()` nonnegative parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Composition {
    pub parts: Vec<usize>,
    pub total: usize,
}

/// Confluent divided difference `f^[k](t_0, ..., t_k)`.
///
/// Nodes are sorted internally, so the result is exactly permutation
/// invariant. Coincident groups (within the node list's tolerance) are
/// snapped to a representative and filled with `f^(j)/j!` in the Newton
/// table.
pub fn divdiff_eval(f: &ScalarFn, nodes: &NodeList, k: usize) -> Result<Complex64> {
    if nodes.nodes.len() != k + 1 {
        return Err(Error::OrderMismatch {
            expected: k + 1,
            got: nodes.nodes.len(),
        });
    }
    let mut z: Vec<f64> = nodes.nodes.clone();
    z.sort_by(|a, b| a.partial_cmp(b).expect("NaN node"));
    // Snap coincident runs to their first element.
    let tol = nodes.coincidence_tol;
    let mut rep = z[0];
    let mut mult = 1usize;
    let mut max_mult = 1usize;
    for i in 1..z.len() {
        if (z[i] - z[i - 1]).abs() <= tol {
            z[i] = rep;
            mult += 1;
            max_mult = max_mult.max(mult);
        } else {
            rep = z[i];
            mult = 1;
        }
    }
    if max_mult > 0 && f.order() + 1 < max_mult {
        return Err(Error::InsufficientDerivatives {
            multiplicity: max_mult,
            required: max_mult - 1,
            available: f.order(),
        });
    }
    // Confluent Newton table, column by column.
    let mut col: Vec<Complex64> = z.iter().map(|&t| f.eval(t, 0)).collect();
    for j in 1..=k {
        let mut next = Vec::with_capacity(col.len() - 1);
        for i in 0..col.len() - 1 {
            let lo = z[i];
            let hi = z[i + j];
            if lo == hi {
                next.push(f.eval(lo, j) / factorial(j));
            } else {
                next.push((col[i + 1] - col[i]) / (hi - lo));
            }
        }
        col = next;
    }
    Ok(col[0])
}

/// Tabulates `f^[k]` on `grid^{k+1}` as a lazily evaluated symbol.
///
/// Repeated multi-indices repeat grid values exactly and take the confluent
/// path, so `k <= f.order` is required.
pub fn divdiff_grid(f: &ScalarFn, grid: Arc<Vec<f64>>, k: usize) -> Result<SymbolGrid> {
    if k > f.order() {
        return Err(Error::OrderMismatch {
            expected: f.order(),
            got: k,
        });
    }
    assert!(
        grid.windows(2).all(|w| w[0] < w[1]),
        "grid must be strictly increasing"
    );
    let f = f.clone();
    let g = grid.clone();
    Ok(SymbolGrid::from_fn(grid, k, move |idx: &[usize]| {
        let nodes = NodeList::new(idx.iter().map(|&i| g[i]).collect());
        divdiff_eval(&f, &nodes, idx.len() - 1).expect("order checked at construction")
    }))
}

/// All compositions of `total` into `slots` nonnegative parts, first part
/// descending (so the list starts at `(total, 0, ..)` and ends at
/// `(0, .., total)`); cardinality `C(total+slots-1, slots-1)`.
pub fn enumerate_compositions(slots: usize, total: usize) -> Vec<Composition> {
    assert!(slots >= 1);
    let mut out = Vec::new();
    let mut parts = vec![0usize; slots];
    fn rec(parts: &mut Vec<usize>, pos: usize, remaining: usize, out: &mut Vec<Composition>) {
        if pos + 1 == parts.len() {
            parts[pos] = remaining;
            out.push(Composition {
                parts: parts.clone(),
                total: parts.iter().sum(),
            });
            return;
        }
        for v in (0..=remaining).rev() {
            parts[pos] = v;
            rec(parts, pos + 1, remaining - v, out);
        }
    }
    rec(&mut parts, 0, total, &mut out);
    out
}
