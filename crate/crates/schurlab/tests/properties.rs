//! Cross-module invariants: the block-diagonal bound, expansion
//! correctness for trig polynomials, layer shape bands, the polynomial
//! correction, and proptest checks of the algebraic identities.

use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use schurlab::funcs::{divdiff_eval, enumerate_compositions, NodeList, ScalarFn};
use schurlab::schatten::{holder_combine, schatten_norm, ExponentTuple, KernelMatrix, SchattenP};
use schurlab::schur::{block_indicator, estimate_norm, OptimizerOptions, SymbolGrid};
use schurlab::torus::{divdiff_complex, divdiff_fourier, FourierSeries};
use schurlab::util::{binomial, complex_normal, stream_rng, uniform_grid};
use schurlab::wavelet::{
    besov_norm, layer, polynomial_correction, wavelet_coeffs, BesovParams, CoeffQuadrature,
    WaveletSystem,
};

// ------------------------------------------------------------- block bound

/// Prop-Diagonal finite check: a sum of disjoint block multipliers is no
/// larger than its largest block.
#[test]
fn block_sum_bounded_by_largest_block() {
    let n_grid = 24;
    let grid = uniform_grid(n_grid, 6.0); // unit cells hold 4 points each
    let exps = ExponentTuple::new(vec![2.0, 2.0]).unwrap();
    assert!(exps.in_main_regime());

    let weights = [0.4, 1.0, 0.65, 0.85];
    let blocks: Vec<SymbolGrid> = weights
        .iter()
        .enumerate()
        .map(|(l, &c)| {
            let b = block_indicator(&[1, 1], l as i64, grid.clone());
            let g = grid.clone();
            let inner = b;
            SymbolGrid::from_fn(g, 2, move |idx| inner.eval(idx) * c)
        })
        .collect();
    let total = {
        let parts = blocks.clone();
        SymbolGrid::from_fn(grid.clone(), 2, move |idx| {
            parts.iter().map(|p| p.eval(idx)).sum()
        })
    };

    let mut opts = OptimizerOptions::with_seed(41);
    opts.restarts = 8;
    opts.max_iters = 120;
    let mut best_block: f64 = 0.0;
    for b in &blocks {
        best_block = best_block.max(estimate_norm(b, &exps, &opts).unwrap().value);
    }
    let whole = estimate_norm(&total, &exps, &opts).unwrap().value;
    assert!(
        whole <= best_block + 2e-2,
        "sum estimate {whole} vs max block {best_block}"
    );
    // each block should be found near its weight
    assert!((best_block - 1.0).abs() < 5e-2, "best block {best_block}");
}

// ------------------------------------------- torus expansion for trig polys

#[test]
fn trig_polynomial_expansion_matches_circle_evaluation() {
    let mut rng = stream_rng(97, 0);
    for n in 1..=3usize {
        for trial in 0..5 {
            let mut phihat = FourierSeries::new(0);
            for _ in 0..6 {
                let k = (trial + 1) as i64 * -1 + (trial as i64)
                    + (stream_next(&mut rng, 17) - 8);
                phihat.add_term(vec![k.clamp(-8, 8)], complex_normal(&mut rng));
            }
            let expanded = divdiff_fourier(&phihat, n);
            for _ in 0..10 {
                let zs: Vec<Complex64> = (0..=n)
                    .map(|_| {
                        Complex64::from_polar(
                            1.0,
                            2.0 * std::f64::consts::PI * schurlab::util::standard_normal(&mut rng),
                        )
                    })
                    .collect();
                if pairwise_close(&zs) {
                    continue;
                }
                let lhs = expanded.eval_at(&zs);
                let ph = phihat.clone();
                let rhs = divdiff_complex(
                    move |z| {
                        ph.coeffs()
                            .iter()
                            .map(|(t, c)| c * z.powi(t[0] as i32))
                            .sum()
                    },
                    &zs,
                )
                .unwrap();
                assert!(
                    (lhs - rhs).norm() <= 1e-8 * (1.0 + rhs.norm()),
                    "n={n}: {lhs} vs {rhs}"
                );
            }
        }
    }
}

fn stream_next(rng: &mut rand_chacha::ChaCha8Rng, modulo: i64) -> i64 {
    use rand::Rng;
    rng.gen_range(0..modulo)
}

fn pairwise_close(zs: &[Complex64]) -> bool {
    for i in 0..zs.len() {
        for j in i + 1..zs.len() {
            if (zs[i] - zs[j]).norm() < 1e-2 {
                return true;
            }
        }
    }
    false
}

// ------------------------------------------------------------ wavelet shape

#[test]
fn layer_of_single_wavelet_is_projection() {
    let sys = Arc::new(WaveletSystem::new(3, 13).unwrap());
    let f = sys.wavelet_as_scalar_fn(0, 5);
    let step = 2.0f64.powi(-8);
    let npts = (12.0 / step) as usize;
    let l0 = layer(&f, &sys, 0, 0.0, step, npts).unwrap();
    let mut worst = 0.0f64;
    for (i, &v) in l0.values.iter().enumerate() {
        let t = i as f64 * step;
        worst = worst.max((v - f.eval(t, 0).re).abs());
    }
    assert!(worst <= 1e-6, "layer 0 deviates by {worst}");
    let l1 = layer(&f, &sys, 1, 0.0, step, npts).unwrap();
    assert!(l1.sup_norm() <= 1e-6, "layer 1 sup {}", l1.sup_norm());

    let zero = ScalarFn::zero(0);
    let lz = layer(&zero, &sys, 0, 0.0, step, 64).unwrap();
    assert_eq!(lz.sup_norm(), 0.0);
}

#[test]
fn layer_shape_bands_across_scales() {
    // ||f_j^(1)||_inf <= c 2^j ||f_j||_inf with c stable across j, and
    // ||f_j||_inf comparable to 2^{j/2} max_k |<f, w_{jk}>|.
    let sys = WaveletSystem::with_derivatives(4, 12, 1).unwrap();
    let f = ScalarFn::bump(2.0, 1.5, 1);
    let pc = polynomial_correction(&f, &sys, 1, (-3, 3), (0.5, 3.5)).unwrap();
    let mut deriv_ratio = Vec::new();
    let mut equiv_ratio = Vec::new();
    for j in -3..=3i32 {
        let coeffs = wavelet_coeffs(&f, &sys, (j, j), (-64, 64)).unwrap();
        let cmax = coeffs.values().fold(0.0f64, |a, &v| a.max(v.abs()));
        let step = 2.0f64.powi(-(j + 10));
        let npts = ((9.0 - 0.0) / step) as usize;
        let lay = layer(&f, &sys, j, 0.0, step, npts).unwrap();
        let sup = lay.sup_norm();
        if sup < 1e-12 || cmax < 1e-12 {
            continue;
        }
        equiv_ratio.push(sup / (2.0f64.powf(j as f64 / 2.0) * cmax));
        let dsup = pc
            .derivative_sums
            .iter()
            .find(|&&(jj, _)| jj == j)
            .map(|&(_, v)| v)
            .unwrap();
        deriv_ratio.push(dsup / (2.0f64.powi(j) * sup));
    }
    let band = |v: &[f64]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(0.0f64, f64::max);
        hi / lo
    };
    assert!(
        band(&deriv_ratio) < 8.0,
        "derivative band too wide: {deriv_ratio:?}"
    );
    assert!(
        band(&equiv_ratio) < 8.0,
        "coefficient/norm band too wide: {equiv_ratio:?}"
    );
}

#[test]
fn besov_truncation_is_monotone() {
    let sys = WaveletSystem::new(4, 12).unwrap();
    let f = ScalarFn::bump(2.0, 1.5, 2);
    let beta = sys.regularity();
    let narrow = BesovParams::new(1.5, SchattenP::Inf, SchattenP::finite(1.0), (-8, 2), beta)
        .unwrap();
    let wide = BesovParams::new(1.5, SchattenP::Inf, SchattenP::finite(1.0), (-12, 4), beta)
        .unwrap();
    let a = besov_norm(&f, &narrow, &sys).unwrap();
    let b = besov_norm(&f, &wide, &sys).unwrap();
    assert!(b.norm >= a.norm - 1e-15);
    // single-layer input: the norm is the L^p norm of that layer
    let sys3 = Arc::new(WaveletSystem::new(3, 12).unwrap());
    let w00 = sys3.wavelet_as_scalar_fn(0, 0);
    let params = BesovParams::new(
        0.75,
        SchattenP::finite(2.0),
        SchattenP::finite(1.0),
        (-3, 3),
        sys3.regularity(),
    )
    .unwrap();
    let rep = besov_norm(&w00, &params, &sys3).unwrap();
    let direct = layer(&w00, &sys3, 0, -1.0, 2.0f64.powi(-10), 8 << 10)
        .unwrap()
        .lp_norm(SchattenP::finite(2.0));
    assert!(
        (rep.norm - direct).abs() <= 2e-3 * direct,
        "besov {} vs layer L2 {}",
        rep.norm,
        direct
    );
}

#[test]
fn polynomial_correction_examples() {
    let sys = WaveletSystem::with_derivatives(4, 12, 1).unwrap();

    // a polynomial of degree <= n has vanishing coefficients and P = f
    let f = ScalarFn::poly(&[0.3, 0.7], 1);
    let pc = polynomial_correction(&f, &sys, 1, (-6, 3), (0.5, 3.5)).unwrap();
    assert!(pc.residual_sup <= 1e-8, "poly residual {}", pc.residual_sup);
    assert!((pc.p_coeffs[0] - 0.3).abs() < 1e-8);
    assert!((pc.p_coeffs[1] - 0.7).abs() < 1e-8);
    for &(_, d) in &pc.derivative_sums {
        assert!(d < 1e-8);
    }

    // the zero function: zero polynomial, zero layers
    let z = ScalarFn::zero(1);
    let pc = polynomial_correction(&z, &sys, 1, (-6, 3), (0.5, 3.5)).unwrap();
    assert!(pc.residual_sup == 0.0);
    assert!(pc.p_coeffs.iter().all(|&c| c.abs() < 1e-12));

    // a single wavelet: residual of the corrected decomposition stays small
    let sys4 = Arc::new(sys);
    let w00 = sys4.wavelet_as_scalar_fn(0, 0);
    let pc = polynomial_correction(&w00, &sys4, 1, (-6, 4), (0.0, 7.0)).unwrap();
    assert!(
        pc.residual_sup <= 1e-5,
        "wavelet residual {}",
        pc.residual_sup
    );
}

#[test]
fn besov_reindex_identity_from_shared_table() {
    // reindex oracle: the dilated norm from the same layer-norm table
    let sys = WaveletSystem::new(4, 12).unwrap();
    let f = ScalarFn::bump(2.0, 1.5, 2);
    let s = 2.0;
    let params = BesovParams::new(s, SchattenP::Inf, SchattenP::finite(1.0), (-12, 4), sys.regularity()).unwrap();
    let rep = besov_norm(&f, &params, &sys).unwrap();
    for m in [1i32, 2] {
        // reindexed: sum_j 2^{(j+m)s} ||f_j||_inf equals 2^{ms} * base
        let reindexed: f64 = rep
            .layer_norms
            .iter()
            .map(|&(j, v)| 2f64.powf((j + m) as f64 * s) * v)
            .sum();
        let factor = 2f64.powf(m as f64 * s);
        assert!((reindexed - factor * rep.norm).abs() <= 1e-8 * reindexed);
    }
}

// ------------------------------------------------------------- proptest

fn small_coeffs() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-2.0f64..2.0, 2..6)
}

fn small_nodes(count: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-3.0f64..3.0, count)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn divdiff_permutation_invariance(coeffs in small_coeffs(), nodes in small_nodes(4)) {
        prop_assume!(distinct(&nodes, 1e-4));
        let f = ScalarFn::poly(&coeffs, 6);
        let a = divdiff_eval(&f, &NodeList::new(nodes.clone()), 3).unwrap();
        let mut shuffled = nodes.clone();
        shuffled.rotate_left(1);
        shuffled.swap(0, 2);
        let b = divdiff_eval(&f, &NodeList::new(shuffled), 3).unwrap();
        // internal sorting makes permutation invariance exact
        prop_assert_eq!(a, b);
    }

    #[test]
    fn divdiff_recursion_consistency(coeffs in small_coeffs(), nodes in small_nodes(3)) {
        prop_assume!(distinct(&nodes, 1e-3));
        let f = ScalarFn::poly(&coeffs, 6);
        let whole = divdiff_eval(&f, &NodeList::new(nodes.clone()), 2).unwrap();
        let tail = divdiff_eval(&f, &NodeList::new(nodes[1..].to_vec()), 1).unwrap();
        let head = {
            let mut v = vec![nodes[0]];
            v.push(nodes[2]);
            divdiff_eval(&f, &NodeList::new(v), 1).unwrap()
        };
        let rec = (head - tail) / (nodes[0] - nodes[1]);
        prop_assert!((whole - rec).norm() <= 1e-9 * (1.0 + rec.norm()));
    }

    #[test]
    fn composition_count_is_binomial(slots in 1usize..5, total in 0usize..12) {
        let n = enumerate_compositions(slots, total).len() as u64;
        prop_assert_eq!(n, binomial((total + slots - 1) as u64, (slots - 1) as u64));
    }

    #[test]
    fn holder_combination_nests(a in 0.5f64..4.0, b in 0.5f64..4.0, c in 0.5f64..4.0) {
        let flat = holder_combine(&[a, b, c]);
        let nested = holder_combine(&[holder_combine(&[a, b]), c]);
        prop_assert!((flat - nested).abs() <= 1e-12 * flat);
    }

    #[test]
    fn quasi_triangle_holds(seed in 0u64..1000, p_idx in 0usize..4) {
        let p = [0.25, 0.5, 0.75, 1.0][p_idx];
        let grid = uniform_grid(4, 4.0);
        let mut rng = stream_rng(seed, 0);
        let x = KernelMatrix::from_fn(grid.clone(), |_, _| complex_normal(&mut rng));
        let y = KernelMatrix::from_fn(grid.clone(), |_, _| complex_normal(&mut rng));
        let sum = KernelMatrix::new(x.entries() + y.entries(), grid).unwrap();
        let lhs = schatten_norm(&sum, SchattenP::finite(p)).powf(p);
        let rhs = schatten_norm(&x, SchattenP::finite(p)).powf(p)
            + schatten_norm(&y, SchattenP::finite(p)).powf(p);
        prop_assert!(lhs <= rhs + 1e-9);
    }
}

fn distinct(nodes: &[f64], gap: f64) -> bool {
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if (nodes[i] - nodes[j]).abs() < gap {
                return false;
            }
        }
    }
    true
}
