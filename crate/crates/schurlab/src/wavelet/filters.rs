//! Minimal-phase Daubechies low-pass filters, normalized to sum sqrt(2).
//!
//! DB1 (Haar) and DB2 use their closed forms; higher orders come from
//! spectral factorization of the Daubechies polynomial
//! `P(y) = sum_{k<M} C(M-1+k, k) y^k`: find its roots, map each to the
//! quadratic `z^2 - (2 - 4y) z + 1 = 0`, keep the root inside the unit
//! disk, and multiply the factors onto `((1+z)/2)^M`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::util::binomial;

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

pub fn daubechies_filter(m: usize) -> Result<Vec<f64>> {
    if m == 0 || m > 10 {
        return Err(Error::UnsupportedOrder(m));
    }
    let h = match m {
        1 => vec![1.0 / SQRT2, 1.0 / SQRT2],
        2 => {
            let s3 = 3.0f64.sqrt();
            vec![
                (1.0 + s3) / (4.0 * SQRT2),
                (3.0 + s3) / (4.0 * SQRT2),
                (3.0 - s3) / (4.0 * SQRT2),
                (1.0 - s3) / (4.0 * SQRT2),
            ]
        }
        _ => spectral_factorization(m),
    };
    debug_assert!((h.iter().sum::<f64>() - SQRT2).abs() < 1e-12);
    Ok(h)
}

/// High-pass mirror `g_l = (-1)^l h_{2M-1-l}`.
pub fn mirror_filter(h: &[f64]) -> Vec<f64> {
    let n = h.len();
    (0..n)
        .map(|l| if l % 2 == 0 { h[n - 1 - l] } else { -h[n - 1 - l] })
        .collect()
}

fn spectral_factorization(m: usize) -> Vec<f64> {
    // P(y) coefficients, ascending.
    let p: Vec<f64> = (0..m)
        .map(|k| binomial((m - 1 + k) as u64, k as u64) as f64)
        .collect();
    let yroots = polish_all(roots_durand_kerner(&p), &p);

    // ((1+z)/2)^M
    let mut h = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..m {
        h = convolve(&h, &[Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)]);
    }
    for y in yroots {
        // z^2 - (2 - 4y) z + 1 = 0, take the root inside the unit disk;
        // normalize the factor to value 1 at z = 1 so the low-pass gain stays 1.
        let b = Complex64::new(2.0, 0.0) - y * 4.0;
        let disc = (b * b - 4.0).sqrt();
        let z1 = (b + disc) / 2.0;
        let z2 = (b - disc) / 2.0;
        let z0 = if z1.norm() < z2.norm() { z1 } else { z2 };
        let factor = [Complex64::new(1.0, 0.0), -z0];
        h = convolve(&h, &factor);
        let scale = Complex64::new(1.0, 0.0) - z0;
        for c in h.iter_mut() {
            *c /= scale;
        }
    }
    let mut real: Vec<f64> = h.iter().map(|c| c.re).collect();
    let sum: f64 = real.iter().sum();
    for c in real.iter_mut() {
        *c *= SQRT2 / sum;
    }
    real
}

fn convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::ZERO; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn eval_poly(p: &[f64], z: Complex64) -> (Complex64, Complex64) {
    // Horner with derivative.
    let mut v = Complex64::ZERO;
    let mut d = Complex64::ZERO;
    for &c in p.iter().rev() {
        d = d * z + v;
        v = v * z + c;
    }
    (v, d)
}

fn roots_durand_kerner(p: &[f64]) -> Vec<Complex64> {
    let deg = p.len() - 1;
    if deg == 0 {
        return vec![];
    }
    let lead = p[deg];
    let monic: Vec<f64> = p.iter().map(|c| c / lead).collect();
    let mut roots: Vec<Complex64> = (0..deg)
        .map(|i| Complex64::from_polar(0.7, 1.0 + 2.1 * i as f64))
        .collect();
    for _ in 0..200 {
        let mut delta: f64 = 0.0;
        for i in 0..deg {
            let (v, _) = eval_poly(&monic, roots[i]);
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = v / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-14 {
            break;
        }
    }
    roots
}

fn polish_all(mut roots: Vec<Complex64>, p: &[f64]) -> Vec<Complex64> {
    for r in roots.iter_mut() {
        for _ in 0..20 {
            let (v, d) = eval_poly(p, *r);
            if d.norm() == 0.0 {
                break;
            }
            let step = v / d;
            *r -= step;
            if step.norm() < 1e-16 * (1.0 + r.norm()) {
                break;
            }
        }
    }
    // Deterministic order: by real part, then imaginary.
    roots.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_filter() {
        let h = daubechies_filter(1).unwrap();
        assert_eq!(h.len(), 2);
        assert!((h[0] - 0.7071067811865476).abs() < 1e-15);
        assert!((h[1] - 0.7071067811865476).abs() < 1e-15);
    }

    #[test]
    fn db2_closed_form() {
        let h = daubechies_filter(2).unwrap();
        let s3 = 3.0f64.sqrt();
        let expect = [
            (1.0 + s3) / (4.0 * SQRT2),
            (3.0 + s3) / (4.0 * SQRT2),
            (3.0 - s3) / (4.0 * SQRT2),
            (1.0 - s3) / (4.0 * SQRT2),
        ];
        for (a, b) in h.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn filter_identities_all_orders() {
        for m in 1..=10usize {
            let h = daubechies_filter(m).unwrap();
            assert_eq!(h.len(), 2 * m);
            let sum: f64 = h.iter().sum();
            assert!((sum - SQRT2).abs() < 1e-12, "M={m}: sum {sum}");
            for shift in 0..m {
                let dot: f64 = (0..h.len() - 2 * shift)
                    .map(|k| h[k] * h[k + 2 * shift])
                    .sum();
                let expect = if shift == 0 { 1.0 } else { 0.0 };
                assert!(
                    (dot - expect).abs() < 1e-10,
                    "M={m} shift={shift}: {dot}"
                );
            }
        }
    }

    #[test]
    fn unsupported_orders_rejected() {
        assert!(matches!(daubechies_filter(0), Err(Error::UnsupportedOrder(0))));
        assert!(matches!(
            daubechies_filter(11),
            Err(Error::UnsupportedOrder(11))
        ));
    }
}
