//! Small shared helpers: uniform grids, seeded Gaussian sampling, binomials.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform grid `k * l / n`, `k = 0..n`, on `[0, l)`.
///
/// With `l` equal to the number of unit cells the grid aligns with the
/// block indicators of the schur module.
pub fn uniform_grid(n: usize, l: f64) -> Arc<Vec<f64>> {
    assert!(n >= 1 && l > 0.0);
    Arc::new((0..n).map(|k| k as f64 * l / n as f64).collect())
}

/// Deterministic RNG stream derived from a base seed and a stream index.
///
/// Restarts of the optimizer and trial loops draw from independent streams
/// so that results do not depend on scheduling order.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(stream))
}

/// Standard normal via Box-Muller.
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = loop {
        let v = rng.gen::<f64>();
        if v > 1e-300 {
            break v;
        }
    };
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// Complex standard Gaussian entry.
pub fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(standard_normal(rng), standard_normal(rng))
}

/// Exact binomial coefficient in u64 (panics on overflow).
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i).expect("binomial overflow") / (i + 1);
    }
    acc
}

/// n! as f64, exact for n <= 20.
pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(10, 0), 1);
        assert_eq!(binomial(5, 7), 0);
        assert_eq!(binomial(30, 15), 155117520);
    }

    #[test]
    fn grid_is_uniform_on_half_open_range() {
        let g = uniform_grid(8, 4.0);
        assert_eq!(g.len(), 8);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[7], 3.5);
    }

    #[test]
    fn streams_are_deterministic() {
        let mut a = stream_rng(7, 3);
        let mut b = stream_rng(7, 3);
        for _ in 0..16 {
            assert_eq!(standard_normal(&mut a), standard_normal(&mut b));
        }
    }
}
