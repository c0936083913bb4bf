//! Truncated Taylor arithmetic.
//!
//! A [`Jet`] holds the coefficients `c[m] = f^(m)(t0) / m!` of a function at
//! a base point. Sums, products (Leibniz), quotients and `exp` propagate the
//! coefficients exactly, which gives closed-form derivatives for the bump
//! and cutoff constructions without symbolic algebra.

#[derive(Clone, Debug)]
pub(crate) struct Jet {
    pub c: Vec<f64>,
}

impl Jet {
    pub fn constant(v: f64, len: usize) -> Jet {
        let mut c = vec![0.0; len];
        c[0] = v;
        Jet { c }
    }

    /// The identity function `t` developed at `t0`.
    pub fn var(t0: f64, len: usize) -> Jet {
        let mut c = vec![0.0; len];
        c[0] = t0;
        if len > 1 {
            c[1] = 1.0;
        }
        Jet { c }
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    /// Derivative value `f^(d)(t0)`, i.e. `c[d] * d!`.
    pub fn derivative(&self, d: usize) -> f64 {
        let mut fact = 1.0;
        for i in 1..=d {
            fact *= i as f64;
        }
        self.c[d] * fact
    }

    pub fn neg(&self) -> Jet {
        Jet {
            c: self.c.iter().map(|x| -x).collect(),
        }
    }

    pub fn add(&self, o: &Jet) -> Jet {
        Jet {
            c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        Jet {
            c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            c: self.c.iter().map(|x| s * x).collect(),
        }
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let n = self.len();
        let mut c = vec![0.0; n];
        for k in 0..n {
            let mut acc = 0.0;
            for m in 0..=k {
                acc += self.c[m] * o.c[k - m];
            }
            c[k] = acc;
        }
        Jet { c }
    }

    /// Series division `self / o`; requires `o.c[0] != 0`.
    pub fn div(&self, o: &Jet) -> Jet {
        let n = self.len();
        let mut c = vec![0.0; n];
        for k in 0..n {
            let mut acc = self.c[k];
            for m in 0..k {
                acc -= c[m] * o.c[k - m];
            }
            c[k] = acc / o.c[0];
        }
        Jet { c }
    }

    /// `exp(self)` via the standard recurrence `k e_k = sum m a_m e_{k-m}`.
    pub fn exp(&self) -> Jet {
        let n = self.len();
        let mut e = vec![0.0; n];
        e[0] = self.c[0].exp();
        for k in 1..n {
            let mut acc = 0.0;
            for m in 1..=k {
                acc += m as f64 * self.c[m] * e[k - m];
            }
            e[k] = acc / k as f64;
        }
        Jet { c: e }
    }
}

/// Jet of `h(t) = exp(-1/t)` for `t > 0`, extended by 0 for `t <= 0`.
///
/// `arg` is the jet of the inner argument; all coefficients vanish when the
/// value is at or below zero (the one-sided limit kills every derivative).
pub(crate) fn h_bump(arg: &Jet) -> Jet {
    if arg.c[0] <= 0.0 {
        return Jet::constant(0.0, arg.len());
    }
    arg.div(&arg.mul(arg)).neg().exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_jet_matches_closed_form() {
        // f(t) = exp(2t) at t0 = 0.3: f^(d) = 2^d exp(0.6)
        let t = Jet::var(0.3, 5).scale(2.0);
        let e = t.exp();
        for d in 0..5 {
            let expect = 2f64.powi(d as i32) * (0.6f64).exp();
            assert!((e.derivative(d) - expect).abs() < 1e-12 * expect.abs());
        }
    }

    #[test]
    fn division_inverts_multiplication() {
        let a = Jet {
            c: vec![1.5, -0.3, 0.7, 0.2],
        };
        let b = Jet {
            c: vec![0.8, 0.1, -0.4, 0.9],
        };
        let q = a.mul(&b).div(&b);
        for (x, y) in q.c.iter().zip(&a.c) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn h_vanishes_flatly_at_zero() {
        let j = h_bump(&Jet::var(0.0, 6));
        assert!(j.c.iter().all(|&x| x == 0.0));
        let j = h_bump(&Jet::var(-0.5, 6));
        assert!(j.c.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn h_derivative_recurrence() {
        // h'(t) = h(t)/t^2 at t = 0.7
        let j = h_bump(&Jet::var(0.7, 3));
        let h0 = (-1.0f64 / 0.7).exp();
        assert!((j.derivative(0) - h0).abs() < 1e-14);
        assert!((j.derivative(1) - h0 / (0.7 * 0.7)).abs() < 1e-13);
    }
}
