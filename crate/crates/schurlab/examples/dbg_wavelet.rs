use std::sync::Arc;
use num_complex::Complex64;
use schurlab::funcs::ScalarFn;
use schurlab::wavelet::{polynomial_correction, WaveletSystem};

fn main() {
    let sys = Arc::new(WaveletSystem::with_derivatives(4, 12, 1).unwrap());
    let bump = ScalarFn::bump(2.0, 1.5, 1);
    match polynomial_correction(&bump, &sys, 1, (-3, 3), (0.5, 3.5)) {
        Ok(pc) => println!("bump ok, residual {:.3e}, sums {:?}", pc.residual_sup, pc.derivative_sums),
        Err(e) => println!("bump err: {e}"),
    }
    // kink: |t - 2| has no summable layer-derivative series
    let kink = ScalarFn::new(1, None, |t: f64, d| {
        Complex64::new(if d == 0 { (t - 2.0).abs() } else { (t - 2.0).signum() }, 0.0)
    });
    match polynomial_correction(&kink, &sys, 1, (-3, 3), (0.5, 3.5)) {
        Ok(pc) => println!("kink ok?! sums {:?}", pc.derivative_sums),
        Err(e) => println!("kink err (expected): {e}"),
    }
}
