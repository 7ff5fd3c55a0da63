//! For unit-variance normal data the Laplace approximation of the powered
//! prior predictive is exact; for logistic data it is not. Prints both.

use nalgebra::{DMatrix, DVector};
use pepglm::glm::GlmFamily;
use pepglm::laplace::{gaussian_log_marginal_exact, laplace_log_marginal, MarginalRequest};
use pepglm::priors::BaselinePrior;
use pepglm::quadrature::{integrate_line, QuadOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> pepglm::error::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 15;
    let x = DMatrix::from_fn(n, 3, |_, j| if j == 0 { 1.0 } else { rng.random_range(-1.5..1.5) });
    let y = DVector::from_fn(n, |i, _| 0.3 + 0.8 * x[(i, 1)] + rng.random_range(-1.0..1.0));
    let gaussian = GlmFamily::Gaussian;
    for delta in [1.0, 5.0, n as f64] {
        let mut req = MarginalRequest::new(&gaussian, BaselinePrior::Flat, &y, &x, delta);
        req.ridge = 0.0;
        let approx = laplace_log_marginal(&req)?;
        let exact = gaussian_log_marginal_exact(&y, &x, delta)?;
        println!("gaussian δ = {delta:>4}: laplace {approx:.10}  exact {exact:.10}  diff {:.1e}", approx - exact);
    }

    // Intercept-only logistic model: one-dimensional quadrature is the truth.
    let yb = DVector::from_vec(vec![1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
    let ones = DMatrix::from_element(yb.len(), 1, 1.0);
    let family = GlmFamily::bernoulli(yb.len());
    let k = yb.sum();
    let m = yb.len() as f64;
    for delta in [1.0, 2.0, 10.0] {
        let req = MarginalRequest::new(&family, BaselinePrior::Flat, &yb, &ones, delta);
        let approx = laplace_log_marginal(&req)?;
        let log_f = |b: f64| k * b - m * (b.exp().ln_1p());
        let mode = (k / m).ln() - (1.0 - k / m).ln();
        let peak = log_f(mode) / delta;
        let integral = integrate_line(|b| (log_f(b + mode) / delta - peak).exp(), QuadOptions::default());
        let exact = peak + integral.value.ln();
        println!("logistic δ = {delta:>4}: laplace {approx:.6}  quadrature {exact:.6}");
    }
    Ok(())
}
