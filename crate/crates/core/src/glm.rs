//! Exponential-family GLMs with canonical links.
//!
//! Every density in the crate is evaluated on the log scale. The families
//! here fix the dispersion at one, so an observation contributes
//!
//! `ℓ_i(β) = w_i · (y_i θ_i − b(θ_i) + c(y_i))`, with `θ_i = η_i = x_iᵀβ`,
//!
//! where `w_i` is an observation weight. Powered likelihoods
//! `f(y | β)^{1/δ}` are the special case `w_i = 1/δ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Observation weights for a (powered) log-likelihood.
#[derive(Clone, Copy, Debug)]
pub enum ObsWeights<'a> {
    Uniform(f64),
    PerObs(&'a [f64]),
}

impl ObsWeights<'_> {
    pub const ONE: ObsWeights<'static> = ObsWeights::Uniform(1.0);

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        match self {
            ObsWeights::Uniform(w) => *w,
            ObsWeights::PerObs(w) => w[i],
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        match self {
            ObsWeights::Uniform(w) if !(*w > 0.0 && w.is_finite()) => Err(Error::Config(format!(
                "observation weights must be positive and finite, got {w}"
            ))),
            ObsWeights::PerObs(w) if w.len() != n => Err(Error::Dimension(format!(
                "{} weights for {n} observations",
                w.len()
            ))),
            ObsWeights::PerObs(w) if w.iter().any(|&v| !(v > 0.0 && v.is_finite())) => Err(
                Error::Config("observation weights must be positive and finite".into()),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Binomial,
    Poisson,
    Gaussian,
}

impl std::fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FamilyKind::Binomial => "binomial",
            FamilyKind::Poisson => "poisson",
            FamilyKind::Gaussian => "gaussian",
        })
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binomial" | "logistic" => Ok(FamilyKind::Binomial),
            "poisson" => Ok(FamilyKind::Poisson),
            "gaussian" => Ok(FamilyKind::Gaussian),
            other => Err(Error::Config(format!("unknown family `{other}`"))),
        }
    }
}

/// A canonical-link exponential family with unit dispersion.
#[derive(Clone, Debug, PartialEq)]
pub enum GlmFamily {
    /// Binomial counts out of `trials[i]` with the logit link.
    Binomial { trials: Vec<f64> },
    /// Poisson counts with the log link.
    Poisson,
    /// Normal responses with known unit variance and the identity link.
    Gaussian,
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl GlmFamily {
    /// Binary responses, one trial per observation.
    pub fn bernoulli(n: usize) -> Self {
        GlmFamily::Binomial {
            trials: vec![1.0; n],
        }
    }

    pub fn binomial(trials: Vec<f64>) -> Self {
        GlmFamily::Binomial { trials }
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            GlmFamily::Binomial { .. } => FamilyKind::Binomial,
            GlmFamily::Poisson => FamilyKind::Poisson,
            GlmFamily::Gaussian => FamilyKind::Gaussian,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GlmFamily::Binomial { .. } => "binomial",
            GlmFamily::Poisson => "poisson",
            GlmFamily::Gaussian => "gaussian",
        }
    }

    #[inline]
    pub fn trials(&self, i: usize) -> f64 {
        match self {
            GlmFamily::Binomial { trials } => trials[i],
            _ => 1.0,
        }
    }

    /// The same family for a response vector stacked `times` over itself.
    pub fn stacked(&self, times: usize) -> Self {
        match self {
            GlmFamily::Binomial { trials } => GlmFamily::Binomial {
                trials: trials
                    .iter()
                    .copied()
                    .cycle()
                    .take(trials.len() * times)
                    .collect(),
            },
            other => other.clone(),
        }
    }

    /// The same family restricted to the listed observations.
    pub fn subset(&self, rows: &[usize]) -> Self {
        match self {
            GlmFamily::Binomial { trials } => GlmFamily::Binomial {
                trials: rows.iter().map(|&i| trials[i]).collect(),
            },
            other => other.clone(),
        }
    }

    /// Cumulant function `b(θ)`.
    #[inline]
    pub fn cumulant(&self, i: usize, theta: f64) -> f64 {
        match self {
            GlmFamily::Binomial { trials } => trials[i] * softplus(theta),
            GlmFamily::Poisson => theta.exp(),
            GlmFamily::Gaussian => 0.5 * theta * theta,
        }
    }

    /// Mean `b′(θ)`, which is also the inverse link under canonical links.
    #[inline]
    pub fn mean(&self, i: usize, theta: f64) -> f64 {
        match self {
            GlmFamily::Binomial { trials } => trials[i] * logistic(theta),
            GlmFamily::Poisson => theta.exp(),
            GlmFamily::Gaussian => theta,
        }
    }

    /// Variance function `b″(θ)`.
    #[inline]
    pub fn variance(&self, i: usize, theta: f64) -> f64 {
        match self {
            GlmFamily::Binomial { trials } => {
                let e = (-theta.abs()).exp();
                trials[i] * e / ((1.0 + e) * (1.0 + e))
            }
            GlmFamily::Poisson => theta.exp(),
            GlmFamily::Gaussian => 1.0,
        }
    }

    /// Canonical link, mapping a mean to the linear predictor.
    pub fn link(&self, i: usize, mu: f64) -> f64 {
        match self {
            GlmFamily::Binomial { trials } => {
                let p = mu / trials[i];
                (p / (1.0 - p)).ln()
            }
            GlmFamily::Poisson => mu.ln(),
            GlmFamily::Gaussian => mu,
        }
    }

    pub fn inverse_link(&self, i: usize, eta: f64) -> f64 {
        self.mean(i, eta)
    }

    /// Base-measure term `c(y)` of the density.
    #[inline]
    pub fn log_base_measure(&self, i: usize, y: f64) -> f64 {
        match self {
            GlmFamily::Binomial { trials } => {
                let n = trials[i];
                if y == 0.0 || y == n {
                    0.0
                } else {
                    ln_gamma(n + 1.0) - ln_gamma(y + 1.0) - ln_gamma(n - y + 1.0)
                }
            }
            GlmFamily::Poisson if y <= 1.0 => 0.0,
            GlmFamily::Poisson => -ln_gamma(y + 1.0),
            GlmFamily::Gaussian => -0.5 * y * y - 0.5 * LN_2PI,
        }
    }

    /// Log-density of a single observation at linear predictor `eta`.
    #[inline]
    pub fn unit_log_density(&self, i: usize, y: f64, eta: f64) -> f64 {
        y * eta - self.cumulant(i, eta) + self.log_base_measure(i, y)
    }

    pub fn validate_response(&self, y: &DVector<f64>) -> Result<()> {
        let bad = |detail: String| Error::InvalidResponse {
            family: self.name(),
            detail,
        };
        match self {
            GlmFamily::Binomial { trials } => {
                if trials.len() != y.len() {
                    return Err(Error::Dimension(format!(
                        "{} binomial trial counts for {} responses",
                        trials.len(),
                        y.len()
                    )));
                }
                for (i, (&yi, &ni)) in y.iter().zip(trials).enumerate() {
                    if !(ni >= 1.0 && ni.fract() == 0.0) {
                        return Err(bad(format!("trial count {ni} at row {i}")));
                    }
                    if !(yi >= 0.0 && yi <= ni && yi.fract() == 0.0) {
                        return Err(bad(format!("y = {yi} with {ni} trials at row {i}")));
                    }
                }
            }
            GlmFamily::Poisson => {
                if let Some((i, yi)) = y
                    .iter()
                    .enumerate()
                    .find(|(_, &v)| !(v >= 0.0 && v.fract() == 0.0))
                {
                    return Err(bad(format!("y = {yi} at row {i}")));
                }
            }
            GlmFamily::Gaussian => {
                if let Some((i, yi)) = y.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                    return Err(bad(format!("y = {yi} at row {i}")));
                }
            }
        }
        Ok(())
    }
}

fn check_dims(y: &DVector<f64>, x: &DMatrix<f64>, beta: &DVector<f64>) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension(format!(
            "design has {} rows, response has {}",
            x.nrows(),
            y.len()
        )));
    }
    if x.ncols() != beta.len() {
        return Err(Error::Dimension(format!(
            "design has {} columns, coefficient vector has {}",
            x.ncols(),
            beta.len()
        )));
    }
    Ok(())
}

/// `η = Xβ`, rejecting non-finite entries.
pub fn linear_predictor(x: &DMatrix<f64>, beta: &DVector<f64>) -> Result<DVector<f64>> {
    let eta = x * beta;
    if let Some(bad) = eta.iter().find(|v| !v.is_finite()) {
        return Err(Error::NumericalRange(format!("η = {bad}")));
    }
    Ok(eta)
}

/// Weighted log-likelihood from a precomputed linear predictor. The
/// response is assumed valid for the family.
pub fn log_likelihood_eta(
    family: &GlmFamily,
    y: &DVector<f64>,
    eta: &DVector<f64>,
    weights: ObsWeights<'_>,
) -> Result<f64> {
    let total: f64 = y
        .iter()
        .zip(eta.iter())
        .enumerate()
        .map(|(i, (&yi, &ei))| weights.get(i) * family.unit_log_density(i, yi, ei))
        .sum();
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::NumericalRange(format!(
            "log-likelihood evaluated to {total}"
        )))
    }
}

/// `Σ_i w_i ℓ_i(β)`, including the base-measure terms.
pub fn log_likelihood(
    family: &GlmFamily,
    y: &DVector<f64>,
    x: &DMatrix<f64>,
    beta: &DVector<f64>,
    weights: ObsWeights<'_>,
) -> Result<f64> {
    check_dims(y, x, beta)?;
    weights.check(y.len())?;
    family.validate_response(y)?;
    let eta = linear_predictor(x, beta)?;
    log_likelihood_eta(family, y, &eta, weights)
}

/// Gradient of the weighted log-likelihood, `Xᵀ W (y − μ)`.
pub fn score(
    family: &GlmFamily,
    y: &DVector<f64>,
    x: &DMatrix<f64>,
    beta: &DVector<f64>,
    weights: ObsWeights<'_>,
) -> Result<DVector<f64>> {
    check_dims(y, x, beta)?;
    let eta = linear_predictor(x, beta)?;
    let resid = DVector::from_fn(y.len(), |i, _| {
        weights.get(i) * (y[i] - family.mean(i, eta[i]))
    });
    Ok(x.tr_mul(&resid))
}

fn info_from_eta(
    family: &GlmFamily,
    x: &DMatrix<f64>,
    eta: &DVector<f64>,
    weights: ObsWeights<'_>,
) -> DMatrix<f64> {
    let w = DVector::from_fn(x.nrows(), |i, _| weights.get(i) * family.variance(i, eta[i]));
    let d = x.ncols();
    let mut info = DMatrix::zeros(d, d);
    for a in 0..d {
        let wa = x.column(a).component_mul(&w);
        for b in 0..=a {
            let v = wa.dot(&x.column(b));
            info[(a, b)] = v;
            info[(b, a)] = v;
        }
    }
    info
}

/// Observed information `Xᵀ W(β) X` with `W_ii = w_i b″(θ_i)`.
pub fn observed_information(
    family: &GlmFamily,
    x: &DMatrix<f64>,
    beta: &DVector<f64>,
    weights: ObsWeights<'_>,
) -> Result<DMatrix<f64>> {
    if x.ncols() != beta.len() {
        return Err(Error::Dimension(format!(
            "design has {} columns, coefficient vector has {}",
            x.ncols(),
            beta.len()
        )));
    }
    weights.check(x.nrows())?;
    let eta = linear_predictor(x, beta)?;
    Ok(info_from_eta(family, x, &eta, weights))
}

/// Stopping rules for [`irls_fit`].
#[derive(Clone, Debug)]
pub struct IrlsOptions {
    pub max_iterations: usize,
    /// Stop once the largest absolute (penalized) score component is below this.
    pub score_tolerance: f64,
    /// Or once the relative change of the objective falls below this.
    pub relative_tolerance: f64,
    pub max_halvings: usize,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            score_tolerance: 1e-8,
            relative_tolerance: 1e-10,
            max_halvings: 10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub beta: DVector<f64>,
    /// Information of the weighted log-likelihood at `beta`, without any
    /// penalty contribution.
    pub observed_info: DMatrix<f64>,
    /// Weighted log-likelihood at `beta`.
    pub log_lik: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Fitted means sit on the boundary of the parameter space (complete
    /// or quasi-complete separation, or zero Poisson rates), so the
    /// unpenalized maximum does not exist.
    pub separated: bool,
}

impl FitResult {
    /// Converged to an interior mode.
    pub fn is_usable(&self) -> bool {
        self.converged && !self.separated
    }

    /// Inverse of the observed information.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        self.observed_info
            .clone()
            .cholesky()
            .map(|c| c.inverse())
            .ok_or_else(|| Error::Singular("observed information is not positive definite".into()))
    }
}

/// Newton–Raphson (equivalently IRLS under canonical links) for the
/// weighted log-likelihood, with `ridge · I` added to the Hessian.
///
/// The ridge enters as a penalty `ridge/2 · ‖β‖²` on the objective so the
/// mode stays finite under separation; `observed_info` excludes it.
pub fn irls_fit(
    family: &GlmFamily,
    y: &DVector<f64>,
    x: &DMatrix<f64>,
    weights: ObsWeights<'_>,
    ridge: f64,
) -> Result<FitResult> {
    fit_penalized(family, y, x, weights, ridge, None, &IrlsOptions::default())
}

/// Maximizes `Σ w_i ℓ_i(β) − ½ βᵀ(P + ridge·I)β`.
pub fn fit_penalized(
    family: &GlmFamily,
    y: &DVector<f64>,
    x: &DMatrix<f64>,
    weights: ObsWeights<'_>,
    ridge: f64,
    penalty: Option<&DMatrix<f64>>,
    opts: &IrlsOptions,
) -> Result<FitResult> {
    fit_penalized_from(family, y, x, weights, ridge, penalty, opts, None)
}

/// As [`fit_penalized`], starting Newton's method at `start` instead of
/// zero when it has the right length and a finite objective.
#[allow(clippy::too_many_arguments)]
pub fn fit_penalized_from(
    family: &GlmFamily,
    y: &DVector<f64>,
    x: &DMatrix<f64>,
    weights: ObsWeights<'_>,
    ridge: f64,
    penalty: Option<&DMatrix<f64>>,
    opts: &IrlsOptions,
    start: Option<&DVector<f64>>,
) -> Result<FitResult> {
    let n = y.len();
    let d = x.ncols();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if x.nrows() != n {
        return Err(Error::Dimension(format!(
            "design has {} rows, response has {n}",
            x.nrows()
        )));
    }
    if !(ridge >= 0.0) {
        return Err(Error::Config(format!("ridge must be non-negative, got {ridge}")));
    }
    if let Some(p) = penalty {
        if p.nrows() != d || p.ncols() != d {
            return Err(Error::Dimension("penalty matrix does not match the design".into()));
        }
    }
    weights.check(n)?;
    family.validate_response(y)?;

    let mut pen = penalty.cloned().unwrap_or_else(|| DMatrix::zeros(d, d));
    for k in 0..d {
        pen[(k, k)] += ridge;
    }
    let objective = |beta: &DVector<f64>| -> Option<(f64, DVector<f64>)> {
        let eta = x * beta;
        if eta.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let ll = log_likelihood_eta(family, y, &eta, weights).ok()?;
        let quad = beta.dot(&(&pen * beta));
        Some((ll - 0.5 * quad, eta))
    };

    let warm = start
        .filter(|b| b.len() == d)
        .and_then(|b| objective(b).map(|(o, e)| (b.clone(), o, e)));
    let (mut beta, mut obj, mut eta) = match warm {
        Some(w) => w,
        None => {
            let zero = DVector::zeros(d);
            let (o, e) = objective(&zero)
                .ok_or_else(|| Error::Divergence("objective undefined at β = 0".into()))?;
            (zero, o, e)
        }
    };
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..opts.max_iterations {
        let resid = DVector::from_fn(n, |i, _| weights.get(i) * (y[i] - family.mean(i, eta[i])));
        let grad = x.tr_mul(&resid) - &pen * &beta;
        if grad.iter().any(|v| v.is_nan()) {
            return Err(Error::Divergence("NaN in the score".into()));
        }
        if grad.amax() < opts.score_tolerance {
            converged = true;
            break;
        }
        let hess = info_from_eta(family, x, &eta, weights) + &pen;
        let chol = hess.cholesky().ok_or_else(|| {
            Error::Singular("working information is not positive definite".into())
        })?;
        let step = chol.solve(&grad);
        if step.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence("non-finite Newton step".into()));
        }

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial = &beta + &step * scale;
            if let Some((trial_obj, trial_eta)) = objective(&trial) {
                // Tiny decreases are rounding noise near the optimum.
                if trial_obj >= obj - 1e-12 * obj.abs().max(1.0) {
                    accepted = Some((trial, trial_obj, trial_eta));
                    break;
                }
            }
            scale *= 0.5;
        }
        let Some((next, next_obj, next_eta)) = accepted else {
            break;
        };
        iterations += 1;
        let rel = (next_obj - obj).abs() / obj.abs().max(1e-300);
        beta = next;
        obj = next_obj;
        eta = next_eta;
        if rel < opts.relative_tolerance && scale == 1.0 {
            converged = true;
            break;
        }
    }

    let log_lik = log_likelihood_eta(family, y, &eta, weights)?;
    let observed_info = info_from_eta(family, x, &eta, weights);
    let at_boundary = (0..n).any(|i| {
        let e = eta[i];
        match family {
            GlmFamily::Binomial { .. } => e.abs() > 20.7,
            GlmFamily::Poisson => e < -20.7,
            GlmFamily::Gaussian => false,
        }
    });
    // With the ridge removed, a regular mode moves by O(ridge); under
    // separation the remaining information is tiny and it runs off.
    let ridge_bound = ridge > 0.0 && {
        let mut hess = observed_info.clone();
        if let Some(p) = penalty {
            hess += p;
        }
        match hess.cholesky() {
            Some(c) => (c.solve(&(&beta * ridge))).amax() > 1e-3,
            None => true,
        }
    };
    let separated = at_boundary || ridge_bound;
    Ok(FitResult {
        beta,
        observed_info,
        log_lik,
        converged,
        iterations,
        separated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};

    fn intercept(n: usize) -> DMatrix<f64> {
        DMatrix::from_element(n, 1, 1.0)
    }

    #[test]
    fn logistic_at_zero_is_half_per_observation() {
        let fam = GlmFamily::bernoulli(4);
        let y = dvector![1.0, 0.0, 0.0, 1.0];
        let ll = log_likelihood(&fam, &y, &intercept(4), &dvector![0.0], ObsWeights::ONE).unwrap();
        assert_relative_eq!(ll, 4.0 * 0.5f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn poisson_unit_rate() {
        let y = dvector![1.0, 1.0];
        let ll = log_likelihood(&GlmFamily::Poisson, &y, &intercept(2), &dvector![0.0], ObsWeights::ONE)
            .unwrap();
        assert_relative_eq!(ll, -2.0, epsilon = 1e-12);
    }

    #[test]
    fn weights_scale_linearly() {
        let x = dmatrix![1.0, -1.0; 1.0, 0.5; 1.0, 0.5];
        let b = dvector![0.3, -0.7];
        for (fam, y) in [
            (GlmFamily::binomial(vec![3.0, 2.0, 5.0]), dvector![1.0, 2.0, 0.0]),
            (GlmFamily::Poisson, dvector![0.0, 4.0, 1.0]),
            (GlmFamily::Gaussian, dvector![0.2, -1.3, 2.0]),
        ] {
            let full = log_likelihood(&fam, &y, &x, &b, ObsWeights::ONE).unwrap();
            let half = log_likelihood(&fam, &y, &x, &b, ObsWeights::Uniform(0.5)).unwrap();
            assert_relative_eq!(half, 0.5 * full, epsilon = 1e-12);
        }
    }

    #[test]
    fn errors_are_distinct() {
        let fam = GlmFamily::bernoulli(2);
        let x = intercept(2);
        assert!(matches!(
            log_likelihood(&fam, &dvector![1.0, 2.0], &x, &dvector![0.0], ObsWeights::ONE),
            Err(Error::InvalidResponse { .. })
        ));
        assert!(matches!(
            log_likelihood(&fam, &dvector![1.0, 0.0], &x, &dvector![0.0, 1.0], ObsWeights::ONE),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            log_likelihood(&GlmFamily::Poisson, &dvector![1.0, 0.0], &x, &dvector![800.0], ObsWeights::ONE),
            Err(Error::NumericalRange(_))
        ));
        assert!(matches!(
            log_likelihood(&GlmFamily::Poisson, &dvector![1.5, 0.0], &x, &dvector![0.0], ObsWeights::ONE),
            Err(Error::InvalidResponse { .. })
        ));
    }

    #[test]
    fn gaussian_fit_is_least_squares_in_one_step() {
        let x = dmatrix![1.0, -1.5; 1.0, -0.5; 1.0, 0.5; 1.0, 1.5];
        let y = dvector![0.1, 1.2, 1.9, 3.3];
        let fit = irls_fit(&GlmFamily::Gaussian, &y, &x, ObsWeights::ONE, 0.0).unwrap();
        let xtx = x.tr_mul(&x);
        let ols = xtx.clone().cholesky().unwrap().solve(&x.tr_mul(&y));
        assert!(fit.converged);
        assert_eq!(fit.iterations, 1);
        assert_relative_eq!(fit.beta, ols, epsilon = 1e-12);
        assert_relative_eq!(fit.observed_info, xtx, epsilon = 1e-12);
    }

    #[test]
    fn logistic_intercept_of_balanced_sample_is_zero() {
        let y = dvector![1.0, 0.0, 1.0, 0.0];
        let fit = irls_fit(&GlmFamily::bernoulli(4), &y, &intercept(4), ObsWeights::ONE, 0.0).unwrap();
        assert!(fit.is_usable());
        assert!(fit.beta[0].abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_design_without_ridge_is_singular() {
        let x = dmatrix![1.0, 2.0; 1.0, 2.0; 1.0, 2.0];
        let y = dvector![0.1, 0.2, 0.3];
        assert!(matches!(
            irls_fit(&GlmFamily::Gaussian, &y, &x, ObsWeights::ONE, 0.0),
            Err(Error::Singular(_))
        ));
        assert!(irls_fit(&GlmFamily::Gaussian, &y, &x, ObsWeights::ONE, 1e-6).is_ok());
    }

    #[test]
    fn separation_is_flagged_never_nan() {
        let x = dmatrix![1.0, -1.0; 1.0, -1.0; 1.0, 1.0; 1.0, 1.0];
        let y = dvector![0.0, 0.0, 1.0, 1.0];
        let fit = irls_fit(&GlmFamily::bernoulli(4), &y, &x, ObsWeights::ONE, 1e-6).unwrap();
        assert!(fit.beta.iter().all(|b| b.is_finite()));
        assert!(!fit.is_usable());
    }

    #[test]
    fn observed_information_examples() {
        let x = dmatrix![1.0, -1.0; 1.0, 0.0; 1.0, 2.0];
        let xtx = x.tr_mul(&x);
        let gauss =
            observed_information(&GlmFamily::Gaussian, &x, &dvector![3.0, -2.0], ObsWeights::ONE).unwrap();
        assert_relative_eq!(gauss, xtx, epsilon = 1e-12);
        let logit =
            observed_information(&GlmFamily::bernoulli(3), &x, &dvector![0.0, 0.0], ObsWeights::ONE).unwrap();
        assert_relative_eq!(logit, xtx * 0.25, epsilon = 1e-12);
        let pois = observed_information(&GlmFamily::Poisson, &intercept(3), &dvector![0.0], ObsWeights::ONE)
            .unwrap();
        assert_relative_eq!(pois[(0, 0)], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn link_round_trips() {
        let fam = GlmFamily::binomial(vec![7.0]);
        for mu in [0.01, 1.0, 3.5, 6.99] {
            assert_relative_eq!(fam.inverse_link(0, fam.link(0, mu)), mu, max_relative = 1e-12);
        }
        for mu in [1e-6, 0.3, 42.0] {
            assert_relative_eq!(
                GlmFamily::Poisson.inverse_link(0, GlmFamily::Poisson.link(0, mu)),
                mu,
                max_relative = 1e-12
            );
        }
    }
}
