//! Laplace approximation of the powered prior predictive
//! `m_γ(y* | δ) = ∫ f_γ(y* | β)^{1/δ} π^N(β) dβ`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::glm::{fit_penalized_from, irls_fit, FitResult, GlmFamily, IrlsOptions, ObsWeights};
use crate::model::ModelIndicator;
use crate::priors::{half_log_det, BaselinePrior};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Ridge used for every fit made by the samplers.
pub const SAMPLER_RIDGE: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct MarginalRequest<'a> {
    pub family: &'a GlmFamily,
    pub baseline: BaselinePrior,
    pub y_star: &'a DVector<f64>,
    pub x_gamma: &'a DMatrix<f64>,
    pub delta: f64,
    pub ridge: f64,
}

impl<'a> MarginalRequest<'a> {
    pub fn new(
        family: &'a GlmFamily,
        baseline: BaselinePrior,
        y_star: &'a DVector<f64>,
        x_gamma: &'a DMatrix<f64>,
        delta: f64,
    ) -> Self {
        Self {
            family,
            baseline,
            y_star,
            x_gamma,
            delta,
            ridge: SAMPLER_RIDGE,
        }
    }
}

/// The `δ`-free ingredients of the approximation for one `(γ, y*)`.
///
/// The mode of `f^{1/δ}` is the MLE for every `δ`, so one fit serves all `δ`.
#[derive(Clone, Debug)]
pub struct LaplaceFit {
    pub dim: usize,
    pub beta_hat: DVector<f64>,
    /// `log f_γ(y* | β̂*)`.
    pub log_lik: f64,
    /// `−½ log det(XᵀW(β̂*)X) + log π^N(β̂*)`.
    pub curvature_and_prior: f64,
}

impl LaplaceFit {
    pub fn from_fit(fit: &FitResult, baseline: BaselinePrior) -> Result<Self> {
        if !fit.is_usable() {
            return Err(Error::Divergence(
                "no interior maximum for the imaginary data".into(),
            ));
        }
        let curvature_and_prior = match baseline {
            // The Jeffreys density cancels the determinant exactly.
            BaselinePrior::Jeffreys => 0.0,
            BaselinePrior::Flat => -half_log_det(&fit.observed_info, "the Laplace information")?,
        };
        Ok(Self {
            dim: fit.beta.len(),
            beta_hat: fit.beta.clone(),
            log_lik: fit.log_lik,
            curvature_and_prior,
        })
    }

    pub fn compute(
        family: &GlmFamily,
        baseline: BaselinePrior,
        y_star: &DVector<f64>,
        x_gamma: &DMatrix<f64>,
        ridge: f64,
    ) -> Result<Self> {
        Self::compute_from(family, baseline, y_star, x_gamma, ridge, None)
    }

    /// As [`LaplaceFit::compute`] with a warm start for Newton's method.
    pub fn compute_from(
        family: &GlmFamily,
        baseline: BaselinePrior,
        y_star: &DVector<f64>,
        x_gamma: &DMatrix<f64>,
        ridge: f64,
        start: Option<&DVector<f64>>,
    ) -> Result<Self> {
        let fit = fit_penalized_from(
            family,
            y_star,
            x_gamma,
            ObsWeights::ONE,
            ridge,
            None,
            &IrlsOptions::default(),
            start,
        )?;
        Self::from_fit(&fit, baseline)
    }

    /// `log m̂_γ(y* | δ)`.
    pub fn log_marginal(&self, delta: f64) -> f64 {
        0.5 * self.dim as f64 * (LN_2PI + delta.ln()) + self.log_lik / delta + self.curvature_and_prior
    }
}

/// `(d/2) log(2πδ) − ½ log det(XᵀW(β̂*)X) + (1/δ) log f(y*|β̂*) + log π^N(β̂*)`.
pub fn laplace_log_marginal(req: &MarginalRequest<'_>) -> Result<f64> {
    if !(req.delta > 0.0) {
        return Err(Error::Config(format!("δ must be positive, got {}", req.delta)));
    }
    // The powered likelihood shares its mode with the likelihood itself, and
    // the unweighted fit keeps the ridge at the same relative strength as
    // inside the sampler.
    let fit = irls_fit(req.family, req.y_star, req.x_gamma, ObsWeights::ONE, req.ridge)?;
    if !fit.is_usable() {
        return Err(Error::Divergence(
            "no interior maximum for the imaginary data".into(),
        ));
    }
    let d = req.x_gamma.ncols() as f64;
    let prior = req.baseline.log_density(req.family, req.x_gamma, &fit.beta)?;
    Ok(0.5 * d * (LN_2PI + req.delta.ln())
        - half_log_det(&fit.observed_info, "the Laplace information")?
        + fit.log_lik / req.delta
        + prior)
}

/// Exact `log ∫ (2π)^{−n/(2δ)} exp(−‖y* − Xβ‖²/(2δ)) dβ` for the unit-variance
/// normal model under a flat prior, through a QR factorization of `X`.
pub fn gaussian_log_marginal_exact(y_star: &DVector<f64>, x: &DMatrix<f64>, delta: f64) -> Result<f64> {
    let n = x.nrows();
    let d = x.ncols();
    if y_star.len() != n {
        return Err(Error::Dimension(format!("{} responses for {n} rows", y_star.len())));
    }
    if n < d {
        return Err(Error::Singular("fewer rows than columns".into()));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = r.diagonal().amax().max(1.0);
    if r.diagonal().iter().any(|v| v.abs() <= 1e-12 * scale) {
        return Err(Error::Singular("design is rank deficient".into()));
    }
    let qty = qr.q().tr_mul(y_star);
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    let rss = (y_star - x * beta).norm_squared();
    let log_det_xtx: f64 = 2.0 * r.diagonal().iter().map(|v| v.abs().ln()).sum::<f64>();
    Ok(-(n as f64) / (2.0 * delta) * LN_2PI - rss / (2.0 * delta)
        + 0.5 * d as f64 * (LN_2PI + delta.ln())
        - 0.5 * log_det_xtx)
}

/// Laplace fits keyed by model for the current imaginary data.
///
/// Entries are `None` when the model has no usable fit for this `y*`.
#[derive(Debug, Default)]
pub struct LaplaceCache {
    fits: HashMap<u64, Option<LaplaceFit>>,
    /// Last mode found per model; survives `clear` as a warm start.
    starts: HashMap<u64, DVector<f64>>,
    pub hits: u64,
    pub misses: u64,
}

impl LaplaceCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Forget every entry, e.g. after `y*` changes.
    pub fn clear(&mut self) {
        self.fits.clear();
    }

    pub fn len(&self) -> usize {
        self.fits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fits.is_empty()
    }

    /// Last mode found for `gamma`, if any.
    pub fn start(&self, gamma: &ModelIndicator) -> Option<&DVector<f64>> {
        self.starts.get(&gamma.key())
    }

    /// Cached fit for `gamma`, computing it with `fit(warm start)` on a miss.
    pub fn get_or_fit(
        &mut self,
        gamma: &ModelIndicator,
        fit: impl FnOnce(Option<&DVector<f64>>) -> Option<LaplaceFit>,
    ) -> Option<&LaplaceFit> {
        let key = gamma.key();
        if self.fits.contains_key(&key) {
            self.hits += 1;
        } else {
            self.misses += 1;
            let f = fit(self.starts.get(&key));
            if let Some(f) = &f {
                self.starts.insert(key, f.beta_hat.clone());
            }
            self.fits.insert(key, f);
        }
        self.fits[&key].as_ref()
    }

    /// Replace the contents with a precomputed set, e.g. after an
    /// accepted `y*` move whose new fit is already known.
    pub fn reset_with(&mut self, gamma: &ModelIndicator, fit: LaplaceFit) {
        self.fits.clear();
        self.starts.insert(gamma.key(), fit.beta_hat.clone());
        self.fits.insert(gamma.key(), Some(fit));
    }
}
