//! Gibbs variable selection under the GLM g-prior and its mixtures.
//!
//! Target over `(γ, β, g)`:
//!
//! ```text
//! log f(y | β_γ) + log N(β̃_γ; 0, g (X̃_γᵀ W₀ X̃_γ)⁻¹) + log π̃(β_∖γ) + log π(γ) + log π(g | γ)
//! ```
//!
//! with a flat prior on the intercept.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::glm::{fit_penalized, log_likelihood_eta, IrlsOptions, ObsWeights};
use crate::model::ModelIndicator;
use crate::priors::{null_model_weights, GPriorPrecision};

use super::{
    draw_indicator, hyper_move, mh_accept, ridge_for, AcceptanceStats, ChainOutput, Diagnostics,
    GPriorChainConfig, PseudoPrior,
};
use super::pep::{quad_kernel, sample_mvn};

#[derive(Clone, Debug, PartialEq)]
pub struct GPriorState {
    pub gamma: ModelIndicator,
    pub beta: DVector<f64>,
    pub g: f64,
}

pub struct GPriorSampler<'a> {
    data: &'a Dataset,
    cfg: GPriorChainConfig,
    pseudo: PseudoPrior,
    precision: GPriorPrecision,
    ridge: f64,
}

impl<'a> GPriorSampler<'a> {
    pub fn new(data: &'a Dataset, cfg: GPriorChainConfig) -> Result<Self> {
        cfg.chain.validate()?;
        if let Some(m) = &cfg.frozen {
            if m.len() != data.p() {
                return Err(Error::Dimension(format!(
                    "frozen model has {} indicators for {} predictors",
                    m.len(),
                    data.p()
                )));
            }
        }
        let w0 = null_model_weights(&data.family, &data.y)?;
        Ok(Self {
            data,
            pseudo: PseudoPrior::from_data(data)?,
            precision: GPriorPrecision::new(&data.x, &w0)?,
            ridge: ridge_for(&data.family),
            cfg,
        })
    }

    pub fn pseudo_prior(&self) -> &PseudoPrior {
        &self.pseudo
    }

    pub fn init_state(&self) -> Result<GPriorState> {
        let gamma = self
            .cfg
            .frozen
            .clone()
            .unwrap_or_else(|| ModelIndicator::full(self.data.p()));
        Ok(GPriorState {
            gamma,
            beta: self.pseudo.means.clone(),
            g: self.cfg.gprior.initial_g(),
        })
    }

    fn log_g_prior(&self, g: f64, gamma: &ModelIndicator) -> f64 {
        if self.cfg.gprior.is_fixed() {
            0.0
        } else {
            self.cfg
                .gprior
                .log_g_density(g, gamma.size())
                .unwrap_or(f64::NEG_INFINITY)
        }
    }

    /// Every term of the target that depends on `γ`, with `β` and `g` fixed.
    pub fn model_terms(&self, st: &GPriorState, gamma: &ModelIndicator) -> f64 {
        let xg = self.data.design_for(gamma);
        let eta = &xg * gamma.active_coefficients(&st.beta);
        let ll = log_likelihood_eta(&self.data.family, &self.data.y, &eta, ObsWeights::ONE);
        let gp = self.precision.log_density(gamma, &st.beta, st.g);
        match (ll, gp) {
            (Ok(l), Ok(p)) => {
                l + p
                    + self.pseudo.log_density(gamma, &st.beta)
                    + self.cfg.model_prior.log_density(gamma)
                    + self.log_g_prior(st.g, gamma)
            }
            _ => f64::NAN,
        }
    }

    pub fn log_odds(&self, st: &GPriorState, j: usize) -> f64 {
        self.model_terms(st, &st.gamma.with(j, true)) - self.model_terms(st, &st.gamma.with(j, false))
    }

    pub fn gamma_sweep(&self, st: &mut GPriorState, rng: &mut ChaCha8Rng, diag: &mut Diagnostics) {
        let mut current = self.model_terms(st, &st.gamma.clone());
        for j in 0..self.data.p() {
            let alt = st.gamma.with(j, !st.gamma.get(j));
            let alt_terms = self.model_terms(st, &alt);
            let log_odds = if st.gamma.get(j) {
                current - alt_terms
            } else {
                alt_terms - current
            };
            let now = draw_indicator(rng, log_odds, st.gamma.get(j), diag);
            if now != st.gamma.get(j) {
                st.gamma.set(j, now);
                current = alt_terms;
            }
        }
    }

    /// Slope-block precision `X̃_γᵀW₀X̃_γ / g` embedded with a zero intercept row.
    fn penalty(&self, gamma: &ModelIndicator, g: f64) -> DMatrix<f64> {
        let block = self.precision.block(gamma);
        let d = block.nrows() + 1;
        DMatrix::from_fn(d, d, |a, b| if a == 0 || b == 0 { 0.0 } else { block[(a - 1, b - 1)] / g })
    }

    fn beta_target(&self, st: &GPriorState, xg: &DMatrix<f64>, bg: &DVector<f64>) -> f64 {
        let eta = xg * bg;
        let mut full = st.beta.clone();
        for (k, &c) in st.gamma.columns().iter().enumerate() {
            full[c] = bg[k];
        }
        match (
            log_likelihood_eta(&self.data.family, &self.data.y, &eta, ObsWeights::ONE),
            self.precision.log_density(&st.gamma, &full, st.g),
        ) {
            (Ok(l), Ok(p)) => l + p,
            _ => f64::NEG_INFINITY,
        }
    }

    /// Independence move from the normal approximation at the posterior
    /// mode of `β_γ`, then a pseudo-prior refresh of `β_∖γ`.
    pub fn beta_update(&self, st: &mut GPriorState, rng: &mut ChaCha8Rng, acc: &mut AcceptanceStats, diag: &mut Diagnostics) {
        let xg = self.data.design_for(&st.gamma);
        let pen = self.penalty(&st.gamma, st.g);
        let fit = fit_penalized(
            &self.data.family,
            &self.data.y,
            &xg,
            ObsWeights::ONE,
            self.ridge,
            Some(&pen),
            &IrlsOptions::default(),
        );
        let prop = match &fit {
            Ok(f) if f.converged => {
                let prec = &f.observed_info + &pen;
                sample_mvn(rng, &f.beta, &prec).map(|b| (b, f.beta.clone(), prec))
            }
            _ => None,
        };
        match prop {
            Some((bp, mode, prec)) => {
                let bc = st.gamma.active_coefficients(&st.beta);
                let log_a = self.beta_target(st, &xg, &bp) - self.beta_target(st, &xg, &bc)
                    + quad_kernel(&bc, &mode, &prec)
                    - quad_kernel(&bp, &mode, &prec);
                if log_a.is_nan() {
                    diag.nonfinite_ratio += 1;
                }
                let accept = mh_accept(rng, log_a);
                acc.beta.record(accept);
                if accept {
                    for (k, &c) in st.gamma.columns().iter().enumerate() {
                        st.beta[c] = bp[k];
                    }
                }
            }
            None => diag.skipped_beta += 1,
        }
        for j in st.gamma.clone().inactive() {
            st.beta[j + 1] = self.pseudo.draw(j + 1, rng);
        }
    }

    pub fn g_update(&self, st: &mut GPriorState, rng: &mut ChaCha8Rng, acc: &mut AcceptanceStats, diag: &mut Diagnostics) {
        if self.cfg.gprior.is_fixed() {
            return;
        }
        let target = |g: f64| {
            self.precision
                .log_density(&st.gamma, &st.beta, g)
                .unwrap_or(f64::NEG_INFINITY)
                + self.log_g_prior(g, &st.gamma)
        };
        st.g = hyper_move(rng, st.g, target, &mut acc.hyper, diag);
    }

    pub fn run(&self) -> Result<ChainOutput> {
        let settings = &self.cfg.chain;
        let mut rng = settings.rng();
        let mut st = self.init_state()?;
        let mut acc = AcceptanceStats::default();
        let mut diag = Diagnostics::default();
        let keep = settings.retained();
        let mut gamma_draws = Vec::with_capacity(keep);
        let mut hyper_draws = Vec::with_capacity(keep);
        let mut beta_draws = Vec::new();
        for it in 0..settings.iterations {
            if self.cfg.frozen.is_none() {
                self.gamma_sweep(&mut st, &mut rng, &mut diag);
            }
            self.beta_update(&mut st, &mut rng, &mut acc, &mut diag);
            self.g_update(&mut st, &mut rng, &mut acc, &mut diag);
            if it >= settings.burnin {
                gamma_draws.push(st.gamma.clone());
                hyper_draws.push(st.g);
                if settings.record_beta {
                    beta_draws.push(st.beta.clone());
                }
            }
        }
        Ok(ChainOutput {
            names: self.data.names.clone(),
            gamma_draws,
            hyper_draws,
            hyper_name: "g",
            beta_draws,
            acceptance: acc,
            diagnostics: diag,
        })
    }
}

pub fn run_gprior_chain(cfg: &GPriorChainConfig, data: &Dataset) -> Result<ChainOutput> {
    GPriorSampler::new(data, cfg.clone())?.run()
}
