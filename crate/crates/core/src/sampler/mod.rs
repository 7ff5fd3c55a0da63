//! Gibbs variable selection chains.
//!
//! [`pep`] samples the augmented posterior of a power-expected-posterior
//! prior over `(γ, β, β₀, y*, δ)`; [`gprior`] samples the g-prior family over
//! `(γ, β, g)`. Both share the pseudo-prior, the output format and the
//! Metropolis–Hastings bookkeeping defined here.

mod gprior;
pub mod methods;
pub mod oracle;
mod pep;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::glm::{irls_fit, GlmFamily, ObsWeights};
use crate::laplace::SAMPLER_RIDGE;
use crate::model::ModelIndicator;
use crate::priors::{BaselinePrior, DeltaPrior, GPriorConfig, ModelPrior};

pub use gprior::{run_gprior_chain, GPriorSampler, GPriorState};
pub use methods::Method;
pub use oracle::{brute_force_model_posterior, MarginalNormalizer, OraclePrior, OracleSetup};
pub use pep::{run_chain, ChainWork, PepSampler, SamplerState};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Ridge for the sampler's fits. The Gaussian likelihood never separates,
/// and any ridge would pull its proposals off the exact conditionals.
pub(crate) fn ridge_for(family: &GlmFamily) -> f64 {
    match family {
        GlmFamily::Gaussian => 0.0,
        _ => SAMPLER_RIDGE,
    }
}

/// How the reference-model predictive enters the prior.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceMode {
    /// Concentrated reference, `ψ = 1`.
    Cr,
    /// Diffuse reference, `ψ = δ`.
    Dr,
}

impl ReferenceMode {
    pub fn psi(&self, delta: f64) -> f64 {
        match self {
            ReferenceMode::Cr => 1.0,
            ReferenceMode::Dr => delta,
        }
    }
}

impl fmt::Display for ReferenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReferenceMode::Cr => "cr",
            ReferenceMode::Dr => "dr",
        })
    }
}

impl FromStr for ReferenceMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cr" => Ok(ReferenceMode::Cr),
            "dr" => Ok(ReferenceMode::Dr),
            other => Err(Error::Config(format!("unknown reference mode `{other}`"))),
        }
    }
}

/// Run length, seeding and what to record.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainSettings {
    pub iterations: usize,
    pub burnin: usize,
    pub seed: u64,
    /// Independent ChaCha stream under the same seed.
    pub stream: u64,
    /// Keep the full coefficient vector of every retained iteration.
    pub record_beta: bool,
}

impl Default for ChainSettings {
    fn default() -> Self {
        Self {
            iterations: 41_000,
            burnin: 1_000,
            seed: 1,
            stream: 0,
            record_beta: false,
        }
    }
}

impl ChainSettings {
    pub fn new(iterations: usize, burnin: usize, seed: u64) -> Self {
        Self {
            iterations,
            burnin,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burnin >= self.iterations {
            return Err(Error::Config(format!(
                "burn-in ({}) must be smaller than the number of iterations ({})",
                self.burnin, self.iterations
            )));
        }
        Ok(())
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    pub fn retained(&self) -> usize {
        self.iterations - self.burnin
    }
}

/// Settings of a PEP chain.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub chain: ChainSettings,
    pub reference: ReferenceMode,
    pub delta: DeltaPrior,
    pub baseline: BaselinePrior,
    pub model_prior: ModelPrior,
    /// Hold `γ` at this model and skip the selection step.
    pub frozen: Option<ModelIndicator>,
}

impl SamplerConfig {
    /// CR-PEP with fixed `δ = n`, Jeffreys baseline and a uniform model prior.
    pub fn new(chain: ChainSettings, n: usize) -> Self {
        Self {
            chain,
            reference: ReferenceMode::Cr,
            delta: DeltaPrior::Fixed { value: n as f64 },
            baseline: BaselinePrior::Jeffreys,
            model_prior: ModelPrior::Uniform,
            frozen: None,
        }
    }
}

/// Settings of a g-prior chain.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GPriorChainConfig {
    pub chain: ChainSettings,
    pub gprior: GPriorConfig,
    pub model_prior: ModelPrior,
    pub frozen: Option<ModelIndicator>,
}

/// Independent normals for the coefficients a model leaves out, centred at
/// the full-model estimates on the observed data.
#[derive(Clone, Debug)]
pub struct PseudoPrior {
    /// Length `p + 1`; entry 0 (intercept) is never used.
    pub means: DVector<f64>,
    pub sds: DVector<f64>,
}

impl PseudoPrior {
    pub fn from_data(data: &Dataset) -> Result<Self> {
        let fit = irls_fit(&data.family, &data.y, &data.x, ObsWeights::ONE, ridge_for(&data.family))?;
        if !fit.converged {
            return Err(Error::Divergence(
                "the full model does not converge on the observed data".into(),
            ));
        }
        if fit.separated {
            log::warn!("full-model fit on the observed data is (quasi-)separated; pseudo-prior uses the ridge mode");
        }
        let cov = fit.covariance()?;
        let sds = DVector::from_iterator(cov.nrows(), (0..cov.nrows()).map(|k| cov[(k, k)].sqrt()));
        Ok(Self { means: fit.beta, sds })
    }

    /// `log N(β_k; μ_k, s_k²)` for coefficient index `k` of the full vector.
    #[inline]
    pub fn log_density_at(&self, k: usize, value: f64) -> f64 {
        let z = (value - self.means[k]) / self.sds[k];
        -0.5 * (LN_2PI + z * z) - self.sds[k].ln()
    }

    /// Sum over the predictors `gamma` excludes.
    pub fn log_density(&self, gamma: &ModelIndicator, beta: &DVector<f64>) -> f64 {
        gamma.inactive().map(|j| self.log_density_at(j + 1, beta[j + 1])).sum()
    }

    pub fn draw<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        self.means[k] + self.sds[k] * z
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveStats {
    pub proposed: u64,
    pub accepted: u64,
}

impl MoveStats {
    pub fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += u64::from(accepted);
    }

    pub fn rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceStats {
    pub beta: MoveStats,
    pub beta0: MoveStats,
    pub y_star: MoveStats,
    /// `δ` or `g`.
    pub hyper: MoveStats,
}

/// Counters for events the chain survived by keeping its current state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub nonfinite_odds: u64,
    /// Selection steps where the alternative model had no usable fit.
    pub unusable_alternative: u64,
    pub skipped_beta: u64,
    pub skipped_beta0: u64,
    /// `y*` proposals rejected because no usable fit existed.
    pub unusable_y_star: u64,
    pub nonfinite_ratio: u64,
    pub laplace_fits: u64,
}

/// Retained draws and bookkeeping of one chain.
#[derive(Clone, Debug)]
pub struct ChainOutput {
    pub names: Vec<String>,
    pub gamma_draws: Vec<ModelIndicator>,
    /// `δ` for PEP chains, `g` for g-prior chains.
    pub hyper_draws: Vec<f64>,
    pub hyper_name: &'static str,
    /// Full coefficient vectors, when recorded.
    pub beta_draws: Vec<DVector<f64>>,
    pub acceptance: AcceptanceStats,
    pub diagnostics: Diagnostics,
}

impl ChainOutput {
    pub fn p(&self) -> usize {
        self.names.len()
    }

    pub fn len(&self) -> usize {
        self.gamma_draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma_draws.is_empty()
    }

    pub fn visit_counts(&self) -> BTreeMap<ModelIndicator, usize> {
        let mut counts = BTreeMap::new();
        for g in &self.gamma_draws {
            *counts.entry(g.clone()).or_insert(0) += 1;
        }
        counts
    }
}

/// `log u < log α` with one uniform consumed whatever `α` is, so chains
/// that differ only in their ratios stay on the same random stream.
#[inline]
pub(crate) fn mh_accept<R: Rng + ?Sized>(rng: &mut R, log_alpha: f64) -> bool {
    let u: f64 = rng.random();
    log_alpha >= 0.0 || u.ln() < log_alpha
}

/// `log Gamma(x; shape = k, rate = 1)`.
#[inline]
pub(crate) fn log_gamma_rw(x: f64, k: f64) -> f64 {
    (k - 1.0) * x.ln() - x - statrs::function::gamma::ln_gamma(k)
}

/// Gamma random-walk move on a positive hyperparameter with mean equal to
/// the current value and variance equal to it. `log_target` gives the
/// hyperparameter-dependent part of the log posterior.
pub(crate) fn hyper_move<R: Rng + ?Sized>(
    rng: &mut R,
    current: f64,
    log_target: impl Fn(f64) -> f64,
    stats: &mut MoveStats,
    diag: &mut Diagnostics,
) -> f64 {
    let proposal: f64 = rng.sample(rand_distr::Gamma::new(current, 1.0).expect("positive shape"));
    let log_a = if proposal > 0.0 && proposal.is_finite() {
        log_target(proposal) - log_target(current) + log_gamma_rw(current, proposal)
            - log_gamma_rw(proposal, current)
    } else {
        f64::NAN
    };
    if !log_a.is_finite() && log_a != f64::NEG_INFINITY {
        diag.nonfinite_ratio += 1;
        let _: f64 = rng.random();
        stats.record(false);
        return current;
    }
    let accept = mh_accept(rng, log_a);
    stats.record(accept);
    if accept {
        proposal
    } else {
        current
    }
}

/// `log P(γ_j = 1)` complement-safe Bernoulli draw from log-odds, consuming
/// one uniform. Non-finite odds keep `current`.
pub(crate) fn draw_indicator<R: Rng + ?Sized>(rng: &mut R, log_odds: f64, current: bool, diag: &mut Diagnostics) -> bool {
    let u: f64 = rng.random();
    if log_odds.is_nan() {
        diag.nonfinite_odds += 1;
        return current;
    }
    let p1 = crate::glm::logistic(log_odds);
    u < p1
}
