//! Log-densities of baseline, power-parameter, model-space and g-priors.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::glm::{observed_information, GlmFamily, ObsWeights};
use crate::model::ModelIndicator;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// `½ log det A` through a Cholesky factor.
pub(crate) fn half_log_det(a: &DMatrix<f64>, what: &str) -> Result<f64> {
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Evaluation(what.to_string()))?;
    Ok(chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum())
}

/// Baseline prior `π^N(β_γ)` on the coefficients of a model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselinePrior {
    /// `π^N ∝ 1`.
    Flat,
    /// `π^N ∝ |Xᵀ W(β) X|^{1/2}`.
    #[default]
    Jeffreys,
}

impl BaselinePrior {
    /// Unnormalized log-density; the constants cancel in Bayes factors.
    pub fn log_density(&self, family: &GlmFamily, x: &DMatrix<f64>, beta: &DVector<f64>) -> Result<f64> {
        match self {
            BaselinePrior::Flat => Ok(0.0),
            BaselinePrior::Jeffreys => {
                let info = observed_information(family, x, beta, ObsWeights::ONE)?;
                half_log_det(&info, "the Jeffreys prior information")
            }
        }
    }
}

pub fn log_baseline_prior(
    prior: BaselinePrior,
    family: &GlmFamily,
    x_gamma: &DMatrix<f64>,
    beta_gamma: &DVector<f64>,
) -> Result<f64> {
    prior.log_density(family, x_gamma, beta_gamma)
}

impl fmt::Display for BaselinePrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselinePrior::Flat => "flat",
            BaselinePrior::Jeffreys => "jeffreys",
        })
    }
}

impl FromStr for BaselinePrior {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(BaselinePrior::Flat),
            "jeffreys" => Ok(BaselinePrior::Jeffreys),
            other => Err(Error::Config(format!("unknown baseline prior `{other}`"))),
        }
    }
}

fn check_a(a: f64) -> Result<()> {
    if a > 2.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "hyper-prior parameter a must exceed 2, got {a}"
        )))
    }
}

/// Prior on the power parameter `δ`, or equally on `g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum DeltaPrior {
    Fixed { value: f64 },
    /// `π(δ) = (a − 2)/2 · (1 + δ)^{−a/2}`.
    Hyper { a: f64 },
    /// `π(δ) = (a − 2)/(2n) · (1 + δ/n)^{−a/2}`.
    HyperN { a: f64, n: f64 },
}

impl DeltaPrior {
    pub fn fixed(value: f64) -> Result<Self> {
        if value > 0.0 && value.is_finite() {
            Ok(DeltaPrior::Fixed { value })
        } else {
            Err(Error::Config(format!("fixed δ must be positive, got {value}")))
        }
    }

    pub fn hyper(a: f64) -> Result<Self> {
        check_a(a)?;
        Ok(DeltaPrior::Hyper { a })
    }

    pub fn hyper_n(a: f64, n: f64) -> Result<Self> {
        check_a(a)?;
        if !(n > 0.0) {
            return Err(Error::Config(format!("hyper-n scale must be positive, got {n}")));
        }
        Ok(DeltaPrior::HyperN { a, n })
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, DeltaPrior::Fixed { .. })
    }

    /// Starting value: the fixed value, otherwise `n`.
    pub fn initial(&self, n: usize) -> f64 {
        match self {
            DeltaPrior::Fixed { value } => *value,
            _ => n as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DeltaPrior::Fixed { value } => Self::fixed(value).map(|_| ()),
            DeltaPrior::Hyper { a } => check_a(a),
            DeltaPrior::HyperN { a, n } => Self::hyper_n(a, n).map(|_| ()),
        }
    }

    pub fn log_density(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0) {
            return Err(Error::Config(format!("δ must be positive, got {delta}")));
        }
        match *self {
            DeltaPrior::Fixed { .. } => Err(Error::Config(
                "a fixed δ has no density".into(),
            )),
            DeltaPrior::Hyper { a } => Ok(((a - 2.0) / 2.0).ln() - 0.5 * a * delta.ln_1p()),
            DeltaPrior::HyperN { a, n } => {
                Ok(((a - 2.0) / (2.0 * n)).ln() - 0.5 * a * (delta / n).ln_1p())
            }
        }
    }
}

pub fn log_delta_prior(dp: &DeltaPrior, delta: f64) -> Result<f64> {
    dp.log_density(delta)
}

/// Prior over the `2^p` models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelPrior {
    Uniform,
    BetaBinomial,
}

impl ModelPrior {
    pub fn log_density(&self, gamma: &ModelIndicator) -> f64 {
        let p = gamma.len() as u64;
        match self {
            ModelPrior::Uniform => -(p as f64) * std::f64::consts::LN_2,
            ModelPrior::BetaBinomial => {
                -((p + 1) as f64).ln() - ln_binomial(p, gamma.size() as u64)
            }
        }
    }
}

pub fn log_model_prior(mp: ModelPrior, gamma: &ModelIndicator) -> f64 {
    mp.log_density(gamma)
}

impl fmt::Display for ModelPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelPrior::Uniform => "uniform",
            ModelPrior::BetaBinomial => "betabinomial",
        })
    }
}

impl FromStr for ModelPrior {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(ModelPrior::Uniform),
            "betabinomial" | "beta-binomial" => Ok(ModelPrior::BetaBinomial),
            other => Err(Error::Config(format!("unknown model prior `{other}`"))),
        }
    }
}

/// Which member of the g-prior family compares against the PEP priors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GPriorKind {
    /// `g = n`.
    UnitInfo,
    HyperG { a: f64 },
    HyperGN { a: f64 },
    /// Beta-prime prior of Maruyama and George with their default
    /// hyperparameters; depends on the model size.
    MgHyperG,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GPriorConfig {
    pub kind: GPriorKind,
    /// Sample size; sets `g = n` under unit information and scales hyper-g/n.
    pub n: f64,
}

impl GPriorConfig {
    pub fn new(kind: GPriorKind, n: usize) -> Result<Self> {
        if let GPriorKind::HyperG { a } | GPriorKind::HyperGN { a } = kind {
            check_a(a)?;
        }
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok(Self { kind, n: n as f64 })
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self.kind, GPriorKind::UnitInfo)
    }

    pub fn initial_g(&self) -> f64 {
        self.n
    }

    /// `log π(g | γ)` for the random-g variants.
    pub fn log_g_density(&self, g: f64, p_gamma: usize) -> Result<f64> {
        if !(g > 0.0) {
            return Err(Error::Config(format!("g must be positive, got {g}")));
        }
        match self.kind {
            GPriorKind::UnitInfo => Err(Error::Config("unit-information g is fixed".into())),
            GPriorKind::HyperG { a } => DeltaPrior::Hyper { a }.log_density(g),
            GPriorKind::HyperGN { a } => DeltaPrior::HyperN { a, n: self.n }.log_density(g),
            GPriorKind::MgHyperG => {
                let (a, b) = mg_parameters(self.n, p_gamma)?;
                Ok(b * g.ln() - (a + b + 2.0) * g.ln_1p() - ln_beta(a + 1.0, b + 1.0))
            }
        }
    }
}

/// `(a, b)` of the MG beta-prime prior `g^b (1 + g)^{−a−b−2} / B(a+1, b+1)`,
/// with `a = −3/4` and `b = (n − p_γ − 5)/2 − a`.
pub fn mg_parameters(n: f64, p_gamma: usize) -> Result<(f64, f64)> {
    let a = -0.75;
    let b = (n - p_gamma as f64 - 5.0) / 2.0 - a;
    if b <= -1.0 {
        return Err(Error::Config(format!(
            "MG hyper-g needs n > p_γ + 3.5; n = {n}, p_γ = {p_gamma}"
        )));
    }
    Ok((a, b))
}

/// GLM weights of the intercept-only fit to `y`: binomial `N_i p̄(1 − p̄)`,
/// Poisson `ȳ`, Gaussian 1.
pub fn null_model_weights(family: &GlmFamily, y: &DVector<f64>) -> Result<Vec<f64>> {
    let n = y.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let w = match family {
        GlmFamily::Binomial { trials } => {
            let p = y.sum() / trials.iter().sum::<f64>();
            trials.iter().map(|&t| t * p * (1.0 - p)).collect()
        }
        GlmFamily::Poisson => vec![y.mean(); n],
        GlmFamily::Gaussian => vec![1.0; n],
    };
    if w.iter().any(|&v: &f64| !(v > 0.0)) {
        return Err(Error::Evaluation(
            "g-prior weights: null-model fit sits on the boundary".into(),
        ));
    }
    Ok(w)
}

/// `X̃ᵀ W₀ X̃` for all non-intercept columns of the full design.
#[derive(Clone, Debug)]
pub struct GPriorPrecision {
    full: DMatrix<f64>,
}

impl GPriorPrecision {
    /// `x` is the full design with the intercept in column 0.
    pub fn new(x: &DMatrix<f64>, w0: &[f64]) -> Result<Self> {
        if w0.len() != x.nrows() {
            return Err(Error::Dimension("null-model weights do not match the design".into()));
        }
        let xt = x.columns(1, x.ncols() - 1);
        let wx = DMatrix::from_fn(xt.nrows(), xt.ncols(), |i, j| w0[i] * xt[(i, j)]);
        Ok(Self { full: xt.tr_mul(&wx) })
    }

    /// Precision block of the active predictors of `gamma`, before dividing by `g`.
    pub fn block(&self, gamma: &ModelIndicator) -> DMatrix<f64> {
        let act: Vec<usize> = gamma.active().collect();
        DMatrix::from_fn(act.len(), act.len(), |i, j| self.full[(act[i], act[j])])
    }

    /// `log N(β̃_γ; 0, g (X̃ᵀW₀X̃)⁻¹)` using the slope entries of a full
    /// length-`p + 1` coefficient vector.
    pub fn log_density(&self, gamma: &ModelIndicator, beta: &DVector<f64>, g: f64) -> Result<f64> {
        let act: Vec<usize> = gamma.active().collect();
        let slopes = DVector::from_iterator(act.len(), act.iter().map(|&j| beta[j + 1]));
        mvn_zero_log_density(&self.block(gamma), &slopes, g)
    }
}

/// `log N(b; 0, g A⁻¹)`.
fn mvn_zero_log_density(a: &DMatrix<f64>, b: &DVector<f64>, g: f64) -> Result<f64> {
    let k = b.len() as f64;
    if b.is_empty() {
        return Ok(0.0);
    }
    if !(g > 0.0) {
        return Err(Error::Config(format!("g must be positive, got {g}")));
    }
    let hld = half_log_det(a, "the g-prior precision")?;
    let quad = b.dot(&(a * b));
    Ok(-0.5 * k * (LN_2PI + g.ln()) + hld - 0.5 * quad / g)
}

/// g-prior log-density of the slopes of `beta_gamma` (intercept first,
/// flat) given the null-model weights `w0`.
pub fn log_gprior_density(
    w0: &[f64],
    x_gamma: &DMatrix<f64>,
    beta_gamma: &DVector<f64>,
    g: f64,
) -> Result<f64> {
    if x_gamma.ncols() != beta_gamma.len() || x_gamma.nrows() != w0.len() {
        return Err(Error::Dimension("g-prior arguments are not conformable".into()));
    }
    let gamma = ModelIndicator::full(x_gamma.ncols() - 1);
    GPriorPrecision::new(x_gamma, w0)?.log_density(&gamma, beta_gamma, g)
}
