//! Posterior model probabilities by direct integration, for `p ≤ 2`.
//!
//! Gaussian responses use closed forms: with a flat reference intercept the
//! PEP prior on the slopes is the g-prior with `g = δ + ψ`, so
//!
//! `log m_γ(y) = −(p_γ/2) log(1 + g) + ½ g/(1 + g) · ỹᵀ P_γ ỹ + const`,
//!
//! with `P_γ` the projection onto the centered active columns. Random `δ`
//! or `g` adds a one-dimensional quadrature.
//!
//! Binary responses sum over all `2^n` imaginary data sets:
//!
//! `m_γ(y) ∝ Σ_{y*} m₀(y* | ψ) · ∫ f(y|β) f(y*|β)^{1/δ} π^N(β) dβ / m_γ(y* | δ)`,
//!
//! where the normalizer `m_γ(y* | δ)` is either integrated exactly or
//! replaced by the Laplace value the chain itself uses. Pairs `(γ, y*)`
//! without a usable fit carry no mass, as in the chain.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::glm::{fit_penalized, irls_fit, log_likelihood_eta, GlmFamily, IrlsOptions, ObsWeights};
use crate::laplace::{LaplaceFit, SAMPLER_RIDGE};
use crate::model::ModelIndicator;
use crate::priors::{BaselinePrior, DeltaPrior, GPriorConfig, GPriorKind, ModelPrior};
use crate::quadrature::{integrate_line, integrate_upper, QuadOptions};

use super::ReferenceMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MarginalNormalizer {
    /// Integrate `m_γ(y* | δ)` numerically.
    Exact,
    /// Use the Laplace approximation, which is what the chain targets.
    Laplace,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OraclePrior {
    Pep {
        reference: ReferenceMode,
        delta: DeltaPrior,
        baseline: BaselinePrior,
    },
    GPrior(GPriorConfig),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleSetup {
    pub prior: OraclePrior,
    pub model_prior: ModelPrior,
    pub normalizer: MarginalNormalizer,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn normalize(models: Vec<ModelIndicator>, log_post: Vec<f64>) -> Result<Vec<(ModelIndicator, f64)>> {
    let z = log_sum_exp(&log_post);
    if !z.is_finite() {
        return Err(Error::Evaluation("oracle: every model has zero mass".into()));
    }
    Ok(models.into_iter().zip(log_post).map(|(m, l)| (m, (l - z).exp())).collect())
}

/// Posterior probability of each of the `2^p` models, in enumeration order.
pub fn brute_force_model_posterior(data: &Dataset, setup: &OracleSetup) -> Result<Vec<(ModelIndicator, f64)>> {
    let p = data.p();
    if p > 2 {
        return Err(Error::Config(format!("the quadrature oracle handles p ≤ 2, got p = {p}")));
    }
    if p == 0 {
        return Ok(vec![(ModelIndicator::null(0), 1.0)]);
    }
    let models: Vec<ModelIndicator> = ModelIndicator::enumerate(p).collect();
    let log_m = match &data.family {
        GlmFamily::Gaussian => gaussian_log_marginals(data, &models, setup)?,
        GlmFamily::Binomial { trials } if trials.iter().all(|&t| t == 1.0) => {
            binary_log_marginals(data, &models, setup)?
        }
        other => {
            return Err(Error::Config(format!(
                "the quadrature oracle does not support the {} family with these trials",
                other.name()
            )))
        }
    };
    let log_post = models
        .iter()
        .zip(&log_m)
        .map(|(m, l)| l + setup.model_prior.log_density(m))
        .collect();
    normalize(models, log_post)
}

/// `ỹᵀ P_γ ỹ` on the centered design.
fn explained_ss(data: &Dataset, gamma: &ModelIndicator) -> Result<f64> {
    if gamma.size() == 0 {
        return Ok(0.0);
    }
    let cols: Vec<usize> = gamma.active().map(|j| j + 1).collect();
    let xt = crate::model::select_columns(&data.x, &cols);
    let yc = data.y.add_scalar(-data.y.mean());
    let chol = xt
        .tr_mul(&xt)
        .cholesky()
        .ok_or_else(|| Error::Singular("oracle: centered design is rank deficient".into()))?;
    let b = xt.tr_mul(&yc);
    Ok(b.dot(&chol.solve(&b)))
}

fn gprior_closed_form(p_gamma: usize, q: f64, g: f64) -> f64 {
    -0.5 * p_gamma as f64 * g.ln_1p() + 0.5 * g / (1.0 + g) * q
}

fn gaussian_log_marginals(data: &Dataset, models: &[ModelIndicator], setup: &OracleSetup) -> Result<Vec<f64>> {
    let opts = QuadOptions::tol(0.0, 1e-11);
    models
        .iter()
        .map(|gamma| {
            let q = explained_ss(data, gamma)?;
            let k = gamma.size();
            match setup.prior {
                OraclePrior::Pep { reference, delta, .. } => match (delta, reference) {
                    (DeltaPrior::Fixed { value }, _) => {
                        Ok(gprior_closed_form(k, q, value + reference.psi(value)))
                    }
                    (_, ReferenceMode::Cr) => {
                        let shift = gprior_closed_form(k, q, 1.0);
                        let r = integrate_upper(
                            |d| {
                                (gprior_closed_form(k, q, d + 1.0) - shift
                                    + delta.log_density(d).unwrap_or(f64::NEG_INFINITY))
                                .exp()
                            },
                            0.0,
                            opts,
                        );
                        Ok(shift + r.value.ln())
                    }
                    (_, ReferenceMode::Dr) => Err(Error::Config(
                        "the oracle integrates random δ only under the concentrated reference".into(),
                    )),
                },
                OraclePrior::GPrior(cfg) => {
                    if let GPriorKind::UnitInfo = cfg.kind {
                        return Ok(gprior_closed_form(k, q, cfg.n));
                    }
                    let shift = gprior_closed_form(k, q, cfg.n);
                    let r = integrate_upper(
                        |g| {
                            (gprior_closed_form(k, q, g) - shift
                                + cfg.log_g_density(g, k).unwrap_or(f64::NEG_INFINITY))
                            .exp()
                        },
                        0.0,
                        opts,
                    );
                    Ok(shift + r.value.ln())
                }
            }
        })
        .collect()
}

/// `log ∫ exp(h(β)) dβ` over `ℝ^d`, after the change of variables
/// `β = m + L⁻ᵀ u` with `L Lᵀ` the curvature of `h` at `m`.
fn log_integral_gaussianized(h: &dyn Fn(&DVector<f64>) -> f64, center: &DVector<f64>, curvature: &DMatrix<f64>, opts: QuadOptions) -> Result<f64> {
    let d = center.len();
    let chol = curvature
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Evaluation("oracle: curvature is not positive definite".into()))?;
    let lt_inv = chol
        .l()
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::Singular("oracle: triangular inverse".into()))?;
    let log_jac: f64 = -chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let h0 = h(center);
    if !h0.is_finite() {
        return Err(Error::Evaluation("oracle: integrand undefined at its centre".into()));
    }
    let eval = |u: &DVector<f64>| -> f64 {
        let b = center + &lt_inv * u;
        let v = h(&b) - h0;
        if v.is_finite() {
            v.exp()
        } else {
            0.0
        }
    };
    fn nest(level: usize, d: usize, u: &mut DVector<f64>, eval: &dyn Fn(&DVector<f64>) -> f64, opts: QuadOptions) -> f64 {
        if level == d {
            return eval(u);
        }
        let mut uu = u.clone();
        integrate_line(
            |t| {
                uu[level] = t;
                let mut inner = uu.clone();
                nest(level + 1, d, &mut inner, eval, opts)
            },
            opts,
        )
        .value
    }
    let mut u = DVector::zeros(d);
    let val = nest(0, d, &mut u, &eval, opts);
    Ok(h0 + log_jac + val.ln())
}

/// Centre and curvature of `β ↦ Σ w_i ℓ_i(β)`.
fn mode_of(family: &GlmFamily, y: &DVector<f64>, x: &DMatrix<f64>, w: &[f64]) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let fit = fit_penalized(family, y, x, ObsWeights::PerObs(w), SAMPLER_RIDGE, None, &IrlsOptions::default()).ok()?;
    fit.is_usable().then_some((fit.beta, fit.observed_info))
}

fn binary_log_marginals(data: &Dataset, models: &[ModelIndicator], setup: &OracleSetup) -> Result<Vec<f64>> {
    let OraclePrior::Pep { reference, delta, baseline } = setup.prior else {
        return Err(Error::Config("the binary oracle covers PEP priors only".into()));
    };
    let DeltaPrior::Fixed { value: delta } = delta else {
        return Err(Error::Config("the binary oracle needs a fixed δ".into()));
    };
    let n = data.n();
    if n > 16 {
        return Err(Error::Config(format!("exhaustive imaginary-data sums need n ≤ 16, got {n}")));
    }
    let psi = reference.psi(delta);
    let fam = &data.family;
    let ones = DMatrix::from_element(n, 1, 1.0);
    let opts = QuadOptions::tol(1e-11, 1e-7);
    let designs: Vec<DMatrix<f64>> = models.iter().map(|m| data.design_for(m)).collect();
    let stacked = fam.stacked(2);

    let per_ystar: Vec<Result<Vec<f64>>> = (1u32..(1u32 << n) - 1)
        .into_par_iter()
        .map(|code| {
            let ys = DVector::from_fn(n, |i, _| f64::from((code >> i) & 1));
            // Reference predictive m₀(y* | ψ).
            let h0 = |b: &DVector<f64>| {
                let eta = DVector::from_element(n, b[0]);
                log_likelihood_eta(fam, &ys, &eta, ObsWeights::ONE).map_or(f64::NEG_INFINITY, |l| l / psi)
                    + baseline.log_density(fam, &ones, b).unwrap_or(f64::NEG_INFINITY)
            };
            let null = irls_fit(fam, &ys, &ones, ObsWeights::ONE, SAMPLER_RIDGE)?;
            let log_m0 = log_integral_gaussianized(&h0, &null.beta, &(&null.observed_info / psi), opts)?;

            let mut out = Vec::with_capacity(models.len());
            for x in &designs {
                let lf = LaplaceFit::compute(fam, baseline, &ys, x, SAMPLER_RIDGE);
                let Ok(lf) = lf else {
                    out.push(f64::NEG_INFINITY);
                    continue;
                };
                let h_norm = |b: &DVector<f64>| {
                    let eta = x * b;
                    log_likelihood_eta(fam, &ys, &eta, ObsWeights::ONE).map_or(f64::NEG_INFINITY, |l| l / delta)
                        + baseline.log_density(fam, x, b).unwrap_or(f64::NEG_INFINITY)
                };
                let log_norm = match setup.normalizer {
                    MarginalNormalizer::Laplace => lf.log_marginal(delta),
                    MarginalNormalizer::Exact => {
                        let fit = irls_fit(fam, &ys, x, ObsWeights::ONE, SAMPLER_RIDGE)?;
                        log_integral_gaussianized(&h_norm, &fit.beta, &(&fit.observed_info / delta), opts)?
                    }
                };
                let h_joint = |b: &DVector<f64>| {
                    let eta = x * b;
                    let ly = log_likelihood_eta(fam, &data.y, &eta, ObsWeights::ONE).unwrap_or(f64::NEG_INFINITY);
                    ly + h_norm(b)
                };
                let y_all = DVector::from_fn(2 * n, |i, _| if i < n { data.y[i] } else { ys[i - n] });
                let x_all = DMatrix::from_fn(2 * n, x.ncols(), |i, k| x[(i % n, k)]);
                let w: Vec<f64> = (0..2 * n).map(|i| if i < n { 1.0 } else { 1.0 / delta }).collect();
                let (c, curv) = mode_of(&stacked, &y_all, &x_all, &w)
                    .ok_or_else(|| Error::Divergence("oracle: observed data give no interior mode".into()))?;
                let log_a = log_integral_gaussianized(&h_joint, &c, &curv, opts)?;
                out.push(log_m0 + log_a - log_norm);
            }
            Ok(out)
        })
        .collect();

    let mut columns = vec![Vec::with_capacity(per_ystar.len()); models.len()];
    for row in per_ystar {
        for (k, v) in row?.into_iter().enumerate() {
            columns[k].push(v);
        }
    }
    Ok(columns.iter().map(|c| log_sum_exp(c)).collect())
}
