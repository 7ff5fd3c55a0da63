//! The PEP Gibbs variable selection chain.
//!
//! Target, up to a constant, over `(γ, β, β₀, y*, δ)`:
//!
//! ```text
//! log f(y | β_γ) + log f(y* | β_γ)/δ + log π^N(β_γ) − log m̂_γ(y* | δ)
//!   + log f₀(y* | β₀)/ψ + log π₀^N(β₀) + log π̃(β_∖γ) + log π(γ) + log π(δ)
//! ```
//!
//! with `ψ = 1` (CR) or `ψ = δ` (DR), `π̃` the pseudo-prior and `m̂` the
//! Laplace approximation. Each iteration runs the selection sweep, the
//! coefficient moves, the imaginary-data move and, if random, the `δ` move.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson, StandardNormal};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::glm::{fit_penalized, irls_fit, log_likelihood_eta, FitResult, GlmFamily, IrlsOptions, ObsWeights};
use crate::laplace::{LaplaceCache, LaplaceFit};
use crate::model::ModelIndicator;

use super::{
    draw_indicator, hyper_move, mh_accept, ridge_for, AcceptanceStats, ChainOutput, Diagnostics,
    PseudoPrior, SamplerConfig,
};

/// Current coordinates of the PEP chain.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplerState {
    pub gamma: ModelIndicator,
    /// Length `p + 1`: entries of active predictors form `β_γ`, the rest `β_∖γ`.
    pub beta: DVector<f64>,
    pub beta0: f64,
    pub y_star: DVector<f64>,
    pub delta: f64,
}

/// Per-chain mutable scratch: caches and counters.
#[derive(Debug, Default)]
pub struct ChainWork {
    pub cache: LaplaceCache,
    null_fit: Option<Option<FitResult>>,
    pub acceptance: AcceptanceStats,
    pub diagnostics: Diagnostics,
}

impl ChainWork {
    fn y_star_changed(&mut self) {
        self.cache.clear();
        self.null_fit = None;
    }
}

pub(super) fn sample_mvn(rng: &mut ChaCha8Rng, mean: &DVector<f64>, info: &DMatrix<f64>) -> Option<DVector<f64>> {
    // info = L Lᵀ, so Lᵀ⁻¹ z has covariance info⁻¹.
    let chol = info.clone().cholesky()?;
    let z = DVector::from_fn(mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    let step = chol.l().transpose().solve_upper_triangular(&z)?;
    Some(mean + step)
}

/// `−½ (b − m)ᵀ A (b − m)`; the normalizing constant of an independence
/// proposal cancels in every ratio it enters.
pub(super) fn quad_kernel(b: &DVector<f64>, m: &DVector<f64>, a: &DMatrix<f64>) -> f64 {
    let d = b - m;
    -0.5 * d.dot(&(a * &d))
}

pub struct PepSampler<'a> {
    data: &'a Dataset,
    cfg: SamplerConfig,
    pseudo: PseudoPrior,
    ones: DMatrix<f64>,
    ridge: f64,
    stacked_family: GlmFamily,
    stacked_weights: Vec<f64>,
}

impl<'a> PepSampler<'a> {
    pub fn new(data: &'a Dataset, cfg: SamplerConfig) -> Result<Self> {
        cfg.chain.validate()?;
        cfg.delta.validate()?;
        if let Some(m) = &cfg.frozen {
            if m.len() != data.p() {
                return Err(Error::Dimension(format!(
                    "frozen model has {} indicators for {} predictors",
                    m.len(),
                    data.p()
                )));
            }
        }
        let pseudo = PseudoPrior::from_data(data)?;
        let n = data.n();
        Ok(Self {
            data,
            pseudo,
            ones: DMatrix::from_element(n, 1, 1.0),
            ridge: ridge_for(&data.family),
            stacked_family: data.family.stacked(2),
            stacked_weights: vec![1.0; 2 * n],
            cfg,
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    pub fn pseudo_prior(&self) -> &PseudoPrior {
        &self.pseudo
    }

    pub fn psi(&self, delta: f64) -> f64 {
        self.cfg.reference.psi(delta)
    }

    /// Full model (or the frozen model), its ridge-stabilized MLE, the null
    /// MLE, `y* = y`, and `δ` at its fixed value or `n`.
    pub fn init_state(&self) -> Result<SamplerState> {
        let p = self.data.p();
        let gamma = self.cfg.frozen.clone().unwrap_or_else(|| ModelIndicator::full(p));
        let mut beta = self.pseudo.means.clone();
        if gamma.size() < p {
            let fit = irls_fit(
                &self.data.family,
                &self.data.y,
                &self.data.design_for(&gamma),
                ObsWeights::ONE,
                self.ridge,
            )?;
            for (k, &c) in gamma.columns().iter().enumerate() {
                beta[c] = fit.beta[k];
            }
        }
        let null = irls_fit(&self.data.family, &self.data.y, &self.ones, ObsWeights::ONE, self.ridge)?;
        Ok(SamplerState {
            gamma,
            beta,
            beta0: null.beta[0],
            y_star: self.data.y.clone(),
            delta: self.cfg.delta.initial(self.data.n()),
        })
    }

    fn laplace<'w>(&self, st: &SamplerState, gamma: &ModelIndicator, work: &'w mut ChainWork) -> Option<&'w LaplaceFit> {
        let diag = &mut work.diagnostics;
        work.cache.get_or_fit(gamma, |start| {
            diag.laplace_fits += 1;
            LaplaceFit::compute_from(
                &self.data.family,
                self.cfg.baseline,
                &st.y_star,
                &self.data.design_for(gamma),
                self.ridge,
                start,
            )
            .ok()
        })
    }

    /// Every term of the target that depends on `γ` (with `β` held fixed).
    /// `−∞` when the model has no usable fit for the current `y*`.
    pub fn model_terms(&self, st: &SamplerState, gamma: &ModelIndicator, work: &mut ChainWork) -> f64 {
        let Some(lm) = self.laplace(st, gamma, work).map(|l| l.log_marginal(st.delta)) else {
            return f64::NEG_INFINITY;
        };
        let fam = &self.data.family;
        let xg = self.data.design_for(gamma);
        let bg = gamma.active_coefficients(&st.beta);
        let eta = &xg * &bg;
        let ll_y = log_likelihood_eta(fam, &self.data.y, &eta, ObsWeights::ONE);
        let ll_s = log_likelihood_eta(fam, &st.y_star, &eta, ObsWeights::ONE);
        let prior = self.cfg.baseline.log_density(fam, &xg, &bg);
        match (ll_y, ll_s, prior) {
            (Ok(ly), Ok(ls), Ok(pr)) => {
                ly + ls / st.delta + pr - lm
                    + self.pseudo.log_density(gamma, &st.beta)
                    + self.cfg.model_prior.log_density(gamma)
            }
            _ => f64::NAN,
        }
    }

    /// `log O_j = log π(γ_j = 1, ·) − log π(γ_j = 0, ·)` at the current state.
    pub fn log_odds(&self, st: &SamplerState, j: usize, work: &mut ChainWork) -> f64 {
        let g1 = st.gamma.with(j, true);
        let g0 = st.gamma.with(j, false);
        self.model_terms(st, &g1, work) - self.model_terms(st, &g0, work)
    }

    /// Systematic scan over `j = 1..p`.
    pub fn gamma_sweep(&self, st: &mut SamplerState, rng: &mut ChaCha8Rng, work: &mut ChainWork) {
        let mut current = self.model_terms(st, &st.gamma.clone(), work);
        for j in 0..self.data.p() {
            let alt = st.gamma.with(j, !st.gamma.get(j));
            let alt_terms = self.model_terms(st, &alt, work);
            if alt_terms == f64::NEG_INFINITY {
                work.diagnostics.unusable_alternative += 1;
            }
            let log_odds = if st.gamma.get(j) {
                current - alt_terms
            } else {
                alt_terms - current
            };
            let now = draw_indicator(rng, log_odds, st.gamma.get(j), &mut work.diagnostics);
            if now != st.gamma.get(j) {
                st.gamma.set(j, now);
                current = alt_terms;
            }
        }
    }

    /// Target terms in `β_γ`: `log f(y|β) + log f(y*|β)/δ + log π^N(β)`.
    fn beta_target(&self, st: &SamplerState, xg: &DMatrix<f64>, bg: &DVector<f64>) -> f64 {
        let fam = &self.data.family;
        let eta = xg * bg;
        let ly = log_likelihood_eta(fam, &self.data.y, &eta, ObsWeights::ONE);
        let ls = log_likelihood_eta(fam, &st.y_star, &eta, ObsWeights::ONE);
        let pr = self.cfg.baseline.log_density(fam, xg, bg);
        match (ly, ls, pr) {
            (Ok(a), Ok(b), Ok(c)) => a + b / st.delta + c,
            _ => f64::NEG_INFINITY,
        }
    }

    /// Independence move on `β_γ` proposed from the weighted fit of the
    /// stacked responses `(y, y*)` with weights `(1, 1/δ)`, then a fresh
    /// pseudo-prior draw for `β_∖γ`.
    pub fn beta_update(&self, st: &mut SamplerState, rng: &mut ChaCha8Rng, work: &mut ChainWork) {
        let n = self.data.n();
        let xg = self.data.design_for(&st.gamma);
        let d = xg.ncols();
        let x_all = DMatrix::from_fn(2 * n, d, |i, k| xg[(i % n, k)]);
        let y_all = DVector::from_fn(2 * n, |i, _| if i < n { self.data.y[i] } else { st.y_star[i - n] });
        let mut w = self.stacked_weights.clone();
        for wi in &mut w[n..] {
            *wi = 1.0 / st.delta;
        }
        let fit = fit_penalized(
            &self.stacked_family,
            &y_all,
            &x_all,
            ObsWeights::PerObs(&w),
            self.ridge,
            None,
            &IrlsOptions::default(),
        );
        let proposal = match &fit {
            Ok(f) if f.is_usable() => sample_mvn(rng, &f.beta, &f.observed_info).map(|b| (b, f)),
            _ => None,
        };
        match proposal {
            Some((bp, f)) => {
                let bc = st.gamma.active_coefficients(&st.beta);
                let log_a = self.beta_target(st, &xg, &bp) - self.beta_target(st, &xg, &bc)
                    + quad_kernel(&bc, &f.beta, &f.observed_info)
                    - quad_kernel(&bp, &f.beta, &f.observed_info);
                if log_a.is_nan() {
                    work.diagnostics.nonfinite_ratio += 1;
                }
                let accept = mh_accept(rng, log_a);
                work.acceptance.beta.record(accept);
                if accept {
                    for (k, &c) in st.gamma.columns().iter().enumerate() {
                        st.beta[c] = bp[k];
                    }
                }
            }
            None => work.diagnostics.skipped_beta += 1,
        }
        for j in st.gamma.clone().inactive() {
            st.beta[j + 1] = self.pseudo.draw(j + 1, rng);
        }
    }

    fn null_fit<'w>(&self, st: &SamplerState, work: &'w mut ChainWork) -> Option<&'w FitResult> {
        if work.null_fit.is_none() {
            let fit = irls_fit(&self.data.family, &st.y_star, &self.ones, ObsWeights::ONE, self.ridge)
                .ok()
                .filter(FitResult::is_usable);
            work.null_fit = Some(fit);
        }
        work.null_fit.as_ref().and_then(Option::as_ref)
    }

    /// `log f₀(y* | β₀)/ψ + log π₀^N(β₀)`.
    fn beta0_target(&self, y_star: &DVector<f64>, beta0: f64, psi: f64) -> f64 {
        let fam = &self.data.family;
        let b = DVector::from_element(1, beta0);
        let eta = DVector::from_element(self.data.n(), beta0);
        match (
            log_likelihood_eta(fam, y_star, &eta, ObsWeights::ONE),
            self.cfg.baseline.log_density(fam, &self.ones, &b),
        ) {
            (Ok(l), Ok(p)) => l / psi + p,
            _ => f64::NEG_INFINITY,
        }
    }

    /// Independence move on `β₀` from `N(β̂₀, ψ σ̂²)`, the null fit on `y*`.
    pub fn beta0_update(&self, st: &mut SamplerState, rng: &mut ChaCha8Rng, work: &mut ChainWork) {
        let psi = self.psi(st.delta);
        let Some((mode, var)) = self
            .null_fit(st, work)
            .map(|f| (f.beta[0], psi / f.observed_info[(0, 0)]))
        else {
            work.diagnostics.skipped_beta0 += 1;
            return;
        };
        let sd = var.sqrt();
        let proposal = mode + sd * rng.sample::<f64, _>(StandardNormal);
        let log_q = |b: f64| -0.5 * (b - mode) * (b - mode) / var;
        let log_a = self.beta0_target(&st.y_star, proposal, psi) - self.beta0_target(&st.y_star, st.beta0, psi)
            + log_q(st.beta0)
            - log_q(proposal);
        if log_a.is_nan() {
            work.diagnostics.nonfinite_ratio += 1;
        }
        let accept = mh_accept(rng, log_a);
        work.acceptance.beta0.record(accept);
        if accept {
            st.beta0 = proposal;
        }
    }

    /// Draws `y*′` and returns it with `log q(y*′ | ·) − log q(y* | ·)` for
    /// the reverse/forward pair, or `None` if the proposal is undefined.
    fn propose_y_star(&self, st: &SamplerState, eta: &DVector<f64>, rng: &mut ChaCha8Rng) -> Option<(DVector<f64>, f64)> {
        let n = self.data.n();
        let psi = self.psi(st.delta);
        let delta = st.delta;
        match &self.data.family {
            GlmFamily::Binomial { trials } => {
                // log π* − log(1 − π*), mixing reference and current model.
                let log_sig = |x: f64| if x >= 0.0 { -(-x).exp().ln_1p() } else { x - x.exp().ln_1p() };
                let mut yp = DVector::zeros(n);
                let mut log_ratio = 0.0;
                for i in 0..n {
                    let a = log_sig(st.beta0) / psi + log_sig(eta[i]) / delta;
                    let b = log_sig(-st.beta0) / psi + log_sig(-eta[i]) / delta;
                    let logit = a - b;
                    let pi = crate::glm::logistic(logit);
                    let draw = Binomial::new(trials[i] as u64, pi).ok()?.sample(rng) as f64;
                    yp[i] = draw;
                    // log q(y) − log q(y′) up to the binomial coefficients,
                    // which are added by the family base measure below.
                    log_ratio += (st.y_star[i] - draw) * logit;
                }
                let fam = &self.data.family;
                let c: f64 = (0..n)
                    .map(|i| fam.log_base_measure(i, st.y_star[i]) - fam.log_base_measure(i, yp[i]))
                    .sum();
                Some((yp, log_ratio + c))
            }
            GlmFamily::Poisson => match self.cfg.reference {
                super::ReferenceMode::Cr => {
                    let mut yp = DVector::zeros(n);
                    let mut log_ratio = 0.0;
                    for i in 0..n {
                        let log_lambda = st.beta0 + eta[i] / delta;
                        let lambda = log_lambda.exp();
                        if !(lambda > 0.0 && lambda.is_finite()) {
                            return None;
                        }
                        let draw: f64 = Poisson::new(lambda).ok()?.sample(rng);
                        yp[i] = draw;
                        log_ratio += (st.y_star[i] - draw) * log_lambda
                            - statrs::function::gamma::ln_gamma(st.y_star[i] + 1.0)
                            + statrs::function::gamma::ln_gamma(draw + 1.0);
                    }
                    Some((yp, log_ratio))
                }
                super::ReferenceMode::Dr => {
                    // Random walk centred on the current counts; the 0.5 floor
                    // keeps zero from being absorbing.
                    let rate = |y: f64| y.max(0.5);
                    let log_pois = |y: f64, l: f64| y * l.ln() - l - statrs::function::gamma::ln_gamma(y + 1.0);
                    let mut yp = DVector::zeros(n);
                    let mut log_ratio = 0.0;
                    for i in 0..n {
                        let draw: f64 = Poisson::new(rate(st.y_star[i])).ok()?.sample(rng);
                        yp[i] = draw;
                        log_ratio += log_pois(st.y_star[i], rate(draw)) - log_pois(draw, rate(st.y_star[i]));
                    }
                    Some((yp, log_ratio))
                }
            },
            GlmFamily::Gaussian => {
                let prec = 1.0 / delta + 1.0 / psi;
                let sd = prec.recip().sqrt();
                let mut yp = DVector::zeros(n);
                let mut log_ratio = 0.0;
                for i in 0..n {
                    let mean = (eta[i] / delta + st.beta0 / psi) / prec;
                    let draw = Normal::new(mean, sd).ok()?.sample(rng);
                    yp[i] = draw;
                    log_ratio += -0.5 * prec * ((st.y_star[i] - mean).powi(2) - (draw - mean).powi(2));
                }
                Some((yp, log_ratio))
            }
        }
    }

    /// Block move on the whole imaginary response vector.
    pub fn ystar_update(&self, st: &mut SamplerState, rng: &mut ChaCha8Rng, work: &mut ChainWork) {
        let fam = &self.data.family;
        let xg = self.data.design_for(&st.gamma);
        let eta = &xg * st.gamma.active_coefficients(&st.beta);
        let Some((yp, log_q_ratio)) = self.propose_y_star(st, &eta, rng) else {
            work.diagnostics.unusable_y_star += 1;
            let _: f64 = rng.random();
            work.acceptance.y_star.record(false);
            return;
        };
        let current_lm = self.laplace(st, &st.gamma.clone(), work).map(|l| l.log_marginal(st.delta));
        let new_fit =
            LaplaceFit::compute_from(fam, self.cfg.baseline, &yp, &xg, self.ridge, work.cache.start(&st.gamma)).ok();
        work.diagnostics.laplace_fits += 1;
        let (Some(lm_cur), Some(nf)) = (current_lm, new_fit) else {
            work.diagnostics.unusable_y_star += 1;
            let _: f64 = rng.random();
            work.acceptance.y_star.record(false);
            return;
        };
        let psi = self.psi(st.delta);
        let eta0 = DVector::from_element(self.data.n(), st.beta0);
        let terms = |y: &DVector<f64>| -> Option<f64> {
            let l = log_likelihood_eta(fam, y, &eta, ObsWeights::ONE).ok()?;
            let l0 = log_likelihood_eta(fam, y, &eta0, ObsWeights::ONE).ok()?;
            Some(l / st.delta + l0 / psi)
        };
        let log_a = match (terms(&yp), terms(&st.y_star)) {
            (Some(a), Some(b)) => a - b - (nf.log_marginal(st.delta) - lm_cur) + log_q_ratio,
            _ => f64::NAN,
        };
        if log_a.is_nan() {
            work.diagnostics.nonfinite_ratio += 1;
        }
        let accept = mh_accept(rng, log_a);
        work.acceptance.y_star.record(accept);
        if accept {
            st.y_star = yp;
            work.y_star_changed();
            work.cache.reset_with(&st.gamma, nf);
        }
    }

    /// Gamma random walk on `δ` when it carries a hyper-prior.
    pub fn delta_update(&self, st: &mut SamplerState, rng: &mut ChaCha8Rng, work: &mut ChainWork) {
        if self.cfg.delta.is_fixed() {
            return;
        }
        let fam = &self.data.family;
        let xg = self.data.design_for(&st.gamma);
        let eta = &xg * st.gamma.active_coefficients(&st.beta);
        let eta0 = DVector::from_element(self.data.n(), st.beta0);
        let lm = self.laplace(st, &st.gamma.clone(), work).cloned();
        let ll = log_likelihood_eta(fam, &st.y_star, &eta, ObsWeights::ONE).ok();
        let ll0 = log_likelihood_eta(fam, &st.y_star, &eta0, ObsWeights::ONE).ok();
        let (Some(lm), Some(ll), Some(ll0)) = (lm, ll, ll0) else {
            work.diagnostics.nonfinite_ratio += 1;
            let _: f64 = rng.random();
            let _: f64 = rng.random();
            work.acceptance.hyper.record(false);
            return;
        };
        let prior = self.cfg.delta;
        let reference = self.cfg.reference;
        let target = |d: f64| {
            ll / d - lm.log_marginal(d) + ll0 / reference.psi(d) + prior.log_density(d).unwrap_or(f64::NEG_INFINITY)
        };
        st.delta = hyper_move(rng, st.delta, target, &mut work.acceptance.hyper, &mut work.diagnostics);
    }

    /// One full iteration in the fixed step order.
    pub fn step(&self, st: &mut SamplerState, rng: &mut ChaCha8Rng, work: &mut ChainWork) {
        if self.cfg.frozen.is_none() {
            self.gamma_sweep(st, rng, work);
        }
        self.beta_update(st, rng, work);
        self.beta0_update(st, rng, work);
        self.ystar_update(st, rng, work);
        self.delta_update(st, rng, work);
    }

    pub fn run(&self) -> Result<ChainOutput> {
        let settings = &self.cfg.chain;
        let mut rng = settings.rng();
        let mut st = self.init_state()?;
        let mut work = ChainWork::default();
        let keep = settings.retained();
        let mut gamma_draws = Vec::with_capacity(keep);
        let mut hyper_draws = Vec::with_capacity(keep);
        let mut beta_draws = Vec::new();
        for it in 0..settings.iterations {
            self.step(&mut st, &mut rng, &mut work);
            if it >= settings.burnin {
                gamma_draws.push(st.gamma.clone());
                hyper_draws.push(st.delta);
                if settings.record_beta {
                    beta_draws.push(st.beta.clone());
                }
            }
        }
        let diag = &work.diagnostics;
        if diag.nonfinite_odds + diag.nonfinite_ratio > 0 {
            log::warn!(
                "chain kept its state on {} non-finite odds and {} non-finite ratios",
                diag.nonfinite_odds,
                diag.nonfinite_ratio
            );
        }
        Ok(ChainOutput {
            names: self.data.names.clone(),
            gamma_draws,
            hyper_draws,
            hyper_name: "delta",
            beta_draws,
            acceptance: work.acceptance,
            diagnostics: work.diagnostics,
        })
    }
}

/// Runs a PEP chain on `data`.
pub fn run_chain(cfg: &SamplerConfig, data: &Dataset) -> Result<ChainOutput> {
    PepSampler::new(data, cfg.clone())?.run()
}
