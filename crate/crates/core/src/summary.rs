//! Posterior summaries of a chain and out-of-sample classification rates.

use nalgebra::DVector;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::glm::GlmFamily;
use crate::model::ModelIndicator;
use crate::sampler::methods::{Method, MethodOptions};
use crate::sampler::{AcceptanceStats, ChainOutput, ChainSettings, Diagnostics};

pub const DEFAULT_BATCHES: usize = 40;

/// Linear-interpolation quantile of sorted data (R type 7).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Five-number summary plus the mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub mean: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        Some(Self {
            mean: s.iter().sum::<f64>() / s.len() as f64,
            min: s[0],
            q25: quantile(&s, 0.25),
            median: quantile(&s, 0.5),
            q75: quantile(&s, 0.75),
            max: s[s.len() - 1],
        })
    }
}

/// Distribution of `h/(1 + h)` over the retained draws, `h` being `δ` or `g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShrinkageStats {
    pub mean: f64,
    pub q025: f64,
    pub median: f64,
    pub q975: f64,
}

impl ShrinkageStats {
    pub fn from_draws(hyper: &[f64]) -> Option<Self> {
        if hyper.is_empty() {
            return None;
        }
        let mut s: Vec<f64> = hyper.iter().map(|h| h / (1.0 + h)).collect();
        s.sort_by(f64::total_cmp);
        Some(Self {
            mean: s.iter().sum::<f64>() / s.len() as f64,
            q025: quantile(&s, 0.025),
            median: quantile(&s, 0.5),
            q975: quantile(&s, 0.975),
        })
    }
}

/// Inclusion frequencies within contiguous batches of draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchEstimates {
    pub batch_size: usize,
    /// Trailing draws that did not fill a batch.
    pub dropped: usize,
    /// `batches × p`.
    pub estimates: Vec<Vec<f64>>,
}

impl BatchEstimates {
    pub fn compute(draws: &[ModelIndicator], p: usize, batches: usize) -> Result<Self> {
        if batches == 0 {
            return Err(Error::Config("the number of batches must be positive".into()));
        }
        if draws.len() < batches {
            return Err(Error::Config(format!(
                "{} draws cannot fill {batches} batches",
                draws.len()
            )));
        }
        let batch_size = draws.len() / batches;
        let dropped = draws.len() - batch_size * batches;
        if dropped > 0 {
            log::warn!("{dropped} trailing draws do not fill a batch of {batch_size} and are dropped");
        }
        let estimates = draws
            .chunks_exact(batch_size)
            .take(batches)
            .map(|chunk| inclusion_frequencies(chunk, p))
            .collect();
        Ok(Self {
            batch_size,
            dropped,
            estimates,
        })
    }

    /// Per-predictor quantiles across batches, as drawn in a boxplot.
    pub fn boxplot(&self) -> Vec<Quantiles> {
        let p = self.estimates.first().map_or(0, Vec::len);
        (0..p)
            .map(|j| {
                let col: Vec<f64> = self.estimates.iter().map(|b| b[j]).collect();
                Quantiles::of(&col).expect("at least one batch")
            })
            .collect()
    }
}

fn inclusion_frequencies(draws: &[ModelIndicator], p: usize) -> Vec<f64> {
    let mut counts = vec![0usize; p];
    for g in draws {
        for j in g.active() {
            counts[j] += 1;
        }
    }
    counts.iter().map(|&c| c as f64 / draws.len() as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelProbability {
    pub model: ModelIndicator,
    pub visits: usize,
    pub probability: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub names: Vec<String>,
    pub draws: usize,
    pub inclusion_probs: Vec<f64>,
    pub map_model: ModelIndicator,
    pub map_visits: usize,
    pub mpm_model: ModelIndicator,
    /// Visited models by decreasing frequency.
    pub model_probs: Vec<ModelProbability>,
    pub hyper_name: String,
    pub shrinkage: Option<ShrinkageStats>,
    pub batches: BatchEstimates,
    pub acceptance: AcceptanceStats,
    pub diagnostics: Diagnostics,
}

pub fn summarize(chain: &ChainOutput) -> Result<PosteriorSummary> {
    summarize_with(chain, DEFAULT_BATCHES)
}

/// Summary with `batches` contiguous batches for the Monte Carlo spread.
pub fn summarize_with(chain: &ChainOutput, batches: usize) -> Result<PosteriorSummary> {
    if chain.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let p = chain.p();
    let n = chain.len();
    let inclusion_probs = inclusion_frequencies(&chain.gamma_draws, p);
    let mpm_model = ModelIndicator::new(inclusion_probs.iter().map(|&q| q > 0.5).collect());

    let counts = chain.visit_counts();
    // Ascending key order, so a strict comparison keeps the smallest tie.
    let (map_model, map_visits) = counts
        .iter()
        .fold(None::<(&ModelIndicator, usize)>, |best, (m, &c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((m, c)),
        })
        .map(|(m, c)| (m.clone(), c))
        .expect("non-empty chain");

    let mut model_probs: Vec<ModelProbability> = counts
        .into_iter()
        .map(|(model, visits)| ModelProbability {
            model,
            visits,
            probability: visits as f64 / n as f64,
        })
        .collect();
    model_probs.sort_by(|a, b| b.visits.cmp(&a.visits).then_with(|| a.model.cmp(&b.model)));

    Ok(PosteriorSummary {
        names: chain.names.clone(),
        draws: n,
        inclusion_probs,
        map_model,
        map_visits,
        mpm_model,
        model_probs,
        hyper_name: chain.hyper_name.to_string(),
        shrinkage: ShrinkageStats::from_draws(&chain.hyper_draws),
        batches: BatchEstimates::compute(&chain.gamma_draws, p, batches.min(n))?,
        acceptance: chain.acceptance,
        diagnostics: chain.diagnostics,
    })
}

/// How a predictive draw becomes a predicted label.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum Classification {
    /// Draw the outcome from the predictive at each coefficient draw.
    #[default]
    Simulated,
    /// Predict every trial a success when the success probability exceeds the threshold.
    Threshold { threshold: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PredictiveSettings {
    pub chain: ChainSettings,
    pub classification: Classification,
    /// Use at most this many evenly spaced retained draws.
    pub max_draws: Option<usize>,
}

impl Default for PredictiveSettings {
    fn default() -> Self {
        Self {
            chain: ChainSettings::default(),
            classification: Classification::Simulated,
            max_draws: None,
        }
    }
}

/// Percentages of all test trials.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictiveRates {
    pub false_negative_pct: f64,
    pub false_positive_pct: f64,
    pub draws: usize,
}

/// Averages false-negative and false-positive percentages on `test` over
/// posterior draws of a chain on `train` with `γ` held at `model`.
pub fn predictive_eval(
    method: Method,
    opts: &MethodOptions,
    model: &ModelIndicator,
    train: &Dataset,
    test: &Dataset,
    settings: &PredictiveSettings,
) -> Result<PredictiveRates> {
    if test.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    if !matches!(train.family, GlmFamily::Binomial { .. }) {
        return Err(Error::Config("predictive classification needs a binomial family".into()));
    }
    let mut chain = settings.chain.clone();
    chain.record_beta = true;
    let out = method.run_frozen(train, chain, opts, Some(model.clone()))?;
    classification_rates(&out.beta_draws, model, test, settings)
}

/// The averaging step of [`predictive_eval`] for given coefficient draws.
pub fn classification_rates(
    beta_draws: &[DVector<f64>],
    model: &ModelIndicator,
    test: &Dataset,
    settings: &PredictiveSettings,
) -> Result<PredictiveRates> {
    let GlmFamily::Binomial { trials } = &test.family else {
        return Err(Error::Config("predictive classification needs a binomial family".into()));
    };
    if beta_draws.is_empty() {
        return Err(Error::Config("no coefficient draws were recorded".into()));
    }
    let step = settings
        .max_draws
        .filter(|&m| m > 0 && m < beta_draws.len())
        .map_or(1, |m| beta_draws.len() / m);
    let xg = test.design_for(model);
    let total: f64 = trials.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.chain.seed);
    rng.set_stream(settings.chain.stream.wrapping_add(1));

    let (mut fn_sum, mut fp_sum, mut used) = (0.0, 0.0, 0usize);
    for beta in beta_draws.iter().step_by(step) {
        let eta = &xg * model.active_coefficients(beta);
        let (mut fneg, mut fpos) = (0.0, 0.0);
        for i in 0..test.n() {
            let prob = crate::glm::logistic(eta[i]);
            let predicted = match settings.classification {
                Classification::Simulated => {
                    Binomial::new(trials[i] as u64, prob)
                        .map_err(|e| Error::NumericalRange(e.to_string()))?
                        .sample(&mut rng) as f64
                }
                Classification::Threshold { threshold } => {
                    if prob > threshold {
                        trials[i]
                    } else {
                        0.0
                    }
                }
            };
            let observed = test.y[i];
            fneg += (observed - predicted).max(0.0);
            fpos += (predicted - observed).max(0.0);
        }
        fn_sum += fneg / total;
        fp_sum += fpos / total;
        used += 1;
    }
    Ok(PredictiveRates {
        false_negative_pct: 100.0 * fn_sum / used as f64,
        false_positive_pct: 100.0 * fp_sum / used as f64,
        draws: used,
    })
}
