//! Synthetic designs and replicated method comparisons.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::glm::GlmFamily;
use crate::model::ModelIndicator;
use crate::priors::ModelPrior;
use crate::sampler::methods::{Method, MethodOptions};
use crate::sampler::{AcceptanceStats, ChainSettings};
use crate::summary::{summarize_with, Quantiles};

pub const DESK_REPLICATIONS: usize = 20;
pub const DESK_ITERATIONS: usize = 11_000;
pub const DESK_BURNIN: usize = 1_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Study {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimFamily {
    Logistic,
    Poisson,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Null,
    Sparse,
    Medium,
    Full,
    Dense,
}

impl Scenario {
    pub const STUDY1: [Scenario; 4] = [Scenario::Null, Scenario::Sparse, Scenario::Medium, Scenario::Full];
    pub const STUDY2: [Scenario; 3] = [Scenario::Null, Scenario::Sparse, Scenario::Dense];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Null => "null",
            Scenario::Sparse => "sparse",
            Scenario::Medium => "medium",
            Scenario::Full => "full",
            Scenario::Dense => "dense",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [Scenario::Null, Scenario::Sparse, Scenario::Medium, Scenario::Full, Scenario::Dense]
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario `{s}`")))
    }
}

impl fmt::Display for SimFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimFamily::Logistic => "logistic",
            SimFamily::Poisson => "poisson",
        })
    }
}

impl FromStr for SimFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" | "binomial" => Ok(SimFamily::Logistic),
            "poisson" => Ok(SimFamily::Poisson),
            other => Err(Error::Config(format!("unknown simulation family `{other}`"))),
        }
    }
}

/// Intercept first.
fn study1_beta(family: SimFamily, scenario: Scenario) -> Option<Vec<f64>> {
    use Scenario::*;
    Some(match (family, scenario) {
        (SimFamily::Logistic, Null) => vec![0.1, 0.0, 0.0, 0.0, 0.0, 0.0],
        (SimFamily::Logistic, Sparse) => vec![0.1, 0.7, 0.0, 0.0, 0.0, 0.0],
        (SimFamily::Logistic, Medium) => vec![0.1, 1.6, 0.8, -1.5, 0.0, 0.0],
        (SimFamily::Logistic, Full) => vec![0.1, 1.75, 1.5, -1.1, -1.4, 0.5],
        (SimFamily::Poisson, Null) => vec![-0.3, 0.0, 0.0, 0.0],
        (SimFamily::Poisson, Sparse) => vec![-0.3, 0.3, 0.0, 0.0],
        (SimFamily::Poisson, Medium) => vec![-0.3, 0.3, 0.2, 0.0],
        (SimFamily::Poisson, Full) => vec![-0.3, 0.3, 0.2, -0.15],
        (_, Dense) => return None,
    })
}

fn study2_beta(scenario: Scenario) -> Option<Vec<f64>> {
    Some(match scenario {
        Scenario::Null => vec![0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        Scenario::Sparse => vec![0.1, 0.0, 0.0, -0.9, 0.0, 0.0, 0.0, 1.2, 0.0, 0.0, 0.4],
        Scenario::Dense => vec![0.1, 0.6, 0.0, -0.9, 0.0, 1.0, 0.9, 1.2, -1.2, -0.5, 0.0],
        _ => return None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub study: Study,
    pub family: SimFamily,
    pub scenario: Scenario,
    /// Correlation parameter of the first study's design.
    pub r: f64,
    pub n: usize,
    /// Intercept followed by one coefficient per predictor.
    pub true_beta: Vec<f64>,
    pub replications: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    /// Logistic (`p = 5`) or Poisson (`p = 3`) design with `n = 100`.
    pub fn study1(family: SimFamily, scenario: Scenario, r: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::Config(format!("r must lie in [0, 1), got {r}")));
        }
        let true_beta = study1_beta(family, scenario)
            .ok_or_else(|| Error::Config(format!("the first study has no `{scenario}` scenario")))?;
        Ok(Self {
            study: Study::One,
            family,
            scenario,
            r,
            n: 100,
            true_beta,
            replications: DESK_REPLICATIONS,
            seed: 1,
        })
    }

    /// Logistic design with `p = 10` and `n = 200`.
    pub fn study2(scenario: Scenario) -> Result<Self> {
        let true_beta = study2_beta(scenario)
            .ok_or_else(|| Error::Config(format!("the second study has no `{scenario}` scenario")))?;
        Ok(Self {
            study: Study::Two,
            family: SimFamily::Logistic,
            scenario,
            r: 0.0,
            n: 200,
            true_beta,
            replications: DESK_REPLICATIONS,
            seed: 1,
        })
    }

    pub fn with_replications(mut self, replications: usize) -> Self {
        self.replications = replications;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn p(&self) -> usize {
        self.true_beta.len() - 1
    }

    pub fn true_model(&self) -> ModelIndicator {
        ModelIndicator::new(self.true_beta[1..].iter().map(|&b| b != 0.0).collect())
    }

    /// Uniform over models in the first study, beta-binomial in the second.
    pub fn model_prior(&self) -> ModelPrior {
        match self.study {
            Study::One => ModelPrior::Uniform,
            Study::Two => ModelPrior::BetaBinomial,
        }
    }

    fn rng(&self, rep: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(rep as u64);
        rng
    }
}

/// `corr(X_i, X_j) = r^|i−j|`.
pub fn correlation_matrix(p: usize, r: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| r.powi(i.abs_diff(j) as i32))
}

/// Symmetric square root of a positive semi-definite matrix.
pub fn symmetric_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(m.clone());
    if eig.eigenvalues.iter().any(|&v| v < -1e-10) {
        return Err(Error::Singular("matrix is not positive semi-definite".into()));
    }
    let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose())
}

fn standard_normals(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    // Row by row, so a row's values do not depend on n.
    let mut z = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            z[(i, j)] = rng.sample(StandardNormal);
        }
    }
    z
}

fn simulate_response(spec: &ScenarioSpec, data_x: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> Result<(GlmFamily, DVector<f64>)> {
    let beta = DVector::from_column_slice(&spec.true_beta);
    let eta = data_x * beta;
    let n = eta.len();
    let mut y = DVector::zeros(n);
    let family = match spec.family {
        SimFamily::Logistic => {
            for i in 0..n {
                let prob = crate::glm::logistic(eta[i]);
                let b = Bernoulli::new(prob).map_err(|e| Error::NumericalRange(e.to_string()))?;
                y[i] = f64::from(u8::from(b.sample(rng)));
            }
            GlmFamily::bernoulli(n)
        }
        SimFamily::Poisson => {
            for i in 0..n {
                let d = Poisson::new(eta[i].exp()).map_err(|e| Error::NumericalRange(e.to_string()))?;
                y[i] = d.sample(rng);
            }
            GlmFamily::Poisson
        }
    };
    Ok((family, y))
}

fn assemble(spec: &ScenarioSpec, raw: DMatrix<f64>, rng: &mut ChaCha8Rng) -> Result<Dataset> {
    let p = raw.ncols();
    let names = (1..=p).map(|j| format!("X{j}")).collect();
    // Centre first, then simulate from the centred design.
    let centred = Dataset::new(GlmFamily::Gaussian, DVector::zeros(spec.n), raw.clone(), names)?;
    let (family, y) = simulate_response(spec, &centred.x, rng)?;
    Ok(Dataset {
        family,
        y,
        ..centred
    }
    .with_response_name("y"))
}

/// Correlated standard-normal design with `corr(X_i, X_j) = r^|i−j|`.
pub fn gen_study1(spec: &ScenarioSpec, rep: usize) -> Result<Dataset> {
    if spec.study != Study::One {
        return Err(Error::Config("gen_study1 needs a first-study scenario".into()));
    }
    if !(0.0..1.0).contains(&spec.r) {
        return Err(Error::Config(format!("r must lie in [0, 1), got {}", spec.r)));
    }
    let p = spec.p();
    let root = symmetric_sqrt(&correlation_matrix(p, spec.r))?;
    let mut rng = spec.rng(rep);
    let raw = standard_normals(&mut rng, spec.n, p) * root;
    assemble(spec, raw, &mut rng)
}

/// Five independent standard normals, then five covariates each drawn as
/// `N(0.3X₁ + 0.5X₂ + 0.7X₃ + 0.9X₄ + 1.1X₅, 1)`.
pub fn gen_study2(spec: &ScenarioSpec, rep: usize) -> Result<Dataset> {
    if spec.study != Study::Two {
        return Err(Error::Config("gen_study2 needs a second-study scenario".into()));
    }
    const LOADINGS: [f64; 5] = [0.3, 0.5, 0.7, 0.9, 1.1];
    let mut rng = spec.rng(rep);
    let z = standard_normals(&mut rng, spec.n, 10);
    let mut raw = z.clone();
    for i in 0..spec.n {
        let mean: f64 = (0..5).map(|k| LOADINGS[k] * z[(i, k)]).sum();
        for j in 5..10 {
            raw[(i, j)] = mean + z[(i, j)];
        }
    }
    assemble(spec, raw, &mut rng)
}

pub fn generate(spec: &ScenarioSpec, rep: usize) -> Result<Dataset> {
    match spec.study {
        Study::One => gen_study1(spec, rep),
        Study::Two => gen_study2(spec, rep),
    }
}

/// Outcome of one method on one replicated data set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub replication: usize,
    pub method: Method,
    pub map_model: ModelIndicator,
    pub map_is_true: bool,
    pub inclusion_probs: Vec<f64>,
    pub acceptance: AcceptanceStats,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodAggregate {
    pub method: Method,
    pub completed: usize,
    pub failed: usize,
    pub map_successes: usize,
    /// Per-predictor spread of inclusion probabilities across replications.
    pub inclusion_quantiles: Vec<Quantiles>,
}

impl MethodAggregate {
    pub fn success_rate(&self) -> f64 {
        if self.completed == 0 {
            f64::NAN
        } else {
            self.map_successes as f64 / self.completed as f64
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub spec: ScenarioSpec,
    pub true_model: ModelIndicator,
    pub records: Vec<RunRecord>,
    pub aggregates: Vec<MethodAggregate>,
}

impl ReplicationReport {
    pub fn aggregate(&self, method: Method) -> Option<&MethodAggregate> {
        self.aggregates.iter().find(|a| a.method == method)
    }
}

/// Chain stream for `(rep, method)`, disjoint from the data streams.
fn chain_stream(rep: usize, method_index: usize) -> u64 {
    (1u64 << 40) | ((rep as u64) << 8) | method_index as u64
}

/// Runs every method on every replicated data set. Methods share each
/// replication's data set; failures are logged and counted.
pub fn replicate_compare(
    spec: &ScenarioSpec,
    methods: &[Method],
    chain: &ChainSettings,
    opts: &MethodOptions,
) -> Result<ReplicationReport> {
    if spec.replications == 0 {
        return Err(Error::Config("at least one replication is required".into()));
    }
    if methods.is_empty() {
        return Err(Error::Config("no methods to compare".into()));
    }
    chain.validate()?;
    let truth = spec.true_model();
    let opts = MethodOptions {
        model_prior: spec.model_prior(),
        ..*opts
    };
    let datasets: Vec<Result<Dataset>> = (0..spec.replications).into_par_iter().map(|rep| generate(spec, rep)).collect();

    let jobs: Vec<(usize, usize)> = (0..spec.replications)
        .flat_map(|rep| (0..methods.len()).map(move |m| (rep, m)))
        .collect();
    let outcomes: Vec<Result<RunRecord>> = jobs
        .par_iter()
        .map(|&(rep, mi)| {
            let data = datasets[rep].as_ref().map_err(|e| Error::Config(e.to_string()))?;
            let method = methods[mi];
            let settings = ChainSettings {
                stream: chain_stream(rep, mi),
                record_beta: false,
                ..chain.clone()
            };
            let out = method.run(data, settings, &opts)?;
            let s = summarize_with(&out, 1)?;
            Ok(RunRecord {
                replication: rep,
                method,
                map_is_true: s.map_model == truth,
                map_model: s.map_model,
                inclusion_probs: s.inclusion_probs,
                acceptance: s.acceptance,
            })
        })
        .collect();

    let mut records = Vec::with_capacity(outcomes.len());
    let mut failed = vec![0usize; methods.len()];
    for (&(rep, mi), outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => {
                log::warn!("replication {rep}, {}: {e}", methods[mi]);
                failed[mi] += 1;
            }
        }
    }

    let p = spec.p();
    let aggregates = methods
        .iter()
        .enumerate()
        .map(|(mi, &method)| {
            let mine: Vec<&RunRecord> = records.iter().filter(|r| r.method == method).collect();
            let inclusion_quantiles = (0..p)
                .filter_map(|j| Quantiles::of(&mine.iter().map(|r| r.inclusion_probs[j]).collect::<Vec<_>>()))
                .collect();
            MethodAggregate {
                method,
                completed: mine.len(),
                failed: failed[mi],
                map_successes: mine.iter().filter(|r| r.map_is_true).count(),
                inclusion_quantiles,
            }
        })
        .collect();

    Ok(ReplicationReport {
        spec: spec.clone(),
        true_model: truth,
        records,
        aggregates,
    })
}
