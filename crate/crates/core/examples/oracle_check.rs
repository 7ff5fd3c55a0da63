//! Chain model frequencies against exact posterior model probabilities on
//! a two-predictor normal problem and a one-predictor logistic problem.
//!
//! `cargo run --release --example oracle_check`

use nalgebra::{DMatrix, DVector};
use pepglm::data::Dataset;
use pepglm::glm::GlmFamily;
use pepglm::priors::{BaselinePrior, DeltaPrior, ModelPrior};
use pepglm::sampler::{
    brute_force_model_posterior, run_chain, ChainSettings, MarginalNormalizer, OraclePrior, OracleSetup, ReferenceMode,
    SamplerConfig,
};

fn compare(label: &str, data: &Dataset, reference: ReferenceMode, iterations: usize) -> pepglm::error::Result<()> {
    let delta = DeltaPrior::fixed(data.n() as f64)?;
    let setup = OracleSetup {
        prior: OraclePrior::Pep {
            reference,
            delta,
            baseline: BaselinePrior::Flat,
        },
        model_prior: ModelPrior::Uniform,
        normalizer: MarginalNormalizer::Laplace,
    };
    let exact = brute_force_model_posterior(data, &setup)?;
    let cfg = SamplerConfig {
        chain: ChainSettings::new(iterations, iterations / 50, 3),
        reference,
        delta,
        baseline: BaselinePrior::Flat,
        model_prior: ModelPrior::Uniform,
        frozen: None,
    };
    let out = run_chain(&cfg, data)?;
    let counts = out.visit_counts();
    println!("{label}");
    for (model, p) in exact {
        let freq = counts.get(&model).copied().unwrap_or(0) as f64 / out.len() as f64;
        println!("  {model}  exact {p:.4}  chain {freq:.4}");
    }
    Ok(())
}

fn main() -> pepglm::error::Result<()> {
    let raw = DMatrix::from_row_slice(
        8,
        2,
        &[-1.2, 0.3, -0.5, -0.8, 0.1, 0.9, 0.7, -0.2, 1.4, 0.5, -0.3, -1.1, 0.9, 1.2, -1.6, 0.2],
    );
    let y = DVector::from_vec(vec![-1.1, -0.2, 0.4, 1.3, 1.9, -0.6, 1.1, -1.8]);
    let normal = Dataset::new(GlmFamily::Gaussian, y, raw, vec!["x1".into(), "x2".into()])?;
    compare("normal, CR", &normal, ReferenceMode::Cr, 20_000)?;
    compare("normal, DR", &normal, ReferenceMode::Dr, 20_000)?;

    // Exhaustive over 2^n imaginary data sets; slow for n much above 8.
    let x = DMatrix::from_column_slice(8, 1, &[-1.6, -1.1, -0.7, -0.1, 0.2, 0.5, 0.8, 1.5]);
    let y = DVector::from_vec(vec![0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
    let logistic = Dataset::new(GlmFamily::bernoulli(8), y, x, vec!["x".into()])?;
    compare("logistic, CR", &logistic, ReferenceMode::Cr, 20_000)
}
