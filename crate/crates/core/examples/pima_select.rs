//! CR-PEP selection on the bundled diabetes data with the settings of the
//! published analysis: Jeffreys baseline, beta-binomial model prior,
//! 41000 iterations with 1000 discarded.
//!
//! `cargo run --release --example pima_select [iterations]`

use pepglm::io::{load_pima, PIMA_COLUMNS, PIMA_N};
use pepglm::priors::{BaselinePrior, ModelPrior};
use pepglm::sampler::methods::MethodOptions;
use pepglm::sampler::{ChainSettings, Method};
use pepglm::summary::summarize;

fn main() -> pepglm::error::Result<()> {
    let iterations = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(41_000);
    let data = load_pima()?;
    assert_eq!(data.n(), PIMA_N);
    assert_eq!(data.names, PIMA_COLUMNS[..7]);

    let opts = MethodOptions {
        a: 3.0,
        baseline: BaselinePrior::Jeffreys,
        model_prior: ModelPrior::BetaBinomial,
    };
    let chain = ChainSettings::new(iterations, iterations / 41, 1);
    let s = summarize(&Method::CrPep.run(&data, chain, &opts)?)?;

    println!("{:<8} {:>6}", "", "p(γj=1)");
    for (name, q) in s.names.iter().zip(&s.inclusion_probs) {
        println!("{name:<8} {q:>6.3}");
    }
    println!("MAP {} ({:.3})", s.map_model, s.map_visits as f64 / s.draws as f64);
    if let Some(sh) = s.shrinkage {
        println!("δ/(1+δ) = {:.4}", sh.mean);
    }
    Ok(())
}
