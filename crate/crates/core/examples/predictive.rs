//! Out-of-sample misclassification on a random half split of the diabetes
//! data, for the MAP model of the training chain.
//!
//! `cargo run --release --example predictive [iterations] [split seed]`

use pepglm::io::load_pima;
use pepglm::priors::ModelPrior;
use pepglm::sampler::methods::MethodOptions;
use pepglm::sampler::{ChainSettings, Method};
use pepglm::summary::{predictive_eval, summarize, Classification, PredictiveSettings};

fn main() -> pepglm::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let iterations: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(11_000);
    let split_seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let (train, test) = load_pima()?.split_half(split_seed)?;
    let opts = MethodOptions {
        model_prior: ModelPrior::BetaBinomial,
        ..MethodOptions::default()
    };
    let chain = ChainSettings::new(iterations, iterations / 11, 1);
    for method in [Method::CrPep, Method::GPrior] {
        let s = summarize(&method.run(&train, chain.clone(), &opts)?)?;
        for rule in [Classification::Simulated, Classification::Threshold { threshold: 0.5 }] {
            let settings = PredictiveSettings {
                chain: chain.clone(),
                classification: rule,
                max_draws: None,
            };
            let r = predictive_eval(method, &opts, &s.map_model, &train, &test, &settings)?;
            println!(
                "{method:<8} MAP {}  {rule:?}: false negative {:.1}%  false positive {:.1}%",
                s.map_model, r.false_negative_pct, r.false_positive_pct
            );
        }
    }
    Ok(())
}
