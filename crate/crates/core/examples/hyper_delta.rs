//! Random δ under the hyper-δ and hyper-δ/n priors: posterior of the
//! shrinkage factor δ/(1+δ) and the δ acceptance rate.
//!
//! `cargo run --release --example hyper_delta [iterations]`

use pepglm::io::load_pima;
use pepglm::priors::ModelPrior;
use pepglm::sampler::methods::MethodOptions;
use pepglm::sampler::{ChainSettings, Method};
use pepglm::summary::summarize;

fn main() -> pepglm::error::Result<()> {
    let iterations = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6_000);
    let data = load_pima()?;
    let opts = MethodOptions {
        model_prior: ModelPrior::BetaBinomial,
        ..MethodOptions::default()
    };
    for method in [Method::CrPepHyperDelta, Method::CrPepHyperDeltaN, Method::DrPepHyperDeltaN] {
        let chain = ChainSettings::new(iterations, iterations / 6, 2);
        let s = summarize(&method.run(&data, chain, &opts)?)?;
        let sh = s.shrinkage.expect("a random δ is recorded");
        println!(
            "{method:<22} δ/(1+δ): mean {:.4} 95% [{:.4}, {:.4}]  δ acceptance {:.2}  MAP {}",
            sh.mean,
            sh.q025,
            sh.q975,
            s.acceptance.hyper.rate().unwrap_or(f64::NAN),
            s.map_model
        );
    }
    Ok(())
}
