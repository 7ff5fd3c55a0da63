//! Inclusion probabilities of the four g-prior variants next to CR-PEP and
//! DR-PEP on the diabetes data.
//!
//! `cargo run --release --example gprior_comparison [iterations]`

use pepglm::io::load_pima;
use pepglm::priors::ModelPrior;
use pepglm::sampler::methods::MethodOptions;
use pepglm::sampler::{ChainSettings, Method};
use pepglm::summary::summarize;

fn main() -> pepglm::error::Result<()> {
    let iterations = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(11_000);
    let data = load_pima()?;
    let opts = MethodOptions {
        model_prior: ModelPrior::BetaBinomial,
        ..MethodOptions::default()
    };
    print!("{:<22}", "");
    for name in &data.names {
        print!("{name:>7}");
    }
    println!();
    for method in [
        Method::GPrior,
        Method::HyperG,
        Method::HyperGN,
        Method::MgHyperG,
        Method::CrPep,
        Method::DrPep,
    ] {
        let chain = ChainSettings::new(iterations, iterations / 11, 1);
        let s = summarize(&method.run(&data, chain, &opts)?)?;
        print!("{method:<22}");
        for q in &s.inclusion_probs {
            print!("{q:>7.3}");
        }
        println!();
    }
    Ok(())
}
