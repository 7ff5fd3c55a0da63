//! Second simulation study: ten correlated predictors with a nonlinear
//! block, logistic responses and a beta-binomial model prior. Prints the
//! median inclusion probability of each predictor across replications.
//!
//! `cargo run --release --example simulation_study2 [replications] [iterations]`

use pepglm::sampler::methods::MethodOptions;
use pepglm::sampler::{ChainSettings, Method};
use pepglm::sim::{replicate_compare, Scenario, ScenarioSpec};

fn main() -> pepglm::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let reps: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    let iterations: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(3_000);
    let methods = [Method::HyperG, Method::CrPep, Method::DrPep];
    let chain = ChainSettings::new(iterations, iterations / 11, 1);

    for scenario in Scenario::STUDY2 {
        let spec = ScenarioSpec::study2(scenario)?.with_replications(reps);
        let report = replicate_compare(&spec, &methods, &chain, &MethodOptions::default())?;
        println!("{scenario} (true model {})", report.true_model);
        for a in &report.aggregates {
            let medians: Vec<String> = a.inclusion_quantiles.iter().map(|q| format!("{:.2}", q.median)).collect();
            println!("  {:<8} {}", a.method.to_string(), medians.join(" "));
        }
    }
    Ok(())
}
