//! First simulation study: fifteen predictors, five scenarios, two
//! correlation levels. Counts how often each method's MAP model is the
//! generating model.
//!
//! `cargo run --release --example simulation_study1 [replications] [iterations] [logistic|poisson]`

use pepglm::sampler::methods::MethodOptions;
use pepglm::sampler::{ChainSettings, Method};
use pepglm::sim::{replicate_compare, Scenario, ScenarioSpec, SimFamily};

fn main() -> pepglm::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let reps: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(5);
    let iterations: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(3_000);
    let family: SimFamily = args.next().map(|s| s.parse()).transpose()?.unwrap_or(SimFamily::Logistic);
    let methods = [Method::HyperG, Method::CrPep, Method::DrPep];
    let chain = ChainSettings::new(iterations, iterations / 11, 1);

    println!("{family}: MAP = true model, out of {reps}");
    for r in [0.0, 0.75] {
        for scenario in Scenario::STUDY1 {
            let spec = ScenarioSpec::study1(family, scenario, r)?.with_replications(reps);
            let report = replicate_compare(&spec, &methods, &chain, &MethodOptions::default())?;
            print!("r = {r:<4} {scenario:<7}");
            for a in &report.aggregates {
                print!("  {}: {:>2}", a.method, a.map_successes);
            }
            println!();
        }
    }
    Ok(())
}
