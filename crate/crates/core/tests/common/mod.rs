//! Property suites shared by the `properties` target and the acceptance run.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use pepglm::data::Dataset;
use pepglm::glm::{log_likelihood, observed_information, score, GlmFamily, ObsWeights};
use pepglm::io::{load_csv, write_csv};
use pepglm::laplace::{laplace_log_marginal, MarginalRequest};
use pepglm::model::ModelIndicator;
use pepglm::priors::{BaselinePrior, DeltaPrior, GPriorConfig, GPriorKind, ModelPrior};
use pepglm::quadrature::{integrate_upper, QuadOptions};
use pepglm::sampler::methods::MethodOptions;
use pepglm::sampler::{AcceptanceStats, ChainOutput, ChainSettings, Diagnostics, Method};
use pepglm::sim::{generate, Scenario, ScenarioSpec, SimFamily};
use pepglm::summary::{summarize_with, BatchEstimates};

pub const LN_2PI: f64 = 1.837_877_066_409_345_3;

pub type Suite = (&'static str, fn() -> Result<(), String>);

pub fn suites() -> Vec<Suite> {
    vec![
        ("glm gradient matches finite differences", gradient_fd),
        ("glm information matches finite differences", hessian_fd),
        ("powered likelihood scales by 1/δ", power_weights),
        ("Jeffreys density ignores row order", jeffreys_permutation),
        ("δ and g priors integrate to one", hyper_priors_normalized),
        ("model priors sum to one", model_priors_normalized),
        ("normal Laplace marginal is exact", gaussian_laplace_exact),
        ("seeded chains repeat", determinism),
        ("batch means average to the inclusion probabilities", batch_mean),
        ("summaries commute with predictor relabelling", relabel),
        ("MAP visits dominate and counts add up", map_counts),
        ("CSV round trip", csv_round_trip),
        ("simulated designs have the target correlation", study1_correlation),
    ]
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn check<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[derive(Clone, Debug)]
pub struct GlmCase {
    pub family: GlmFamily,
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    pub beta: DVector<f64>,
}

fn glm_case() -> impl Strategy<Value = GlmCase> {
    (0usize..3, 4usize..20, 1usize..4).prop_flat_map(|(fam, n, d)| {
        (
            Just(fam),
            prop::collection::vec(-1.5f64..1.5, n * d),
            prop::collection::vec(-0.8f64..0.8, d),
            prop::collection::vec(0u32..6, n),
            prop::collection::vec(-2.0f64..2.0, n),
            prop::collection::vec(1u32..5, n),
        )
            .prop_map(move |(fam, xs, beta, counts, normals, trials)| {
                let mut x = DMatrix::from_row_slice(n, d, &xs);
                x.column_mut(0).fill(1.0);
                let (family, y) = match fam {
                    0 => {
                        let t: Vec<f64> = trials.iter().map(|&t| f64::from(t)).collect();
                        let y = DVector::from_fn(n, |i, _| f64::from(counts[i].min(trials[i])));
                        (GlmFamily::binomial(t), y)
                    }
                    1 => (GlmFamily::Poisson, DVector::from_fn(n, |i, _| f64::from(counts[i]))),
                    _ => (GlmFamily::Gaussian, DVector::from_vec(normals)),
                };
                GlmCase {
                    family,
                    y,
                    x,
                    beta: DVector::from_vec(beta),
                }
            })
    })
}

fn gradient_fd() -> Result<(), String> {
    check(64, glm_case(), |c| {
        let g = score(&c.family, &c.y, &c.x, &c.beta, ObsWeights::ONE).unwrap();
        let h = 1e-5;
        for k in 0..c.beta.len() {
            let mut up = c.beta.clone();
            let mut dn = c.beta.clone();
            up[k] += h;
            dn[k] -= h;
            let fd = (log_likelihood(&c.family, &c.y, &c.x, &up, ObsWeights::ONE).unwrap()
                - log_likelihood(&c.family, &c.y, &c.x, &dn, ObsWeights::ONE).unwrap())
                / (2.0 * h);
            prop_assert!(close(g[k], fd, 1e-6), "coordinate {k}: score {} fd {fd}", g[k]);
        }
        Ok(())
    })
}

fn hessian_fd() -> Result<(), String> {
    check(64, glm_case(), |c| {
        let info = observed_information(&c.family, &c.x, &c.beta, ObsWeights::ONE).unwrap();
        let h = 1e-5;
        for k in 0..c.beta.len() {
            let mut up = c.beta.clone();
            let mut dn = c.beta.clone();
            up[k] += h;
            dn[k] -= h;
            let su = score(&c.family, &c.y, &c.x, &up, ObsWeights::ONE).unwrap();
            let sd = score(&c.family, &c.y, &c.x, &dn, ObsWeights::ONE).unwrap();
            for l in 0..c.beta.len() {
                let fd = -(su[l] - sd[l]) / (2.0 * h);
                prop_assert!(close(info[(l, k)], fd, 1e-6), "({l},{k}): info {} fd {fd}", info[(l, k)]);
            }
        }
        Ok(())
    })
}

fn power_weights() -> Result<(), String> {
    check(64, (glm_case(), 0.05f64..500.0), |(c, delta)| {
        let w = ObsWeights::Uniform(1.0 / delta);
        let l1 = log_likelihood(&c.family, &c.y, &c.x, &c.beta, ObsWeights::ONE).unwrap();
        let lw = log_likelihood(&c.family, &c.y, &c.x, &c.beta, w).unwrap();
        prop_assert!(close(lw, l1 / delta, 1e-12));
        let s1 = score(&c.family, &c.y, &c.x, &c.beta, ObsWeights::ONE).unwrap();
        let sw = score(&c.family, &c.y, &c.x, &c.beta, w).unwrap();
        let i1 = observed_information(&c.family, &c.x, &c.beta, ObsWeights::ONE).unwrap();
        let iw = observed_information(&c.family, &c.x, &c.beta, w).unwrap();
        for k in 0..c.beta.len() {
            prop_assert!(close(sw[k], s1[k] / delta, 1e-12));
            for l in 0..c.beta.len() {
                prop_assert!(close(iw[(k, l)], i1[(k, l)] / delta, 1e-12));
            }
        }
        Ok(())
    })
}

fn jeffreys_permutation() -> Result<(), String> {
    let strat = (glm_case(), any::<u64>()).prop_filter("needs more rows than columns", |(c, _)| c.x.nrows() > c.x.ncols());
    check(48, strat, |(c, seed)| {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let n = c.x.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let family = c.family.subset(&order);
        let xp = DMatrix::from_fn(n, c.x.ncols(), |i, j| c.x[(order[i], j)]);
        let a = BaselinePrior::Jeffreys.log_density(&c.family, &c.x, &c.beta);
        let b = BaselinePrior::Jeffreys.log_density(&family, &xp, &c.beta);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert!(close(a, b, 1e-9), "{a} vs {b}"),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
        }
        Ok(())
    })
}

fn hyper_priors_normalized() -> Result<(), String> {
    let opts = QuadOptions {
        max_intervals: 50_000,
        ..QuadOptions::tol(1e-13, 1e-10)
    };
    check(24, (3.0f64..6.0, 20usize..600, 0usize..6), |(a, n, pg)| {
        let nf = n as f64;
        for dp in [DeltaPrior::hyper(a).unwrap(), DeltaPrior::hyper_n(a, nf).unwrap()] {
            let total = integrate_upper(|d| dp.log_density(d).map_or(0.0, f64::exp), 0.0, opts).value;
            prop_assert!((total - 1.0).abs() < 1e-4, "{dp:?}: {total}");
        }
        // g/(1+g) is Beta(b+1, a+1) under the MG prior; its endpoint
        // singularity is beyond quadrature, so compare with the beta density.
        let mg = GPriorConfig::new(GPriorKind::MgHyperG, n).unwrap();
        let (ma, mb) = (-0.75, (nf - pg as f64 - 5.0) / 2.0 + 0.75);
        let beta = statrs::distribution::Beta::new(mb + 1.0, ma + 1.0).unwrap();
        for g in [0.01, 0.5, 3.0, 40.0, 900.0] {
            use statrs::distribution::Continuous;
            let u = g / (1.0 + g);
            let expected = beta.ln_pdf(u) - 2.0 * (1.0 + g).ln();
            let got = mg.log_g_density(g, pg).unwrap();
            prop_assert!(close(got, expected, 1e-9), "MG n={n} p={pg} g={g}: {got} vs {expected}");
        }
        Ok(())
    })
}

fn model_priors_normalized() -> Result<(), String> {
    check(16, 0usize..11, |p| {
        for mp in [ModelPrior::Uniform, ModelPrior::BetaBinomial] {
            let total: f64 = ModelIndicator::enumerate(p).map(|g| mp.log_density(&g).exp()).sum();
            prop_assert!((total - 1.0).abs() < 1e-12, "{mp} p={p}: {total}");
        }
        Ok(())
    })
}

/// `log ∫ N(y | Xβ, I)^{1/δ} dβ` from the normal equations.
pub fn normal_marginal_oracle(y: &DVector<f64>, x: &DMatrix<f64>, delta: f64) -> f64 {
    let n = x.nrows() as f64;
    let d = x.ncols() as f64;
    let xtx = x.transpose() * x;
    let chol = xtx.clone().cholesky().expect("full rank design");
    let beta = chol.solve(&(x.transpose() * y));
    let rss = (y - x * &beta).norm_squared();
    let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    -n / (2.0 * delta) * LN_2PI - rss / (2.0 * delta) + 0.5 * d * (LN_2PI + delta.ln()) - 0.5 * log_det
}

#[derive(Clone, Debug)]
pub struct NormalCase {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    pub delta: f64,
}

pub fn normal_case() -> impl Strategy<Value = NormalCase> {
    (1usize..=5).prop_flat_map(|d| {
        ((d + 2)..=50).prop_flat_map(move |n| {
            (
                prop::collection::vec(-2.0f64..2.0, n * d),
                prop::collection::vec(-3.0f64..3.0, n),
                0.1f64..200.0,
            )
                .prop_map(move |(xs, ys, delta)| {
                    let mut x = DMatrix::from_row_slice(n, d, &xs);
                    x.column_mut(0).fill(1.0);
                    NormalCase {
                        y: DVector::from_vec(ys),
                        x,
                        delta,
                    }
                })
        })
    })
}

pub fn normal_laplace_error(c: &NormalCase) -> f64 {
    let mut req = MarginalRequest::new(&GlmFamily::Gaussian, BaselinePrior::Flat, &c.y, &c.x, c.delta);
    req.ridge = 0.0;
    let approx = laplace_log_marginal(&req).unwrap();
    (approx - normal_marginal_oracle(&c.y, &c.x, c.delta)).abs()
}

fn gaussian_laplace_exact() -> Result<(), String> {
    check(64, normal_case(), |c| {
        let err = normal_laplace_error(&c);
        prop_assert!(err < 1e-8, "error {err}");
        Ok(())
    })
}

fn small_logistic(seed: u64) -> Dataset {
    let spec = ScenarioSpec::study1(SimFamily::Logistic, Scenario::Sparse, 0.0)
        .unwrap()
        .with_seed(seed);
    let full = generate(&spec, 0).unwrap();
    let rows: Vec<usize> = (0..40).collect();
    let keep = [0usize, 1, 2];
    let raw = DMatrix::from_fn(40, keep.len(), |i, j| full.raw[(rows[i], keep[j])]);
    let y = DVector::from_fn(40, |i, _| full.y[rows[i]]);
    Dataset::new(GlmFamily::bernoulli(40), y, raw, keep.iter().map(|k| format!("X{}", k + 1)).collect()).unwrap()
}

fn determinism() -> Result<(), String> {
    let methods = prop::sample::select(vec![Method::CrPepHyperDelta, Method::DrPep, Method::HyperGN]);
    check(6, (any::<u64>(), methods), |(seed, method)| {
        let data = small_logistic(seed % 1000);
        let chain = ChainSettings::new(60, 10, seed);
        let a = method.run(&data, chain.clone(), &MethodOptions::default()).unwrap();
        let b = method.run(&data, chain, &MethodOptions::default()).unwrap();
        prop_assert_eq!(&a.gamma_draws, &b.gamma_draws);
        prop_assert_eq!(&a.hyper_draws, &b.hyper_draws);
        prop_assert_eq!(a.acceptance, b.acceptance);
        Ok(())
    })
}

fn chain_of(p: usize, draws: Vec<Vec<bool>>) -> ChainOutput {
    let len = draws.len();
    ChainOutput {
        names: (0..p).map(|j| format!("v{j}")).collect(),
        gamma_draws: draws.into_iter().map(ModelIndicator::new).collect(),
        hyper_draws: vec![1.0; len],
        hyper_name: "delta",
        beta_draws: Vec::new(),
        acceptance: AcceptanceStats::default(),
        diagnostics: Diagnostics::default(),
    }
}

fn draws_strategy() -> impl Strategy<Value = (usize, Vec<Vec<bool>>)> {
    (1usize..6, 1usize..8, 1usize..30).prop_flat_map(|(p, batches, per)| {
        (
            Just(p),
            prop::collection::vec(prop::collection::vec(any::<bool>(), p), batches * per),
        )
    })
}

fn batch_mean() -> Result<(), String> {
    check(64, (draws_strategy(), 1usize..8), |((p, draws), batches)| {
        let len = draws.len();
        prop_assume!(len % batches == 0 && len >= batches);
        let chain = chain_of(p, draws);
        let s = summarize_with(&chain, batches).unwrap();
        let b = BatchEstimates::compute(&chain.gamma_draws, p, batches).unwrap();
        for j in 0..p {
            let mean = b.estimates.iter().map(|e| e[j]).sum::<f64>() / batches as f64;
            prop_assert!((mean - s.inclusion_probs[j]).abs() < 1e-12);
        }
        Ok(())
    })
}

fn relabel() -> Result<(), String> {
    check(64, (draws_strategy(), any::<u64>()), |((p, draws), seed)| {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut perm: Vec<usize> = (0..p).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let permuted: Vec<Vec<bool>> = draws.iter().map(|g| perm.iter().map(|&k| g[k]).collect()).collect();
        let a = summarize_with(&chain_of(p, draws), 1).unwrap();
        let b = summarize_with(&chain_of(p, permuted), 1).unwrap();
        for (j, &k) in perm.iter().enumerate() {
            prop_assert_eq!(b.inclusion_probs[j], a.inclusion_probs[k]);
            prop_assert_eq!(b.mpm_model.get(j), a.mpm_model.get(k));
        }
        prop_assert_eq!(a.map_visits, b.map_visits);
        Ok(())
    })
}

fn map_counts() -> Result<(), String> {
    check(64, draws_strategy(), |(p, draws)| {
        let chain = chain_of(p, draws);
        let s = summarize_with(&chain, 1).unwrap();
        let total: usize = s.model_probs.iter().map(|m| m.visits).sum();
        prop_assert_eq!(total, chain.len());
        prop_assert!(s.model_probs.iter().all(|m| m.visits <= s.map_visits));
        let mass: f64 = s.model_probs.iter().map(|m| m.probability).sum();
        prop_assert!((mass - 1.0).abs() < 1e-12);
        for (j, q) in s.inclusion_probs.iter().enumerate() {
            prop_assert!((0.0..=1.0).contains(q));
            prop_assert_eq!(s.mpm_model.get(j), *q > 0.5);
        }
        Ok(())
    })
}

fn csv_round_trip() -> Result<(), String> {
    let strat = (1usize..5, 2usize..25).prop_flat_map(|(p, n)| {
        (
            Just(p),
            Just(n),
            prop::collection::vec(-1e6f64..1e6, n * p),
            prop::collection::vec(0u32..4, n),
            prop::collection::vec(1u32..4, n),
        )
    });
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("round.csv");
    check(48, strat, |(p, n, xs, counts, trials)| {
        let raw = DMatrix::from_row_slice(n, p, &xs);
        let t: Vec<f64> = trials.iter().map(|&v| f64::from(v)).collect();
        let y = DVector::from_fn(n, |i, _| f64::from(counts[i].min(trials[i])));
        let names: Vec<String> = (0..p).map(|j| format!("c{j}")).collect();
        let d = Dataset::new(GlmFamily::binomial(t.clone()), y.clone(), raw.clone(), names.clone())
            .unwrap()
            .with_response_name("resp");
        write_csv(&d, &path).unwrap();
        let trials_col = t.iter().any(|&v| v != 1.0).then_some("trials");
        let back = load_csv(&path, pepglm::glm::FamilyKind::Binomial, "resp", trials_col).unwrap();
        prop_assert_eq!(&back.names, &names);
        prop_assert_eq!(&back.y, &y);
        for (a, b) in back.raw.iter().zip(raw.iter()) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        for (i, &ti) in t.iter().enumerate() {
            prop_assert_eq!(back.family.trials(i), ti);
        }
        Ok(())
    })
}

fn sample_corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn study1_correlation() -> Result<(), String> {
    check(6, (prop::sample::select(vec![0.0, 0.3, 0.5, 0.75]), any::<u64>()), |(r, seed)| {
        let spec = ScenarioSpec::study1(SimFamily::Logistic, Scenario::Null, r).unwrap().with_seed(seed);
        let reps = 20;
        let (mut lag1, mut lag2) = (0.0, 0.0);
        for rep in 0..reps {
            let d = generate(&spec, rep).unwrap();
            let col = |j: usize| d.raw.column(j).iter().copied().collect::<Vec<f64>>();
            lag1 += sample_corr(&col(1), &col(2)) / reps as f64;
            lag2 += sample_corr(&col(1), &col(3)) / reps as f64;
        }
        prop_assert!((lag1 - r).abs() < 0.1, "lag 1: {lag1} for r = {r}");
        prop_assert!((lag2 - r * r).abs() < 0.1, "lag 2: {lag2} for r = {r}");
        Ok(())
    })
}
