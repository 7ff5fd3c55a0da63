//! Command-line front end: `select`, `simulate`, `predict`, `oracle-check`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::glm::FamilyKind;
use crate::io::{
    csv_headers, load_csv, replication_records, write_batch_csv, write_boxplot_csv, write_inclusion_quantiles_csv,
    write_jsonl, write_success_csv, write_trace_csv, OracleCheckRecord, OracleModelRow, PredictiveRecord, RunEcho,
    SummaryRecord, SCHEMA_VERSION,
};
use crate::priors::{BaselinePrior, ModelPrior};
use crate::sampler::methods::{DeltaMode, MethodOptions};
use crate::sampler::{
    brute_force_model_posterior, ChainSettings, MarginalNormalizer, Method, OraclePrior, OracleSetup, ReferenceMode,
};
use crate::sim::{replicate_compare, Scenario, ScenarioSpec, SimFamily, DESK_BURNIN, DESK_ITERATIONS, DESK_REPLICATIONS};
use crate::summary::{summarize_with, Classification, PredictiveSettings, DEFAULT_BATCHES};

/// Exit status for a failed run.
pub const EXIT_FAILURE: i32 = 1;
/// Exit status for an invalid configuration.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status when `oracle-check` finds a disagreement.
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "pepglm", version, about = "Bayesian variable selection for GLMs under power-expected-posterior priors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one sampler on a data set and summarize the model posterior.
    Select(SelectArgs),
    /// Replicated comparison on simulated designs.
    Simulate(SimulateArgs),
    /// Out-of-sample false-negative and false-positive rates on a random half split.
    Predict(PredictArgs),
    /// Compare chain model frequencies with exact posterior probabilities (p ≤ 2).
    OracleCheck(OracleArgs),
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "binomial")]
    pub family: FamilyKind,
    /// Response column; defaults to the last column.
    #[arg(long)]
    pub response: Option<String>,
    /// Column of binomial trial counts; absent means one trial per row.
    #[arg(long)]
    pub trials: Option<String>,
}

impl DataArgs {
    pub fn load(&self) -> Result<Dataset> {
        let response = match &self.response {
            Some(r) => r.clone(),
            None => csv_headers(&self.data)?
                .pop()
                .ok_or_else(|| Error::Config("the data file has no columns".into()))?,
        };
        let data = load_csv(&self.data, self.family, &response, self.trials.as_deref())?;
        log::info!("loaded {} rows and {} covariates from {}", data.n(), data.p(), self.data.display());
        Ok(data)
    }
}

#[derive(Args, Debug, Clone)]
pub struct PriorArgs {
    /// One of g-prior, hyper-g, hyper-g-n, mg-hyper-g, cr-pep, cr-pep-hyper-delta,
    /// cr-pep-hyper-delta-n, dr-pep, dr-pep-hyper-delta, dr-pep-hyper-delta-n.
    #[arg(long)]
    pub method: Option<String>,
    /// Reference of a PEP method; overrides the one implied by --method.
    #[arg(long)]
    pub reference: Option<ReferenceMode>,
    /// Treatment of δ for a PEP method; overrides the one implied by --method.
    #[arg(long)]
    pub delta: Option<DeltaMode>,
    /// Parameter of the hyper-δ and hyper-g priors.
    #[arg(long, default_value_t = 3.0)]
    pub a: f64,
    /// Baseline prior of the PEP methods: flat or jeffreys.
    #[arg(long, default_value = "jeffreys")]
    pub baseline: BaselinePrior,
    /// uniform or betabinomial; defaults to uniform.
    #[arg(long)]
    pub model_prior: Option<ModelPrior>,
}

impl PriorArgs {
    /// Resolves `--method`, `--reference` and `--delta` to one method.
    pub fn method(&self) -> Result<Method> {
        let base = self.method.as_deref().map(str::parse::<Method>).transpose()?;
        match (base, self.reference, self.delta) {
            (Some(m), None, None) => Ok(m),
            (Some(m), r, d) => {
                let (r0, d0) = m.pep_parts().ok_or_else(|| {
                    Error::Config(format!("--reference and --delta apply to PEP methods, not {m}"))
                })?;
                Ok(Method::from_pep_parts(r.unwrap_or(r0), d.unwrap_or(d0)))
            }
            (None, r, d) => Ok(Method::from_pep_parts(
                r.unwrap_or(ReferenceMode::Cr),
                d.unwrap_or(DeltaMode::Fixed),
            )),
        }
    }

    pub fn options(&self, default_model_prior: ModelPrior) -> MethodOptions {
        MethodOptions {
            a: self.a,
            baseline: self.baseline,
            model_prior: self.model_prior.unwrap_or(default_model_prior),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct ChainArgs {
    /// Total iterations, burn-in included.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Leading iterations discarded from every summary.
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

impl ChainArgs {
    fn settings(&self, iterations: usize, burnin: usize) -> Result<ChainSettings> {
        let s = ChainSettings::new(self.iterations.unwrap_or(iterations), self.burnin.unwrap_or(burnin), self.seed);
        s.validate()?;
        Ok(s)
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Emit {
    /// JSON-lines summary records.
    Summary,
    /// Per-iteration γ and hyperparameter.
    Traces,
    /// Inclusion frequencies per batch.
    Batches,
    /// Quantiles of the batch (or replication) inclusion estimates.
    BoxplotData,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long, value_delimiter = ',', default_value = "summary")]
    pub emit: Vec<Emit>,
    /// Output directory, created when missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

impl OutputArgs {
    fn wants(&self, e: Emit) -> bool {
        self.emit.contains(&e)
    }

    fn path(&self, file: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out)?;
        Ok(self.out.join(file))
    }
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Number of contiguous batches for the Monte Carlo spread.
    #[arg(long, default_value_t = DEFAULT_BATCHES)]
    pub batches: usize,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub study: u8,
    /// Response family of the first study (the second is logistic).
    #[arg(long, default_value = "binomial")]
    pub family: FamilyKind,
    /// Comma-separated scenarios, or `all`.
    #[arg(long, default_value = "all")]
    pub scenario: String,
    /// Comma-separated correlation parameters of the first study.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.75])]
    pub r: Vec<f64>,
    /// Comma-separated method names, or `all`.
    #[arg(long, default_value = "all")]
    pub method: String,
    #[arg(long)]
    pub replications: Option<usize>,
    /// 100 replications of 41000 iterations instead of the desk defaults.
    #[arg(long)]
    pub full_scale: bool,
    #[arg(long, default_value_t = 3.0)]
    pub a: f64,
    #[arg(long, default_value = "jeffreys")]
    pub baseline: BaselinePrior,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Simulated,
    Threshold,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Seed of the random half split.
    #[arg(long, default_value_t = 1)]
    pub split_seed: u64,
    #[arg(long, value_enum, default_value = "simulated")]
    pub classification: Rule,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Use at most this many evenly spaced posterior draws.
    #[arg(long)]
    pub predictive_draws: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalizer {
    Laplace,
    Exact,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// How the oracle treats the prior-predictive normalizer of binary data.
    #[arg(long, value_enum, default_value = "laplace")]
    pub normalizer: Normalizer,
    /// Largest tolerated absolute difference in any model probability.
    #[arg(long, default_value_t = 0.03)]
    pub tolerance: f64,
}

fn echo(method: Method, family: &str, opts: &MethodOptions, chain: &ChainSettings) -> RunEcho {
    RunEcho {
        method: method.to_string(),
        family: family.to_string(),
        baseline: opts.baseline.to_string(),
        model_prior: opts.model_prior.to_string(),
        a: opts.a,
        iterations: chain.iterations,
        burnin: chain.burnin,
        seed: chain.seed,
    }
}

/// Result of a completed command.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// `false` when a check the command performs did not pass.
    pub passed: bool,
}

pub fn run_select(args: &SelectArgs) -> Result<Outcome> {
    let data = args.data.load()?;
    let method = args.prior.method()?;
    let opts = args.prior.options(ModelPrior::Uniform);
    let chain = args.chain.settings(41_000, 1_000)?;
    let out = method.run(&data, chain.clone(), &opts)?;
    let summary = summarize_with(&out, args.batches)?;
    let mut files = Vec::new();
    if args.output.wants(Emit::Summary) {
        let rec = SummaryRecord::new(echo(method, data.family.name(), &opts, &chain), data.n(), &summary);
        let p = args.output.path("summary.jsonl")?;
        write_jsonl(&p, &[rec])?;
        files.push(p);
    }
    if args.output.wants(Emit::Traces) {
        let p = args.output.path("trace.csv")?;
        write_trace_csv(&out, chain.burnin, &p)?;
        files.push(p);
    }
    if args.output.wants(Emit::Batches) {
        let p = args.output.path("batches.csv")?;
        write_batch_csv(&summary, &p)?;
        files.push(p);
    }
    if args.output.wants(Emit::BoxplotData) {
        let p = args.output.path("boxplot.csv")?;
        write_boxplot_csv(&summary, &p)?;
        files.push(p);
    }
    println!("{method}: {} retained draws", summary.draws);
    for (name, q) in summary.names.iter().zip(&summary.inclusion_probs) {
        println!("  {name:<12} {q:.3}");
    }
    println!("  MAP {}  MPM {}", summary.map_model, summary.mpm_model);
    Ok(Outcome { files, passed: true })
}

fn parse_list<T>(s: &str, all: &[T]) -> Result<Vec<T>>
where
    T: std::str::FromStr<Err = Error> + Copy,
{
    if s == "all" {
        return Ok(all.to_vec());
    }
    s.split(',').map(|t| t.trim().parse()).collect()
}

pub fn run_simulate(args: &SimulateArgs) -> Result<Outcome> {
    let methods = parse_list(&args.method, &Method::ALL)?;
    let (reps, iters, burn) = if args.full_scale {
        (100, 41_000, 1_000)
    } else {
        (DESK_REPLICATIONS, DESK_ITERATIONS, DESK_BURNIN)
    };
    let chain = args.chain.settings(iters, burn)?;
    let replications = args.replications.unwrap_or(reps);
    let opts = MethodOptions {
        a: args.a,
        baseline: args.baseline,
        ..MethodOptions::default()
    };
    let specs: Vec<ScenarioSpec> = if args.study == 1 {
        let family = match args.family {
            FamilyKind::Binomial => SimFamily::Logistic,
            FamilyKind::Poisson => SimFamily::Poisson,
            FamilyKind::Gaussian => {
                return Err(Error::Config("the simulation studies are logistic or Poisson".into()))
            }
        };
        let scenarios = parse_list(&args.scenario, &Scenario::STUDY1)?;
        let mut v = Vec::new();
        for &s in &scenarios {
            for &r in &args.r {
                v.push(ScenarioSpec::study1(family, s, r)?);
            }
        }
        v
    } else {
        parse_list(&args.scenario, &Scenario::STUDY2)?
            .into_iter()
            .map(ScenarioSpec::study2)
            .collect::<Result<_>>()?
    };
    let mut reports = Vec::with_capacity(specs.len());
    for spec in specs {
        let spec = spec.with_replications(replications).with_seed(args.chain.seed);
        log::info!("study {} {} {} r = {}", args.study, spec.family, spec.scenario, spec.r);
        let report = replicate_compare(&spec, &methods, &chain, &opts)?;
        for a in &report.aggregates {
            println!(
                "{:<8} {:<7} r={:<5} {:<22} {:>3}/{}",
                spec.family, spec.scenario, spec.r, a.method, a.map_successes, a.completed
            );
        }
        reports.push(report);
    }
    let mut files = Vec::new();
    let p = args.output.path("success.csv")?;
    write_success_csv(&reports, &p)?;
    files.push(p);
    if args.output.wants(Emit::Summary) {
        let records: Vec<_> = reports.iter().flat_map(replication_records).collect();
        let p = args.output.path("replications.jsonl")?;
        write_jsonl(&p, &records)?;
        files.push(p);
    }
    if args.output.wants(Emit::BoxplotData) {
        let p = args.output.path("inclusion_quantiles.csv")?;
        write_inclusion_quantiles_csv(&reports, &p)?;
        files.push(p);
    }
    Ok(Outcome { files, passed: true })
}

pub fn run_predict(args: &PredictArgs) -> Result<Outcome> {
    let data = args.data.load()?;
    let method = args.prior.method()?;
    let opts = args.prior.options(ModelPrior::Uniform);
    let chain = args.chain.settings(41_000, 1_000)?;
    let (train, test) = data.split_half(args.split_seed)?;
    let summary = summarize_with(&method.run(&train, chain.clone(), &opts)?, DEFAULT_BATCHES)?;
    let (classification, rule) = match args.classification {
        Rule::Simulated => (Classification::Simulated, "simulated".to_string()),
        Rule::Threshold => (
            Classification::Threshold {
                threshold: args.threshold,
            },
            format!("threshold-{}", args.threshold),
        ),
    };
    let settings = PredictiveSettings {
        chain: chain.clone(),
        classification,
        max_draws: args.predictive_draws,
    };
    let mut records = Vec::new();
    for (kind, model) in [("map", &summary.map_model), ("mpm", &summary.mpm_model)] {
        let rates = crate::summary::predictive_eval(method, &opts, model, &train, &test, &settings)?;
        println!(
            "{kind} {model}: false negative {:.1}%, false positive {:.1}%",
            rates.false_negative_pct, rates.false_positive_pct
        );
        records.push(PredictiveRecord {
            schema_version: SCHEMA_VERSION,
            record: "predictive".into(),
            run: echo(method, data.family.name(), &opts, &chain),
            split_seed: args.split_seed,
            train_n: train.n(),
            test_n: test.n(),
            model_kind: kind.into(),
            model: model.clone(),
            rule: rule.clone(),
            false_negative_pct: rates.false_negative_pct,
            false_positive_pct: rates.false_positive_pct,
            draws: rates.draws,
        });
    }
    let p = args.output.path("predictive.jsonl")?;
    write_jsonl(&p, &records)?;
    Ok(Outcome {
        files: vec![p],
        passed: true,
    })
}

/// The oracle counterpart of a method's prior.
pub fn oracle_prior(method: Method, opts: &MethodOptions, data: &Dataset) -> Result<OraclePrior> {
    if let Some(cfg) = method.pep_config(data, ChainSettings::default(), opts)? {
        return Ok(OraclePrior::Pep {
            reference: cfg.reference,
            delta: cfg.delta,
            baseline: cfg.baseline,
        });
    }
    let cfg = method
        .gprior_config(data, ChainSettings::default(), opts)?
        .expect("every method is either PEP or g-prior");
    Ok(OraclePrior::GPrior(cfg.gprior))
}

pub fn run_oracle_check(args: &OracleArgs) -> Result<Outcome> {
    let data = args.data.load()?;
    let method = args.prior.method()?;
    let opts = args.prior.options(ModelPrior::Uniform);
    let chain = args.chain.settings(200_000, 2_000)?;
    let setup = OracleSetup {
        prior: oracle_prior(method, &opts, &data)?,
        model_prior: opts.model_prior,
        normalizer: match args.normalizer {
            Normalizer::Laplace => MarginalNormalizer::Laplace,
            Normalizer::Exact => MarginalNormalizer::Exact,
        },
    };
    let exact = brute_force_model_posterior(&data, &setup)?;
    let out = method.run(&data, chain.clone(), &opts)?;
    let counts = out.visit_counts();
    let models: Vec<OracleModelRow> = exact
        .into_iter()
        .map(|(model, oracle)| OracleModelRow {
            chain: counts.get(&model).copied().unwrap_or(0) as f64 / out.len() as f64,
            model,
            oracle,
        })
        .collect();
    let max_abs_diff = models.iter().map(|r| (r.chain - r.oracle).abs()).fold(0.0, f64::max);
    for r in &models {
        println!("{}  oracle {:.4}  chain {:.4}", r.model, r.oracle, r.chain);
    }
    let passed = max_abs_diff <= args.tolerance;
    println!(
        "max |difference| {max_abs_diff:.4} ({} at tolerance {})",
        if passed { "within" } else { "outside" },
        args.tolerance
    );
    let rec = OracleCheckRecord {
        schema_version: SCHEMA_VERSION,
        record: "oracle-check".into(),
        run: echo(method, data.family.name(), &opts, &chain),
        normalizer: format!("{:?}", setup.normalizer).to_lowercase(),
        models,
        max_abs_diff,
    };
    let p = args.output.path("oracle_check.jsonl")?;
    write_jsonl(&p, &[rec])?;
    Ok(Outcome { files: vec![p], passed })
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Select(a) => run_select(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Predict(a) => run_predict(a),
        Command::OracleCheck(a) => run_oracle_check(a),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::MissingColumn(_) => EXIT_CONFIG,
        _ => EXIT_FAILURE,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(o) => {
            for f in &o.files {
                log::info!("wrote {}", f.display());
            }
            if o.passed {
                0
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Path helper for callers that want every artifact under one directory.
pub fn output_file(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
