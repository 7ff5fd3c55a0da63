//! The ten prior configurations compared in the studies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::priors::{BaselinePrior, DeltaPrior, GPriorConfig, GPriorKind, ModelPrior};

use super::{run_chain, run_gprior_chain, ChainOutput, ChainSettings, GPriorChainConfig, ReferenceMode, SamplerConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Method {
    GPrior,
    HyperG,
    HyperGN,
    MgHyperG,
    CrPep,
    CrPepHyperDelta,
    CrPepHyperDeltaN,
    DrPep,
    DrPepHyperDelta,
    DrPepHyperDeltaN,
}

/// How `δ` is handled by a PEP method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaMode {
    Fixed,
    Hyper,
    HyperN,
}

impl FromStr for DeltaMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(DeltaMode::Fixed),
            "hyper" => Ok(DeltaMode::Hyper),
            "hyper-n" => Ok(DeltaMode::HyperN),
            other => Err(Error::Config(format!("unknown δ mode `{other}`"))),
        }
    }
}

impl DeltaMode {
    /// Fixed mode uses `δ = n`.
    pub fn prior(&self, a: f64, n: usize) -> Result<DeltaPrior> {
        match self {
            DeltaMode::Fixed => DeltaPrior::fixed(n as f64),
            DeltaMode::Hyper => DeltaPrior::hyper(a),
            DeltaMode::HyperN => DeltaPrior::hyper_n(a, n as f64),
        }
    }
}

/// Hyperparameters shared by every method of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodOptions {
    /// Parameter of the hyper-δ and hyper-g priors.
    pub a: f64,
    pub baseline: BaselinePrior,
    pub model_prior: ModelPrior,
}

impl Default for MethodOptions {
    fn default() -> Self {
        Self {
            a: 3.0,
            baseline: BaselinePrior::Jeffreys,
            model_prior: ModelPrior::Uniform,
        }
    }
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::GPrior,
        Method::HyperG,
        Method::HyperGN,
        Method::MgHyperG,
        Method::CrPep,
        Method::CrPepHyperDelta,
        Method::CrPepHyperDeltaN,
        Method::DrPep,
        Method::DrPepHyperDelta,
        Method::DrPepHyperDeltaN,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::GPrior => "g-prior",
            Method::HyperG => "hyper-g",
            Method::HyperGN => "hyper-g-n",
            Method::MgHyperG => "mg-hyper-g",
            Method::CrPep => "cr-pep",
            Method::CrPepHyperDelta => "cr-pep-hyper-delta",
            Method::CrPepHyperDeltaN => "cr-pep-hyper-delta-n",
            Method::DrPep => "dr-pep",
            Method::DrPepHyperDelta => "dr-pep-hyper-delta",
            Method::DrPepHyperDeltaN => "dr-pep-hyper-delta-n",
        }
    }

    /// `(reference, δ mode)` for the PEP methods.
    pub fn pep_parts(&self) -> Option<(ReferenceMode, DeltaMode)> {
        use DeltaMode::*;
        use ReferenceMode::*;
        match self {
            Method::CrPep => Some((Cr, Fixed)),
            Method::CrPepHyperDelta => Some((Cr, Hyper)),
            Method::CrPepHyperDeltaN => Some((Cr, HyperN)),
            Method::DrPep => Some((Dr, Fixed)),
            Method::DrPepHyperDelta => Some((Dr, Hyper)),
            Method::DrPepHyperDeltaN => Some((Dr, HyperN)),
            _ => None,
        }
    }

    pub fn from_pep_parts(reference: ReferenceMode, delta: DeltaMode) -> Self {
        use DeltaMode::*;
        use ReferenceMode::*;
        match (reference, delta) {
            (Cr, Fixed) => Method::CrPep,
            (Cr, Hyper) => Method::CrPepHyperDelta,
            (Cr, HyperN) => Method::CrPepHyperDeltaN,
            (Dr, Fixed) => Method::DrPep,
            (Dr, Hyper) => Method::DrPepHyperDelta,
            (Dr, HyperN) => Method::DrPepHyperDeltaN,
        }
    }

    pub fn is_pep(&self) -> bool {
        self.pep_parts().is_some()
    }

    pub fn gprior_kind(&self, a: f64) -> Option<GPriorKind> {
        match self {
            Method::GPrior => Some(GPriorKind::UnitInfo),
            Method::HyperG => Some(GPriorKind::HyperG { a }),
            Method::HyperGN => Some(GPriorKind::HyperGN { a }),
            Method::MgHyperG => Some(GPriorKind::MgHyperG),
            _ => None,
        }
    }

    pub fn pep_config(&self, data: &Dataset, chain: ChainSettings, opts: &MethodOptions) -> Result<Option<SamplerConfig>> {
        let Some((reference, mode)) = self.pep_parts() else {
            return Ok(None);
        };
        Ok(Some(SamplerConfig {
            chain,
            reference,
            delta: mode.prior(opts.a, data.n())?,
            baseline: opts.baseline,
            model_prior: opts.model_prior,
            frozen: None,
        }))
    }

    pub fn gprior_config(&self, data: &Dataset, chain: ChainSettings, opts: &MethodOptions) -> Result<Option<GPriorChainConfig>> {
        let Some(kind) = self.gprior_kind(opts.a) else {
            return Ok(None);
        };
        Ok(Some(GPriorChainConfig {
            chain,
            gprior: GPriorConfig::new(kind, data.n())?,
            model_prior: opts.model_prior,
            frozen: None,
        }))
    }

    pub fn run(&self, data: &Dataset, chain: ChainSettings, opts: &MethodOptions) -> Result<ChainOutput> {
        self.run_frozen(data, chain, opts, None)
    }

    /// As [`Method::run`], optionally holding `γ` at a given model.
    pub fn run_frozen(
        &self,
        data: &Dataset,
        chain: ChainSettings,
        opts: &MethodOptions,
        frozen: Option<crate::model::ModelIndicator>,
    ) -> Result<ChainOutput> {
        if let Some(mut cfg) = self.pep_config(data, chain.clone(), opts)? {
            cfg.frozen = frozen;
            return run_chain(&cfg, data);
        }
        let mut cfg = self
            .gprior_config(data, chain, opts)?
            .expect("every method is either PEP or g-prior");
        cfg.frozen = frozen;
        run_gprior_chain(&cfg, data)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['/', '_'], "-");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown method `{s}`; expected one of {}",
                    Method::ALL.map(|m| m.name()).join(", ")
                ))
            })
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.name().to_string()
    }
}

impl TryFrom<String> for Method {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}
