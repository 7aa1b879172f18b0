//! Achievable sum rates of the four relaying strategies.
//!
//! Every evaluator returns a [`StrategyResult`] carrying the rate pair, the
//! constituent information quantities, and the parameters that achieve it.
//! [`compare_all`] shares the expensive pieces (downlink optimization,
//! relabeling search, MAC sum rate) between strategies.

mod cdf;
mod cf;
mod fdf;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelError, RelabelingInfo, TwrcSpec};
use crate::gf::FIELD_ORDER_CAP;
use crate::infotheory::{
    max_product_sum_rate, DownlinkOptimum, DownlinkSolver, InfoError, MacOptimum, DEFAULT_GRID, DEFAULT_TOL,
};

pub use cdf::eval_cdf;
pub use cf::{eval_cf, verify_cf_point, CfCheck, CfParams, CF_ZERO_RATE};
pub use fdf::{eval_fdf_l, eval_fdf_s, relabeling_scores, RelabelingScore};

/// Rates must satisfy `sum == r1 + r2` to this precision.
pub const SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error("user alphabets admit no finite-field restriction (need at least 2 symbols each)")]
    NoRestriction,
    #[error("compress-forward search found no feasible point in {restarts} restarts")]
    NoFeasiblePoint { restarts: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Info(#[from] InfoError),
}

impl RegionError {
    pub fn is_validation(&self) -> bool {
        matches!(self, RegionError::InvalidConfig(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "FDF-L")]
    FdfL,
    #[serde(rename = "FDF-S")]
    FdfS,
    #[serde(rename = "CDF")]
    Cdf,
    #[serde(rename = "CF")]
    Cf,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::FdfL, Strategy::FdfS, Strategy::Cdf, Strategy::Cf];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::FdfL => "FDF-L",
            Strategy::FdfS => "FDF-S",
            Strategy::Cdf => "CDF",
            Strategy::Cf => "CF",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "fdf-l" | "fdfl" => Ok(Strategy::FdfL),
            "fdf-s" | "fdfs" => Ok(Strategy::FdfS),
            "cdf" => Ok(Strategy::Cdf),
            "cf" => Ok(Strategy::Cf),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

/// How much a reported rate can be trusted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Certification {
    /// Optimal up to the numerical tolerance.
    ExactAtTolerance,
    /// Best point of a non-exhaustive search; an achievable inner point.
    SearchLowerBound,
}

/// Hyperparameters of the compress-forward search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfSearchConfig {
    pub restarts: usize,
    /// `|T|`.
    pub t_size: usize,
    /// `|Yhat3| = |Y3| + yhat_extra`.
    pub yhat_extra: usize,
    pub step_start: f64,
    pub step_end: f64,
    pub step_factor: f64,
    /// Strict inequalities `a < b` are enforced as `a + margin < b`.
    pub margin: f64,
    pub max_sweeps: usize,
}

impl Default for CfSearchConfig {
    fn default() -> Self {
        Self {
            restarts: 500,
            t_size: 4,
            yhat_extra: 3,
            step_start: 0.5,
            step_end: 1e-4,
            step_factor: 0.5,
            margin: 1e-9,
            max_sweeps: 50,
        }
    }
}

/// Knobs shared by all evaluators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub max_q: usize,
    pub grid: usize,
    pub tol: f64,
    pub seed: u64,
    pub cf: CfSearchConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            max_q: FIELD_ORDER_CAP,
            grid: DEFAULT_GRID,
            tol: DEFAULT_TOL,
            seed: 0,
            cf: CfSearchConfig::default(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), RegionError> {
        let bad = |m: &str| Err(RegionError::InvalidConfig(m.into()));
        if self.max_q < 2 {
            return bad("max_q must be at least 2");
        }
        if self.grid == 0 {
            return bad("grid resolution must be positive");
        }
        if !(self.tol > 0.0) {
            return bad("tolerance must be positive");
        }
        let cf = &self.cf;
        if cf.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if cf.t_size == 0 || cf.t_size > 4 {
            return bad("|T| must be between 1 and 4");
        }
        if cf.yhat_extra > 3 {
            return bad("|Yhat3| may exceed |Y3| by at most 3");
        }
        if !(cf.step_start > cf.step_end && cf.step_end > 0.0) {
            return bad("step schedule must decrease to a positive value");
        }
        if !(cf.step_factor > 0.0 && cf.step_factor < 1.0) {
            return bad("step factor must lie in (0, 1)");
        }
        if !(cf.margin >= 0.0) {
            return bad("margin must be non-negative");
        }
        Ok(())
    }
}

/// Parameters achieving a reported rate pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AchievingParams {
    Functional {
        relabeling: RelabelingInfo,
        x3: Vec<f64>,
    },
    CompleteDecode {
        x1: Vec<f64>,
        x2: Vec<f64>,
        x3: Vec<f64>,
    },
    CompressForward {
        params: CfParams,
        search: CfSearchConfig,
        best_restart: usize,
        feasible_restarts: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub strategy: Strategy,
    pub r1: f64,
    pub r2: f64,
    pub sum: f64,
    pub diagnostics: BTreeMap<String, f64>,
    pub params: AchievingParams,
    pub certified: Certification,
}

impl StrategyResult {
    pub(crate) fn new(
        strategy: Strategy,
        r1: f64,
        r2: f64,
        diagnostics: BTreeMap<String, f64>,
        params: AchievingParams,
        certified: Certification,
    ) -> Self {
        let r1 = r1.max(0.0);
        let r2 = r2.max(0.0);
        let diagnostics = diagnostics.into_iter().map(|(k, v)| (k, v.max(0.0))).collect();
        Self {
            strategy,
            r1,
            r2,
            sum: r1 + r2,
            diagnostics,
            params,
            certified,
        }
    }

    pub fn diagnostic(&self, key: &str) -> Option<f64> {
        self.diagnostics.get(key).copied()
    }
}

/// Diagnostic keys.
pub mod keys {
    pub const I_U_Y3: &str = "I(U;Y3)";
    pub const H_U_GIVEN_Y3: &str = "H(U|Y3)";
    pub const LOG2_Q: &str = "log2(q)";
    pub const DOWNLINK_MAXIMIN: &str = "downlink_maximin";
    pub const I_X3_Y1: &str = "I(X3;Y1)";
    pub const I_X3_Y2: &str = "I(X3;Y2)";
    pub const C_MAC: &str = "C_MAC";
    pub const FDF_S_UPLINK: &str = "uplink_computation_rate";
    pub const I_X1X2_Y3: &str = "I(X1,X2;Y3)";
    pub const I_X1_Y3_GIVEN_X2: &str = "I(X1;Y3|X2)";
    pub const I_X2_Y3_GIVEN_X1: &str = "I(X2;Y3|X1)";
    pub const I_X1_YHAT: &str = "I(X1;Yhat3|X2,T)";
    pub const I_X2_YHAT: &str = "I(X2;Yhat3|X1,T)";
    pub const I_Y3_YHAT_X1: &str = "I(Y3;Yhat3|X1,T)";
    pub const I_Y3_YHAT_X2: &str = "I(Y3;Yhat3|X2,T)";
}

/// Lazily computed pieces shared between evaluators on one channel.
pub(crate) struct Context<'a> {
    pub spec: &'a TwrcSpec,
    pub cfg: &'a EvalConfig,
    downlink: OnceLock<Result<DownlinkSolver, InfoError>>,
    maximin: OnceLock<DownlinkOptimum>,
    scores: OnceLock<Result<Vec<RelabelingScore>, RegionError>>,
    mac: OnceLock<Result<MacOptimum, InfoError>>,
}

impl<'a> Context<'a> {
    pub fn new(spec: &'a TwrcSpec, cfg: &'a EvalConfig) -> Result<Self, RegionError> {
        cfg.validate()?;
        Ok(Self {
            spec,
            cfg,
            downlink: OnceLock::new(),
            maximin: OnceLock::new(),
            scores: OnceLock::new(),
            mac: OnceLock::new(),
        })
    }

    pub fn downlink(&self) -> Result<&DownlinkSolver, RegionError> {
        self.downlink
            .get_or_init(|| DownlinkSolver::from_spec(self.spec, self.cfg.tol))
            .as_ref()
            .map_err(|e| e.clone().into())
    }

    pub fn maximin(&self) -> Result<&DownlinkOptimum, RegionError> {
        let solver = self.downlink()?;
        Ok(self.maximin.get_or_init(|| solver.maximin()))
    }

    pub fn relabeling_scores(&self) -> Result<&[RelabelingScore], RegionError> {
        self.scores
            .get_or_init(|| relabeling_scores(self.spec, self.cfg.max_q))
            .as_ref()
            .map(Vec::as_slice)
            .map_err(Clone::clone)
    }

    pub fn mac(&self) -> Result<&MacOptimum, RegionError> {
        self.mac
            .get_or_init(|| {
                let a = self.spec.alphabets();
                max_product_sum_rate(self.spec.uplink(), a.x1.size(), a.x2.size(), self.cfg.grid)
            })
            .as_ref()
            .map_err(|e| e.clone().into())
    }
}

/// Runs the selected evaluators, keeping going past individual failures.
pub fn compare_strategies(
    spec: &TwrcSpec,
    cfg: &EvalConfig,
    strategies: &[Strategy],
) -> Result<Vec<(Strategy, Result<StrategyResult, RegionError>)>, RegionError> {
    let ctx = Context::new(spec, cfg)?;
    Ok(strategies
        .iter()
        .map(|&s| {
            let r = match s {
                Strategy::FdfL => fdf::fdf_l(&ctx),
                Strategy::FdfS => fdf::fdf_s(&ctx),
                Strategy::Cdf => cdf::cdf(&ctx),
                Strategy::Cf => cf::cf(&ctx),
            };
            (s, r)
        })
        .collect())
}

/// All four strategies on one channel.
pub fn compare_all(
    spec: &TwrcSpec,
    cfg: &EvalConfig,
) -> Result<Vec<(Strategy, Result<StrategyResult, RegionError>)>, RegionError> {
    compare_strategies(spec, cfg, &Strategy::ALL)
}
