//! Machine-readable output: JSON reports and their CSV projections.

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{product_downlink, Alphabet, ChannelError, CondDist, SpecFile, TwrcSpec};
use crate::lincode::SimReport;
use crate::regions::{compare_strategies, EvalConfig, RegionError, Strategy, StrategyResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub strategy: Strategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<StrategyResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ReportEntry {
    fn from_outcome(strategy: Strategy, outcome: Result<StrategyResult, RegionError>) -> Self {
        match outcome {
            Ok(r) => Self {
                strategy,
                result: Some(r),
                error: None,
            },
            Err(e) => Self {
                strategy,
                result: None,
                error: Some(e.to_string()),
            },
        }
    }
}

/// Results of one or more strategies on one channel, with everything needed
/// to reproduce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub version: String,
    pub spec: SpecFile,
    pub config: EvalConfig,
    pub results: Vec<ReportEntry>,
}

impl CompareReport {
    pub fn run(spec: &TwrcSpec, cfg: &EvalConfig, strategies: &[Strategy]) -> Result<Self, RegionError> {
        let results = compare_strategies(spec, cfg, strategies)?
            .into_iter()
            .map(|(s, r)| ReportEntry::from_outcome(s, r))
            .collect();
        Ok(Self {
            version: VERSION.to_string(),
            spec: spec.to_file(),
            config: cfg.clone(),
            results,
        })
    }

    /// Evaluates the echoed channel and configuration again.
    pub fn rerun(&self) -> Result<Self, crate::Error> {
        let spec = TwrcSpec::from_file(self.spec.clone())?;
        let strategies: Vec<Strategy> = self.results.iter().map(|e| e.strategy).collect();
        Ok(Self::run(&spec, &self.config, &strategies)?)
    }

    pub fn entry(&self, strategy: Strategy) -> Option<&ReportEntry> {
        self.results.iter().find(|e| e.strategy == strategy)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, ChannelError> {
        serde_json::from_str(text).map_err(|e| ChannelError::Parse(e.to_string()))
    }

    /// `param,strategy,r1,r2,sum` rows; failed strategies have empty rates.
    pub fn rate_rows(&self, param: &str) -> Vec<RateRow> {
        self.results
            .iter()
            .map(|e| RateRow {
                param: param.to_string(),
                strategy: e.strategy,
                r1: e.result.as_ref().map(|r| r.r1),
                r2: e.result.as_ref().map(|r| r.r2),
                sum: e.result.as_ref().map(|r| r.sum),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub param: String,
    pub strategy: Strategy,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub sum: Option<f64>,
}

pub const RATE_CSV_HEADER: &str = "param,strategy,r1,r2,sum";
pub const SIM_CSV_HEADER: &str = "field_order,k,n,rate_bits,trials,block_errors,error_rate,seed";

fn write_csv<T: Serialize>(rows: &[T], header: bool, out: impl Write) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(header).from_writer(out);
    for r in rows {
        w.serialize(r).map_err(std::io::Error::other)?;
    }
    w.flush()
}

pub fn write_rate_csv(rows: &[RateRow], out: impl Write) -> std::io::Result<()> {
    write_csv(rows, true, out)
}

#[derive(Serialize)]
struct SimRow {
    field_order: usize,
    k: usize,
    n: usize,
    rate_bits: f64,
    trials: usize,
    block_errors: usize,
    error_rate: f64,
    seed: u64,
}

/// Writes simulation rows, with the header only when `header` is set.
pub fn write_sim_csv(rows: &[SimReport], header: bool, out: impl Write) -> std::io::Result<()> {
    let rows: Vec<SimRow> = rows
        .iter()
        .map(|r| SimRow {
            field_order: r.field_order,
            k: r.k,
            n: r.n,
            rate_bits: r.rate_bits,
            trials: r.trials,
            block_errors: r.block_errors,
            error_rate: r.error_rate,
            seed: r.seed,
        })
        .collect();
    write_csv(&rows, header, out)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("unknown sweep parameter {0:?} (expected rho, rho1, rho2 or uplink_mix)")]
    UnknownParam(String),
    #[error("cannot substitute {param} into the template: {reason}")]
    Template { param: String, reason: String },
    #[error("{param} = {value} is outside [0, 1]")]
    OutOfRange { param: String, value: f64 },
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Scalar channel parameters that can be swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Both downlinks become BSC(rho).
    Rho,
    /// The relay-to-user-1 link becomes BSC(rho); the other keeps its marginal.
    Rho1,
    /// The relay-to-user-2 link becomes BSC(rho); the other keeps its marginal.
    Rho2,
    /// Uplink mixed with the uniform output: `(1 - a) W + a / |Y3|`.
    UplinkMix,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Rho => "rho",
            SweepParam::Rho1 => "rho1",
            SweepParam::Rho2 => "rho2",
            SweepParam::UplinkMix => "uplink_mix",
        }
    }

    /// The template with this parameter set to `value`.
    pub fn apply(self, template: &TwrcSpec, value: f64) -> Result<TwrcSpec, SweepError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(SweepError::OutOfRange {
                param: self.name().into(),
                value,
            });
        }
        let template_err = |reason: &str| SweepError::Template {
            param: self.name().into(),
            reason: reason.into(),
        };
        let a = template.alphabets();
        match self {
            SweepParam::UplinkMix => {
                let ny = a.y3.size() as f64;
                let rows = template
                    .uplink()
                    .rows()
                    .map(|r| r.iter().map(|&p| (1.0 - value) * p + value / ny).collect())
                    .collect();
                Ok(template.with_uplink(CondDist::new(rows)?)?)
            }
            SweepParam::Rho | SweepParam::Rho1 | SweepParam::Rho2 => {
                let bsc = CondDist::bsc(value)?;
                let (m1, m2) = template.downlink_marginals();
                let (ch1, ch2) = match self {
                    SweepParam::Rho => (bsc.clone(), bsc),
                    SweepParam::Rho1 => (bsc, m2),
                    _ => (m1, bsc),
                };
                if a.x3.size() != 2 {
                    return Err(template_err("relay input is not binary"));
                }
                if ch1.n_out() != 2 && self != SweepParam::Rho2 || ch2.n_out() != 2 && self != SweepParam::Rho1 {
                    return Err(template_err("swept user output is not binary"));
                }
                let y1 = if ch1.n_out() == a.y1.size() {
                    a.y1.clone()
                } else {
                    Alphabet::numeric(2)
                };
                let y2 = if ch2.n_out() == a.y2.size() {
                    a.y2.clone()
                } else {
                    Alphabet::numeric(2)
                };
                Ok(template.with_downlink(a.x3.clone(), y1, y2, product_downlink(&ch1, &ch2))?)
            }
        }
    }
}

impl FromStr for SweepParam {
    type Err = SweepError;
    fn from_str(s: &str) -> Result<Self, SweepError> {
        match s.to_ascii_lowercase().as_str() {
            "rho" => Ok(SweepParam::Rho),
            "rho1" => Ok(SweepParam::Rho1),
            "rho2" => Ok(SweepParam::Rho2),
            "uplink_mix" | "uplink-mix" => Ok(SweepParam::UplinkMix),
            _ => Err(SweepError::UnknownParam(s.into())),
        }
    }
}

/// `steps + 1` evenly spaced values from `from` to `to` inclusive.
pub fn sweep_values(from: f64, to: f64, steps: usize) -> Vec<f64> {
    if steps == 0 {
        return vec![from];
    }
    (0..=steps)
        .map(|i| from + (to - from) * i as f64 / steps as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub param: SweepParam,
    pub value: f64,
    pub report: CompareReport,
}

pub fn sweep(
    template: &TwrcSpec,
    cfg: &EvalConfig,
    strategies: &[Strategy],
    param: SweepParam,
    values: &[f64],
) -> Result<Vec<SweepPoint>, crate::Error> {
    values
        .iter()
        .map(|&value| {
            let spec = param.apply(template, value).map_err(crate::Error::from)?;
            Ok(SweepPoint {
                param,
                value,
                report: CompareReport::run(&spec, cfg, strategies)?,
            })
        })
        .collect()
}

pub fn sweep_rows(points: &[SweepPoint]) -> Vec<RateRow> {
    points
        .iter()
        .flat_map(|p| p.report.rate_rows(&p.value.to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::bundled;

    #[test]
    fn sweep_values_hit_endpoints() {
        let v = sweep_values(0.0, 0.5, 5);
        assert_eq!(v.len(), 6);
        assert_eq!(v[3], 0.3);
        assert_eq!(v[5], 0.5);
        assert_eq!(sweep_values(0.2, 0.9, 0), vec![0.2]);
    }

    #[test]
    fn rho_substitution_reproduces_template() {
        let s = bundled::paper_sec5();
        let t = SweepParam::Rho.apply(&s, 0.3).unwrap();
        for (a, b) in t.downlink().as_flat().iter().zip(s.downlink().as_flat()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn substitution_errors() {
        let s = bundled::paper_sec5();
        assert!(matches!(
            SweepParam::Rho.apply(&s, 1.5),
            Err(SweepError::OutOfRange { .. })
        ));
        assert!("gain".parse::<SweepParam>().is_err());
        let wide = s
            .with_downlink(
                Alphabet::numeric(3),
                Alphabet::numeric(3),
                Alphabet::numeric(3),
                product_downlink(&CondDist::identity(3), &CondDist::identity(3)),
            )
            .unwrap();
        assert!(matches!(
            SweepParam::Rho.apply(&wide, 0.1),
            Err(SweepError::Template { .. })
        ));
    }

    #[test]
    fn uplink_mix_ends_at_uniform() {
        let s = SweepParam::UplinkMix.apply(&bundled::paper_sec5(), 1.0).unwrap();
        assert!(s.uplink().as_flat().iter().all(|&p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn csv_headers() {
        let mut buf = Vec::new();
        write_rate_csv(
            &[RateRow {
                param: "0.1".into(),
                strategy: Strategy::FdfL,
                r1: Some(0.5),
                r2: None,
                sum: None,
            }],
            &mut buf,
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, format!("{RATE_CSV_HEADER}\n0.1,FDF-L,0.5,,\n"));
    }
}
