//! Functional-decode-forward: the relay decodes `U = X1 + X2` over a field.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{keys, AchievingParams, Certification, Context, EvalConfig, RegionError, Strategy, StrategyResult};
use crate::channel::{enumerate_restrictions, induced_u_channel, ProbVec, Relabeling, TwrcSpec};
use crate::infotheory::mutual_info;

/// `I(U;Y3)` of one relabeling under uniform inputs on its subsets.
#[derive(Debug, Clone)]
pub struct RelabelingScore {
    pub relabeling: Relabeling,
    pub i_u_y3: f64,
}

impl RelabelingScore {
    pub fn log2_q(&self) -> f64 {
        (self.relabeling.field().order() as f64).log2()
    }

    /// `H(U|Y3) = H(U) - I(U;Y3)` with `U` uniform on the field.
    pub fn h_u_given_y3(&self) -> f64 {
        (self.log2_q() - self.i_u_y3).max(0.0)
    }
}

/// Scores every restriction class, in enumeration order.
pub fn relabeling_scores(spec: &TwrcSpec, max_q: usize) -> Result<Vec<RelabelingScore>, RegionError> {
    let all = enumerate_restrictions(spec, max_q)?;
    if all.is_empty() {
        return Err(RegionError::NoRestriction);
    }
    all.into_par_iter()
        .map(|relabeling| {
            let ch = induced_u_channel(spec, &relabeling)?;
            let q = relabeling.field().order();
            let i_u_y3 = mutual_info(&ProbVec::uniform(q), &ch)?;
            Ok(RelabelingScore { relabeling, i_u_y3 })
        })
        .collect()
}

fn argmax_by<T>(items: &[T], key: impl Fn(&T) -> f64) -> &T {
    let mut best = &items[0];
    let mut best_v = key(best);
    for it in &items[1..] {
        let v = key(it);
        if v > best_v {
            best = it;
            best_v = v;
        }
    }
    best
}

fn downlink_certification(ctx: &Context) -> Result<Certification, RegionError> {
    Ok(if ctx.downlink()?.n_inputs() <= 2 {
        Certification::ExactAtTolerance
    } else {
        Certification::SearchLowerBound
    })
}

pub(super) fn fdf_l(ctx: &Context) -> Result<StrategyResult, RegionError> {
    let scores = ctx.relabeling_scores()?;
    let best = argmax_by(scores, |s| s.i_u_y3);
    let down = ctx.maximin()?;
    let rate = best.i_u_y3.min(down.value);

    let diagnostics = BTreeMap::from([
        (keys::I_U_Y3.to_string(), best.i_u_y3),
        (keys::H_U_GIVEN_Y3.to_string(), best.h_u_given_y3()),
        (keys::LOG2_Q.to_string(), best.log2_q()),
        (keys::DOWNLINK_MAXIMIN.to_string(), down.value),
        (keys::I_X3_Y1.to_string(), down.rate1),
        (keys::I_X3_Y2.to_string(), down.rate2),
    ]);
    Ok(StrategyResult::new(
        Strategy::FdfL,
        rate,
        rate,
        diagnostics,
        AchievingParams::Functional {
            relabeling: best.relabeling.describe(ctx.spec),
            x3: down.input.as_slice().to_vec(),
        },
        downlink_certification(ctx)?,
    ))
}

/// Uplink rate of the systematic computation code, in bits per channel use.
///
/// `0/0` (useless channel with a deterministic sum) is taken as 0.
pub fn computation_code_rate(c_mac: f64, entropy_w: f64, h_u_given_y3: f64) -> f64 {
    if c_mac <= 0.0 {
        return 0.0;
    }
    c_mac * entropy_w / (c_mac + 2.0 * h_u_given_y3)
}

pub(super) fn fdf_s(ctx: &Context) -> Result<StrategyResult, RegionError> {
    let scores = ctx.relabeling_scores()?;
    let mac = ctx.mac()?;
    let c_mac = mac.bits;
    let uplink = |s: &RelabelingScore| computation_code_rate(c_mac, s.log2_q(), s.h_u_given_y3());
    let best = argmax_by(scores, uplink);
    let up = uplink(best);
    let down = ctx.maximin()?;
    let rate = up.min(down.value);

    let diagnostics = BTreeMap::from([
        (keys::I_U_Y3.to_string(), best.i_u_y3),
        (keys::H_U_GIVEN_Y3.to_string(), best.h_u_given_y3()),
        (keys::LOG2_Q.to_string(), best.log2_q()),
        (keys::C_MAC.to_string(), c_mac),
        (keys::FDF_S_UPLINK.to_string(), up),
        (keys::DOWNLINK_MAXIMIN.to_string(), down.value),
        (keys::I_X3_Y1.to_string(), down.rate1),
        (keys::I_X3_Y2.to_string(), down.rate2),
    ]);
    Ok(StrategyResult::new(
        Strategy::FdfS,
        rate,
        rate,
        diagnostics,
        AchievingParams::Functional {
            relabeling: best.relabeling.describe(ctx.spec),
            x3: down.input.as_slice().to_vec(),
        },
        // The MAC sum rate comes from a grid search.
        Certification::SearchLowerBound,
    ))
}

/// Symmetric functional-decode-forward rate with linear codes.
pub fn eval_fdf_l(spec: &TwrcSpec, cfg: &EvalConfig) -> Result<StrategyResult, RegionError> {
    fdf_l(&Context::new(spec, cfg)?)
}

/// Symmetric functional-decode-forward rate with systematic computation codes.
pub fn eval_fdf_s(spec: &TwrcSpec, cfg: &EvalConfig) -> Result<StrategyResult, RegionError> {
    fdf_s(&Context::new(spec, cfg)?)
}
