//! Complete-decode-forward: the relay decodes both messages.
//!
//! For fixed `p(x1) p(x2)` and `p(x3)` the largest sum rate is
//! `min{a + b, c}` with `a = min{I(X1;Y3|X2), I(X3;Y2)}`,
//! `b = min{I(X2;Y3|X1), I(X3;Y1)}` and `c = I(X1,X2;Y3)`.

use std::collections::BTreeMap;

use super::{keys, AchievingParams, Certification, Context, EvalConfig, RegionError, Strategy, StrategyResult};
use crate::channel::{CondDist, TwrcSpec};
use crate::infotheory::{uplink_rates, DownlinkSolver, UplinkRates};
use crate::optimize::product_simplex_search;

/// Points within this of the best sum rate count as maximizers when
/// choosing the most balanced split.
const BALANCE_SLACK: f64 = 1e-9;

struct Operating {
    up: UplinkRates,
    p3: Vec<f64>,
    d1: f64,
    d2: f64,
    sum: f64,
    r1: f64,
    r2: f64,
}

fn operating_point(solver: &DownlinkSolver, uplink: &CondDist, p1: &[f64], p2: &[f64]) -> Operating {
    let up = uplink_rates(uplink, p1, p2);
    let (a_up, b_up) = (up.user1, up.user2);
    let opt = solver.maximize(|d1, d2| a_up.min(d2) + b_up.min(d1));
    let a = a_up.min(opt.rate2);
    let b = b_up.min(opt.rate1);
    let sum = up.sum.min(opt.value);
    // Split toward r1 == r2 inside the pentagon r1 <= a, r2 <= b.
    let r1 = (0.5 * sum).max(sum - b).min(a);
    Operating {
        sum,
        r1,
        r2: sum - r1,
        p3: opt.input.into_vec(),
        d1: opt.rate1,
        d2: opt.rate2,
        up,
    }
}

pub(super) fn cdf(ctx: &Context) -> Result<StrategyResult, RegionError> {
    let spec = ctx.spec;
    let solver = ctx.downlink()?;
    let n1 = spec.alphabets().x1.size();
    let n2 = spec.alphabets().x2.size();
    let uplink = spec.uplink();
    let eval = |p1: &[f64], p2: &[f64]| operating_point(solver, uplink, p1, p2);

    let best = product_simplex_search(n1, n2, ctx.cfg.grid, |p1, p2| eval(p1, p2).sum);
    // Among (near-)maximizers of the sum, prefer the most even split.
    let floor = best.value - BALANCE_SLACK;
    let balanced = product_simplex_search(n1, n2, ctx.cfg.grid, |p1, p2| {
        let o = eval(p1, p2);
        if o.sum >= floor {
            o.r1.min(o.r2)
        } else {
            -1.0
        }
    });
    let (p1, p2) = if balanced.value >= 0.0 {
        (balanced.p1, balanced.p2)
    } else {
        (best.p1, best.p2)
    };
    let o = eval(&p1, &p2);

    let diagnostics = BTreeMap::from([
        (keys::I_X1X2_Y3.to_string(), o.up.sum),
        (keys::I_X1_Y3_GIVEN_X2.to_string(), o.up.user1),
        (keys::I_X2_Y3_GIVEN_X1.to_string(), o.up.user2),
        (keys::I_X3_Y1.to_string(), o.d1),
        (keys::I_X3_Y2.to_string(), o.d2),
    ]);
    Ok(StrategyResult::new(
        Strategy::Cdf,
        o.r1,
        o.r2,
        diagnostics,
        AchievingParams::CompleteDecode {
            x1: p1,
            x2: p2,
            x3: o.p3,
        },
        Certification::SearchLowerBound,
    ))
}

/// Largest complete-decode-forward sum rate found by grid search.
pub fn eval_cdf(spec: &TwrcSpec, cfg: &EvalConfig) -> Result<StrategyResult, RegionError> {
    cdf(&Context::new(spec, cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bundled, product_downlink, Alphabet, CondDist};

    #[test]
    fn constant_downlink_gives_zero() {
        let s = bundled::paper_sec5();
        let stuck = CondDist::new(vec![vec![1.0, 0.0]; 2]).unwrap();
        let s = s
            .with_downlink(
                Alphabet::numeric(2),
                Alphabet::numeric(2),
                Alphabet::numeric(2),
                product_downlink(&stuck, &stuck),
            )
            .unwrap();
        let cfg = EvalConfig {
            grid: 20,
            ..EvalConfig::default()
        };
        assert_eq!(eval_cdf(&s, &cfg).unwrap().sum, 0.0);
    }

    #[test]
    fn split_is_balanced_when_possible() {
        let r = eval_cdf(&bundled::noiseless_adder(), &EvalConfig::default()).unwrap();
        assert!((r.sum - 1.0).abs() < 1e-9);
        assert!((r.r1 - r.r2).abs() < 1e-12);
    }
}
