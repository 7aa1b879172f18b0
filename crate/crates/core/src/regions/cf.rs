//! Compress-forward: the relay quantizes `Y3` to `Yhat3` and broadcasts it.
//!
//! The region is described by the law `p(t) p(x1|t) p(x2|t) p(yhat|y3)` and
//! `p(x3)`:
//!
//! ```text
//! R1 <= I(X1; Yhat3 | X2, T)      I(Y3; Yhat3 | X1, T) < I(X3; Y1)
//! R2 <= I(X2; Yhat3 | X1, T)      I(Y3; Yhat3 | X2, T) < I(X3; Y2)
//! ```
//!
//! The sum rate is not concave in these parameters, so the search here
//! (random restarts plus pairwise mass-transfer hill climbing) only ever
//! reports an achievable inner point.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    keys, AchievingParams, Certification, CfSearchConfig, Context, EvalConfig, RegionError, Strategy, StrategyResult,
};
use crate::channel::{CondDist, ProbVec, TwrcSpec};
use crate::infotheory::{cond_mutual_info, mi_flat, mutual_info, InfoError, JointDist};
use crate::seed;

/// A compression constraint whose left side is at most this value is met
/// regardless of the downlink: a quantizer that reveals nothing about `Y3`
/// needs no broadcast rate.
pub const CF_ZERO_RATE: f64 = 1e-12;

/// Compress-forward operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfParams {
    pub t_dist: ProbVec,
    pub x1_given_t: CondDist,
    pub x2_given_t: CondDist,
    /// Rows indexed by `y3`, columns by `yhat3`.
    pub quantizer: CondDist,
    pub x3_dist: ProbVec,
}

/// Information quantities of a [`CfParams`], recomputed from the full joint law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfCheck {
    pub r1: f64,
    pub r2: f64,
    pub compress1: f64,
    pub compress2: f64,
    pub down1: f64,
    pub down2: f64,
    pub feasible: bool,
}

fn constraint_met(compress: f64, down: f64, margin: f64) -> bool {
    compress <= CF_ZERO_RATE || compress + margin < down
}

/// Re-derives rates and constraints of `params` from the joint distribution
/// of `(T, X1, X2, Y3, Yhat3)`.
pub fn verify_cf_point(spec: &TwrcSpec, params: &CfParams, margin: f64) -> Result<CfCheck, RegionError> {
    let a = spec.alphabets();
    let (n1, n2, ny) = (a.x1.size(), a.x2.size(), a.y3.size());
    let nt = params.t_dist.len();
    let nh = params.quantizer.n_out();
    let shape_ok = params.x1_given_t.n_in() == nt
        && params.x2_given_t.n_in() == nt
        && params.x1_given_t.n_out() == n1
        && params.x2_given_t.n_out() == n2
        && params.quantizer.n_in() == ny
        && params.x3_dist.len() == a.x3.size();
    if !shape_ok {
        return Err(InfoError::Dimension("compress-forward parameters do not fit the channel".into()).into());
    }
    let mut data = Vec::with_capacity(nt * n1 * n2 * ny * nh);
    for t in 0..nt {
        for x1 in 0..n1 {
            for x2 in 0..n2 {
                let w = params.t_dist[t] * params.x1_given_t.row(t)[x1] * params.x2_given_t.row(t)[x2];
                for (y, &py) in spec.uplink_row(x1, x2).iter().enumerate() {
                    for &ph in params.quantizer.row(y) {
                        data.push(w * py * ph);
                    }
                }
            }
        }
    }
    let joint = JointDist::new(vec![nt, n1, n2, ny, nh], data)?;
    let (t, x1, x2, y3, yh) = (0, 1, 2, 3, 4);
    let r1 = cond_mutual_info(&joint, &[x1], &[yh], &[x2, t])?;
    let r2 = cond_mutual_info(&joint, &[x2], &[yh], &[x1, t])?;
    let compress1 = cond_mutual_info(&joint, &[y3], &[yh], &[x1, t])?;
    let compress2 = cond_mutual_info(&joint, &[y3], &[yh], &[x2, t])?;
    let (m1, m2) = spec.downlink_marginals();
    let down1 = mutual_info(&params.x3_dist, &m1)?;
    let down2 = mutual_info(&params.x3_dist, &m2)?;
    Ok(CfCheck {
        r1,
        r2,
        compress1,
        compress2,
        down1,
        down2,
        feasible: constraint_met(compress1, down1, margin) && constraint_met(compress2, down2, margin),
    })
}

#[derive(Debug, Clone, Copy, Default)]
struct Point {
    r1: f64,
    r2: f64,
    c1: f64,
    c2: f64,
    d1: f64,
    d2: f64,
}

impl Point {
    fn sum(&self) -> f64 {
        self.r1 + self.r2
    }

    fn feasible(&self, margin: f64) -> bool {
        constraint_met(self.c1, self.d1, margin) && constraint_met(self.c2, self.d2, margin)
    }

    fn slack(&self) -> f64 {
        (self.d1 - self.c1).min(self.d2 - self.c2)
    }
}

/// Flat parameter vector: `[t | x1|t rows | x2|t rows | quantizer rows | x3]`.
struct Layout {
    nt: usize,
    n1: usize,
    n2: usize,
    ny: usize,
    nh: usize,
    n3: usize,
}

impl Layout {
    fn x1_off(&self) -> usize {
        self.nt
    }
    fn x2_off(&self) -> usize {
        self.x1_off() + self.nt * self.n1
    }
    fn q_off(&self) -> usize {
        self.x2_off() + self.nt * self.n2
    }
    fn x3_off(&self) -> usize {
        self.q_off() + self.ny * self.nh
    }
    fn len(&self) -> usize {
        self.x3_off() + self.n3
    }

    /// `(offset, length)` of every probability row.
    fn rows(&self) -> Vec<(usize, usize)> {
        let mut rows = vec![(0, self.nt)];
        rows.extend((0..self.nt).map(|t| (self.x1_off() + t * self.n1, self.n1)));
        rows.extend((0..self.nt).map(|t| (self.x2_off() + t * self.n2, self.n2)));
        rows.extend((0..self.ny).map(|y| (self.q_off() + y * self.nh, self.nh)));
        rows.push((self.x3_off(), self.n3));
        rows
    }
}

struct Model<'a> {
    lay: Layout,
    uplink: &'a [f64],
    down1: CondDist,
    down2: CondDist,
    margin: f64,
}

struct Scratch {
    ph: Vec<f64>,
    rows: Vec<f64>,
    py: Vec<f64>,
    mi: Vec<f64>,
}

impl<'a> Model<'a> {
    fn scratch(&self) -> Scratch {
        let l = &self.lay;
        let wide = l.nh.max(l.ny).max(self.down1.n_out()).max(self.down2.n_out());
        Scratch {
            ph: vec![0.0; l.n1 * l.n2 * l.nh],
            rows: vec![0.0; l.n1.max(l.n2) * l.nh],
            py: vec![0.0; l.ny],
            mi: vec![0.0; wide],
        }
    }

    fn eval(&self, v: &[f64], s: &mut Scratch) -> Point {
        let l = &self.lay;
        let (n1, n2, ny, nh) = (l.n1, l.n2, l.ny, l.nh);
        let quant = &v[l.q_off()..l.x3_off()];
        let w = self.uplink;

        // p(yhat | x1, x2)
        for pair in 0..n1 * n2 {
            let out = &mut s.ph[pair * nh..(pair + 1) * nh];
            out.iter_mut().for_each(|o| *o = 0.0);
            for (y, &wy) in w[pair * ny..(pair + 1) * ny].iter().enumerate() {
                if wy == 0.0 {
                    continue;
                }
                for (o, &qh) in out.iter_mut().zip(&quant[y * nh..(y + 1) * nh]) {
                    *o += wy * qh;
                }
            }
        }

        let mut pt = Point::default();
        for t in 0..l.nt {
            let tp = v[t];
            if tp <= 0.0 {
                continue;
            }
            let p1 = &v[l.x1_off() + t * n1..l.x1_off() + (t + 1) * n1];
            let p2 = &v[l.x2_off() + t * n2..l.x2_off() + (t + 1) * n2];

            for x2 in 0..n2 {
                if p2[x2] <= 0.0 {
                    continue;
                }
                for x1 in 0..n1 {
                    let src = (x1 * n2 + x2) * nh;
                    s.rows[x1 * nh..(x1 + 1) * nh].copy_from_slice(&s.ph[src..src + nh]);
                }
                pt.r1 += tp * p2[x2] * mi_flat(p1, &s.rows[..n1 * nh], nh, &mut s.mi);

                s.py.iter_mut().for_each(|o| *o = 0.0);
                for x1 in 0..n1 {
                    let row = &w[(x1 * n2 + x2) * ny..(x1 * n2 + x2 + 1) * ny];
                    for (o, &wy) in s.py.iter_mut().zip(row) {
                        *o += p1[x1] * wy;
                    }
                }
                pt.c2 += tp * p2[x2] * mi_flat(&s.py, quant, nh, &mut s.mi);
            }
            for x1 in 0..n1 {
                if p1[x1] <= 0.0 {
                    continue;
                }
                let block = &s.ph[x1 * n2 * nh..(x1 + 1) * n2 * nh];
                pt.r2 += tp * p1[x1] * mi_flat(p2, block, nh, &mut s.mi);

                s.py.iter_mut().for_each(|o| *o = 0.0);
                for x2 in 0..n2 {
                    let row = &w[(x1 * n2 + x2) * ny..(x1 * n2 + x2 + 1) * ny];
                    for (o, &wy) in s.py.iter_mut().zip(row) {
                        *o += p2[x2] * wy;
                    }
                }
                pt.c1 += tp * p1[x1] * mi_flat(&s.py, quant, nh, &mut s.mi);
            }
        }
        let x3 = &v[l.x3_off()..];
        pt.d1 = mi_flat(x3, self.down1.as_flat(), self.down1.n_out(), &mut s.mi);
        pt.d2 = mi_flat(x3, self.down2.as_flat(), self.down2.n_out(), &mut s.mi);
        pt
    }

    /// Pulls every quantizer row toward the constant output `0` until the
    /// constraints hold. Both compression terms shrink monotonically along
    /// this path and vanish at its end.
    fn repair(&self, v: &mut [f64], s: &mut Scratch) -> Option<Point> {
        let pt = self.eval(v, s);
        if pt.feasible(self.margin) {
            return Some(pt);
        }
        let l = &self.lay;
        let original: Vec<f64> = v[l.q_off()..l.x3_off()].to_vec();
        let apply = |v: &mut [f64], lam: f64| {
            for y in 0..l.ny {
                for h in 0..l.nh {
                    let base = original[y * l.nh + h] * (1.0 - lam);
                    v[l.q_off() + y * l.nh + h] = if h == 0 { base + lam } else { base };
                }
            }
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        apply(v, hi);
        if !self.eval(v, s).feasible(self.margin) {
            return None;
        }
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            apply(v, mid);
            if self.eval(v, s).feasible(self.margin) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        apply(v, hi);
        Some(self.eval(v, s))
    }

    fn better(&self, cand: &Point, cur: &Point) -> bool {
        if !cand.feasible(self.margin) {
            return false;
        }
        cand.sum() > cur.sum() + 1e-13 || (cand.sum() >= cur.sum() && cand.slack() > cur.slack() + 1e-13)
    }

    fn hill_climb(&self, v: &mut [f64], mut cur: Point, cfg: &CfSearchConfig, s: &mut Scratch) -> Point {
        let rows = self.lay.rows();
        let mut step = cfg.step_start;
        while step >= cfg.step_end {
            for _ in 0..cfg.max_sweeps {
                let mut improved = false;
                for &(off, len) in &rows {
                    for i in 0..len {
                        for j in 0..len {
                            if i == j {
                                continue;
                            }
                            let delta = step.min(v[off + i]);
                            if delta <= 0.0 {
                                continue;
                            }
                            let (old_i, old_j) = (v[off + i], v[off + j]);
                            v[off + i] = old_i - delta;
                            v[off + j] = old_j + delta;
                            let cand = self.eval(v, s);
                            if self.better(&cand, &cur) {
                                cur = cand;
                                improved = true;
                            } else {
                                v[off + i] = old_i;
                                v[off + j] = old_j;
                            }
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            step *= cfg.step_factor;
        }
        cur
    }

    fn start(&self, restart: usize, seed_value: u64, x3: &[f64]) -> Vec<f64> {
        let l = &self.lay;
        let mut v = vec![0.0; l.len()];
        if restart == 0 {
            // Uniform inputs, quantizer passing Y3 through unchanged.
            for &(off, len) in &l.rows()[..1 + 2 * l.nt] {
                v[off..off + len].iter_mut().for_each(|p| *p = 1.0 / len as f64);
            }
            for y in 0..l.ny {
                v[l.q_off() + y * l.nh + y] = 1.0;
            }
        } else {
            let mut rng = seed::rng(seed_value, seed::stream::CF_RESTART, restart as u64);
            for &(off, len) in &l.rows()[..l.rows().len() - 1] {
                let row = &mut v[off..off + len];
                row.iter_mut().for_each(|p| *p = rng.sample::<f64, _>(Exp1) + 1e-300);
                let total: f64 = row.iter().sum();
                row.iter_mut().for_each(|p| *p /= total);
            }
        }
        v[l.x3_off()..].copy_from_slice(x3);
        v
    }

    fn to_params(&self, v: &[f64]) -> CfParams {
        let l = &self.lay;
        let flat = |off: usize, n_in: usize, n_out: usize| {
            CondDist::from_flat(n_in, n_out, v[off..off + n_in * n_out].to_vec())
        };
        CfParams {
            t_dist: ProbVec::from_raw(v[..l.nt].to_vec()),
            x1_given_t: flat(l.x1_off(), l.nt, l.n1),
            x2_given_t: flat(l.x2_off(), l.nt, l.n2),
            quantizer: flat(l.q_off(), l.ny, l.nh),
            x3_dist: ProbVec::from_raw(v[l.x3_off()..].to_vec()),
        }
    }
}

pub(super) fn cf(ctx: &Context) -> Result<StrategyResult, RegionError> {
    let spec = ctx.spec;
    let cfg = &ctx.cfg.cf;
    let a = spec.alphabets();
    let (down1, down2) = spec.downlink_marginals();
    let model = Model {
        lay: Layout {
            nt: cfg.t_size,
            n1: a.x1.size(),
            n2: a.x2.size(),
            ny: a.y3.size(),
            nh: a.y3.size() + cfg.yhat_extra,
            n3: a.x3.size(),
        },
        uplink: spec.uplink().as_flat(),
        down1,
        down2,
        margin: cfg.margin,
    };
    let x3_start = ctx.maximin()?.input.as_slice().to_vec();

    let outcomes: Vec<Option<(Point, Vec<f64>)>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut s = model.scratch();
            let mut v = model.start(r, ctx.cfg.seed, &x3_start);
            let pt = model.repair(&mut v, &mut s)?;
            let pt = model.hill_climb(&mut v, pt, cfg, &mut s);
            Some((pt, v))
        })
        .collect();

    let feasible_restarts = outcomes.iter().flatten().count();
    let mut best: Option<(usize, &Point, &Vec<f64>)> = None;
    for (r, o) in outcomes.iter().enumerate() {
        if let Some((pt, v)) = o {
            if best.map_or(true, |(_, b, _)| pt.sum() > b.sum()) {
                best = Some((r, pt, v));
            }
        }
    }
    let (best_restart, pt, v) = best.ok_or(RegionError::NoFeasiblePoint { restarts: cfg.restarts })?;

    let diagnostics = BTreeMap::from([
        (keys::I_X1_YHAT.to_string(), pt.r1),
        (keys::I_X2_YHAT.to_string(), pt.r2),
        (keys::I_Y3_YHAT_X1.to_string(), pt.c1),
        (keys::I_Y3_YHAT_X2.to_string(), pt.c2),
        (keys::I_X3_Y1.to_string(), pt.d1),
        (keys::I_X3_Y2.to_string(), pt.d2),
    ]);
    // R1 travels to user 2 and is limited by what Yhat3 says about X1.
    Ok(StrategyResult::new(
        Strategy::Cf,
        pt.r1,
        pt.r2,
        diagnostics,
        AchievingParams::CompressForward {
            params: model.to_params(v),
            search: cfg.clone(),
            best_restart,
            feasible_restarts,
        },
        Certification::SearchLowerBound,
    ))
}

/// Best compress-forward sum rate found by the randomized search.
pub fn eval_cf(spec: &TwrcSpec, cfg: &EvalConfig) -> Result<StrategyResult, RegionError> {
    cf(&Context::new(spec, cfg)?)
}
