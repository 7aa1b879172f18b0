//! Entropy, mutual information and the optimizers built on them.
//!
//! All logarithms are base 2. `0 log 0` is taken as 0.

use thiserror::Error;

use crate::channel::{CondDist, ProbVec, TwrcSpec};
use crate::optimize::{golden_section_max, product_simplex_search};

/// Default convergence tolerance, in bits.
pub const DEFAULT_TOL: f64 = 1e-7;
/// Iteration cap for alternating-maximization loops.
pub const MAX_ITERATIONS: usize = 100_000;
/// Default simplex grid resolution (entries are multiples of `1/DEFAULT_GRID`).
pub const DEFAULT_GRID: usize = 200;

/// Weights used to trace the downlink trade-off curve when `|X3| > 2`.
const FRONTIER_POINTS: usize = 129;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InfoError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("positive mass on an event of probability zero")]
    ImpossibleEvent,
    #[error("no convergence after {iterations} iterations (gap {gap:e})")]
    NonConvergence { iterations: usize, gap: f64 },
}

#[inline]
fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

pub(crate) fn entropy_of(p: &[f64]) -> f64 {
    -p.iter().map(|&v| plogp(v)).sum::<f64>()
}

pub fn entropy(p: &ProbVec) -> f64 {
    entropy_of(p.as_slice())
}

/// `H2(p) = -p log p - (1-p) log (1-p)`.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_of(&[p, 1.0 - p])
}

/// `I(X;Y)` for `X ~ px` through `ch`. Rows are read from the flat buffer.
/// Mutual informations below this are rounding noise.
pub const MI_FLOOR: f64 = 1e-12;

pub(crate) fn mi_flat(px: &[f64], ch: &[f64], n_out: usize, scratch: &mut [f64]) -> f64 {
    let qy = &mut scratch[..n_out];
    qy.iter_mut().for_each(|v| *v = 0.0);
    let mut h_cond = 0.0;
    for (&p, row) in px.iter().zip(ch.chunks(n_out)) {
        if p <= 0.0 {
            continue;
        }
        let mut h = 0.0;
        for (q, &w) in qy.iter_mut().zip(row) {
            *q += p * w;
            h += plogp(w);
        }
        h_cond -= p * h;
    }
    let i = entropy_of(qy) - h_cond;
    // Rounding residue of equal entropies is reported as exactly zero.
    if i < MI_FLOOR {
        0.0
    } else {
        i
    }
}

/// `I(X;Y)` with `X ~ px` and `Y | X ~ ch`.
pub fn mutual_info(px: &ProbVec, ch: &CondDist) -> Result<f64, InfoError> {
    if px.len() != ch.n_in() {
        return Err(InfoError::Dimension(format!(
            "input distribution has {} entries, channel has {} rows",
            px.len(),
            ch.n_in()
        )));
    }
    let mut scratch = vec![0.0; ch.n_out()];
    Ok(mi_flat(px.as_slice(), ch.as_flat(), ch.n_out(), &mut scratch))
}

/// Joint distribution over a product of finite alphabets, row-major
/// (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct JointDist {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl JointDist {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self, InfoError> {
        let size: usize = dims.iter().product();
        if size != data.len() {
            return Err(InfoError::Dimension(format!(
                "{} entries for shape {dims:?}",
                data.len()
            )));
        }
        if data.iter().any(|&v| !(v >= 0.0)) || (data.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(InfoError::Dimension("entries are not a distribution".into()));
        }
        Ok(Self { dims, data })
    }

    /// Joint of `(X, Y)` from an input law and a channel.
    pub fn from_channel(px: &ProbVec, ch: &CondDist) -> Result<Self, InfoError> {
        if px.len() != ch.n_in() {
            return Err(InfoError::Dimension("input/channel size".into()));
        }
        let data = ch
            .rows()
            .zip(px.as_slice())
            .flat_map(|(row, &p)| row.iter().map(move |&w| p * w))
            .collect();
        Self::new(vec![ch.n_in(), ch.n_out()], data)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Marginal on `axes`, in the order given.
    pub fn marginal(&self, axes: &[usize]) -> Result<JointDist, InfoError> {
        if let Some(&a) = axes.iter().find(|&&a| a >= self.dims.len()) {
            return Err(InfoError::Dimension(format!("axis {a} out of range")));
        }
        let out_dims: Vec<usize> = axes.iter().map(|&a| self.dims[a]).collect();
        let mut out = vec![0.0; out_dims.iter().product()];
        let mut idx = vec![0usize; self.dims.len()];
        for &v in &self.data {
            let flat = axes.iter().fold(0, |acc, &a| acc * self.dims[a] + idx[a]);
            out[flat] += v;
            for k in (0..idx.len()).rev() {
                idx[k] += 1;
                if idx[k] < self.dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Ok(JointDist {
            dims: out_dims,
            data: out,
        })
    }

    /// Joint entropy of the variables on `axes`.
    pub fn entropy(&self, axes: &[usize]) -> Result<f64, InfoError> {
        if axes.is_empty() {
            return Ok(0.0);
        }
        Ok(entropy_of(&self.marginal(axes)?.data))
    }
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut v = a.to_vec();
    v.extend(b.iter().filter(|x| !a.contains(x)));
    v
}

/// `H(A | B)` for groups of axes of `joint`.
pub fn cond_entropy(joint: &JointDist, a: &[usize], given: &[usize]) -> Result<f64, InfoError> {
    Ok(joint.entropy(&union(given, a))? - joint.entropy(given)?)
}

/// `I(A ; B | C)` for groups of axes of `joint`.
pub fn cond_mutual_info(joint: &JointDist, a: &[usize], b: &[usize], c: &[usize]) -> Result<f64, InfoError> {
    let hac = joint.entropy(&union(a, c))?;
    let hbc = joint.entropy(&union(b, c))?;
    let habc = joint.entropy(&union(&union(a, b), c))?;
    let hc = joint.entropy(c)?;
    Ok((hac + hbc - habc - hc).max(0.0))
}

/// Result of a capacity-type maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct Capacity {
    pub bits: f64,
    pub input: ProbVec,
    /// Certified upper bound; `upper - bits < tol` on success.
    pub upper: f64,
    pub iterations: usize,
}

/// Relative entropy `D(W(.|x) || q)` in bits.
fn divergence(row: &[f64], q: &[f64]) -> Result<f64, InfoError> {
    let mut d = 0.0;
    for (&w, &qy) in row.iter().zip(q) {
        if w > 0.0 {
            if qy <= 0.0 {
                return Err(InfoError::ImpossibleEvent);
            }
            d += w * (w / qy).log2();
        }
    }
    Ok(d)
}

/// Maximizes `sum_k w_k I(X; Y_k)` over `p(x)` by alternating maximization.
///
/// Stops when the gap between `max_x sum_k w_k D(W_k(.|x) || q_k)` and the
/// current objective falls below `tol`.
pub fn weighted_capacity(channels: &[&CondDist], weights: &[f64], tol: f64) -> Result<Capacity, InfoError> {
    let n = channels
        .first()
        .map(|c| c.n_in())
        .ok_or_else(|| InfoError::Dimension("no channels".into()))?;
    if channels.len() != weights.len() || channels.iter().any(|c| c.n_in() != n) {
        return Err(InfoError::Dimension("channels must share the input alphabet".into()));
    }
    let mut p = vec![1.0 / n as f64; n];
    let mut score = vec![0.0; n];
    let mut q: Vec<Vec<f64>> = channels.iter().map(|c| vec![0.0; c.n_out()]).collect();
    let mut gap = f64::INFINITY;
    for it in 0..MAX_ITERATIONS {
        score.iter_mut().for_each(|s| *s = 0.0);
        for ((ch, &w), qk) in channels.iter().zip(weights).zip(q.iter_mut()) {
            qk.iter_mut().for_each(|v| *v = 0.0);
            for (row, &px) in ch.rows().zip(&p) {
                for (qy, &wy) in qk.iter_mut().zip(row) {
                    *qy += px * wy;
                }
            }
            if w == 0.0 {
                continue;
            }
            for (x, row) in ch.rows().enumerate() {
                score[x] += w * divergence(row, qk)?;
            }
        }
        let lower: f64 = p.iter().zip(&score).map(|(a, b)| a * b).sum();
        let upper = score.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        gap = upper - lower;
        if gap < tol {
            return Ok(Capacity {
                bits: lower.max(0.0),
                input: ProbVec::from_raw(p),
                upper,
                iterations: it,
            });
        }
        // Shift by the max exponent to keep the update finite.
        let mut total = 0.0;
        for (px, &s) in p.iter_mut().zip(&score) {
            *px *= (s - upper).exp2();
            total += *px;
        }
        p.iter_mut().for_each(|v| *v /= total);
    }
    Err(InfoError::NonConvergence {
        iterations: MAX_ITERATIONS,
        gap,
    })
}

/// Capacity of a discrete memoryless channel and an achieving input.
pub fn dmc_capacity(ch: &CondDist, tol: f64) -> Result<Capacity, InfoError> {
    weighted_capacity(&[ch], &[1.0], tol)
}

/// Best input of the relay broadcast for some objective of the two link rates.
#[derive(Debug, Clone, PartialEq)]
pub struct DownlinkOptimum {
    pub value: f64,
    pub input: ProbVec,
    /// `I(X3;Y1)` at `input`.
    pub rate1: f64,
    /// `I(X3;Y2)` at `input`.
    pub rate2: f64,
}

#[derive(Debug, Clone)]
struct FrontierPoint {
    p: Vec<f64>,
    d1: f64,
    d2: f64,
}

/// Maximizes objectives `f(I(X3;Y1), I(X3;Y2))` over `p(x3)`.
///
/// `f` must be concave and non-decreasing in both arguments (sums and minima
/// of the two rates and constants). For binary `X3` the search is a golden
/// section on the input law itself. For larger alphabets the trade-off curve
/// is traced once by weighted capacity runs, and each query searches mixtures
/// of adjacent curve points.
#[derive(Debug, Clone)]
pub struct DownlinkSolver {
    ch1: CondDist,
    ch2: CondDist,
    tol: f64,
    frontier: Vec<FrontierPoint>,
}

impl DownlinkSolver {
    pub fn new(ch1: &CondDist, ch2: &CondDist, tol: f64) -> Result<Self, InfoError> {
        if ch1.n_in() != ch2.n_in() {
            return Err(InfoError::Dimension("downlink marginals disagree on |X3|".into()));
        }
        let mut solver = Self {
            ch1: ch1.clone(),
            ch2: ch2.clone(),
            tol,
            frontier: Vec::new(),
        };
        if ch1.n_in() > 2 {
            let mut pts = Vec::with_capacity(FRONTIER_POINTS);
            for i in 0..FRONTIER_POINTS {
                let lam = i as f64 / (FRONTIER_POINTS - 1) as f64;
                let cap = weighted_capacity(&[ch1, ch2], &[lam, 1.0 - lam], tol * 1e-2)?;
                let p = cap.input.into_vec();
                let (d1, d2) = solver.rates(&p);
                pts.push(FrontierPoint { p, d1, d2 });
            }
            solver.frontier = pts;
        }
        Ok(solver)
    }

    pub fn from_spec(spec: &TwrcSpec, tol: f64) -> Result<Self, InfoError> {
        let (m1, m2) = spec.downlink_marginals();
        Self::new(&m1, &m2, tol)
    }

    pub fn n_inputs(&self) -> usize {
        self.ch1.n_in()
    }

    pub fn rates(&self, p: &[f64]) -> (f64, f64) {
        let mut scratch = vec![0.0; self.ch1.n_out().max(self.ch2.n_out())];
        (
            mi_flat(p, self.ch1.as_flat(), self.ch1.n_out(), &mut scratch),
            mi_flat(p, self.ch2.as_flat(), self.ch2.n_out(), &mut scratch),
        )
    }

    fn finish<F: Fn(f64, f64) -> f64>(&self, p: Vec<f64>, f: &F) -> DownlinkOptimum {
        let (d1, d2) = self.rates(&p);
        DownlinkOptimum {
            value: f(d1, d2),
            input: ProbVec::from_raw(p),
            rate1: d1,
            rate2: d2,
        }
    }

    pub fn maximize<F: Fn(f64, f64) -> f64>(&self, f: F) -> DownlinkOptimum {
        match self.n_inputs() {
            1 => self.finish(vec![1.0], &f),
            2 => {
                let eval = |t: f64| {
                    let (d1, d2) = self.rates(&[t, 1.0 - t]);
                    f(d1, d2)
                };
                let (t, _) = golden_section_max(eval, 0.0, 1.0, 1e-11);
                self.finish(vec![t, 1.0 - t], &f)
            }
            _ => {
                let scores: Vec<f64> = self.frontier.iter().map(|pt| f(pt.d1, pt.d2)).collect();
                let mut best = 0;
                for (i, &s) in scores.iter().enumerate() {
                    if s > scores[best] {
                        best = i;
                    }
                }
                let mut out = self.finish(self.frontier[best].p.clone(), &f);
                let lo = best.saturating_sub(1);
                let hi = (best + 1).min(self.frontier.len() - 1);
                for (a, b) in [(lo, best), (best, hi)] {
                    if a == b {
                        continue;
                    }
                    let mix = |t: f64| -> Vec<f64> {
                        self.frontier[a]
                            .p
                            .iter()
                            .zip(&self.frontier[b].p)
                            .map(|(x, y)| t * x + (1.0 - t) * y)
                            .collect()
                    };
                    let eval = |t: f64| {
                        let (d1, d2) = self.rates(&mix(t));
                        f(d1, d2)
                    };
                    let (t, v) = golden_section_max(eval, 0.0, 1.0, 1e-9);
                    if v > out.value {
                        out = self.finish(mix(t), &f);
                    }
                }
                out
            }
        }
    }

    /// `max_p min{ I(X3;Y1), I(X3;Y2) }`.
    pub fn maximin(&self) -> DownlinkOptimum {
        self.maximize(f64::min)
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }
}

/// Largest common rate the relay can broadcast to both users.
pub fn maximin_downlink(spec: &TwrcSpec, tol: f64) -> Result<DownlinkOptimum, InfoError> {
    Ok(DownlinkSolver::from_spec(spec, tol)?.maximin())
}

/// Uplink statistics under a product input law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UplinkRates {
    /// `I(X1, X2; Y3)`.
    pub sum: f64,
    /// `I(X1; Y3 | X2)`.
    pub user1: f64,
    /// `I(X2; Y3 | X1)`.
    pub user2: f64,
}

/// Evaluates the MAC mutual informations at `p(x1) p(x2)`.
pub(crate) fn uplink_rates(uplink: &CondDist, p1: &[f64], p2: &[f64]) -> UplinkRates {
    let n1 = p1.len();
    let n2 = p2.len();
    let ny = uplink.n_out();
    let mut scratch = vec![0.0; ny];
    let mut rows = vec![0.0; n1.max(n2) * ny];
    let mut joint = vec![0.0; n1 * n2];
    for x1 in 0..n1 {
        for x2 in 0..n2 {
            joint[x1 * n2 + x2] = p1[x1] * p2[x2];
        }
    }
    let sum = mi_flat(&joint, uplink.as_flat(), ny, &mut scratch);

    let mut user1 = 0.0;
    for x2 in 0..n2 {
        if p2[x2] <= 0.0 {
            continue;
        }
        for x1 in 0..n1 {
            rows[x1 * ny..(x1 + 1) * ny].copy_from_slice(uplink.row(x1 * n2 + x2));
        }
        user1 += p2[x2] * mi_flat(p1, &rows[..n1 * ny], ny, &mut scratch);
    }
    let mut user2 = 0.0;
    for x1 in 0..n1 {
        if p1[x1] <= 0.0 {
            continue;
        }
        let block = &uplink.as_flat()[x1 * n2 * ny..(x1 + 1) * n2 * ny];
        user2 += p1[x1] * mi_flat(p2, block, ny, &mut scratch);
    }
    UplinkRates { sum, user1, user2 }
}

/// Maximum of `I(X1, X2; Y3)` over product input laws.
#[derive(Debug, Clone, PartialEq)]
pub struct MacOptimum {
    pub bits: f64,
    pub p1: ProbVec,
    pub p2: ProbVec,
    pub resolution: usize,
}

/// Sum-rate of the uplink viewed as a multiple-access channel.
///
/// The objective is not jointly concave over product laws, so the value is a
/// search lower bound: grid at resolution `1/grid`, then pairwise ascent.
pub fn max_product_sum_rate(uplink: &CondDist, n1: usize, n2: usize, grid: usize) -> Result<MacOptimum, InfoError> {
    if n1 * n2 != uplink.n_in() {
        return Err(InfoError::Dimension(format!(
            "uplink has {} rows, expected {n1}x{n2}",
            uplink.n_in()
        )));
    }
    let opt = product_simplex_search(n1, n2, grid, |p1, p2| uplink_rates(uplink, p1, p2).sum);
    Ok(MacOptimum {
        bits: opt.value,
        p1: ProbVec::from_raw(opt.p1),
        p2: ProbVec::from_raw(opt.p2),
        resolution: opt.resolution,
    })
}
