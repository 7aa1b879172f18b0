//! Dithered random linear codes `x = s G + d` and the relay's functional decoder.
//!
//! Two users share the generator `G` but draw independent dithers. The sum of
//! their codewords is then a codeword of the same code for the message sum,
//! with the dither sum as offset, which is what the relay decodes.

use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::channel::{
    enumerate_restrictions, induced_u_channel, ChannelError, CondDist, ProbVec, Relabeling, TwrcSpec,
};
use crate::gf::{Elem, FieldVec, FiniteField, GfError};
use crate::infotheory::mutual_info;
use crate::seed;

/// Largest message space the exhaustive decoder will score.
pub const ML_CANDIDATE_CAP: usize = 1 << 20;

/// Significance level of the ensemble tests.
pub const LEMMA_SIGNIFICANCE: f64 = 1e-3;

/// Largest histogram the ensemble tests will build.
pub const LEMMA_CELL_CAP: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodeError {
    #[error(transparent)]
    Field(#[from] GfError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("{0}")]
    Dimension(String),
    #[error("{candidates} candidate messages exceed the exhaustive decoding cap of {cap}")]
    CandidateCap { candidates: u128, cap: usize },
    #[error("received sequence has zero likelihood under every candidate codeword")]
    ImpossibleObservation,
    #[error("{trials} trials over {cells} cells give expected count {expected:.3} < 5")]
    InsufficientTrials { trials: usize, cells: usize, expected: f64 },
    #[error("no restriction of the user alphabets onto a field of order {0}")]
    NoRestriction(usize),
}

impl CodeError {
    pub fn is_validation(&self) -> bool {
        !matches!(self, CodeError::ImpossibleObservation)
    }
}

#[derive(Debug, Clone)]
pub struct LinearCode {
    field: Arc<FiniteField>,
    k: usize,
    n: usize,
    g: Vec<Vec<Elem>>,
    dither: FieldVec,
}

impl LinearCode {
    pub fn new(field: Arc<FiniteField>, g: Vec<Vec<Elem>>, dither: FieldVec) -> Result<Self, CodeError> {
        let n = dither.len();
        if dither.field() != field.id() {
            return Err(GfError::FieldMismatch {
                left: field.id(),
                right: dither.field(),
            }
            .into());
        }
        for row in &g {
            if row.len() != n {
                return Err(CodeError::Dimension(format!(
                    "generator row has {} entries, block length is {n}",
                    row.len()
                )));
            }
            for &e in row {
                field.check_elem(e as usize)?;
            }
        }
        Ok(Self {
            k: g.len(),
            n,
            field,
            g,
            dither,
        })
    }

    pub fn field(&self) -> &FiniteField {
        &self.field
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn generator(&self) -> &[Vec<Elem>] {
        &self.g
    }

    pub fn dither(&self) -> &FieldVec {
        &self.dither
    }

    /// Bits per channel use: `k log2(q) / n`.
    pub fn rate_bits(&self) -> f64 {
        rate_bits(self.field.order(), self.k, self.n)
    }

    pub fn encode(&self, s: &FieldVec) -> Result<FieldVec, CodeError> {
        if s.len() != self.k {
            return Err(GfError::LengthMismatch {
                left: s.len(),
                right: self.k,
            }
            .into());
        }
        let f = &self.field;
        let sg = if self.k == 0 {
            f.zeros(self.n)
        } else {
            f.mat_vec(s, &self.g)?
        };
        Ok(f.vec_add(&sg, &self.dither)?)
    }
}

fn rate_bits(q: usize, k: usize, n: usize) -> f64 {
    k as f64 * (q as f64).log2() / n as f64
}

/// Two codes with a common generator and independent dithers.
#[derive(Debug, Clone)]
pub struct CodePair {
    pub code1: LinearCode,
    pub code2: LinearCode,
}

impl CodePair {
    pub fn field(&self) -> &FiniteField {
        self.code1.field()
    }

    /// Offset of the sum code: `d1 + d2`.
    pub fn dither_sum(&self) -> FieldVec {
        self.field()
            .vec_add(self.code1.dither(), self.code2.dither())
            .expect("codes of a pair share field and length")
    }
}

fn random_symbols(rng: &mut ChaCha8Rng, q: usize, n: usize) -> Vec<Elem> {
    (0..n).map(|_| rng.random_range(0..q) as Elem).collect()
}

/// Draws `G` and both dithers uniformly, reproducibly from `seed`.
pub fn gen_code_pair(field: &Arc<FiniteField>, k: usize, n: usize, seed: u64) -> CodePair {
    let mut rng = seed::rng(seed, seed::stream::CODE, 0);
    code_pair_from(field, k, n, &mut rng, true)
}

fn code_pair_from(field: &Arc<FiniteField>, k: usize, n: usize, rng: &mut ChaCha8Rng, dither: bool) -> CodePair {
    let q = field.order();
    let g: Vec<Vec<Elem>> = (0..k).map(|_| random_symbols(rng, q, n)).collect();
    let mut draw_dither = || {
        let d = if dither { random_symbols(rng, q, n) } else { vec![0; n] };
        field.vec(d).expect("symbols drawn below q")
    };
    let (d1, d2) = (draw_dither(), draw_dither());
    let make = |d| LinearCode::new(field.clone(), g.clone(), d).expect("consistent by construction");
    CodePair {
        code1: make(d1),
        code2: make(d2),
    }
}

/// Message and codeword of `U = X1 + X2`: `(s1 + s2, (s1 + s2) G + d1 + d2)`.
pub fn functional_combine(pair: &CodePair, s1: &FieldVec, s2: &FieldVec) -> Result<(FieldVec, FieldVec), CodeError> {
    let f = pair.field();
    let x1 = pair.code1.encode(s1)?;
    let x2 = pair.code2.encode(s2)?;
    let s3 = f.vec_add(s1, s2)?;
    let u = f.vec_add(&x1, &x2)?;
    let sum_code = LinearCode::new(pair.code1.field.clone(), pair.code1.g.clone(), pair.dither_sum())?;
    assert_eq!(
        sum_code.encode(&s3)?,
        u,
        "codeword sum is not the codeword of the message sum"
    );
    Ok((s3, u))
}

fn candidate_count(q: usize, k: usize) -> Result<usize, CodeError> {
    let total = (q as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if total > ML_CANDIDATE_CAP as u128 {
        return Err(CodeError::CandidateCap {
            candidates: total,
            cap: ML_CANDIDATE_CAP,
        });
    }
    Ok(total as usize)
}

/// Maximum-likelihood estimate of `s1 + s2` from the relay output.
///
/// Candidates are scored by `sum_t log p(y3[t] | u[t])`; among equal scores
/// (to a relative `1e-9`) the lexicographically smallest message wins.
pub fn ml_decode_u(pair: &CodePair, y3: &[usize], u_channel: &CondDist) -> Result<FieldVec, CodeError> {
    let f = pair.field();
    let (q, k, n) = (f.order(), pair.code1.k(), pair.code1.n());
    if y3.len() != n {
        return Err(CodeError::Dimension(format!(
            "received {} symbols, block length is {n}",
            y3.len()
        )));
    }
    if u_channel.n_in() != q {
        return Err(CodeError::Dimension(format!(
            "u-channel has {} rows, field has {q} elements",
            u_channel.n_in()
        )));
    }
    if let Some(&y) = y3.iter().find(|&&y| y >= u_channel.n_out()) {
        return Err(CodeError::Dimension(format!(
            "received symbol {y} is outside the output alphabet"
        )));
    }
    let total = candidate_count(q, k)?;
    // ll[t * q + e] = log p(y3[t] | e)
    let ll: Vec<f64> = y3
        .iter()
        .flat_map(|&y| (0..q).map(move |e| u_channel.row(e)[y].ln()))
        .collect();
    let offset = pair.dither_sum();
    let best = if q == 2 && n <= 64 {
        decode_binary(&pair.code1.g, offset.symbols(), &ll, n)
    } else {
        decode_generic(f, &pair.code1.g, offset.symbols(), &ll, total)
    };
    let (score, msg) = best;
    if score == f64::NEG_INFINITY {
        return Err(CodeError::ImpossibleObservation);
    }
    Ok(f.vec(msg)?)
}

/// Scores closer than this (relative) are ties; summation order differs
/// between candidates, so exact equality is not meaningful.
const TIE_TOL: f64 = 1e-9;

fn ties(score: f64, best: f64) -> bool {
    if !(score.is_finite() && best.is_finite()) {
        return score == best;
    }
    (score - best).abs() <= TIE_TOL * (1.0 + best.abs())
}

fn beats(score: f64, best: f64) -> bool {
    score > best && !ties(score, best)
}

fn decode_generic(f: &FiniteField, g: &[Vec<Elem>], offset: &[Elem], ll: &[f64], total: usize) -> (f64, Vec<Elem>) {
    let (q, k, n) = (f.order(), g.len(), offset.len());
    // multiples[j][e] = e * G[j]
    let multiples: Vec<Vec<Vec<Elem>>> = g
        .iter()
        .map(|row| {
            f.elements()
                .map(|e| row.iter().map(|&x| f.mul(e, x)).collect())
                .collect()
        })
        .collect();
    let score = |u: &[Elem]| -> f64 { u.iter().enumerate().map(|(t, &e)| ll[t * q + e as usize]).sum() };

    let mut msg = vec![0 as Elem; k];
    let mut u = offset.to_vec();
    let mut best = (score(&u), msg.clone());
    for _ in 1..total {
        // Odometer step, last position fastest.
        let mut j = k;
        loop {
            j -= 1;
            let old = msg[j];
            let new = if (old as usize) + 1 == q { 0 } else { old + 1 };
            msg[j] = new;
            for t in 0..n {
                u[t] = f.add(
                    f.sub(u[t], multiples[j][old as usize][t]),
                    multiples[j][new as usize][t],
                );
            }
            if new != 0 {
                break;
            }
        }
        // Enumeration is lexicographic, so a tie never displaces the incumbent.
        let s = score(&u);
        if beats(s, best.0) {
            best = (s, msg.clone());
        }
    }
    best
}

/// GF(2) with `n <= 64`: bit-packed codewords in Gray-code order.
fn decode_binary(g: &[Vec<Elem>], offset: &[Elem], ll: &[f64], n: usize) -> (f64, Vec<Elem>) {
    let k = g.len();
    let pack = |v: &[Elem]| v.iter().enumerate().fold(0u64, |acc, (t, &b)| acc | ((b as u64) << t));
    // Bit b of the message index is message position k - 1 - b.
    let rows: Vec<u64> = (0..k).map(|b| pack(&g[k - 1 - b])).collect();
    let chunks = n.div_ceil(8);
    let mut table = vec![0.0f64; chunks * 256];
    for c in 0..chunks {
        for byte in 0..256usize {
            table[c * 256 + byte] = (0..8)
                .map(|i| 8 * c + i)
                .filter(|&t| t < n)
                .map(|t| ll[2 * t + ((byte >> (t - 8 * c)) & 1)])
                .sum();
        }
    }
    let score = |cw: u64| -> f64 {
        (0..chunks)
            .map(|c| table[c * 256 + ((cw >> (8 * c)) & 0xff) as usize])
            .sum()
    };

    let mut cw = pack(offset);
    let mut index = 0u64;
    let mut best = (score(cw), 0u64);
    for i in 1..(1u64 << k) {
        let b = i.trailing_zeros() as usize;
        index ^= 1 << b;
        cw ^= rows[b];
        let s = score(cw);
        if beats(s, best.0) || (ties(s, best.0) && index < best.1) {
            best = (s, index);
        }
    }
    let msg = (0..k).map(|j| ((best.1 >> (k - 1 - j)) & 1) as Elem).collect();
    (best.0, msg)
}

/// Monte Carlo settings for the relay's functional decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub field_order: usize,
    pub k: usize,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Spread trials over the rayon pool. Results do not depend on it.
    pub parallel: bool,
}

/// Block error count of one Monte Carlo run.
///
/// A block error is a wrong estimate of the sum codeword `U`, which is what
/// the relay forwards. When `G` is singular several message sums share that
/// codeword; `message_errors` additionally counts those ambiguities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub field_order: usize,
    pub k: usize,
    pub n: usize,
    pub rate_bits: f64,
    pub trials: usize,
    pub block_errors: usize,
    pub error_rate: f64,
    pub seed: u64,
    pub message_errors: usize,
}

impl SimReport {
    /// Binomial standard error of `error_rate`.
    pub fn std_error(&self) -> f64 {
        let p = self.error_rate;
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Restriction of order `q` with the largest `I(U;Y3)`; first in enumeration order on ties.
pub fn best_relabeling(spec: &TwrcSpec, q: usize) -> Result<Relabeling, CodeError> {
    let mut best: Option<(f64, Relabeling)> = None;
    for r in enumerate_restrictions(spec, q)? {
        if r.field().order() != q {
            continue;
        }
        let ch = induced_u_channel(spec, &r)?;
        let i = mutual_info(&ProbVec::uniform(q), &ch).map_err(|e| CodeError::Dimension(e.to_string()))?;
        if best.as_ref().map_or(true, |(b, _)| i > *b) {
            best = Some((i, r));
        }
    }
    best.map(|(_, r)| r).ok_or(CodeError::NoRestriction(q))
}

/// Simulates the relay decoding `s1 + s2` with the best relabeling of order `q`.
pub fn simulate(spec: &TwrcSpec, cfg: &SimConfig) -> Result<SimReport, CodeError> {
    let relabeling = best_relabeling(spec, cfg.field_order)?;
    simulate_with(spec, &relabeling, cfg)
}

/// Trial `t` draws a fresh code pair, messages and channel noise from
/// `(seed, t)` alone.
pub fn simulate_with(spec: &TwrcSpec, relabeling: &Relabeling, cfg: &SimConfig) -> Result<SimReport, CodeError> {
    let field = Arc::new(relabeling.field().clone());
    let q = field.order();
    if q != cfg.field_order {
        return Err(CodeError::Dimension(format!(
            "relabeling is over GF({q}), simulation asks for GF({})",
            cfg.field_order
        )));
    }
    if cfg.n == 0 {
        return Err(CodeError::Dimension("block length must be positive".into()));
    }
    candidate_count(q, cfg.k)?;
    let u_channel = induced_u_channel(spec, relabeling)?;
    let n2 = spec.alphabets().x2.size();
    let samplers: Vec<WeightedIndex<f64>> = spec
        .uplink()
        .rows()
        .map(|row| WeightedIndex::new(row).expect("validated distribution"))
        .collect();

    let trial = |t: usize| -> Result<(bool, bool), CodeError> {
        let pair = gen_code_pair(
            &field,
            cfg.k,
            cfg.n,
            seed::derive(cfg.seed, seed::stream::TRIAL, t as u64),
        );
        let mut rng = seed::rng(cfg.seed, seed::stream::TRIAL, t as u64);
        let s1 = field.vec(random_symbols(&mut rng, q, cfg.k))?;
        let s2 = field.vec(random_symbols(&mut rng, q, cfg.k))?;
        let x1 = pair.code1.encode(&s1)?;
        let x2 = pair.code2.encode(&s2)?;
        let y3: Vec<usize> = x1
            .symbols()
            .iter()
            .zip(x2.symbols())
            .map(|(&a, &b)| {
                let row = relabeling.symbol1(a) * n2 + relabeling.symbol2(b);
                samplers[row].sample(&mut rng)
            })
            .collect();
        let (s3, u) = functional_combine(&pair, &s1, &s2)?;
        match ml_decode_u(&pair, &y3, &u_channel) {
            Ok(est) => {
                let (_, u_est) = functional_combine(&pair, &est, &field.zeros(cfg.k))?;
                Ok((u_est != u, est != s3))
            }
            Err(CodeError::ImpossibleObservation) => Ok((true, true)),
            Err(e) => Err(e),
        }
    };
    let outcomes: Vec<(bool, bool)> = if cfg.parallel {
        (0..cfg.trials).into_par_iter().map(trial).collect::<Result<_, _>>()?
    } else {
        (0..cfg.trials).map(trial).collect::<Result<_, _>>()?
    };
    let block_errors = outcomes.iter().filter(|o| o.0).count();
    let message_errors = outcomes.iter().filter(|o| o.1).count();
    Ok(SimReport {
        field_order: q,
        k: cfg.k,
        n: cfg.n,
        rate_bits: rate_bits(q, cfg.k, cfg.n),
        trials: cfg.trials,
        block_errors,
        error_rate: if cfg.trials == 0 {
            0.0
        } else {
            block_errors as f64 / cfg.trials as f64
        },
        seed: cfg.seed,
        message_errors,
    })
}

/// Pearson goodness-of-fit against the uniform law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub pass: bool,
}

impl ChiSquareTest {
    pub fn uniform(counts: &[u64], significance: f64) -> Self {
        let total: u64 = counts.iter().sum();
        let expected = total as f64 / counts.len() as f64;
        let statistic = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        let dof = counts.len() - 1;
        let p_value = ChiSquared::new(dof as f64)
            .expect("positive degrees of freedom")
            .sf(statistic);
        Self {
            statistic,
            dof,
            p_value,
            pass: p_value >= significance,
        }
    }
}

/// Whether codes in the ensemble carry a random dither.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dither {
    Uniform,
    /// Zero dithers; only useful to show what goes wrong without them.
    Disabled,
}

/// Ensemble tests of the code construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub field_order: usize,
    pub k: usize,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub dither: Dither,
    /// Codeword of the zero message is uniform on `F^n`.
    pub uniform_codeword: ChiSquareTest,
    /// Codewords of two distinct messages of one code are independent and uniform.
    pub pairwise_independent: ChiSquareTest,
    /// Codewords of one message in each code of a pair are independent and uniform.
    pub cross_code_independent: ChiSquareTest,
}

impl LemmaReport {
    pub fn all_pass(&self) -> bool {
        self.uniform_codeword.pass && self.pairwise_independent.pass && self.cross_code_independent.pass
    }
}

pub fn lemma_tests(
    field: &Arc<FiniteField>,
    k: usize,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<LemmaReport, CodeError> {
    lemma_tests_with(field, k, n, trials, seed, Dither::Uniform)
}

pub fn lemma_tests_with(
    field: &Arc<FiniteField>,
    k: usize,
    n: usize,
    trials: usize,
    seed: u64,
    dither: Dither,
) -> Result<LemmaReport, CodeError> {
    let q = field.order();
    if k == 0 || n == 0 {
        return Err(CodeError::Dimension("ensemble tests need k >= 1 and n >= 1".into()));
    }
    let single = q.checked_pow(n as u32).filter(|&c| c <= LEMMA_CELL_CAP);
    let cells = single
        .and_then(|c| c.checked_mul(c))
        .filter(|&c| c <= LEMMA_CELL_CAP)
        .ok_or_else(|| CodeError::Dimension(format!("GF({q})^{n} pairs are too many cells to histogram")))?;
    let single = single.expect("checked above");
    let expected = trials as f64 / cells as f64;
    if expected < 5.0 {
        return Err(CodeError::InsufficientTrials {
            trials,
            cells,
            expected,
        });
    }

    let index = |v: &FieldVec| v.symbols().iter().fold(0usize, |acc, &e| acc * q + e as usize);
    let zero = field.zeros(k);
    let mut unit = vec![0 as Elem; k];
    unit[0] = 1;
    let unit = field.vec(unit)?;

    let mut h1 = vec![0u64; single];
    let mut h2 = vec![0u64; cells];
    let mut h3 = vec![0u64; cells];
    for t in 0..trials {
        let mut rng = seed::rng(seed, seed::stream::LEMMA, t as u64);
        let pair = code_pair_from(field, k, n, &mut rng, dither == Dither::Uniform);
        let a = pair.code1.encode(&zero)?;
        let b = pair.code1.encode(&unit)?;
        let c = pair.code2.encode(&unit)?;
        h1[index(&a)] += 1;
        h2[index(&a) * single + index(&b)] += 1;
        h3[index(&b) * single + index(&c)] += 1;
    }
    Ok(LemmaReport {
        field_order: q,
        k,
        n,
        trials,
        seed,
        dither,
        uniform_codeword: ChiSquareTest::uniform(&h1, LEMMA_SIGNIFICANCE),
        pairwise_independent: ChiSquareTest::uniform(&h2, LEMMA_SIGNIFICANCE),
        cross_code_independent: ChiSquareTest::uniform(&h3, LEMMA_SIGNIFICANCE),
    })
}
