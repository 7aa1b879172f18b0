//! Discrete memoryless two-way relay channels.
//!
//! A channel is described by its six alphabets, the uplink law
//! `p(y3 | x1, x2)` and the joint downlink law `p(y1, y2 | x3)`. This module
//! owns validation, the JSON file format, and the finite-field relabelings
//! used by the functional-decode-forward evaluators.

use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{prime_power, Elem, FieldId, FiniteField, GfError, FIELD_ORDER_CAP};

/// Row sums must match 1 within this tolerance.
pub const PROB_TOL: f64 = 1e-9;

/// Largest user alphabet for which relabelings are enumerated exhaustively.
pub const RESTRICTION_ALPHABET_CAP: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error at {location}: {message}")]
    Validation { location: String, message: String },
    #[error("relabeling does not match channel: {0}")]
    RelabelingMismatch(String),
    #[error("alphabet of size {size} exceeds exhaustive restriction cap {cap}")]
    EnumerationRefused { size: usize, cap: usize },
    #[error(transparent)]
    Field(#[from] GfError),
}

impl ChannelError {
    fn invalid(location: impl Into<String>, message: impl Into<String>) -> Self {
        ChannelError::Validation {
            location: location.into(),
            message: message.into(),
        }
    }
}

/// Ordered list of distinct symbol names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Alphabet {
    labels: Vec<String>,
}

impl Alphabet {
    pub fn new(labels: Vec<String>) -> Result<Self, ChannelError> {
        if labels.is_empty() {
            return Err(ChannelError::invalid("alphabet", "alphabet is empty"));
        }
        if let Some(dup) = labels.iter().duplicates().next() {
            return Err(ChannelError::invalid("alphabet", format!("duplicate label {dup:?}")));
        }
        Ok(Self { labels })
    }

    /// Alphabet `{0, 1, ..., n-1}`.
    pub fn numeric(n: usize) -> Self {
        Self {
            labels: (0..n).map(|i| i.to_string()).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }
}

impl TryFrom<Vec<String>> for Alphabet {
    type Error = ChannelError;
    fn try_from(v: Vec<String>) -> Result<Self, Self::Error> {
        Alphabet::new(v)
    }
}

impl From<Alphabet> for Vec<String> {
    fn from(a: Alphabet) -> Self {
        a.labels
    }
}

/// Probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVec(Vec<f64>);

impl TryFrom<Vec<f64>> for ProbVec {
    type Error = ChannelError;
    fn try_from(p: Vec<f64>) -> Result<Self, ChannelError> {
        Self::new(p)
    }
}

impl From<ProbVec> for Vec<f64> {
    fn from(p: ProbVec) -> Self {
        p.0
    }
}

impl ProbVec {
    /// Validates and, within [`PROB_TOL`], renormalizes.
    pub fn new(p: Vec<f64>) -> Result<Self, ChannelError> {
        Self::validated(p, "probability vector")
    }

    fn validated(mut p: Vec<f64>, location: &str) -> Result<Self, ChannelError> {
        if p.is_empty() {
            return Err(ChannelError::invalid(location, "empty distribution"));
        }
        if let Some((i, v)) = p.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(ChannelError::invalid(
                location,
                format!("entry {i} is {v}, must be a non-negative number"),
            ));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(ChannelError::invalid(
                location,
                format!("entries sum to {sum}, expected 1"),
            ));
        }
        // Rows that are stochastic up to rounding are kept bit-for-bit.
        if (sum - 1.0).abs() > 1e-12 {
            p.iter_mut().for_each(|v| *v /= sum);
        }
        Ok(Self(p))
    }

    /// Wraps a vector known to be a distribution (internal optimizer output).
    pub(crate) fn from_raw(p: Vec<f64>) -> Self {
        debug_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        Self(p)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn point(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for ProbVec {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Row-stochastic matrix: one output distribution per input symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct CondDist {
    n_in: usize,
    n_out: usize,
    data: Vec<f64>,
}

impl CondDist {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, ChannelError> {
        Self::with_location(rows, "channel")
    }

    fn with_location(rows: Vec<Vec<f64>>, location: &str) -> Result<Self, ChannelError> {
        let n_in = rows.len();
        if n_in == 0 {
            return Err(ChannelError::invalid(location, "no rows"));
        }
        let n_out = rows[0].len();
        let mut data = Vec::with_capacity(n_in * n_out);
        for (i, row) in rows.into_iter().enumerate() {
            let loc = format!("{location} row {i}");
            if row.len() != n_out {
                return Err(ChannelError::invalid(
                    loc,
                    format!("has {} entries, expected {n_out}", row.len()),
                ));
            }
            data.extend(ProbVec::validated(row, &loc)?.0);
        }
        Ok(Self { n_in, n_out, data })
    }

    pub(crate) fn from_flat(n_in: usize, n_out: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n_in * n_out);
        Self { n_in, n_out, data }
    }

    /// Noiseless channel on `n` symbols.
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self::from_flat(n, n, data)
    }

    /// Binary symmetric channel with crossover `rho`.
    pub fn bsc(rho: f64) -> Result<Self, ChannelError> {
        Self::new(vec![vec![1.0 - rho, rho], vec![rho, 1.0 - rho]])
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_out..(i + 1) * self.n_out]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n_out)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }
}

impl Serialize for CondDist {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CondDist {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Self::new(rows).map_err(serde::de::Error::custom)
    }
}

/// Alphabets of the six terminals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabets {
    pub x1: Alphabet,
    pub x2: Alphabet,
    pub x3: Alphabet,
    pub y1: Alphabet,
    pub y2: Alphabet,
    pub y3: Alphabet,
}

impl Alphabets {
    pub fn numeric(sizes: [usize; 6]) -> Self {
        let [x1, x2, x3, y1, y2, y3] = sizes.map(Alphabet::numeric);
        Self { x1, x2, x3, y1, y2, y3 }
    }
}

/// On-disk representation of a channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub name: String,
    pub alphabets: Alphabets,
    pub uplink: Vec<Vec<f64>>,
    pub downlink: Vec<Vec<f64>>,
}

/// A validated discrete memoryless two-way relay channel.
#[derive(Debug, Clone, PartialEq)]
pub struct TwrcSpec {
    name: String,
    alphabets: Alphabets,
    /// Rows indexed by `x1 * |X2| + x2`, columns by `y3`.
    uplink: CondDist,
    /// Rows indexed by `x3`, columns by `y1 * |Y2| + y2`.
    downlink: CondDist,
}

impl TwrcSpec {
    pub fn new(
        name: impl Into<String>,
        alphabets: Alphabets,
        uplink: CondDist,
        downlink: CondDist,
    ) -> Result<Self, ChannelError> {
        let a = &alphabets;
        let up_rows = a.x1.size() * a.x2.size();
        if uplink.n_in() != up_rows || uplink.n_out() != a.y3.size() {
            return Err(ChannelError::invalid(
                "uplink",
                format!(
                    "shape {}x{}, expected {}x{}",
                    uplink.n_in(),
                    uplink.n_out(),
                    up_rows,
                    a.y3.size()
                ),
            ));
        }
        let down_cols = a.y1.size() * a.y2.size();
        if downlink.n_in() != a.x3.size() || downlink.n_out() != down_cols {
            return Err(ChannelError::invalid(
                "downlink",
                format!(
                    "shape {}x{}, expected {}x{}",
                    downlink.n_in(),
                    downlink.n_out(),
                    a.x3.size(),
                    down_cols
                ),
            ));
        }
        Ok(Self {
            name: name.into(),
            alphabets,
            uplink,
            downlink,
        })
    }

    pub fn from_file(file: SpecFile) -> Result<Self, ChannelError> {
        let uplink = CondDist::with_location(file.uplink, "uplink")?;
        let downlink = CondDist::with_location(file.downlink, "downlink")?;
        Self::new(file.name, file.alphabets, uplink, downlink)
    }

    pub fn to_file(&self) -> SpecFile {
        SpecFile {
            name: self.name.clone(),
            alphabets: self.alphabets.clone(),
            uplink: self.uplink.to_rows(),
            downlink: self.downlink.to_rows(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("spec serializes")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alphabets(&self) -> &Alphabets {
        &self.alphabets
    }

    pub fn uplink(&self) -> &CondDist {
        &self.uplink
    }

    pub fn downlink(&self) -> &CondDist {
        &self.downlink
    }

    pub fn uplink_row(&self, x1: usize, x2: usize) -> &[f64] {
        self.uplink.row(x1 * self.alphabets.x2.size() + x2)
    }

    /// `p(y1 | x3)` and `p(y2 | x3)` from the joint downlink.
    pub fn downlink_marginals(&self) -> (CondDist, CondDist) {
        let n3 = self.alphabets.x3.size();
        let n1 = self.alphabets.y1.size();
        let n2 = self.alphabets.y2.size();
        let mut m1 = vec![0.0; n3 * n1];
        let mut m2 = vec![0.0; n3 * n2];
        for x3 in 0..n3 {
            let row = self.downlink.row(x3);
            for y1 in 0..n1 {
                for y2 in 0..n2 {
                    let p = row[y1 * n2 + y2];
                    m1[x3 * n1 + y1] += p;
                    m2[x3 * n2 + y2] += p;
                }
            }
        }
        (CondDist::from_flat(n3, n1, m1), CondDist::from_flat(n3, n2, m2))
    }

    /// Replaces the downlink, keeping the uplink.
    pub fn with_downlink(
        &self,
        x3: Alphabet,
        y1: Alphabet,
        y2: Alphabet,
        downlink: CondDist,
    ) -> Result<Self, ChannelError> {
        let mut alphabets = self.alphabets.clone();
        alphabets.x3 = x3;
        alphabets.y1 = y1;
        alphabets.y2 = y2;
        Self::new(self.name.clone(), alphabets, self.uplink.clone(), downlink)
    }

    pub fn with_uplink(&self, uplink: CondDist) -> Result<Self, ChannelError> {
        Self::new(self.name.clone(), self.alphabets.clone(), uplink, self.downlink.clone())
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// Joint downlink of two independent channels from the same input.
pub fn product_downlink(ch1: &CondDist, ch2: &CondDist) -> CondDist {
    assert_eq!(ch1.n_in(), ch2.n_in());
    let mut data = Vec::with_capacity(ch1.n_in() * ch1.n_out() * ch2.n_out());
    for x in 0..ch1.n_in() {
        for &a in ch1.row(x) {
            for &b in ch2.row(x) {
                data.push(a * b);
            }
        }
    }
    CondDist::from_flat(ch1.n_in(), ch1.n_out() * ch2.n_out(), data)
}

/// Parses and validates a channel document.
pub fn parse_spec(text: &str) -> Result<TwrcSpec, ChannelError> {
    let file: SpecFile = serde_json::from_str(text).map_err(|e| ChannelError::Parse(e.to_string()))?;
    TwrcSpec::from_file(file)
}

pub mod bundled {
    //! Channels shipped with the crate.
    use super::{parse_spec, TwrcSpec};

    pub const PAPER_SEC5_JSON: &str = include_str!("../examples/paper_sec5.json");
    pub const NOISELESS_ADDER_JSON: &str = include_str!("../examples/noiseless_adder.json");

    /// Binary inputs, four-symbol relay output, BSC(0.3) downlinks.
    pub fn paper_sec5() -> TwrcSpec {
        parse_spec(PAPER_SEC5_JSON).expect("bundled channel is valid")
    }

    /// `Y3 = X1 + X2 mod 2`, `Y1 = Y2 = X3`.
    pub fn noiseless_adder() -> TwrcSpec {
        parse_spec(NOISELESS_ADDER_JSON).expect("bundled channel is valid")
    }
}

/// Map from subsets of the user alphabets onto a finite field.
#[derive(Clone, PartialEq)]
pub struct Relabeling {
    field: FiniteField,
    subset1: Vec<usize>,
    subset2: Vec<usize>,
    pi1: Vec<Elem>,
    pi2: Vec<Elem>,
    inv1: Vec<usize>,
    inv2: Vec<usize>,
}

impl fmt::Debug for Relabeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Relabeling")
            .field("field", &self.field.id())
            .field("subset1", &self.subset1)
            .field("pi1", &self.pi1)
            .field("subset2", &self.subset2)
            .field("pi2", &self.pi2)
            .finish()
    }
}

impl Relabeling {
    /// `pi1[i]` is the field element assigned to symbol `subset1[i]`.
    pub fn new(
        field: FiniteField,
        subset1: Vec<usize>,
        pi1: Vec<Elem>,
        subset2: Vec<usize>,
        pi2: Vec<Elem>,
    ) -> Result<Self, ChannelError> {
        let q = field.order();
        let inverse = |subset: &[usize], pi: &[Elem], which: &str| {
            if subset.len() != q || pi.len() != q {
                return Err(ChannelError::RelabelingMismatch(format!(
                    "{which}: {} symbols for field of order {q}",
                    subset.len()
                )));
            }
            if subset.iter().duplicates().next().is_some() {
                return Err(ChannelError::RelabelingMismatch(format!("{which}: repeated symbol")));
            }
            let mut inv = vec![usize::MAX; q];
            for (&s, &e) in subset.iter().zip(pi) {
                let e = e as usize;
                if e >= q || inv[e] != usize::MAX {
                    return Err(ChannelError::RelabelingMismatch(format!(
                        "{which}: map is not a bijection onto the field"
                    )));
                }
                inv[e] = s;
            }
            Ok(inv)
        };
        let inv1 = inverse(&subset1, &pi1, "x1")?;
        let inv2 = inverse(&subset2, &pi2, "x2")?;
        Ok(Self {
            field,
            subset1,
            subset2,
            pi1,
            pi2,
            inv1,
            inv2,
        })
    }

    /// Symbol `i` of each alphabet maps to field element `i`.
    pub fn identity(field: FiniteField) -> Self {
        let q = field.order();
        let ids: Vec<usize> = (0..q).collect();
        let els: Vec<Elem> = (0..q).map(|e| e as Elem).collect();
        Self::new(field, ids.clone(), els.clone(), ids, els).expect("identity is a bijection")
    }

    pub fn field(&self) -> &FiniteField {
        &self.field
    }

    pub fn subset1(&self) -> &[usize] {
        &self.subset1
    }

    pub fn subset2(&self) -> &[usize] {
        &self.subset2
    }

    pub fn pi1(&self) -> &[Elem] {
        &self.pi1
    }

    pub fn pi2(&self) -> &[Elem] {
        &self.pi2
    }

    /// Alphabet symbol of user 1 carrying field element `e`.
    pub fn symbol1(&self, e: Elem) -> usize {
        self.inv1[e as usize]
    }

    pub fn symbol2(&self, e: Elem) -> usize {
        self.inv2[e as usize]
    }

    /// Both maps composed with `x -> a*x + b_i`.
    pub fn affine(&self, a: Elem, b1: Elem, b2: Elem) -> Self {
        let f = &self.field;
        let map = |pi: &[Elem], b: Elem| -> Vec<Elem> { pi.iter().map(|&x| f.add(f.mul(a, x), b)).collect() };
        Self::new(
            self.field.clone(),
            self.subset1.clone(),
            map(&self.pi1, b1),
            self.subset2.clone(),
            map(&self.pi2, b2),
        )
        .expect("affine map with a != 0 is a bijection")
    }

    fn check_against(&self, spec: &TwrcSpec) -> Result<(), ChannelError> {
        let a = spec.alphabets();
        if self.subset1.iter().any(|&s| s >= a.x1.size()) || self.subset2.iter().any(|&s| s >= a.x2.size()) {
            return Err(ChannelError::RelabelingMismatch(
                "subset symbol outside the user alphabet".into(),
            ));
        }
        Ok(())
    }

    /// Serializable description using the channel's labels.
    pub fn describe(&self, spec: &TwrcSpec) -> RelabelingInfo {
        let a = spec.alphabets();
        let pairs = |subset: &[usize], pi: &[Elem], alpha: &Alphabet| {
            subset
                .iter()
                .zip(pi)
                .map(|(&s, &e)| (alpha.label(s).to_string(), e))
                .collect()
        };
        RelabelingInfo {
            field: self.field.id(),
            x1: pairs(&self.subset1, &self.pi1, &a.x1),
            x2: pairs(&self.subset2, &self.pi2, &a.x2),
        }
    }
}

/// Report view of a [`Relabeling`]: `(symbol label, field element)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelabelingInfo {
    pub field: FieldId,
    pub x1: Vec<(String, Elem)>,
    pub x2: Vec<(String, Elem)>,
}

/// `p(y3 | u)` for `U = pi1(X1) + pi2(X2)` with uniform inputs on the subsets.
pub fn induced_u_channel(spec: &TwrcSpec, r: &Relabeling) -> Result<CondDist, ChannelError> {
    r.check_against(spec)?;
    let f = r.field();
    let q = f.order();
    let ny = spec.alphabets().y3.size();
    let mut data = vec![0.0; q * ny];
    let w = 1.0 / q as f64;
    for u in f.elements() {
        let out = &mut data[u as usize * ny..(u as usize + 1) * ny];
        for (&x1, &e1) in r.subset1.iter().zip(&r.pi1) {
            let x2 = r.symbol2(f.sub(u, e1));
            for (o, &p) in out.iter_mut().zip(spec.uplink_row(x1, x2)) {
                *o += w * p;
            }
        }
    }
    Ok(CondDist::from_flat(q, ny, data))
}

/// One representative per affine class of relabelings.
///
/// Covers every field order `q <= min(|X1|, |X2|, max_q)` and every pair of
/// `q`-subsets. Relabelings that differ by `x -> a*x + b_i` applied to both
/// maps induce the same `U` up to a bijection, so each class is listed once,
/// normalized so the first symbol of each subset maps to 0 and the second
/// symbol of `subset1` maps to 1.
pub fn enumerate_restrictions(spec: &TwrcSpec, max_q: usize) -> Result<Vec<Relabeling>, ChannelError> {
    let n1 = spec.alphabets().x1.size();
    let n2 = spec.alphabets().x2.size();
    for size in [n1, n2] {
        if size > RESTRICTION_ALPHABET_CAP {
            return Err(ChannelError::EnumerationRefused {
                size,
                cap: RESTRICTION_ALPHABET_CAP,
            });
        }
    }
    let top = n1.min(n2).min(max_q).min(FIELD_ORDER_CAP);
    let mut out = Vec::new();
    for q in 2..=top {
        if prime_power(q).is_none() {
            continue;
        }
        let field = FiniteField::with_order(q)?;
        // pi1: first two fixed to 0, 1; pi2: first fixed to 0.
        let pi1s: Vec<Vec<Elem>> = (2..q as Elem)
            .permutations(q - 2)
            .map(|rest| [0, 1].into_iter().chain(rest).collect())
            .collect();
        let pi2s: Vec<Vec<Elem>> = (1..q as Elem)
            .permutations(q - 1)
            .map(|rest| std::iter::once(0).chain(rest).collect())
            .collect();
        for subset1 in (0..n1).combinations(q) {
            for subset2 in (0..n2).combinations(q) {
                for pi1 in &pi1s {
                    for pi2 in &pi2s {
                        out.push(Relabeling::new(
                            field.clone(),
                            subset1.clone(),
                            pi1.clone(),
                            subset2.clone(),
                            pi2.clone(),
                        )?);
                    }
                }
            }
        }
    }
    Ok(out)
}
