//! Table-driven arithmetic in small finite fields GF(p^z).
//!
//! Elements are labelled `0..q`. For prime fields the label is the residue.
//! For extension fields the label encodes the coefficient vector of a
//! polynomial in base `p`, with the constant term as the least significant
//! digit, and products are reduced modulo the smallest monic irreducible
//! polynomial of degree `z` (smallest when read as a base-`p` integer).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Field element label, always `< q`.
pub type Elem = u8;

/// Largest field order the crate will build tables for.
pub const FIELD_ORDER_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GfError {
    #[error("{0} is not prime")]
    NotPrime(usize),
    #[error("degree must be at least 1")]
    ZeroDegree,
    #[error("field order {order} exceeds cap {cap}")]
    OrderTooLarge { order: usize, cap: usize },
    #[error("{0} is not a prime power")]
    NotPrimePower(usize),
    #[error("no irreducible polynomial of degree {z} over GF({p})")]
    NoIrreducible { p: usize, z: usize },
    #[error("zero has no multiplicative inverse")]
    InverseOfZero,
    #[error("element {elem} out of range for GF({order})")]
    ElementOutOfRange { elem: usize, order: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("field mismatch: {left} vs {right}")]
    FieldMismatch { left: FieldId, right: FieldId },
}

/// Identifies a field by characteristic and extension degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldId {
    pub p: usize,
    pub z: usize,
}

impl FieldId {
    pub fn order(&self) -> usize {
        self.p.pow(self.z as u32)
    }
}

impl fmt::Display for FieldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.z == 1 {
            write!(f, "GF({})", self.p)
        } else {
            write!(f, "GF({}^{})", self.p, self.z)
        }
    }
}

pub fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

/// Splits `q` into `(p, z)` with `q = p^z`, if `q` is a prime power.
pub fn prime_power(q: usize) -> Option<(usize, usize)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q % d == 0)?;
    let mut rest = q;
    let mut z = 0;
    while rest % p == 0 {
        rest /= p;
        z += 1;
    }
    (rest == 1).then_some((p, z))
}

/// Finite field with precomputed operation tables.
#[derive(Clone, PartialEq, Eq)]
pub struct FiniteField {
    id: FieldId,
    order: usize,
    /// Modulus coefficients, constant term first; `[0, 1]` (i.e. `x`) for prime fields.
    modulus: Vec<u8>,
    add: Vec<Elem>,
    mul: Vec<Elem>,
    neg: Vec<Elem>,
    inv: Vec<Elem>,
}

impl fmt::Debug for FiniteField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteField")
            .field("id", &self.id)
            .field("modulus", &self.modulus)
            .finish()
    }
}

/// Builds GF(p^z).
pub fn make_field(p: usize, z: usize) -> Result<FiniteField, GfError> {
    FiniteField::new(p, z)
}

impl FiniteField {
    pub fn new(p: usize, z: usize) -> Result<Self, GfError> {
        if !is_prime(p) {
            return Err(GfError::NotPrime(p));
        }
        if z == 0 {
            return Err(GfError::ZeroDegree);
        }
        let order = (p as u128).checked_pow(z as u32).unwrap_or(u128::MAX);
        if order > FIELD_ORDER_CAP as u128 {
            return Err(GfError::OrderTooLarge {
                order: order.min(usize::MAX as u128) as usize,
                cap: FIELD_ORDER_CAP,
            });
        }
        let order = order as usize;
        let modulus = if z == 1 {
            vec![0, 1]
        } else {
            smallest_irreducible(p, z).ok_or(GfError::NoIrreducible { p, z })?
        };

        let digits = |e: usize| -> Vec<u8> {
            let mut v = vec![0u8; z];
            let mut e = e;
            for d in v.iter_mut() {
                *d = (e % p) as u8;
                e /= p;
            }
            v
        };
        let label = |coeffs: &[u8]| -> usize { coeffs.iter().rev().fold(0usize, |acc, &c| acc * p + c as usize) };

        let mut add = vec![0; order * order];
        let mut mul = vec![0; order * order];
        for a in 0..order {
            let da = digits(a);
            for b in 0..order {
                let db = digits(b);
                let sum: Vec<u8> = da
                    .iter()
                    .zip(&db)
                    .map(|(&x, &y)| ((x as usize + y as usize) % p) as u8)
                    .collect();
                add[a * order + b] = label(&sum) as Elem;
                let prod = poly_mulmod(&da, &db, &modulus, p);
                mul[a * order + b] = label(&prod) as Elem;
            }
        }

        let mut neg = vec![0; order];
        let mut inv = vec![0; order];
        for a in 0..order {
            neg[a] = (0..order)
                .find(|&b| add[a * order + b] == 0)
                .expect("additive inverse exists") as Elem;
            if a != 0 {
                inv[a] = (1..order)
                    .find(|&b| mul[a * order + b] == 1)
                    .ok_or(GfError::NoIrreducible { p, z })? as Elem;
            }
        }

        Ok(Self {
            id: FieldId { p, z },
            order,
            modulus,
            add,
            mul,
            neg,
            inv,
        })
    }

    /// Builds the field of order `q`, if `q` is a supported prime power.
    pub fn with_order(q: usize) -> Result<Self, GfError> {
        let (p, z) = prime_power(q).ok_or(GfError::NotPrimePower(q))?;
        Self::new(p, z)
    }

    pub fn id(&self) -> FieldId {
        self.id
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn characteristic(&self) -> usize {
        self.id.p
    }

    pub fn degree(&self) -> usize {
        self.id.z
    }

    /// Coefficients of the reduction polynomial, constant term first.
    pub fn modulus(&self) -> &[u8] {
        &self.modulus
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        (0..self.order).map(|e| e as Elem)
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        self.add[a as usize * self.order + b as usize]
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        self.mul[a as usize * self.order + b as usize]
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        self.neg[a as usize]
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    pub fn inv(&self, a: Elem) -> Result<Elem, GfError> {
        if a == 0 {
            return Err(GfError::InverseOfZero);
        }
        Ok(self.inv[a as usize])
    }

    pub fn check_elem(&self, a: usize) -> Result<Elem, GfError> {
        if a < self.order {
            Ok(a as Elem)
        } else {
            Err(GfError::ElementOutOfRange {
                elem: a,
                order: self.order,
            })
        }
    }

    pub fn vec(&self, symbols: Vec<Elem>) -> Result<FieldVec, GfError> {
        for &s in &symbols {
            self.check_elem(s as usize)?;
        }
        Ok(FieldVec {
            field: self.id,
            symbols,
        })
    }

    pub fn zeros(&self, n: usize) -> FieldVec {
        FieldVec {
            field: self.id,
            symbols: vec![0; n],
        }
    }

    fn check_same(&self, v: &FieldVec) -> Result<(), GfError> {
        if v.field != self.id {
            return Err(GfError::FieldMismatch {
                left: self.id,
                right: v.field,
            });
        }
        Ok(())
    }

    pub fn vec_add(&self, a: &FieldVec, b: &FieldVec) -> Result<FieldVec, GfError> {
        self.check_same(a)?;
        self.check_same(b)?;
        if a.len() != b.len() {
            return Err(GfError::LengthMismatch {
                left: a.len(),
                right: b.len(),
            });
        }
        let symbols = a
            .symbols
            .iter()
            .zip(&b.symbols)
            .map(|(&x, &y)| self.add(x, y))
            .collect();
        Ok(FieldVec {
            field: self.id,
            symbols,
        })
    }

    pub fn vec_neg(&self, a: &FieldVec) -> Result<FieldVec, GfError> {
        self.check_same(a)?;
        Ok(FieldVec {
            field: self.id,
            symbols: a.symbols.iter().map(|&x| self.neg(x)).collect(),
        })
    }

    /// Row vector times matrix: `s ⊙ G` with `G` given as `k` rows of length `n`.
    pub fn mat_vec(&self, s: &FieldVec, g: &[Vec<Elem>]) -> Result<FieldVec, GfError> {
        self.check_same(s)?;
        if s.len() != g.len() {
            return Err(GfError::LengthMismatch {
                left: s.len(),
                right: g.len(),
            });
        }
        let n = g.first().map_or(0, Vec::len);
        let mut out = vec![0 as Elem; n];
        for (&coef, row) in s.symbols.iter().zip(g) {
            if row.len() != n {
                return Err(GfError::LengthMismatch {
                    left: row.len(),
                    right: n,
                });
            }
            if coef == 0 {
                continue;
            }
            for (o, &gij) in out.iter_mut().zip(row) {
                *o = self.add(*o, self.mul(coef, gij));
            }
        }
        Ok(FieldVec {
            field: self.id,
            symbols: out,
        })
    }

    /// Exhaustively checks the field axioms, returning the first violation.
    pub fn check_axioms(&self) -> Result<(), String> {
        let q = self.order;
        let el = || (0..q).map(|e| e as Elem);
        for a in el() {
            if self.add(a, 0) != a {
                return Err(format!("{a} + 0 != {a}"));
            }
            if self.mul(a, 1) != a {
                return Err(format!("{a} * 1 != {a}"));
            }
            if self.add(a, self.neg(a)) != 0 {
                return Err(format!("{a} has no additive inverse"));
            }
            if a != 0 && self.mul(a, self.inv[a as usize]) != 1 {
                return Err(format!("{a} has no multiplicative inverse"));
            }
            for b in el() {
                if self.add(a, b) != self.add(b, a) {
                    return Err(format!("addition not commutative at ({a},{b})"));
                }
                if self.mul(a, b) != self.mul(b, a) {
                    return Err(format!("multiplication not commutative at ({a},{b})"));
                }
                for c in el() {
                    if self.add(self.add(a, b), c) != self.add(a, self.add(b, c)) {
                        return Err(format!("addition not associative at ({a},{b},{c})"));
                    }
                    if self.mul(self.mul(a, b), c) != self.mul(a, self.mul(b, c)) {
                        return Err(format!("multiplication not associative at ({a},{b},{c})"));
                    }
                    if self.mul(a, self.add(b, c)) != self.add(self.mul(a, b), self.mul(a, c)) {
                        return Err(format!("distributivity fails at ({a},{b},{c})"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Row vector over a finite field.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldVec {
    field: FieldId,
    symbols: Vec<Elem>,
}

impl FieldVec {
    pub fn field(&self) -> FieldId {
        self.field
    }

    pub fn symbols(&self) -> &[Elem] {
        &self.symbols
    }

    pub fn into_symbols(self) -> Vec<Elem> {
        self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

// Polynomials over GF(p) as coefficient vectors, constant term first.

fn poly_trim(mut a: Vec<u8>) -> Vec<u8> {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn poly_mul(a: &[u8], b: &[u8], p: usize) -> Vec<u8> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0usize; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x as usize * y as usize) % p;
        }
    }
    poly_trim(out.into_iter().map(|c| c as u8).collect())
}

/// Remainder of `a` divided by the monic polynomial `m`.
fn poly_rem(a: &[u8], m: &[u8], p: usize) -> Vec<u8> {
    let mut r = poly_trim(a.to_vec());
    let dm = m.len() - 1;
    while r.len() > dm {
        let lead = *r.last().unwrap() as usize;
        let shift = r.len() - 1 - dm;
        for (i, &c) in m.iter().enumerate() {
            let idx = i + shift;
            r[idx] = ((r[idx] as usize + p - (lead * c as usize) % p) % p) as u8;
        }
        r = poly_trim(r);
    }
    r
}

fn poly_mulmod(a: &[u8], b: &[u8], m: &[u8], p: usize) -> Vec<u8> {
    let mut r = poly_rem(&poly_mul(a, b, p), m, p);
    r.resize(m.len() - 1, 0);
    r
}

fn monic_from_index(idx: usize, p: usize, deg: usize) -> Vec<u8> {
    let mut v = Vec::with_capacity(deg + 1);
    let mut i = idx;
    for _ in 0..deg {
        v.push((i % p) as u8);
        i /= p;
    }
    v.push(1);
    v
}

fn is_irreducible(m: &[u8], p: usize) -> bool {
    let deg = m.len() - 1;
    for d in 1..=deg / 2 {
        for idx in 0..p.pow(d as u32) {
            let f = monic_from_index(idx, p, d);
            if poly_rem(m, &f, p).is_empty() {
                return false;
            }
        }
    }
    true
}

fn smallest_irreducible(p: usize, z: usize) -> Option<Vec<u8>> {
    (0..p.pow(z as u32))
        .map(|idx| monic_from_index(idx, p, z))
        .find(|m| is_irreducible(m, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gf2_basics() {
        let f = make_field(2, 1).unwrap();
        assert_eq!(f.add(1, 1), 0);
        assert_eq!(f.mul(1, 1), 1);
        for a in f.elements() {
            assert_eq!(f.add(a, a), 0);
        }
    }

    #[test]
    fn gf5_inverse() {
        let f = make_field(5, 1).unwrap();
        assert_eq!(f.mul(2, 3), 1);
        assert_eq!(f.inv(2).unwrap(), 3);
        assert_eq!(f.inv(0), Err(GfError::InverseOfZero));
    }

    #[test]
    fn gf3_negation() {
        let f = make_field(3, 1).unwrap();
        assert_eq!(f.neg(1), 2);
    }

    #[test]
    fn gf4_x_squared() {
        // Labels: 2 = x, 3 = x + 1. Modulus x^2 + x + 1.
        let f = make_field(2, 2).unwrap();
        assert_eq!(f.modulus(), &[1, 1, 1]);
        assert_eq!(f.mul(2, 2), 3);
    }

    #[test]
    fn moduli_are_smallest_irreducible() {
        assert_eq!(make_field(2, 3).unwrap().modulus(), &[1, 1, 0, 1]);
        assert_eq!(make_field(3, 2).unwrap().modulus(), &[1, 0, 1]);
        assert_eq!(make_field(2, 4).unwrap().modulus(), &[1, 1, 0, 0, 1]);
    }

    #[test]
    fn gf4_distributivity_exhaustive() {
        let f = make_field(2, 2).unwrap();
        let mut triples = 0;
        for a in f.elements() {
            for b in f.elements() {
                for c in f.elements() {
                    assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    triples += 1;
                }
            }
        }
        assert_eq!(triples, 64);
    }

    #[test]
    fn all_supported_fields_pass_axioms() {
        for q in [2, 3, 4, 5, 7, 8, 9, 11, 13, 16] {
            let f = FiniteField::with_order(q).unwrap();
            assert_eq!(f.order(), q);
            f.check_axioms().unwrap_or_else(|e| panic!("GF({q}): {e}"));
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(make_field(4, 1).unwrap_err(), GfError::NotPrime(4));
        assert_eq!(make_field(2, 0).unwrap_err(), GfError::ZeroDegree);
        assert!(matches!(
            make_field(2, 5),
            Err(GfError::OrderTooLarge { order: 32, .. })
        ));
        assert_eq!(FiniteField::with_order(6).unwrap_err(), GfError::NotPrimePower(6));
    }

    #[test]
    fn subtraction_undoes_addition() {
        for q in [2, 3, 4, 8, 9] {
            let f = FiniteField::with_order(q).unwrap();
            for a in f.elements() {
                for b in f.elements() {
                    assert_eq!(f.add(f.sub(a, b), b), a);
                }
            }
        }
    }

    #[test]
    fn vector_ops() {
        let f = make_field(2, 1).unwrap();
        let a = f.vec(vec![1, 0, 1]).unwrap();
        let b = f.vec(vec![1, 1, 1]).unwrap();
        assert_eq!(f.vec_add(&a, &b).unwrap().symbols(), &[0, 1, 0]);
        let z = f.vec_add(&a, &f.vec_neg(&a).unwrap()).unwrap();
        assert!(z.symbols().iter().all(|&x| x == 0));

        let g3 = make_field(3, 1).unwrap();
        let s = g3.vec(vec![1, 2]).unwrap();
        let g = vec![vec![1, 0, 1], vec![1, 1, 0]];
        assert_eq!(g3.mat_vec(&s, &g).unwrap().symbols(), &[0, 2, 1]);
    }

    #[test]
    fn vector_mismatches() {
        let f2 = make_field(2, 1).unwrap();
        let f3 = make_field(3, 1).unwrap();
        let a = f2.vec(vec![1, 0]).unwrap();
        let b = f2.vec(vec![1, 0, 1]).unwrap();
        let c = f3.vec(vec![1, 2]).unwrap();
        assert!(matches!(f2.vec_add(&a, &b), Err(GfError::LengthMismatch { .. })));
        assert!(matches!(f2.vec_add(&a, &c), Err(GfError::FieldMismatch { .. })));
        assert!(matches!(f2.vec(vec![2]), Err(GfError::ElementOutOfRange { .. })));
    }

    #[test]
    fn prime_power_split() {
        assert_eq!(prime_power(8), Some((2, 3)));
        assert_eq!(prime_power(9), Some((3, 2)));
        assert_eq!(prime_power(7), Some((7, 1)));
        assert_eq!(prime_power(12), None);
        assert_eq!(prime_power(1), None);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn mat_vec_is_linear(
            q in prop::sample::select(vec![2usize, 3, 4, 5, 8, 9]),
            k in 1usize..5,
            n in 1usize..9,
            seed in any::<u64>(),
        ) {
            let f = FiniteField::with_order(q).unwrap();
            let mut state = seed;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 33) % q as u64) as Elem
            };
            let g: Vec<Vec<Elem>> = (0..k).map(|_| (0..n).map(|_| next()).collect()).collect();
            let s1 = f.vec((0..k).map(|_| next()).collect()).unwrap();
            let s2 = f.vec((0..k).map(|_| next()).collect()).unwrap();
            let lhs = f.mat_vec(&f.vec_add(&s1, &s2).unwrap(), &g).unwrap();
            let rhs = f.vec_add(&f.mat_vec(&s1, &g).unwrap(), &f.mat_vec(&s2, &g).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
