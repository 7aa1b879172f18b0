use std::time::Instant;

use proptest::prelude::*;
use twrc::gf::{make_field, Elem, FiniteField, GfError};

/// Reference arithmetic on base-p digit vectors (constant term first),
/// reduced by a monic modulus given by its low coefficients.
struct PolyRef {
    p: usize,
    z: usize,
    low: Vec<usize>,
}

impl PolyRef {
    fn digits(&self, mut e: usize) -> Vec<usize> {
        (0..self.z)
            .map(|_| {
                let d = e % self.p;
                e /= self.p;
                d
            })
            .collect()
    }

    fn value(&self, d: &[usize]) -> usize {
        d.iter().rev().fold(0, |acc, &x| acc * self.p + x)
    }

    fn add(&self, a: usize, b: usize) -> usize {
        let (da, db) = (self.digits(a), self.digits(b));
        let s: Vec<usize> = da.iter().zip(&db).map(|(x, y)| (x + y) % self.p).collect();
        self.value(&s)
    }

    fn mul(&self, a: usize, b: usize) -> usize {
        let (da, db) = (self.digits(a), self.digits(b));
        let mut prod = vec![0usize; 2 * self.z];
        for (i, x) in da.iter().enumerate() {
            for (j, y) in db.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % self.p;
            }
        }
        // x^z = -(low)
        for deg in (self.z..2 * self.z).rev() {
            let c = prod[deg];
            if c == 0 {
                continue;
            }
            prod[deg] = 0;
            for (k, &m) in self.low.iter().enumerate() {
                let t = deg - self.z + k;
                prod[t] = (prod[t] + self.p * self.p - c * m % self.p) % self.p;
            }
        }
        self.value(&prod[..self.z])
    }
}

fn reference(q: usize) -> PolyRef {
    match q {
        2 | 3 | 5 | 7 | 11 | 13 => PolyRef {
            p: q,
            z: 1,
            low: vec![0],
        },
        4 => PolyRef {
            p: 2,
            z: 2,
            low: vec![1, 1],
        },
        8 => PolyRef {
            p: 2,
            z: 3,
            low: vec![1, 1, 0],
        },
        9 => PolyRef {
            p: 3,
            z: 2,
            low: vec![1, 0],
        },
        16 => PolyRef {
            p: 2,
            z: 4,
            low: vec![1, 1, 0, 0],
        },
        _ => unreachable!(),
    }
}

fn check_axioms_exhaustively(f: &FiniteField) {
    let q = f.order();
    let els: Vec<Elem> = (0..q as Elem).collect();
    for &a in &els {
        assert_eq!(f.add(a, 0), a);
        assert_eq!(f.mul(a, 1), a);
        assert_eq!(f.add(a, f.neg(a)), 0);
        if a != 0 {
            assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
        }
        for &b in &els {
            assert_eq!(f.add(a, b), f.add(b, a));
            assert_eq!(f.mul(a, b), f.mul(b, a));
            for &c in &els {
                assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
            }
        }
    }
}

#[test]
fn axioms_hold_for_small_fields() {
    let start = Instant::now();
    for q in [2, 3, 4, 5, 8, 9] {
        let f = FiniteField::with_order(q).unwrap();
        check_axioms_exhaustively(&f);
        assert_eq!(f.check_axioms(), Ok(()));
    }
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn tables_match_polynomial_reference() {
    for q in [2, 3, 4, 5, 7, 8, 9, 11, 13, 16] {
        let f = FiniteField::with_order(q).unwrap();
        let r = reference(q);
        for a in 0..q {
            for b in 0..q {
                assert_eq!(f.add(a as Elem, b as Elem) as usize, r.add(a, b), "GF({q}) {a}+{b}");
                assert_eq!(f.mul(a as Elem, b as Elem) as usize, r.mul(a, b), "GF({q}) {a}*{b}");
            }
        }
    }
}

#[test]
fn construction_errors() {
    assert!(matches!(make_field(4, 1), Err(GfError::NotPrime(4))));
    assert!(make_field(2, 5).is_err());
    assert!(make_field(3, 0).is_err());
    assert!(FiniteField::with_order(6).is_err());
    assert!(FiniteField::with_order(2).unwrap().inv(0).is_err());
}

proptest! {
    #[test]
    fn vec_ops_are_consistent(q in prop::sample::select(vec![2usize, 3, 4, 5, 7, 8, 9, 16]),
                              raw in prop::collection::vec((0usize..16, 0usize..16), 1..12)) {
        let f = FiniteField::with_order(q).unwrap();
        let a = f.vec(raw.iter().map(|p| (p.0 % q) as Elem).collect()).unwrap();
        let b = f.vec(raw.iter().map(|p| (p.1 % q) as Elem).collect()).unwrap();
        let s = f.vec_add(&a, &b).unwrap();
        let back = f.vec_add(&s, &f.vec_neg(&b).unwrap()).unwrap();
        prop_assert_eq!(back, a);
    }
}
