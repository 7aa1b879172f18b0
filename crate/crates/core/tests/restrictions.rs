use std::collections::BTreeSet;

use proptest::prelude::*;
use twrc::channel::{
    bundled, enumerate_restrictions, induced_u_channel, product_downlink, Alphabets, ChannelError, CondDist, ProbVec,
    Relabeling, TwrcSpec,
};
use twrc::gf::{Elem, FiniteField};
use twrc::infotheory::mutual_info;

fn spec_with_inputs(n1: usize, n2: usize) -> TwrcSpec {
    let rows = vec![vec![0.5, 0.5]; n1 * n2];
    TwrcSpec::new(
        "sizes",
        Alphabets::numeric([n1, n2, 2, 2, 2, 2]),
        CondDist::new(rows).unwrap(),
        product_downlink(&CondDist::identity(2), &CondDist::identity(2)),
    )
    .unwrap()
}

fn perms(n: usize) -> Vec<Vec<Elem>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in perms(n - 1) {
        for pos in 0..n {
            let mut v = p.clone();
            v.insert(pos, (n - 1) as Elem);
            out.push(v);
        }
    }
    out
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0..1usize << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
        .collect()
}

type Key = (Vec<usize>, Vec<Elem>, Vec<usize>, Vec<Elem>);

/// Smallest image of a relabeling under `x -> a x + b_i`.
fn orbit_key(f: &FiniteField, s1: &[usize], pi1: &[Elem], s2: &[usize], pi2: &[Elem]) -> Key {
    let q = f.order() as Elem;
    let mut best: Option<Key> = None;
    for a in 1..q {
        for b1 in 0..q {
            for b2 in 0..q {
                let m1: Vec<Elem> = pi1.iter().map(|&x| f.add(f.mul(a, x), b1)).collect();
                let m2: Vec<Elem> = pi2.iter().map(|&x| f.add(f.mul(a, x), b2)).collect();
                let k = (s1.to_vec(), m1, s2.to_vec(), m2);
                if best.as_ref().map_or(true, |b| k < *b) {
                    best = Some(k);
                }
            }
        }
    }
    best.unwrap()
}

fn brute_orbits(n1: usize, n2: usize, q: usize) -> BTreeSet<Key> {
    let f = FiniteField::with_order(q).unwrap();
    let mut keys = BTreeSet::new();
    for s1 in subsets(n1, q) {
        for s2 in subsets(n2, q) {
            for p1 in perms(q) {
                for p2 in perms(q) {
                    keys.insert(orbit_key(&f, &s1, &p1, &s2, &p2));
                }
            }
        }
    }
    keys
}

#[test]
fn one_representative_per_orbit() {
    for (n1, n2) in [(2, 2), (2, 3), (3, 3), (4, 4), (3, 4)] {
        let spec = spec_with_inputs(n1, n2);
        let listed = enumerate_restrictions(&spec, 4).unwrap();
        for q in [2, 3, 4] {
            let mine: Vec<Key> = listed
                .iter()
                .filter(|r| r.field().order() == q)
                .map(|r| orbit_key(r.field(), r.subset1(), r.pi1(), r.subset2(), r.pi2()))
                .collect();
            let distinct: BTreeSet<Key> = mine.iter().cloned().collect();
            assert_eq!(distinct.len(), mine.len(), "duplicate orbit for {n1}x{n2}, q={q}");
            if q <= n1.min(n2) {
                assert_eq!(distinct, brute_orbits(n1, n2, q), "{n1}x{n2}, q={q}");
            } else {
                assert!(mine.is_empty());
            }
        }
    }
}

#[test]
fn class_counts() {
    let count = |n1, n2, max_q| enumerate_restrictions(&spec_with_inputs(n1, n2), max_q).unwrap().len();
    assert_eq!(count(2, 2, 16), 1);
    assert_eq!(count(4, 4, 16), 36 + 32 + 12);
    assert_eq!(count(5, 5, 16), 100 + 200 + 300 + 24 * 6);
    assert_eq!(count(1, 3, 16), 0);
}

#[test]
fn oversized_alphabet_is_refused() {
    let err = enumerate_restrictions(&spec_with_inputs(7, 2), 16).unwrap_err();
    assert!(matches!(err, ChannelError::EnumerationRefused { size: 7, .. }));
}

#[test]
fn example_induced_channel() {
    let s = bundled::paper_sec5();
    let r = Relabeling::identity(FiniteField::with_order(2).unwrap());
    let ch = induced_u_channel(&s, &r).unwrap();
    let expect = [[0.15, 0.15, 0.35, 0.35], [0.35, 0.35, 0.15, 0.15]];
    for (row, e) in ch.rows().zip(expect) {
        for (a, b) in row.iter().zip(e) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}

fn four_ary_spec(rows: Vec<Vec<f64>>) -> TwrcSpec {
    TwrcSpec::new(
        "four",
        Alphabets::numeric([4, 4, 2, 2, 2, 3]),
        CondDist::new(rows).unwrap(),
        product_downlink(&CondDist::identity(2), &CondDist::identity(2)),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn affine_maps_preserve_information(
        raw in prop::collection::vec(prop::collection::vec(0.01f64..1.0, 3), 16),
        pick in 0usize..80,
        a in 1u8..4,
        b1 in 0u8..4,
        b2 in 0u8..4,
    ) {
        let rows: Vec<Vec<f64>> = raw
            .into_iter()
            .map(|r| { let s: f64 = r.iter().sum(); r.into_iter().map(|v| v / s).collect() })
            .collect();
        let spec = four_ary_spec(rows);
        let all = enumerate_restrictions(&spec, 4).unwrap();
        let r = &all[pick % all.len()];
        let q = r.field().order() as u8;
        let moved = r.affine(1 + (a - 1) % (q - 1), b1 % q, b2 % q);
        let u = ProbVec::uniform(q as usize);
        let i0 = mutual_info(&u, &induced_u_channel(&spec, r).unwrap()).unwrap();
        let i1 = mutual_info(&u, &induced_u_channel(&spec, &moved).unwrap()).unwrap();
        prop_assert!((i0 - i1).abs() < 1e-12);
    }
}
