//! Independent brute-force oracles for the information quantities.

mod support;

use proptest::prelude::*;
use twrc::channel::{bundled, product_downlink, Alphabets, CondDist, TwrcSpec};
use twrc::infotheory::{dmc_capacity, maximin_downlink};
use twrc::regions::{eval_cdf, eval_fdf_l, eval_fdf_s, keys, relabeling_scores, AchievingParams, EvalConfig};

use support::oracle::*;

#[test]
fn example_diagnostics_match_oracle() {
    let o = example_oracle();
    let s = bundled::paper_sec5();
    let cfg = EvalConfig::default();
    let l = eval_fdf_l(&s, &cfg).unwrap();
    let fs = eval_fdf_s(&s, &cfg).unwrap();
    let d = |r: &twrc::regions::StrategyResult, k: &str| r.diagnostic(k).unwrap();

    assert!((d(&l, keys::I_U_Y3) - o.i_u_y3).abs() < 1e-9);
    assert!((d(&l, keys::H_U_GIVEN_Y3) - o.h_u_given_y3).abs() < 1e-9);
    assert!((d(&l, keys::DOWNLINK_MAXIMIN) - o.maximin).abs() < 1e-8);
    assert!((d(&fs, keys::C_MAC) - o.c_mac).abs() < 1e-9);

    // Pinned to six decimals.
    assert!((o.i_u_y3 - 0.118709).abs() < 1e-5);
    assert!((o.maximin - 0.118709).abs() < 1e-5);
    assert!((o.c_mac - 0.153561).abs() < 1e-5);
    assert!((o.h_u_given_y3 - 0.881291).abs() < 1e-5);
}

#[test]
fn mac_meets_analytic_bound() {
    // Every uplink row is a permutation of (.1, .2, .3, .4) and uniform inputs
    // give a uniform output, so max I(X1,X2;Y3) = 2 - H(.1, .2, .3, .4).
    let bound = 2.0 - h(&[0.1, 0.2, 0.3, 0.4]);
    let fs = eval_fdf_s(&bundled::paper_sec5(), &EvalConfig::default()).unwrap();
    let c = fs.diagnostic(keys::C_MAC).unwrap();
    assert!(c <= bound + 1e-12);
    assert!(c >= bound - 1e-9);
}

#[test]
fn fdf_s_rate_formula() {
    let o = example_oracle();
    let expect = o.c_mac * 1.0 / (o.c_mac + 2.0 * o.h_u_given_y3);
    let fs = eval_fdf_s(&bundled::paper_sec5(), &EvalConfig::default()).unwrap();
    assert!((fs.r1 - expect.min(o.maximin)).abs() < 1e-8);
    assert!((fs.sum - 0.1602).abs() < 5e-4);
}

#[test]
fn cdf_sum_bounded_by_uplink_at_its_own_inputs() {
    let s = bundled::paper_sec5();
    let r = eval_cdf(&s, &EvalConfig::default()).unwrap();
    let AchievingParams::CompleteDecode { x1, x2, .. } = &r.params else {
        panic!("unexpected params");
    };
    let c = mac_sum_binary(&raw_uplink(), x1[0], x2[0]);
    assert!(r.sum <= c + 1e-9, "{} > {c}", r.sum);
    assert!((r.sum - 0.1536).abs() < 5e-4);
}

#[test]
fn bsc_capacities() {
    for i in 0..20 {
        let rho = 0.01 + 0.47 * i as f64 / 19.0;
        let c = dmc_capacity(&CondDist::bsc(rho).unwrap(), 1e-9).unwrap();
        assert!((c.bits - (1.0 - h2(rho))).abs() < 1e-6, "rho {rho}");
    }
}

fn bsc_pair_spec(rho1: f64, rho2: f64) -> TwrcSpec {
    let up = CondDist::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let down = product_downlink(&CondDist::bsc(rho1).unwrap(), &CondDist::bsc(rho2).unwrap());
    TwrcSpec::new("bsc pair", Alphabets::numeric([2, 2, 2, 2, 2, 2]), up, down).unwrap()
}

#[test]
fn maximin_on_asymmetric_pairs() {
    for (r1, r2) in [(0.05, 0.2), (0.3, 0.1), (0.0, 0.45), (0.11, 0.11)] {
        let m = maximin_downlink(&bsc_pair_spec(r1, r2), 1e-9).unwrap();
        let grid = maximin_grid(r1, r2, 1e-4);
        let weaker = (1.0 - h2(r1)).min(1.0 - h2(r2));
        assert!((m.value - grid).abs() < 1e-6, "{r1} {r2}: {} vs {grid}", m.value);
        assert!((m.value - weaker).abs() < 1e-6);
    }
}

/// Ternary-input channel with a random uplink, used for the relabeling oracle.
fn ternary_spec(rows: Vec<Vec<f64>>) -> TwrcSpec {
    let down = product_downlink(&CondDist::identity(2), &CondDist::identity(2));
    TwrcSpec::new(
        "ternary",
        Alphabets::numeric([3, 3, 2, 2, 2, 3]),
        CondDist::new(rows).unwrap(),
        down,
    )
    .unwrap()
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
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

/// Max of I(U;Y3) over every subset and bijection for prime q: U = (a + b) mod q.
fn brute_best_i(w: &[Vec<f64>], n1: usize, n2: usize, q: usize) -> f64 {
    let ny = w[0].len();
    let mut best: f64 = 0.0;
    let idx: Vec<usize> = (0..q).collect();
    for s1 in subsets(n1, q) {
        for s2 in subsets(n2, q) {
            for pi1 in permutations(&idx) {
                for pi2 in permutations(&idx) {
                    let mut j = vec![vec![0.0; ny]; q];
                    for (i1, &x1) in s1.iter().enumerate() {
                        for (i2, &x2) in s2.iter().enumerate() {
                            let u = (pi1[i1] + pi2[i2]) % q;
                            for y in 0..ny {
                                j[u][y] += w[x1 * n2 + x2][y] / (q * q) as f64;
                            }
                        }
                    }
                    best = best.max(mi_joint(&j));
                }
            }
        }
    }
    best
}

fn stochastic_rows(n: usize, width: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.01f64..1.0, width), n).prop_map(|rows| {
        rows.into_iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.into_iter().map(|v| v / s).collect()
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn relabeling_search_matches_brute_force(rows in stochastic_rows(9, 3)) {
        let s = ternary_spec(rows.clone());
        let scores = relabeling_scores(&s, 3).unwrap();
        for q in [2usize, 3] {
            let lib = scores
                .iter()
                .filter(|r| r.relabeling.field().order() == q)
                .map(|r| r.i_u_y3)
                .fold(0.0, f64::max);
            let oracle = brute_best_i(&rows, 3, 3, q);
            prop_assert!((lib - oracle).abs() < 1e-10, "q={} lib {} oracle {}", q, lib, oracle);
        }
    }

    #[test]
    fn fdf_l_is_min_of_uplink_and_downlink(rows in stochastic_rows(4, 3), r1 in 0.0f64..0.5, r2 in 0.0f64..0.5) {
        let up = CondDist::new(rows.clone()).unwrap();
        let down = product_downlink(&CondDist::bsc(r1).unwrap(), &CondDist::bsc(r2).unwrap());
        let s = TwrcSpec::new("p", Alphabets::numeric([2, 2, 2, 2, 2, 3]), up, down).unwrap();
        let l = eval_fdf_l(&s, &EvalConfig::default()).unwrap();
        let up_best = [(false, false), (true, false)]
            .iter()
            .map(|&(a, b)| mi_joint(&u_joint_binary(&rows, a, b)))
            .fold(0.0, f64::max);
        let expect = up_best.min(maximin_grid(r1, r2, 1e-4));
        prop_assert!((l.r1 - expect).abs() < 1e-5);
        prop_assert!((l.sum - l.r1 - l.r2).abs() < 1e-12);
    }
}
