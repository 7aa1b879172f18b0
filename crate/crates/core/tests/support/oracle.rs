//! Brute-force oracles recomputed from raw channel numbers with plain loops,
//! without the library's field, channel or optimizer code.

#![allow(dead_code)]

pub fn h(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

pub fn h2(p: f64) -> f64 {
    h(&[p, 1.0 - p])
}

/// I(A;B) from a joint table `joint[a][b]`.
pub fn mi_joint(joint: &[Vec<f64>]) -> f64 {
    let pa: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let nb = joint[0].len();
    let pb: Vec<f64> = (0..nb).map(|b| joint.iter().map(|r| r[b]).sum()).collect();
    let flat: Vec<f64> = joint.iter().flatten().copied().collect();
    h(&pa) + h(&pb) - h(&flat)
}

pub fn raw_uplink() -> Vec<Vec<f64>> {
    vec![
        vec![0.1, 0.2, 0.3, 0.4],
        vec![0.3, 0.4, 0.1, 0.2],
        vec![0.4, 0.3, 0.2, 0.1],
        vec![0.2, 0.1, 0.4, 0.3],
    ]
}

/// Joint of `(U, Y3)` for binary inputs, uniform, `U = f1(x1) xor f2(x2)`.
pub fn u_joint_binary(w: &[Vec<f64>], flip1: bool, flip2: bool) -> Vec<Vec<f64>> {
    let ny = w[0].len();
    let mut j = vec![vec![0.0; ny]; 2];
    for x1 in 0..2 {
        for x2 in 0..2 {
            let u = (x1 ^ flip1 as usize) ^ (x2 ^ flip2 as usize);
            for y in 0..ny {
                j[u][y] += 0.25 * w[x1 * 2 + x2][y];
            }
        }
    }
    j
}

pub fn bsc_mi(p: f64, rho: f64) -> f64 {
    h2(p * (1.0 - rho) + (1.0 - p) * rho) - h2(rho)
}

/// max over p of min(I1, I2) for two BSCs on a grid of the given step.
pub fn maximin_grid(rho1: f64, rho2: f64, step: f64) -> f64 {
    let n = (1.0 / step).round() as usize;
    (0..=n)
        .map(|i| {
            let p = i as f64 / n as f64;
            bsc_mi(p, rho1).min(bsc_mi(p, rho2))
        })
        .fold(0.0, f64::max)
}

/// I(X1,X2;Y3) for product inputs `(a, 1-a) x (b, 1-b)`.
pub fn mac_sum_binary(w: &[Vec<f64>], a: f64, b: f64) -> f64 {
    let p1 = [a, 1.0 - a];
    let p2 = [b, 1.0 - b];
    let joint: Vec<Vec<f64>> = (0..4)
        .map(|r| w[r].iter().map(|&v| v * p1[r / 2] * p2[r % 2]).collect())
        .collect();
    mi_joint(&joint)
}

pub struct ExampleOracle {
    pub i_u_y3: f64,
    pub h_u_given_y3: f64,
    pub maximin: f64,
    pub c_mac: f64,
}

pub fn example_oracle() -> ExampleOracle {
    let w = raw_uplink();
    let mut best: Option<Vec<Vec<f64>>> = None;
    let mut i_best = -1.0;
    for f1 in [false, true] {
        for f2 in [false, true] {
            let j = u_joint_binary(&w, f1, f2);
            let i = mi_joint(&j);
            if i > i_best {
                i_best = i;
                best = Some(j);
            }
        }
    }
    let j = best.unwrap();
    let py: Vec<f64> = (0..4).map(|y| j[0][y] + j[1][y]).collect();
    let flat: Vec<f64> = j.iter().flatten().copied().collect();
    let n = 400;
    let mut c_mac: f64 = 0.0;
    for a in 0..=n {
        for b in 0..=n {
            c_mac = c_mac.max(mac_sum_binary(&w, a as f64 / n as f64, b as f64 / n as f64));
        }
    }
    ExampleOracle {
        i_u_y3: i_best,
        h_u_given_y3: h(&flat) - h(&py),
        maximin: maximin_grid(0.3, 0.3, 1e-5),
        c_mac,
    }
}
