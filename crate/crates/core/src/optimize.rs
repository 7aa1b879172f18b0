//! Small derivative-free search routines over intervals and probability simplices.

use rayon::prelude::*;

/// Upper bound on the number of cells a product-of-simplices grid may have.
/// Finer requests are coarsened until they fit.
pub const MAX_GRID_CELLS: usize = 1 << 18;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes a unimodal function on `[lo, hi]`, returning `(argmax, max)`.
///
/// Both endpoints are also evaluated so that boundary optima are found exactly.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    [(lo, f(lo)), (hi, f(hi)), (mid, f(mid)), (c, fc), (d, fd)]
        .into_iter()
        .fold(
            (mid, f64::NEG_INFINITY),
            |best, cand| {
                if cand.1 > best.1 {
                    cand
                } else {
                    best
                }
            },
        )
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Number of points of the simplex grid with spacing `1/n` in dimension `d`.
pub fn simplex_grid_len(d: usize, n: usize) -> usize {
    if d == 0 {
        return 0;
    }
    binomial(n + d - 1, d - 1)
}

/// All distributions on `d` symbols whose entries are multiples of `1/n`,
/// in lexicographic order of the integer compositions.
pub fn simplex_grid(d: usize, n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(simplex_grid_len(d, n));
    let mut parts = vec![0usize; d];
    fn rec(i: usize, left: usize, n: usize, parts: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        let d = parts.len();
        if i == d - 1 {
            parts[i] = left;
            out.push(parts.iter().map(|&c| c as f64 / n as f64).collect());
            return;
        }
        for c in 0..=left {
            parts[i] = c;
            rec(i + 1, left - c, n, parts, out);
        }
    }
    if d > 0 {
        rec(0, n, n, &mut parts, &mut out);
    }
    out
}

/// Largest resolution `<= requested` whose product grid fits in [`MAX_GRID_CELLS`].
pub fn product_grid_resolution(d1: usize, d2: usize, requested: usize) -> usize {
    let mut n = requested.max(1);
    while n > 1 && simplex_grid_len(d1, n).saturating_mul(simplex_grid_len(d2, n)) > MAX_GRID_CELLS {
        n -= 1;
    }
    n
}

/// Best point of a product-of-simplices search.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductOptimum {
    pub value: f64,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    /// Grid resolution actually used.
    pub resolution: usize,
}

/// Maximizes `f(p1, p2)` over two simplices: exhaustive grid, then pairwise
/// mass-transfer ascent. Ties on the grid go to the first point in
/// lexicographic order so the result does not depend on thread scheduling.
pub fn product_simplex_search<F>(d1: usize, d2: usize, requested: usize, f: F) -> ProductOptimum
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    let n = product_grid_resolution(d1, d2, requested);
    let g1 = simplex_grid(d1, n);
    let g2 = simplex_grid(d2, n);
    let values: Vec<f64> = (0..g1.len() * g2.len())
        .into_par_iter()
        .map(|idx| f(&g1[idx / g2.len()], &g2[idx % g2.len()]))
        .collect();
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    let mut p1 = g1[best / g2.len()].clone();
    let mut p2 = g2[best % g2.len()].clone();
    let value = refine_pairwise(&mut p1, &mut p2, 1.0 / n as f64, values[best], &f);
    ProductOptimum {
        value,
        p1,
        p2,
        resolution: n,
    }
}

/// Moves probability mass between pairs of entries while it improves `f`,
/// halving the step down to `1e-10`.
pub fn refine_pairwise<F>(p1: &mut [f64], p2: &mut [f64], start: f64, mut value: f64, f: &F) -> f64
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    let mut step = start;
    while step > 1e-10 {
        let mut rounds = 0;
        loop {
            let mut improved = false;
            for which in 0..2 {
                let d = if which == 0 { p1.len() } else { p2.len() };
                for i in 0..d {
                    for j in 0..d {
                        if i == j {
                            continue;
                        }
                        let v = if which == 0 { &mut *p1 } else { &mut *p2 };
                        let delta = step.min(v[i]);
                        if delta <= 0.0 {
                            continue;
                        }
                        v[i] -= delta;
                        v[j] += delta;
                        let cand = f(p1, p2);
                        let v = if which == 0 { &mut *p1 } else { &mut *p2 };
                        if cand > value + 1e-15 {
                            value = cand;
                            improved = true;
                        } else {
                            v[i] += delta;
                            v[j] -= delta;
                        }
                    }
                }
            }
            rounds += 1;
            if !improved || rounds >= 1000 {
                break;
            }
        }
        step *= 0.5;
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_interior_and_boundary() {
        let (x, v) = golden_section_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(v.abs() < 1e-15);
        let (x, _) = golden_section_max(|x| x, 0.0, 1.0, 1e-10);
        assert_eq!(x, 1.0);
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(simplex_grid(2, 4).len(), 5);
        assert_eq!(simplex_grid(3, 4).len(), simplex_grid_len(3, 4));
        assert_eq!(simplex_grid_len(3, 4), 15);
        for p in simplex_grid(3, 5) {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(simplex_grid(2, 2), vec![vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]]);
    }

    #[test]
    fn grid_is_coarsened_to_cap() {
        assert_eq!(product_grid_resolution(2, 2, 200), 200);
        let n = product_grid_resolution(4, 4, 200);
        assert!(simplex_grid_len(4, n).pow(2) <= MAX_GRID_CELLS);
        assert!(simplex_grid_len(4, n + 1).pow(2) > MAX_GRID_CELLS);
    }

    #[test]
    fn product_search_concave() {
        let target1 = [0.2, 0.5, 0.3];
        let target2 = [0.77, 0.23];
        let f = |a: &[f64], b: &[f64]| {
            -a.iter().zip(&target1).map(|(x, y)| (x - y).powi(2)).sum::<f64>()
                - b.iter().zip(&target2).map(|(x, y)| (x - y).powi(2)).sum::<f64>()
        };
        let opt = product_simplex_search(3, 2, 10, f);
        assert!(opt.value > -1e-12);
        assert!((opt.p2[0] - 0.77).abs() < 1e-5);
    }
}
