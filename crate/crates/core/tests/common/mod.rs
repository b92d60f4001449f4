#![allow(dead_code)]

use kantorovich_core::ergopt::{build_sft, SftGraph};
use kantorovich_core::{CostMatrix, Error, ProbVector, StochasticMatrix};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const INF: f64 = f64::INFINITY;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Integer costs in `[lo, hi]`, each entry `+inf` with probability `p_inf`,
/// keeping at least one finite entry per row.
pub fn random_integer_cost(rng: &mut ChaCha8Rng, n: usize, lo: i64, hi: i64, p_inf: f64) -> CostMatrix {
    let mut rows = vec![vec![INF; n]; n];
    for row in rows.iter_mut() {
        for v in row.iter_mut() {
            if !rng.random_bool(p_inf) {
                *v = rng.random_range(lo..=hi) as f64;
            }
        }
        if row.iter().all(|v| v.is_infinite()) {
            let j = rng.random_range(0..n);
            row[j] = rng.random_range(lo..=hi) as f64;
        }
    }
    CostMatrix::from_rows(&rows).unwrap()
}

/// A strongly connected cost: a Hamiltonian cycle through a random
/// permutation plus random extra edges.
pub fn random_strongly_connected(rng: &mut ChaCha8Rng, n: usize, density: f64, integer: bool) -> CostMatrix {
    let draw = |rng: &mut ChaCha8Rng| {
        if integer {
            rng.random_range(-10..=20) as f64
        } else {
            rng.random_range(-5.0..15.0)
        }
    };
    let mut rows = vec![vec![INF; n]; n];
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    for k in 0..n {
        rows[perm[k]][perm[(k + 1) % n]] = draw(rng);
    }
    for x in 0..n {
        for y in 0..n {
            if rows[x][y].is_infinite() && rng.random_bool(density) {
                rows[x][y] = draw(rng);
            }
        }
    }
    CostMatrix::from_rows(&rows).unwrap()
}

pub fn random_prob(rng: &mut ChaCha8Rng, n: usize, p_zero: f64) -> ProbVector {
    loop {
        let w: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(p_zero) { 0.0 } else { rng.random_range(0.05..1.0) })
            .collect();
        if w.iter().any(|&v| v > 0.0) {
            return ProbVector::normalized(w).unwrap();
        }
    }
}

/// Irreducible aperiodic chain: a cycle, all self-loops and random extra support.
pub fn random_ergodic_chain(rng: &mut ChaCha8Rng, n: usize) -> StochasticMatrix {
    let mut rows = vec![vec![0.0; n]; n];
    for x in 0..n {
        rows[x][x] = rng.random_range(0.1..1.0);
        rows[x][(x + 1) % n] += rng.random_range(0.1..1.0);
        for y in 0..n {
            if rng.random_bool(0.3) {
                rows[x][y] += rng.random_range(0.0..1.0);
            }
        }
        let s: f64 = rows[x].iter().sum();
        rows[x].iter_mut().for_each(|v| *v /= s);
        let fix: f64 = 1.0 - rows[x].iter().sum::<f64>();
        rows[x][x] += fix;
    }
    StochasticMatrix::new(rows).unwrap()
}

/// Random subshift with integer potential; retries until no state is dead.
pub fn random_sft(rng: &mut ChaCha8Rng, r: usize, k: usize) -> SftGraph {
    loop {
        let m: Vec<Vec<bool>> = (0..r)
            .map(|i| (0..r).map(|j| i == j && rng.random_bool(0.5) || rng.random_bool(0.6)).collect())
            .collect();
        let table: Vec<f64> = (0..r.pow(k as u32 + 1)).map(|_| rng.random_range(-5..=9) as f64).collect();
        match build_sft(m, k, table) {
            Ok(g) => return g,
            Err(Error::DeadState(_)) => continue,
            Err(e) => panic!("{e}"),
        }
    }
}

/// Minimum cycle mean by enumerating simple cycles, as an exact fraction
/// `(total, length)` for integer costs.
pub fn brute_force_min_cycle_mean(a: &CostMatrix) -> Option<(f64, usize)> {
    let n = a.dim();
    let mut best: Option<(f64, usize)> = None;
    fn better(cand: (f64, usize), cur: Option<(f64, usize)>) -> bool {
        match cur {
            None => true,
            Some((t, l)) => cand.0 * (l as f64) < t * (cand.1 as f64),
        }
    }
    fn dfs(
        a: &CostMatrix,
        start: usize,
        v: usize,
        total: f64,
        len: usize,
        on_path: &mut Vec<bool>,
        best: &mut Option<(f64, usize)>,
    ) {
        for w in start..a.dim() {
            let e = a.get(v, w);
            if !e.is_finite() {
                continue;
            }
            let t = total + e.value();
            if w == start {
                if better((t, len + 1), *best) {
                    *best = Some((t, len + 1));
                }
            } else if !on_path[w] {
                on_path[w] = true;
                dfs(a, start, w, t, len + 1, on_path, best);
                on_path[w] = false;
            }
        }
    }
    for s in 0..n {
        let mut on_path = vec![false; n];
        on_path[s] = true;
        dfs(a, s, s, 0.0, 0, &mut on_path, &mut best);
    }
    best
}

/// Stationary law by Gaussian elimination on `m (P - I) = 0`, `sum m = 1`.
pub fn stationary_by_elimination(p: &StochasticMatrix) -> Vec<f64> {
    let n = p.dim();
    // Rows: equations j = 0..n-1 of (Pᵀ - I) m = 0, last row replaced by sum m = 1.
    let mut a = vec![vec![0.0; n + 1]; n];
    for j in 0..n {
        for i in 0..n {
            a[j][i] = p.get(i, j) - if i == j { 1.0 } else { 0.0 };
        }
    }
    for i in 0..n {
        a[n - 1][i] = 1.0;
    }
    a[n - 1][n] = 1.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs())).unwrap();
        a.swap(col, piv);
        let d = a[col][col];
        for k in col..=n {
            a[col][k] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for k in col..=n {
                        a[r][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    (0..n).map(|i| a[i][n]).collect()
}
