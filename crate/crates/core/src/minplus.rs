//! Dense min-plus (tropical) matrix algebra on cost matrices.
//!
//! A cost matrix `A` with `A[x][y] = c(x, y)` acts on potentials through the
//! backward operator `Tg(x) = max_y {g(y) - A(x, y)}` and the forward operator
//! `T⁺f(y) = min_x {f(x) + A(x, y)}`. A `+inf` entry means "no transition";
//! such pairs are skipped in both operators, so no indeterminate sum can arise.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::ext::ExtReal;
use crate::potential::Potential;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    n: usize,
    entries: Vec<ExtReal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl CostMatrix {
    /// Row-major entries; `-inf` is rejected.
    pub fn new(n: usize, entries: Vec<ExtReal>) -> Result<Self> {
        check_dim(n * n, entries.len())?;
        if let Some(k) = entries.iter().position(|e| e.is_neg_inf()) {
            return Err(Error::InvalidInput(format!(
                "cost entry ({}, {}) is -inf",
                k / n,
                k % n
            )));
        }
        Ok(CostMatrix { n, entries, name: None })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            check_dim(n, row.len())?;
            for &v in row {
                entries.push(ExtReal::new(v)?);
            }
        }
        Self::new(n, entries)
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(ExtReal::new(f(i, j))?);
            }
        }
        Self::new(n, entries)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Min-plus identity: zero diagonal, `+inf` elsewhere.
    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![0.0; n])
    }

    /// `A(x, x) = values[x]`, `+inf` off the diagonal.
    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut entries = vec![ExtReal::INF; n * n];
        for (i, &v) in values.iter().enumerate() {
            entries[i * n + i] = ExtReal::from_f64(v);
        }
        CostMatrix { n, entries, name: None }
    }

    pub fn constant(n: usize, value: f64) -> Self {
        CostMatrix { n, entries: vec![ExtReal::from_f64(value); n * n], name: None }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> ExtReal {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[ExtReal] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn entries(&self) -> &[ExtReal] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<ExtReal>> {
        self.entries.chunks(self.n.max(1)).map(|r| r.to_vec()).collect()
    }

    /// Every row has a finite entry, i.e. `T(0)` is finite.
    pub fn is_standard(&self) -> bool {
        (0..self.n).all(|i| self.row(i).iter().any(|e| e.is_finite()))
    }

    /// Rows that are identically `+inf`.
    pub fn infinite_rows(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| self.row(i).iter().all(|e| e.is_pos_inf()))
            .collect()
    }

    /// `sup_x min_y A(x, y)`; finite exactly when the matrix is standard.
    pub fn regularity_bound(&self) -> ExtReal {
        ExtReal::max_of((0..self.n).map(|i| ExtReal::min_of(self.row(i).iter().copied())))
    }

    pub fn is_regular(&self) -> bool {
        self.n > 0 && self.regularity_bound().is_finite()
    }

    pub fn is_integer_valued(&self) -> bool {
        self.entries
            .iter()
            .all(|e| !e.is_finite() || e.value().fract() == 0.0)
    }

    /// Largest absolute value of a finite entry (0 when none).
    pub fn max_abs_finite(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.is_finite())
            .map(|e| e.value().abs())
            .fold(0.0, f64::max)
    }

    /// Smallest entry.
    pub fn min_entry(&self) -> ExtReal {
        ExtReal::min_of(self.entries.iter().copied())
    }

    /// Pairs `(x, y)` with a finite cost.
    pub fn finite_edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().enumerate().filter_map(move |(k, e)| {
            e.is_finite().then(|| (k / self.n, k % self.n, e.value()))
        })
    }

    /// Successor lists of the feasibility graph `{(x, y) : A(x, y) < +inf}`.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|i| (0..self.n).filter(|&j| self.get(i, j).is_finite()).collect())
            .collect()
    }

    pub fn map_finite(&self, f: impl Fn(f64) -> f64) -> CostMatrix {
        let entries = self
            .entries
            .iter()
            .map(|e| if e.is_finite() { ExtReal::from_f64(f(e.value())) } else { *e })
            .collect();
        CostMatrix { n: self.n, entries, name: self.name.clone() }
    }

    /// `A + s` on finite entries.
    pub fn shift(&self, s: f64) -> CostMatrix {
        self.map_finite(|v| v + s)
    }

    /// `factor * A` for `factor > 0`.
    pub fn scale(&self, factor: f64) -> CostMatrix {
        self.map_finite(|v| v * factor)
    }

    pub fn entrywise_min(&self, other: &CostMatrix) -> Result<CostMatrix> {
        check_dim(self.n, other.n)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (*a).min(*b))
            .collect();
        Ok(CostMatrix { n: self.n, entries, name: None })
    }

    pub fn transpose(&self) -> CostMatrix {
        let n = self.n;
        let entries = (0..n * n).map(|k| self.get(k % n, k / n)).collect();
        CostMatrix { n, entries, name: self.name.clone() }
    }

    /// Largest entrywise distance, equal infinities counting as 0.
    pub fn max_distance(&self, other: &CostMatrix) -> Result<f64> {
        check_dim(self.n, other.n)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.distance(*b))
            .fold(0.0, f64::max))
    }

    /// `self >= other` entrywise, up to `tol`.
    pub fn dominates(&self, other: &CostMatrix, tol: f64) -> bool {
        self.entries
            .iter()
            .zip(&other.entries)
            .all(|(a, b)| a.value() >= b.value() - tol || a == b)
    }
}

/// `(Tg)(x) = max_y {g(y) - A(x, y)}`.
pub fn backward_apply(a: &CostMatrix, g: &Potential) -> Result<Potential> {
    check_dim(a.dim(), g.len())?;
    Ok((0..a.dim())
        .map(|x| {
            let mut best = ExtReal::NEG_INF;
            for (cost, gy) in a.row(x).iter().zip(g.iter()) {
                if cost.is_finite() {
                    best = best.max(gy - *cost);
                }
            }
            best
        })
        .collect())
}

/// Lowest-index maximizer `y` of `g(y) - A(x, y)` for every `x`; `None` for `+inf` rows.
pub fn backward_argmax(a: &CostMatrix, g: &Potential) -> Result<Vec<Option<usize>>> {
    check_dim(a.dim(), g.len())?;
    Ok((0..a.dim())
        .map(|x| {
            let mut best: Option<(usize, ExtReal)> = None;
            for (y, (cost, gy)) in a.row(x).iter().zip(g.iter()).enumerate() {
                if cost.is_finite() {
                    let v = gy - *cost;
                    if best.is_none_or(|(_, b)| v > b) {
                        best = Some((y, v));
                    }
                }
            }
            best.map(|(y, _)| y)
        })
        .collect())
}

/// `(T⁺f)(y) = min_x {f(x) + A(x, y)}`.
pub fn forward_apply(a: &CostMatrix, f: &Potential) -> Result<Potential> {
    check_dim(a.dim(), f.len())?;
    let n = a.dim();
    Ok((0..n)
        .map(|y| {
            let mut best = ExtReal::INF;
            for x in 0..n {
                let cost = a.get(x, y);
                if cost.is_finite() {
                    best = best.min(f[x] + cost);
                }
            }
            best
        })
        .collect())
}

/// Inf-convolution `(A ⋆ B)(x, y) = min_z {A(x, z) + B(z, y)}`.
pub fn convolve(a: &CostMatrix, b: &CostMatrix) -> Result<CostMatrix> {
    check_dim(a.dim(), b.dim())?;
    let n = a.dim();
    let mut entries = vec![ExtReal::INF; n * n];
    for x in 0..n {
        let out = &mut entries[x * n..(x + 1) * n];
        for (z, azx) in a.row(x).iter().enumerate() {
            if azx.is_pos_inf() {
                continue;
            }
            for (o, bzy) in out.iter_mut().zip(b.row(z)) {
                if bzy.is_finite() {
                    *o = (*o).min(*azx + *bzy);
                }
            }
        }
    }
    Ok(CostMatrix { n, entries, name: None })
}

/// `A_n`, the `n`-fold inf-convolution, by binary exponentiation.
pub fn power(a: &CostMatrix, n: usize) -> Result<CostMatrix> {
    if n == 0 {
        return Err(Error::InvalidInput(
            "power exponent must be at least 1; use CostMatrix::identity for n = 0".into(),
        ));
    }
    let mut result: Option<CostMatrix> = None;
    let mut base = a.clone();
    let mut k = n;
    loop {
        if k & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => convolve(&r, &base)?,
            });
        }
        k >>= 1;
        if k == 0 {
            break;
        }
        base = convolve(&base, &base)?;
    }
    Ok(result.expect("n >= 1"))
}

/// Tolerance below which a closed-walk weight counts as negative.
pub fn negative_cycle_tolerance(b: &CostMatrix) -> f64 {
    1e-9 * b.max_abs_finite().max(1.0)
}

/// Kleene plus `B⁺(x, y) = min_{n >= 1} B_n(x, y)`: shortest walks with at least one edge.
///
/// Floyd–Warshall on `B`; fails with a witness cycle when `B` has a cycle of
/// negative total weight.
pub fn kleene_plus(b: &CostMatrix) -> Result<CostMatrix> {
    let n = b.dim();
    let tol = negative_cycle_tolerance(b);
    let mut d: Vec<f64> = b.entries().iter().map(|e| e.value()).collect();
    for k in 0..n {
        for i in 0..n {
            let dik = d[i * n + k];
            if dik == f64::INFINITY {
                continue;
            }
            for j in 0..n {
                let dkj = d[k * n + j];
                if dkj == f64::INFINITY {
                    continue;
                }
                let via = dik + dkj;
                if via < d[i * n + j] {
                    d[i * n + j] = via;
                }
            }
        }
        for i in 0..n {
            let dii = d[i * n + i];
            if dii < -tol {
                return Err(negative_cycle_witness(b));
            }
            // Round-off on zero-weight cycles must not compound.
            if dii < 0.0 {
                d[i * n + i] = 0.0;
            }
        }
    }
    let entries = d.into_iter().map(ExtReal::from_f64).collect();
    Ok(CostMatrix { n, entries, name: None })
}

/// Locates a negative cycle with Bellman–Ford from a virtual source.
fn negative_cycle_witness(b: &CostMatrix) -> Error {
    let n = b.dim();
    let tol = negative_cycle_tolerance(b);
    let mut dist = vec![0.0_f64; n];
    let mut pred = vec![usize::MAX; n];
    let mut last = None;
    for _ in 0..=n {
        last = None;
        for (x, y, w) in b.finite_edges() {
            if dist[x] + w < dist[y] - tol {
                dist[y] = dist[x] + w;
                pred[y] = x;
                last = Some(y);
            }
        }
        if last.is_none() {
            break;
        }
    }
    let Some(mut v) = last else {
        return Error::NegativeCycle { cycle: Vec::new(), weight: 0.0 };
    };
    for _ in 0..n {
        v = pred[v];
    }
    let mut cycle = vec![v];
    let mut u = pred[v];
    while u != v {
        cycle.push(u);
        u = pred[u];
    }
    cycle.reverse();
    let weight = cycle_weight(b, &cycle);
    Error::NegativeCycle { cycle, weight }
}

/// Total cost of the closed walk `cycle[0] -> cycle[1] -> ... -> cycle[0]`.
pub fn cycle_weight(a: &CostMatrix, cycle: &[usize]) -> f64 {
    (0..cycle.len())
        .map(|k| a.get(cycle[k], cycle[(k + 1) % cycle.len()]).value())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    fn three_node() -> CostMatrix {
        CostMatrix::from_rows(&[
            vec![5.0, 1.0, INF],
            vec![3.0, INF, 1.0],
            vec![1.0, INF, INF],
        ])
        .unwrap()
    }

    #[test]
    fn backward_three_node() {
        let g = Potential::from_f64s(&[0.0, 2.0, 1.0]);
        let tg = backward_apply(&three_node(), &g).unwrap();
        assert_eq!(tg, Potential::from_f64s(&[1.0, 0.0, -1.0]));
        assert_eq!(
            backward_argmax(&three_node(), &g).unwrap(),
            vec![Some(1), Some(2), Some(0)]
        );
    }

    #[test]
    fn forward_three_node() {
        let f = Potential::from_f64s(&[0.0, 2.0, 1.0]);
        let tf = forward_apply(&three_node(), &f).unwrap();
        assert_eq!(tf, Potential::from_f64s(&[2.0, 1.0, 3.0]));
    }

    #[test]
    fn identity_and_zero_costs() {
        let g = Potential::from_f64s(&[0.5, -2.0, 7.0]);
        let id = CostMatrix::identity(3);
        assert_eq!(backward_apply(&id, &g).unwrap(), g);
        assert_eq!(forward_apply(&id, &g).unwrap(), g);
        let zero = CostMatrix::constant(3, 0.0);
        assert_eq!(backward_apply(&zero, &g).unwrap(), Potential::constant(3, 7.0));
        assert_eq!(forward_apply(&zero, &g).unwrap(), Potential::constant(3, -2.0));
    }

    #[test]
    fn infinite_row_gives_neg_inf_and_never_indeterminate() {
        let a = CostMatrix::from_rows(&[vec![INF, INF], vec![0.0, INF]]).unwrap();
        assert!(!a.is_standard());
        assert_eq!(a.infinite_rows(), vec![0]);
        let g = Potential::new(vec![ExtReal::NEG_INF, ExtReal::from(1.0)]);
        let tg = backward_apply(&a, &g).unwrap();
        assert_eq!(tg.values(), &[ExtReal::NEG_INF, ExtReal::NEG_INF]);
        let tf = forward_apply(&a, &g).unwrap();
        assert_eq!(tf.values(), &[ExtReal::from(1.0), ExtReal::INF]);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            backward_apply(&three_node(), &Potential::zeros(2)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(convolve(&three_node(), &CostMatrix::identity(2)).is_err());
    }

    #[test]
    fn neg_inf_cost_rejected() {
        assert!(CostMatrix::from_rows(&[vec![f64::NEG_INFINITY]]).is_err());
    }

    #[test]
    fn convolution_identity_neutral() {
        let a = three_node();
        let id = CostMatrix::identity(3);
        assert_eq!(convolve(&id, &a).unwrap(), a);
        assert_eq!(convolve(&a, &id).unwrap(), a);
    }

    #[test]
    fn power_cost_grid_examples() {
        let pts: [f64; 3] = [0.0, 0.5, 1.0];
        let quad = CostMatrix::from_fn(3, |i, j| (pts[i] - pts[j]).powi(2)).unwrap();
        let qq = convolve(&quad, &quad).unwrap();
        assert_eq!(qq.get(0, 2).value(), 0.5);
        // 2^{1-p} |0 - 1|^p with p = 2
        assert_eq!(qq.get(0, 2).value(), 2f64.powi(-1));

        let lin = CostMatrix::from_fn(3, |i, j| (pts[i] - pts[j]).abs()).unwrap();
        assert_eq!(convolve(&lin, &lin).unwrap(), lin);
    }

    #[test]
    fn power_on_fine_grid() {
        for n in [1usize, 2, 3, 4, 5, 8] {
            let pts: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
            let quad = CostMatrix::from_fn(n + 1, |i, j| (pts[i] - pts[j]).powi(2)).unwrap();
            let an = power(&quad, n).unwrap();
            assert!((an.get(0, n).value() - 1.0 / n as f64).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn power_basics() {
        let a = three_node();
        assert_eq!(power(&a, 1).unwrap(), a);
        let a2 = power(&a, 2).unwrap();
        assert_eq!(power(&a, 4).unwrap(), convolve(&a2, &a2).unwrap());
        assert!(power(&a, 0).is_err());
    }

    #[test]
    fn kleene_zero_cycle() {
        let b = CostMatrix::from_rows(&[
            vec![4.0, 0.0, INF],
            vec![2.0, INF, 0.0],
            vec![0.0, INF, INF],
        ])
        .unwrap();
        let bp = kleene_plus(&b).unwrap();
        assert!(bp.entries().iter().all(|e| e.value() == 0.0));
        assert_eq!(kleene_plus(&CostMatrix::identity(3)).unwrap(), CostMatrix::identity(3));
    }

    #[test]
    fn kleene_negative_cycle_witness() {
        let b = CostMatrix::from_rows(&[
            vec![INF, 1.0, INF],
            vec![INF, INF, -2.0],
            vec![0.5, INF, INF],
        ])
        .unwrap();
        match kleene_plus(&b) {
            Err(Error::NegativeCycle { cycle, weight }) => {
                assert_eq!(cycle.len(), 3);
                assert!((weight + 0.5).abs() < 1e-12);
            }
            other => panic!("expected negative cycle, got {other:?}"),
        }
    }
}
