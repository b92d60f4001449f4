//! Probability vectors, couplings and row-stochastic matrices.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

const MASS_TOL: f64 = 1e-12;
const NEG_TOL: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Validates nonnegativity and unit mass; entries in `[-1e-15, 0)` are clamped.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("empty probability vector".into()));
        }
        let mut weights = weights;
        for (i, w) in weights.iter_mut().enumerate() {
            if !w.is_finite() || *w < -NEG_TOL {
                return Err(Error::InvalidInput(format!("weight {i} is {w}")));
            }
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidInput(format!("weights sum to {total}, not 1")));
        }
        Ok(ProbVector(weights))
    }

    /// Rescales a nonnegative vector with positive mass to unit mass.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput("cannot normalize weights".into()));
        }
        Ok(ProbVector(weights.into_iter().map(|w| w / total).collect()))
    }

    pub fn uniform(n: usize) -> Self {
        ProbVector(vec![1.0 / n as f64; n])
    }

    pub fn dirac(n: usize, at: usize) -> Self {
        let mut w = vec![0.0; n];
        w[at] = 1.0;
        ProbVector(w)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn has_full_support(&self) -> bool {
        self.0.iter().all(|&w| w > 0.0)
    }

    pub fn min_weight(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn total_variation(&self, other: &ProbVector) -> Result<f64> {
        check_dim(self.len(), other.len())?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0)
    }
}

/// A nonnegative matrix with prescribed marginals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries.
    pub matrix: Vec<f64>,
}

impl Coupling {
    pub fn new(rows: usize, cols: usize, matrix: Vec<f64>) -> Result<Self> {
        check_dim(rows * cols, matrix.len())?;
        if let Some(i) = matrix.iter().position(|&p| !p.is_finite() || p < -NEG_TOL) {
            return Err(Error::InvalidInput(format!("coupling entry {i} is {}", matrix[i])));
        }
        let matrix = matrix.into_iter().map(|p| p.max(0.0)).collect();
        Ok(Coupling { rows, cols, matrix })
    }

    pub fn product(mu: &ProbVector, nu: &ProbVector) -> Self {
        let matrix = mu
            .weights()
            .iter()
            .flat_map(|a| nu.weights().iter().map(move |b| a * b))
            .collect();
        Coupling { rows: mu.len(), cols: nu.len(), matrix }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.cols + j]
    }

    pub fn mass(&self) -> f64 {
        self.matrix.iter().sum()
    }

    pub fn row_marginal(&self) -> Vec<f64> {
        self.matrix.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for row in self.matrix.chunks(self.cols) {
            for (o, p) in out.iter_mut().zip(row) {
                *o += p;
            }
        }
        out
    }

    /// L1 distance of the two marginals to `(mu, nu)`.
    pub fn marginal_residual(&self, mu: &[f64], nu: &[f64]) -> f64 {
        let r: f64 = self.row_marginal().iter().zip(mu).map(|(a, b)| (a - b).abs()).sum();
        let c: f64 = self.col_marginal().iter().zip(nu).map(|(a, b)| (a - b).abs()).sum();
        r + c
    }

    /// L1 distance between the two marginals of a square coupling.
    pub fn marginal_imbalance(&self) -> f64 {
        self.row_marginal()
            .iter()
            .zip(self.col_marginal())
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// Index pairs carrying mass above `threshold`.
    pub fn support(&self, threshold: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) > threshold {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Square row-stochastic matrix, the finite Markov operator `S g(x) = sum_y P(x,y) g(y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StochasticMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl StochasticMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            check_dim(n, row.len())?;
            if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
                return Err(Error::InvalidInput(format!("row {i} has a negative entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > MASS_TOL {
                return Err(Error::InvalidInput(format!("row {i} sums to {s}")));
            }
            entries.extend_from_slice(row);
        }
        Ok(StochasticMatrix { n, entries })
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        StochasticMatrix { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// `(P v)(x) = sum_y P(x, y) v(y)` with a fixed left-to-right summation order.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(p, x)| p * x).sum())
            .collect()
    }

    /// Row vector product `m P`.
    pub fn left_apply(&self, m: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, &mi) in m.iter().enumerate() {
            for (o, p) in out.iter_mut().zip(self.row(i)) {
                *o += mi * p;
            }
        }
        out
    }

    /// Adjacency of the positive entries.
    pub fn support_graph(&self) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|i| (0..self.n).filter(|&j| self.get(i, j) > 0.0).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prob_vector_validation() {
        assert!(ProbVector::new(vec![0.5, 0.5]).is_ok());
        assert!(ProbVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbVector::new(vec![1.0, -0.1]).is_err());
        let p = ProbVector::new(vec![1.0 + 1e-16, -1e-16]).unwrap();
        assert_eq!(p.weights()[1], 0.0);
    }

    #[test]
    fn product_coupling_marginals() {
        let mu = ProbVector::new(vec![0.25, 0.75]).unwrap();
        let nu = ProbVector::new(vec![0.5, 0.25, 0.25]).unwrap();
        let pi = Coupling::product(&mu, &nu);
        assert!(pi.marginal_residual(mu.weights(), nu.weights()) < 1e-15);
        assert_eq!(pi.support(0.0).len(), 6);
    }

    #[test]
    fn stochastic_rows_checked() {
        assert!(StochasticMatrix::new(vec![vec![0.5, 0.5], vec![1.0, 0.0]]).is_ok());
        assert!(StochasticMatrix::new(vec![vec![0.5, 0.4], vec![1.0, 0.0]]).is_err());
        let p = StochasticMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(p.apply(&[1.0, 2.0]), vec![2.0, 1.0]);
        assert_eq!(p.left_apply(&[0.25, 0.75]), vec![0.75, 0.25]);
    }
}
