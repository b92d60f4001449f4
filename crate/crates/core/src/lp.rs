//! Dense two-phase simplex for `min c·x  s.t.  A x = b, x >= 0`.
//!
//! Pricing is Dantzig's rule with lowest-index tie breaking; after a run of
//! degenerate pivots the solver falls back to Bland's rule until the
//! objective moves again, which rules out cycling. The final tableau also
//! yields the dual vector `y` with `Aᵀy <= c` and `b·y = c·x`.

use crate::error::{check_dim, Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const DEGENERATE_STREAK: usize = 50;

#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub costs: Vec<f64>,
    constraints: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per equality constraint.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(costs: Vec<f64>) -> Self {
        LinearProgram { costs, constraints: Vec::new(), rhs: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.costs.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rhs.len()
    }

    /// Adds `sum_j row[j] x_j = rhs`.
    pub fn add_equality(&mut self, row: Vec<f64>, rhs: f64) -> Result<()> {
        check_dim(self.costs.len(), row.len())?;
        self.constraints.push(row);
        self.rhs.push(rhs);
        Ok(())
    }

    /// Adds `sum_k coef_k x_{idx_k} = rhs` from sparse terms.
    pub fn add_sparse_equality(&mut self, terms: &[(usize, f64)], rhs: f64) -> Result<()> {
        let mut row = vec![0.0; self.costs.len()];
        for &(j, a) in terms {
            if j >= row.len() {
                return Err(Error::InvalidInput(format!("variable index {j} out of range")));
            }
            row[j] += a;
        }
        self.add_equality(row, rhs)
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::build(self).run()
    }
}

struct Tableau {
    m: usize,
    nv: usize,
    width: usize,
    /// `m` rows of `[A | I | b]`, row-major.
    t: Vec<f64>,
    basis: Vec<usize>,
    signs: Vec<f64>,
    costs: Vec<f64>,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let m = lp.rhs.len();
        let nv = lp.costs.len();
        let width = nv + m + 1;
        let mut t = vec![0.0; m * width];
        let mut signs = vec![1.0; m];
        for i in 0..m {
            let s = if lp.rhs[i] < 0.0 { -1.0 } else { 1.0 };
            signs[i] = s;
            let row = &mut t[i * width..(i + 1) * width];
            for j in 0..nv {
                row[j] = s * lp.constraints[i][j];
            }
            row[nv + i] = 1.0;
            row[width - 1] = s * lp.rhs[i];
        }
        Tableau {
            m,
            nv,
            width,
            t,
            basis: (nv..nv + m).collect(),
            signs,
            costs: lp.costs.clone(),
            pivots: 0,
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width;
        let p = self.at(row, col);
        for j in 0..w {
            self.t[row * w + j] /= p;
        }
        let pivot_row: Vec<f64> = self.t[row * w..(row + 1) * w].to_vec();
        for i in 0..self.m {
            if i == row {
                continue;
            }
            let factor = self.t[i * w + col];
            if factor == 0.0 {
                continue;
            }
            let r = &mut self.t[i * w..(i + 1) * w];
            for (x, pr) in r.iter_mut().zip(&pivot_row) {
                *x -= factor * pr;
            }
            r[col] = 0.0;
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Reduced costs `d_j = c_j - c_Bᵀ T[:, j]` for the eligible columns.
    fn reduced_costs(&self, cost: &dyn Fn(usize) -> f64, ncols: usize) -> Vec<f64> {
        let mut d: Vec<f64> = (0..ncols).map(cost).collect();
        for i in 0..self.m {
            let cb = cost(self.basis[i]);
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[i * self.width..i * self.width + ncols];
            for (dj, a) in d.iter_mut().zip(row) {
                *dj -= cb * a;
            }
        }
        d
    }

    /// Runs simplex iterations on the columns `0..ncols` for the given costs.
    fn optimize(&mut self, cost: &dyn Fn(usize) -> f64, ncols: usize) -> Result<()> {
        let scale = (0..ncols).map(|j| cost(j).abs()).fold(1.0, f64::max);
        let opt_tol = 1e-10 * scale;
        let mut degenerate = 0usize;
        let max_pivots = 50 * (self.m + ncols) + 1000;
        loop {
            let d = self.reduced_costs(cost, ncols);
            let in_basis = {
                let mut v = vec![false; ncols];
                for &b in &self.basis {
                    if b < ncols {
                        v[b] = true;
                    }
                }
                v
            };
            let bland = degenerate >= DEGENERATE_STREAK;
            let mut entering = None;
            let mut best = -opt_tol;
            for j in 0..ncols {
                if in_basis[j] || d[j] >= -opt_tol {
                    continue;
                }
                if bland {
                    entering = Some(j);
                    break;
                }
                if d[j] < best {
                    best = d[j];
                    entering = Some(j);
                }
            }
            let Some(col) = entering else {
                return Ok(());
            };

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, col);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((r, best_ratio)) => {
                            if ratio < best_ratio - 1e-12
                                || (ratio <= best_ratio + 1e-12 && self.basis[i] < self.basis[r])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, ratio)) = leave else {
                return Err(Error::Unbounded);
            };
            if ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(row, col);
            if self.pivots > max_pivots {
                return Err(Error::NoConvergence { iterations: self.pivots, residual: f64::NAN });
            }
        }
    }

    fn run(mut self) -> Result<LpSolution> {
        let nv = self.nv;
        let m = self.m;
        let total = nv + m;

        // Phase 1: minimize the sum of artificials.
        self.optimize(&|j| if j >= nv { 1.0 } else { 0.0 }, total)?;
        let infeas: f64 = (0..m)
            .filter(|&i| self.basis[i] >= nv)
            .map(|i| self.rhs(i))
            .sum();
        let bscale = (0..m).map(|i| self.rhs(i).abs()).fold(1.0, f64::max);
        if infeas > 1e-9 * bscale {
            return Err(Error::Infeasible);
        }
        // Drive remaining artificials out where possible; rows that stay are redundant.
        for i in 0..m {
            if self.basis[i] >= nv {
                if let Some(j) = (0..nv).find(|&j| self.at(i, j).abs() > 1e-9) {
                    self.pivot(i, j);
                }
            }
        }

        // Phase 2 on the structural columns only.
        let costs = self.costs.clone();
        self.optimize(&|j| if j < nv { costs[j] } else { 0.0 }, nv)?;

        let mut x = vec![0.0; nv];
        for i in 0..m {
            if self.basis[i] < nv {
                x[self.basis[i]] = self.rhs(i).max(0.0);
            }
        }
        let objective = x.iter().zip(&self.costs).map(|(a, c)| a * c).sum();
        // y = c_Bᵀ B⁻¹, where B⁻¹ sits in the artificial block.
        let mut duals = vec![0.0; m];
        for r in 0..m {
            let cb = if self.basis[r] < nv { self.costs[self.basis[r]] } else { 0.0 };
            if cb == 0.0 {
                continue;
            }
            for (k, y) in duals.iter_mut().enumerate() {
                *y += cb * self.at(r, nv + k);
            }
        }
        for (y, s) in duals.iter_mut().zip(&self.signs) {
            *y *= s;
        }
        Ok(LpSolution { x, objective, duals, pivots: self.pivots })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp_with_duals() {
        // min x0 + 2 x1 + 3 x2  s.t.  x0 + x1 + x2 = 1,  x1 - x2 = 0
        let mut lp = LinearProgram::new(vec![1.0, 2.0, 3.0]);
        lp.add_equality(vec![1.0, 1.0, 1.0], 1.0).unwrap();
        lp.add_equality(vec![0.0, 1.0, -1.0], 0.0).unwrap();
        let sol = lp.solve().unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-12);
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
        let dual_obj = sol.duals[0] * 1.0 + sol.duals[1] * 0.0;
        assert!((dual_obj - sol.objective).abs() < 1e-12);
        // Dual feasibility Aᵀy <= c
        assert!(sol.duals[0] <= 1.0 + 1e-12);
        assert!(sol.duals[0] + sol.duals[1] <= 2.0 + 1e-12);
        assert!(sol.duals[0] - sol.duals[1] <= 3.0 + 1e-12);
    }

    #[test]
    fn infeasible_detected() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.add_equality(vec![1.0, 1.0], 1.0).unwrap();
        lp.add_equality(vec![1.0, 1.0], 2.0).unwrap();
        assert!(matches!(lp.solve(), Err(Error::Infeasible)));
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::new(vec![-1.0, 0.0]);
        lp.add_equality(vec![1.0, -1.0], 0.0).unwrap();
        assert!(matches!(lp.solve(), Err(Error::Unbounded)));
    }

    #[test]
    fn redundant_rows_and_negative_rhs() {
        // Transportation 2x2 with all marginal rows (one redundant).
        let cost = vec![0.0, 1.0, 1.0, 0.0];
        let mut lp = LinearProgram::new(cost);
        lp.add_equality(vec![1.0, 1.0, 0.0, 0.0], 1.0).unwrap();
        lp.add_equality(vec![0.0, 0.0, 1.0, 1.0], 0.0).unwrap();
        lp.add_equality(vec![-1.0, 0.0, -1.0, 0.0], 0.0).unwrap();
        lp.add_equality(vec![0.0, -1.0, 0.0, -1.0], -1.0).unwrap();
        let sol = lp.solve().unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-12);
        let dual_obj = sol.duals[0] - sol.duals[3];
        assert!((dual_obj - 1.0).abs() < 1e-12);
    }
}
