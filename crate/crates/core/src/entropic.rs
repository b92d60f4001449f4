//! Entropic Kantorovich operators, log-domain Sinkhorn, and the finite
//! Markov-chain analogue of the Schrödinger semigroup `T_t f = log S_t e^f`.

use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::ext::ExtReal;
use crate::measure::{Coupling, ProbVector, StochasticMatrix};
use crate::minplus::{backward_apply, CostMatrix};
use crate::operator::log_mean_exp;
use crate::potential::Potential;

/// `Tg(x) = ε log sum_y ν(y) exp((g(y) - C(x, y)) / ε)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropicOp {
    cost: CostMatrix,
    nu: ProbVector,
    epsilon: f64,
}

impl EntropicOp {
    pub fn new(cost: CostMatrix, nu: ProbVector, epsilon: f64) -> Result<Self> {
        check_dim(cost.dim(), nu.len())?;
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
        }
        if cost.entries().iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidInput("entropic cost must be finite".into()));
        }
        Ok(EntropicOp { cost, nu, epsilon })
    }

    pub fn dim(&self) -> usize {
        self.cost.dim()
    }

    pub fn cost(&self) -> &CostMatrix {
        &self.cost
    }

    pub fn nu(&self) -> &ProbVector {
        &self.nu
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `(λ·T)`: same operator family with cost `C / λ` and temperature `ε / λ`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        EntropicOp::new(self.cost.scale(1.0 / lambda), self.nu.clone(), self.epsilon / lambda)
    }

    pub fn apply(&self, g: &Potential) -> Result<Potential> {
        check_dim(self.dim(), g.len())?;
        g.require_finite()?;
        let g = g.to_f64s();
        Ok(soft_max_rows(&self.cost, self.nu.weights(), &g, self.epsilon)
            .into_iter()
            .map(ExtReal::from_f64)
            .collect())
    }

    /// The ε → 0 limit restricted to the support of ν, `max_{ν(y) > 0} {g(y) - C(x, y)}`.
    pub fn max_plus_limit(&self, g: &Potential) -> Result<Potential> {
        let n = self.dim();
        let masked = CostMatrix::from_fn(n, |x, y| {
            if self.nu.weights()[y] > 0.0 {
                self.cost.get(x, y).value()
            } else {
                f64::INFINITY
            }
        })?;
        backward_apply(&masked, g)
    }

    /// Smallest positive weight of ν; the sandwich width is `ε log(1 / min ν)`.
    pub fn min_support_weight(&self) -> f64 {
        self.nu
            .weights()
            .iter()
            .copied()
            .filter(|&w| w > 0.0)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Row-wise `ε log sum_y w(y) exp((g(y) - C(x, y)) / ε)`, fixed summation order.
fn soft_max_rows(cost: &CostMatrix, weights: &[f64], g: &[f64], eps: f64) -> Vec<f64> {
    let n = cost.dim();
    let mut scratch = vec![0.0; g.len()];
    (0..n)
        .map(|x| {
            for (s, (gy, c)) in scratch.iter_mut().zip(g.iter().zip(cost.row(x))) {
                *s = (gy - c.value()) / eps;
            }
            eps * log_mean_exp(weights, &scratch)
        })
        .collect()
}

/// Column-wise `ε log sum_x w(x) exp((f(x) - C(x, y)) / ε)`.
fn soft_max_cols(cost: &CostMatrix, weights: &[f64], f: &[f64], eps: f64) -> Vec<f64> {
    let n = cost.dim();
    let mut scratch = vec![0.0; f.len()];
    (0..n)
        .map(|y| {
            for (x, s) in scratch.iter_mut().enumerate() {
                *s = (f[x] - cost.get(x, y).value()) / eps;
            }
            eps * log_mean_exp(weights, &scratch)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SinkhornResult {
    /// Row potential φ.
    pub phi: Vec<f64>,
    /// Column potential ψ.
    pub psi: Vec<f64>,
    pub coupling: Coupling,
    pub iterations: usize,
    /// L1 marginal residual of the returned coupling.
    pub residual: f64,
    /// Largest measured ratio `‖Δψ_{k+1}‖_osc / ‖Δψ_k‖_osc`.
    pub kappa: f64,
    pub contraction_ok: bool,
}

fn osc(v: &[f64]) -> f64 {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    if v.is_empty() {
        0.0
    } else {
        (hi - lo) / 2.0
    }
}

fn coupling_from(cost: &CostMatrix, mu: &[f64], nu: &[f64], phi: &[f64], psi: &[f64], eps: f64) -> Coupling {
    let n = cost.dim();
    let mut m = Vec::with_capacity(n * n);
    for x in 0..n {
        for y in 0..n {
            m.push(mu[x] * nu[y] * ((phi[x] + psi[y] - cost.get(x, y).value()) / eps).exp());
        }
    }
    Coupling { rows: n, cols: n, matrix: m }
}

/// Log-domain Sinkhorn: alternates `φ = -T_ν ψ` and `ψ = -T_μᵀ φ` until the
/// coupling `μ(x) ν(y) exp((φ(x) + ψ(y) - C(x, y)) / ε)` has L1 marginal residual `<= tol`.
pub fn sinkhorn_solve(
    cost: &CostMatrix,
    mu: &ProbVector,
    nu: &ProbVector,
    epsilon: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SinkhornResult> {
    let n = cost.dim();
    check_dim(n, mu.len())?;
    check_dim(n, nu.len())?;
    // Validates ε and finiteness.
    EntropicOp::new(cost.clone(), nu.clone(), epsilon)?;
    if !mu.has_full_support() || !nu.has_full_support() {
        return Err(Error::InvalidInput("sinkhorn needs full-support marginals".into()));
    }
    let (mw, nw) = (mu.weights(), nu.weights());
    let noise_floor = 1e-9 * cost.max_abs_finite().max(epsilon).max(1.0);

    let mut psi = vec![0.0; n];
    let mut prev_delta: Option<f64> = None;
    let mut kappa: f64 = 0.0;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let phi: Vec<f64> = soft_max_rows(cost, nw, &psi, epsilon).into_iter().map(|v| -v).collect();
        let next: Vec<f64> = soft_max_cols(cost, mw, &phi, epsilon).into_iter().map(|v| -v).collect();
        let delta: Vec<f64> = next.iter().zip(&psi).map(|(a, b)| a - b).collect();
        let d = osc(&delta);
        if let Some(p) = prev_delta {
            if p > noise_floor && d > noise_floor {
                kappa = kappa.max(d / p);
            }
        }
        prev_delta = Some(d);
        psi = next;

        let pi = coupling_from(cost, mw, nw, &phi, &psi, epsilon);
        residual = pi.marginal_residual(mw, nw);
        if residual <= tol {
            return Ok(SinkhornResult {
                phi,
                psi,
                coupling: pi,
                iterations: it,
                residual,
                kappa,
                contraction_ok: kappa < 1.0,
            });
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual })
}

/// A finite Markov chain `P` with its stationary law `m`.
#[derive(Clone, Debug)]
pub struct MarkovSemigroup {
    p: StochasticMatrix,
    stationary: Vec<f64>,
    irreducible: bool,
    period: usize,
}

impl MarkovSemigroup {
    /// Computes `m` by power iteration of the lazy chain `(P + I) / 2`, which
    /// shares its stationary laws with `P` and is aperiodic.
    pub fn new(p: StochasticMatrix) -> Result<Self> {
        let n = p.dim();
        let graph = p.support_graph();
        let irreducible = crate::graph::is_strongly_connected(&graph);
        let period = if irreducible { crate::graph::period(&graph) } else { 0 };
        let mut m = vec![1.0 / n as f64; n];
        let mut converged = false;
        for _ in 0..200_000 {
            let pm = p.left_apply(&m);
            let next: Vec<f64> = m.iter().zip(&pm).map(|(a, b)| 0.5 * (a + b)).collect();
            let s: f64 = next.iter().sum();
            let next: Vec<f64> = next.into_iter().map(|v| v / s).collect();
            let change: f64 = next.iter().zip(&m).map(|(a, b)| (a - b).abs()).sum();
            m = next;
            if change <= 1e-15 {
                converged = true;
                break;
            }
        }
        let drift: f64 = p.left_apply(&m).iter().zip(&m).map(|(a, b)| (a - b).abs()).sum();
        if !converged && drift > 1e-10 {
            return Err(Error::NoConvergence { iterations: 200_000, residual: drift });
        }
        Ok(MarkovSemigroup { p, stationary: m, irreducible, period })
    }

    pub fn matrix(&self) -> &StochasticMatrix {
        &self.p
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// `‖m P - m‖₁`.
    pub fn stationarity_residual(&self) -> f64 {
        self.p
            .left_apply(&self.stationary)
            .iter()
            .zip(&self.stationary)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }

    /// Period of the chain (1 = aperiodic); 0 when reducible.
    pub fn period(&self) -> usize {
        self.period
    }

    pub fn is_ergodic(&self) -> bool {
        self.irreducible && self.period == 1
    }

    /// `T_∞ f = log <m, e^f>`, a constant function.
    pub fn limit_apply(&self, f: &Potential) -> Result<Potential> {
        check_dim(self.p.dim(), f.len())?;
        f.require_finite()?;
        if !self.is_ergodic() {
            return Err(Error::InvalidInput(
                "the limit operator needs an irreducible aperiodic chain".into(),
            ));
        }
        Ok(Potential::constant(f.len(), log_mean_exp(&self.stationary, &f.to_f64s())))
    }
}

/// `T_t f = log(Pᵗ e^f)`, evaluated with a max shift.
pub fn markov_semigroup_apply(s: &MarkovSemigroup, f: &Potential, t: usize) -> Result<Potential> {
    check_dim(s.p.dim(), f.len())?;
    f.require_finite()?;
    let v = f.to_f64s();
    let shift = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut e: Vec<f64> = v.iter().map(|x| (x - shift).exp()).collect();
    for _ in 0..t {
        e = s.p.apply(&e);
    }
    Ok(e.into_iter().map(|x| ExtReal::from_f64(x.ln() + shift)).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct SemigroupConvergence {
    /// First `t` with `‖T_t f - T_∞ f‖_∞ <= tol`.
    pub t_star: usize,
    pub errors: Vec<f64>,
}

/// Runs `T_t f` until it is within `tol` of `T_∞ f`.
pub fn semigroup_convergence(
    s: &MarkovSemigroup,
    f: &Potential,
    tol: f64,
    max_t: usize,
) -> Result<SemigroupConvergence> {
    let limit = s.limit_apply(f)?;
    let mut cur = f.clone();
    let mut errors = Vec::new();
    for t in 0..=max_t {
        let err = cur.sup_distance(&limit)?;
        errors.push(err);
        if err <= tol {
            return Ok(SemigroupConvergence { t_star: t, errors });
        }
        cur = markov_semigroup_apply(s, &cur, 1)?;
    }
    Err(Error::NoConvergence { iterations: max_t, residual: *errors.last().unwrap_or(&f64::NAN) })
}

/// Zero threshold for the stationary law.
const NULL_MASS: f64 = 1e-14;

/// Evaluates `sup_f {<f, ν> - log <m, e^f>}` at `f* = log(ν / m)` and the
/// relative entropy `H(ν | m) = sum ν log(ν / m)`.
pub fn schrodinger_duality(s: &MarkovSemigroup, nu: &ProbVector) -> Result<(f64, f64)> {
    let m = &s.stationary;
    check_dim(m.len(), nu.len())?;
    let nw = nu.weights();
    if let Some(i) = (0..m.len()).find(|&i| nw[i] > 0.0 && m[i] <= NULL_MASS) {
        return Err(Error::AbsoluteContinuityViolated(i));
    }
    Ok((legendre_value(m, nw), relative_entropy(nw, m)))
}

/// `<f*, ν> - log <m, e^{f*}>` with `f* = log(ν / m)` (`-inf` off the support of ν).
fn legendre_value(m: &[f64], nu: &[f64]) -> f64 {
    let f: Vec<f64> = nu
        .iter()
        .zip(m)
        .map(|(&v, &w)| if v > 0.0 { (v / w).ln() } else { f64::NEG_INFINITY })
        .collect();
    let pairing: f64 = f.iter().zip(nu).filter(|(_, &v)| v > 0.0).map(|(a, v)| a * v).sum();
    pairing - log_mean_exp(m, &f)
}

/// `sum_x ν(x) log(ν(x) / m(x))`.
pub fn relative_entropy(nu: &[f64], m: &[f64]) -> f64 {
    nu.iter()
        .zip(m)
        .filter(|(&v, _)| v > 0.0)
        .map(|(&v, &w)| v * (v.ln() - w.ln()))
        .sum()
}

/// `<f, ν> - log <m, e^f>` for an arbitrary finite `f`; bounded by `H(ν | m)`.
pub fn schrodinger_dual_objective(m: &[f64], nu: &[f64], f: &[f64]) -> f64 {
    let pairing: f64 = f.iter().zip(nu).map(|(a, b)| a * b).sum();
    pairing - log_mean_exp(m, f)
}
