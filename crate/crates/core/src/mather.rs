//! The Mather constant `c(T)` of a finite cost: minimum cycle mean (Karp),
//! the equal-marginal coupling LP, and the growth rate of `min A_n`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::graph::is_strongly_connected;
use crate::lp::LinearProgram;
use crate::measure::Coupling;
use crate::minplus::{backward_apply, convolve, cycle_weight, CostMatrix};
use crate::potential::Potential;
use crate::weakkam::WeakKamBundle;

/// Minimum cycle mean together with a cycle attaining it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleMean {
    /// `+inf` when no cycle has only finite edges.
    pub c: ExtReal,
    /// Vertices of the optimal cycle in traversal order (empty when `c = +inf`).
    pub cycle: Vec<usize>,
    /// Total cost of the cycle.
    pub total: f64,
}

impl CycleMean {
    pub fn value(&self) -> Result<f64> {
        if self.c.is_finite() {
            Ok(self.c.value())
        } else {
            Err(Error::NoFiniteCycle)
        }
    }
}

/// Karp's minimum mean cycle with a zero-weight virtual source, plus cycle recovery.
///
/// The returned `c` is recomputed as `total / len` over the recovered cycle,
/// so integer costs give the correctly rounded rational.
pub fn mather_constant_cycle(a: &CostMatrix) -> Result<CycleMean> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::InvalidInput("empty cost matrix".into()));
    }
    let edges: Vec<(usize, usize, f64)> = a.finite_edges().collect();
    // dist[k][v]: cheapest walk with exactly k edges ending at v, any start.
    let mut dist = vec![vec![f64::INFINITY; n]; n + 1];
    let mut pred = vec![vec![usize::MAX; n]; n + 1];
    dist[0].iter_mut().for_each(|d| *d = 0.0);
    for k in 1..=n {
        for &(u, v, w) in &edges {
            let du = dist[k - 1][u];
            if du == f64::INFINITY {
                continue;
            }
            let cand = du + w;
            if cand < dist[k][v] || (cand == dist[k][v] && u < pred[k][v]) {
                dist[k][v] = cand;
                pred[k][v] = u;
            }
        }
    }

    let mut best: Option<(f64, usize)> = None;
    for v in 0..n {
        let dn = dist[n][v];
        if dn == f64::INFINITY {
            continue;
        }
        let worst = (0..n)
            .filter(|&k| dist[k][v] < f64::INFINITY)
            .map(|k| (dn - dist[k][v]) / (n - k) as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        if best.is_none_or(|(b, _)| worst < b) {
            best = Some((worst, v));
        }
    }
    let Some((_, vstar)) = best else {
        return Ok(CycleMean { c: ExtReal::INF, cycle: Vec::new(), total: f64::INFINITY });
    };

    // Walk of length n ending at v*; every cycle cut out of it is critical.
    let mut walk = vec![vstar];
    let mut v = vstar;
    for k in (1..=n).rev() {
        v = pred[k][v];
        walk.push(v);
    }
    walk.reverse();
    let mut last_seen = vec![usize::MAX; n];
    let mut cycle = Vec::new();
    for (pos, &u) in walk.iter().enumerate() {
        if last_seen[u] != usize::MAX {
            cycle = walk[last_seen[u]..pos].to_vec();
            break;
        }
        last_seen[u] = pos;
    }
    debug_assert!(!cycle.is_empty());
    let cycle = canonical_rotation(cycle);
    let total = cycle_weight(a, &cycle);
    let c = total / cycle.len() as f64;
    Ok(CycleMean { c: ExtReal::from_f64(c), cycle, total })
}

/// Rotates a cycle so that it starts at its smallest vertex.
fn canonical_rotation(mut cycle: Vec<usize>) -> Vec<usize> {
    if let Some(pos) = cycle.iter().enumerate().min_by_key(|(_, &v)| v).map(|(i, _)| i) {
        cycle.rotate_left(pos);
    }
    cycle
}

/// Solution of `min sum A π` over probability couplings with equal marginals.
#[derive(Clone, Debug, Serialize)]
pub struct MatherLp {
    pub c: f64,
    pub measure: Coupling,
    /// Dual potential `u` with `A(x, y) - c + u(y) - u(x) >= 0` on finite edges.
    pub dual_potential: Vec<f64>,
}

pub fn mather_constant_lp(a: &CostMatrix) -> Result<MatherLp> {
    if !a.is_standard() {
        return Err(Error::InvalidInput("the coupling LP needs a standard cost".into()));
    }
    let n = a.dim();
    let edges: Vec<(usize, usize, f64)> = a.finite_edges().collect();
    let mut lp = LinearProgram::new(edges.iter().map(|e| e.2).collect());
    lp.add_equality(vec![1.0; edges.len()], 1.0)?;
    for i in 0..n {
        let mut row = vec![0.0; edges.len()];
        for (k, &(x, y, _)) in edges.iter().enumerate() {
            if x == i {
                row[k] += 1.0;
            }
            if y == i {
                row[k] -= 1.0;
            }
        }
        lp.add_equality(row, 0.0)?;
    }
    let sol = lp.solve()?;
    let mut matrix = vec![0.0; n * n];
    for (k, &(x, y, _)) in edges.iter().enumerate() {
        matrix[x * n + y] = sol.x[k];
    }
    Ok(MatherLp {
        c: sol.objective,
        measure: Coupling::new(n, n, matrix)?,
        dual_potential: sol.duals[1..].to_vec(),
    })
}

/// A finite subsolution `u` with `Tu + c <= u`, taken from shortest walks of
/// `A - c`: `u(x) = -min(0, min_y (A - c)⁺(x, y))`.
pub fn finite_subsolution(a: &CostMatrix, cycle: &CycleMean) -> Result<Potential> {
    let (b, len) = crate::weakkam::scaled_reduced_cost(a, cycle)?;
    let bp = crate::minplus::kleene_plus(&b)?;
    let n = a.dim();
    Ok((0..n)
        .map(|x| {
            let d = bp.row(x).iter().map(|e| e.value()).fold(0.0, f64::min);
            ExtReal::from_f64(-d / len)
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsReport {
    pub c: f64,
    /// `m_n = min A_n`, n = 1..=N.
    pub min_entries: Vec<f64>,
    /// Largest finite entry of `A_n`.
    pub max_entries: Vec<f64>,
    /// `m_n / n`.
    pub estimates: Vec<f64>,
    /// `s_n - m_n` over finite entries.
    pub oscillation: Vec<f64>,
    /// `(1/n) <T^n g, μ̄> + c` for the minimal cycle measure μ̄.
    pub cesaro: Vec<f64>,
    /// `max_n |m_n - n c|` over the run.
    pub fitted_k: f64,
    /// A priori bound on `|m_n - n c|` from a finite subsolution and the critical cycle.
    pub k_bound: f64,
    pub strongly_connected: bool,
    /// `Some(ok)` when strongly connected: `|m_n / n - c| <= K / n` and `fitted_k <= k_bound`.
    pub bounded_oscillation: Option<bool>,
    /// `|cesaro_n| <= (osc g + K) / n` for every n.
    pub cesaro_ok: bool,
}

/// Runs `A_n` and `T^n g` for `n <= N` and checks the `O(1/n)` convergence of
/// `min A_n / n` and of the Cesàro averages to the Mather constant.
pub fn convergence_diagnostics(a: &CostMatrix, g: &Potential, big_n: usize) -> Result<DiagnosticsReport> {
    if big_n < 2 {
        return Err(Error::InvalidInput("need N >= 2".into()));
    }
    if !a.is_standard() {
        return Err(Error::InvalidInput("diagnostics need a standard cost".into()));
    }
    g.require_finite()?;
    let cm = mather_constant_cycle(a)?;
    let c = cm.value()?;
    let sub = finite_subsolution(a, &cm)?;
    let sub_osc = sub.max().value() - sub.min().value();
    let cycle_excess = cm
        .cycle
        .iter()
        .enumerate()
        .map(|(k, &x)| a.get(x, cm.cycle[(k + 1) % cm.cycle.len()]).value() - c)
        .fold(0.0, f64::max);
    let k_bound = sub_osc.max((cm.cycle.len() - 1) as f64 * cycle_excess);
    let g_osc = g.max().value() - g.min().value();

    let strongly_connected = is_strongly_connected(&a.adjacency());
    let mu_bar: Vec<f64> = {
        let mut w = vec![0.0; a.dim()];
        for &x in &cm.cycle {
            w[x] += 1.0 / cm.cycle.len() as f64;
        }
        w
    };

    let mut an = a.clone();
    let mut tg = g.clone();
    let mut report = DiagnosticsReport {
        c,
        min_entries: Vec::with_capacity(big_n),
        max_entries: Vec::with_capacity(big_n),
        estimates: Vec::with_capacity(big_n),
        oscillation: Vec::with_capacity(big_n),
        cesaro: Vec::with_capacity(big_n),
        fitted_k: 0.0,
        k_bound,
        strongly_connected,
        bounded_oscillation: None,
        cesaro_ok: true,
    };
    let slack = 1e-9 * (1.0 + a.max_abs_finite()) * big_n as f64;
    let mut envelope_ok = true;
    for n in 1..=big_n {
        if n > 1 {
            an = convolve(&an, a)?;
        }
        tg = backward_apply(a, &tg)?;
        let m = an.min_entry().value();
        let s = an
            .entries()
            .iter()
            .filter(|e| e.is_finite())
            .map(|e| e.value())
            .fold(f64::NEG_INFINITY, f64::max);
        let nf = n as f64;
        report.min_entries.push(m);
        report.max_entries.push(s);
        report.estimates.push(m / nf);
        report.oscillation.push(s - m);
        report.fitted_k = report.fitted_k.max((m - nf * c).abs());
        envelope_ok &= (m / nf - c).abs() <= k_bound / nf + slack;

        let ces = tg.integrate(&mu_bar).value() / nf + c;
        report.cesaro.push(ces);
        report.cesaro_ok &= ces.abs() <= (g_osc + k_bound) / nf + slack;
    }
    if strongly_connected {
        report.bounded_oscillation = Some(envelope_ok && report.fitted_k <= k_bound + slack);
    }
    Ok(report)
}

/// A finite `h` with `min_x (h - Th)(x) = c(T)`, certifying the sup-inf dual
/// formula for the Mather constant.
pub fn dual_certificate(a: &CostMatrix) -> Result<Potential> {
    let bundle = WeakKamBundle::compute(a, 1e-9)?;
    bundle.finite_certificate()
}

/// Everything the three routes say about `c(T)`.
#[derive(Clone, Debug, Serialize)]
pub struct MatherCertificate {
    pub c: f64,
    pub cycle: Vec<usize>,
    pub measure: Coupling,
    pub c_lp: f64,
    pub potentials: Potential,
    pub dual_residual: f64,
    pub diagnostics: DiagnosticsReport,
}

pub fn mather_certificate(a: &CostMatrix, g: &Potential, big_n: usize) -> Result<MatherCertificate> {
    let cm = mather_constant_cycle(a)?;
    let c = cm.value()?;
    let lp = mather_constant_lp(a)?;
    let h = dual_certificate(a)?;
    let th = backward_apply(a, &h)?;
    let dual_value = h
        .iter()
        .zip(th.iter())
        .map(|(x, y)| x.value() - y.value())
        .fold(f64::INFINITY, f64::min);
    let diagnostics = convergence_diagnostics(a, g, big_n)?;
    Ok(MatherCertificate {
        c,
        cycle: cm.cycle,
        measure: lp.measure,
        c_lp: lp.c,
        potentials: h,
        dual_residual: (dual_value - c).abs(),
        diagnostics,
    })
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
    fn cycle_three_node() {
        let cm = mather_constant_cycle(&three_node()).unwrap();
        assert_eq!(cm.c.value(), 1.0);
        assert_eq!(cm.cycle, vec![0, 1, 2]);
    }

    #[test]
    fn cycle_diagonal_examples() {
        let cm = mather_constant_cycle(&CostMatrix::diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(cm.c.value(), 1.0);
        assert_eq!(cm.cycle, vec![1]);
        let zero_diag = CostMatrix::from_fn(4, |i, j| if i == j { 0.0 } else { 2.0 }).unwrap();
        assert_eq!(mather_constant_cycle(&zero_diag).unwrap().c.value(), 0.0);
    }

    #[test]
    fn acyclic_gives_infinite_constant() {
        let a = CostMatrix::from_rows(&[vec![INF, 1.0], vec![INF, INF]]).unwrap();
        let cm = mather_constant_cycle(&a).unwrap();
        assert!(cm.c.is_pos_inf());
        assert_eq!(cm.value(), Err(Error::NoFiniteCycle));
    }

    #[test]
    fn lp_three_node() {
        let lp = mather_constant_lp(&three_node()).unwrap();
        assert!((lp.c - 1.0).abs() < 1e-12);
        for (x, y) in [(0, 1), (1, 2), (2, 0)] {
            assert!((lp.measure.get(x, y) - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!(lp.measure.marginal_imbalance() < 1e-12);
    }

    #[test]
    fn lp_shift_equivariance() {
        let a = three_node();
        let base = mather_constant_lp(&a).unwrap();
        let shifted = mather_constant_lp(&a.shift(2.5)).unwrap();
        assert!((shifted.c - base.c - 2.5).abs() < 1e-12);
        for (p, q) in base.measure.matrix.iter().zip(&shifted.measure.matrix) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn lp_zero_diagonal() {
        let a = CostMatrix::from_fn(5, |i, j| if i == j { 0.0 } else { 1.0 + (i + j) as f64 }).unwrap();
        let lp = mather_constant_lp(&a).unwrap();
        assert!(lp.c.abs() < 1e-12);
        let support = lp.measure.support(1e-9);
        assert_eq!(support.len(), 1);
        assert_eq!(support[0].0, support[0].1);
    }

    #[test]
    fn diagnostics_examples() {
        let g = Potential::from_f64s(&[0.0, 2.0, 1.0]);
        let r = convergence_diagnostics(&three_node(), &g, 30).unwrap();
        assert_eq!(r.c, 1.0);
        for (n, est) in r.estimates.iter().enumerate() {
            assert!((est - 1.0).abs() <= r.fitted_k / (n + 1) as f64 + 1e-12);
        }
        assert_eq!(r.bounded_oscillation, Some(true));
        assert!(r.cesaro_ok);

        let zero_diag = CostMatrix::from_fn(3, |i, j| if i == j { 0.0 } else { 1.0 }).unwrap();
        let r = convergence_diagnostics(&zero_diag, &g, 10).unwrap();
        assert!(r.min_entries.iter().all(|&m| m == 0.0));

        let constant = CostMatrix::constant(3, 2.5);
        let r = convergence_diagnostics(&constant, &g, 10).unwrap();
        assert_eq!(r.c, 2.5);
        assert_eq!(r.fitted_k, 0.0);
        for (n, m) in r.min_entries.iter().enumerate() {
            assert_eq!(*m, 2.5 * (n + 1) as f64);
        }
    }

    #[test]
    fn diagnostics_not_applicable_when_reducible() {
        let r = convergence_diagnostics(&CostMatrix::diagonal(&[3.0, 1.0, 2.0]), &Potential::zeros(3), 5)
            .unwrap();
        assert_eq!(r.bounded_oscillation, None);
    }

    #[test]
    fn dual_certificate_examples() {
        let h = dual_certificate(&three_node()).unwrap();
        assert_eq!(h, Potential::zeros(3));
        let th = backward_apply(&three_node(), &h).unwrap();
        let gap: Vec<f64> = h.iter().zip(th.iter()).map(|(a, b)| (a - b).value()).collect();
        assert_eq!(gap, vec![1.0, 1.0, 1.0]);

        let diag = CostMatrix::diagonal(&[3.0, 1.0, 2.0]);
        let h = dual_certificate(&diag).unwrap();
        let th = backward_apply(&diag, &h).unwrap();
        let m = h.iter().zip(th.iter()).map(|(a, b)| (a - b).value()).fold(INF, f64::min);
        assert!((m - 1.0).abs() < 1e-12);

        let id = CostMatrix::identity(3);
        assert_eq!(dual_certificate(&id).unwrap(), Potential::zeros(3));
    }
}
