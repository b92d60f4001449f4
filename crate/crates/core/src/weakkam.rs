//! Peierls barrier, Aubry and Mather sets, weak KAM solutions and conjugate
//! pairs of a finite cost, with checkable certificates for each identity.
//!
//! The barrier `A_∞(x, y) = liminf_n (A_n(x, y) - n c)` is computed from the
//! critical nodes of `B = A - c`: with `B⁺` the Kleene plus of `B`,
//! `A_∞(x, y) = min_{z : B⁺(z, z) = 0} B⁺(x, z) + B⁺(z, y)`. To keep integer
//! data exact, `B` is formed as `len · A - total` from the optimal cycle and the
//! result is divided by `len` at the end.

use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::ext::ExtReal;
use crate::graph::{is_strongly_connected, reflexive_transitive_closure, weak_components};
use crate::mather::{finite_subsolution, mather_constant_cycle, CycleMean};
use crate::minplus::{backward_apply, convolve, forward_apply, kleene_plus, CostMatrix};
use crate::potential::Potential;

/// `len · A - total` for the optimal cycle, and `len`.
pub(crate) fn scaled_reduced_cost(a: &CostMatrix, cycle: &CycleMean) -> Result<(CostMatrix, f64)> {
    if !cycle.c.is_finite() {
        return Err(Error::NoFiniteCycle);
    }
    let len = cycle.cycle.len() as f64;
    let total = cycle.total;
    Ok((a.map_finite(|v| len * v - total), len))
}

/// Barrier from an already scaled reduced cost `B = len·(A - c)`.
fn barrier_from_reduced(b: &CostMatrix, len: f64) -> Result<(CostMatrix, Vec<usize>)> {
    let n = b.dim();
    let bp = kleene_plus(b)?;
    let zero_tol = 1e-9 * b.max_abs_finite().max(1.0);
    let critical: Vec<usize> = (0..n)
        .filter(|&z| bp.get(z, z).is_finite() && bp.get(z, z).value().abs() <= zero_tol)
        .collect();
    let barrier = CostMatrix::from_fn(n, |x, y| {
        let best = critical
            .iter()
            .map(|&z| {
                let (u, v) = (bp.get(x, z), bp.get(z, y));
                if u.is_finite() && v.is_finite() {
                    u.value() + v.value()
                } else {
                    f64::INFINITY
                }
            })
            .fold(f64::INFINITY, f64::min);
        best / len
    })?;
    Ok((barrier, critical))
}

/// Peierls barrier `A_∞` of `A` at level `c`.
///
/// When `c` is the Mather constant the exact cycle-scaled route is used.
/// A `c` above it yields [`Error::NegativeCycle`]; below it no node is
/// critical and every entry is `+inf`.
pub fn peierls_barrier(a: &CostMatrix, c: f64) -> Result<CostMatrix> {
    let cm = mather_constant_cycle(a)?;
    let true_c = cm.value()?;
    let scale = 1e-12 * a.max_abs_finite().max(1.0);
    if (c - true_c).abs() <= scale {
        let (b, len) = scaled_reduced_cost(a, &cm)?;
        Ok(barrier_from_reduced(&b, len)?.0)
    } else {
        Ok(barrier_from_reduced(&a.shift(-c), 1.0)?.0)
    }
}

/// Truncated liminf: entrywise `min_{N/2 <= k <= N} (A_k - k c)`.
///
/// On a finite graph each entry of `A_k - k c` is either eventually periodic
/// or grows without bound. An entry whose minimum over the last quarter of the
/// window exceeds its minimum over the third quarter is still rising and is
/// reported as `+inf`.
pub fn peierls_oracle(a: &CostMatrix, c: f64, big_n: usize) -> Result<CostMatrix> {
    if big_n < 4 {
        return Err(Error::InvalidInput("window length must be at least 4".into()));
    }
    let n = a.dim();
    let (lo, mid) = (big_n / 2, (3 * big_n) / 4);
    let mut early = vec![f64::INFINITY; n * n];
    let mut late = vec![f64::INFINITY; n * n];
    let mut ak = a.clone();
    for k in 1..=big_n {
        if k > 1 {
            ak = convolve(&ak, a)?;
        }
        if k >= lo {
            let target = if k < mid { &mut early } else { &mut late };
            for (b, e) in target.iter_mut().zip(ak.entries()) {
                if e.is_finite() {
                    *b = b.min(e.value() - k as f64 * c);
                }
            }
        }
    }
    let tol = 1e-9 * (1.0 + a.max_abs_finite());
    CostMatrix::from_fn(n, |x, y| {
        let (e, l) = (early[x * n + y], late[x * n + y]);
        if l > e + tol {
            f64::INFINITY
        } else {
            e.min(l)
        }
    })
}

/// Outcome of comparing the critical-node formula with the truncated liminf.
#[derive(Clone, Debug, Serialize)]
pub struct PeierlsComparison {
    pub max_difference: f64,
    /// Pairs where the two disagree beyond `tol`.
    pub flagged: Vec<(usize, usize)>,
}

pub fn compare_peierls(a: &CostMatrix, window: usize, tol: f64) -> Result<PeierlsComparison> {
    let c = mather_constant_cycle(a)?.value()?;
    let formula = peierls_barrier(a, c)?;
    let oracle = peierls_oracle(a, c, window)?;
    let n = a.dim();
    let mut flagged = Vec::new();
    let mut max_difference: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            let d = formula.get(x, y).distance(oracle.get(x, y));
            max_difference = max_difference.max(d);
            if d > tol {
                flagged.push((x, y));
            }
        }
    }
    Ok(PeierlsComparison { max_difference, flagged })
}

/// The full weak KAM picture of a finite cost.
#[derive(Clone, Debug, Serialize)]
pub struct WeakKamBundle {
    pub c: f64,
    pub cost: CostMatrix,
    pub peierls: CostMatrix,
    pub aubry: Vec<usize>,
    pub mather_d: Vec<(usize, usize)>,
    /// Backward weak KAM solution, `-inf` off the basin of the Aubry set.
    pub h: Potential,
    pub psi0: Potential,
    pub psi1: Potential,
    pub tol: f64,
}

/// Measured residual of each bundle invariant.
#[derive(Clone, Debug, Serialize)]
pub struct BundleChecks {
    pub fixed_point: f64,
    pub idempotence: f64,
    pub absorption_left: f64,
    pub absorption_right: f64,
    pub aubry_diagonal: f64,
    pub mather_set: bool,
    pub conjugate_on_aubry: f64,
    pub null_factorization: f64,
    pub passes: bool,
}

/// Weak KAM data in units of `len · (A - c)`, exact for integer costs.
pub(crate) struct ScaledSolution {
    pub barrier: CostMatrix,
    pub critical: Vec<usize>,
    pub len: f64,
    pub total: f64,
    pub h: Potential,
    pub psi0: Potential,
    pub psi1: Potential,
}

pub(crate) fn scaled_solution(a: &CostMatrix) -> Result<ScaledSolution> {
    let n = a.dim();
    let cm = mather_constant_cycle(a)?;
    let (b, len) = scaled_reduced_cost(a, &cm)?;
    let (barrier, critical) = barrier_from_reduced(&b, 1.0)?;
    let psi0 = backward_apply(&barrier, &Potential::zeros(n))?;
    let psi1 = forward_apply(&barrier, &psi0)?;

    // Pin h = 0 at the lowest-index critical node of every weak component.
    let comp = weak_components(&a.adjacency());
    let mut pin = vec![None; n];
    for &z in &critical {
        if pin[comp[z]].is_none() {
            pin[comp[z]] = Some(psi0[z]);
        }
    }
    let h = (0..n)
        .map(|x| match pin[comp[x]] {
            Some(p) if psi0[x].is_finite() => psi0[x] - p,
            _ => ExtReal::NEG_INF,
        })
        .collect();
    Ok(ScaledSolution { barrier, critical, len, total: cm.total, h, psi0, psi1 })
}

impl WeakKamBundle {
    pub fn compute(a: &CostMatrix, tol: f64) -> Result<Self> {
        let n = a.dim();
        let s = scaled_solution(a)?;
        let c = s.total / s.len;
        let len = s.len;
        let unscale = |u: &Potential| u.map(|v| if v.is_finite() { ExtReal::from_f64(v.value() / len) } else { v });
        let peierls = s.barrier.map_finite(|v| v / len);
        let aubry = s.critical.clone();

        let mut mather_d = Vec::new();
        for x in 0..n {
            for y in 0..n {
                let (axy, back) = (a.get(x, y), peierls.get(y, x));
                if axy.is_finite() && back.is_finite() && (axy.value() + back.value() - c).abs() <= tol {
                    mather_d.push((x, y));
                }
            }
        }
        Ok(WeakKamBundle {
            c,
            cost: a.clone(),
            peierls,
            aubry,
            mather_d,
            h: unscale(&s.h),
            psi0: unscale(&s.psi0),
            psi1: unscale(&s.psi1),
            tol,
        })
    }

    pub fn dim(&self) -> usize {
        self.cost.dim()
    }

    /// Nodes where `h` is finite: those that reach the Aubry set.
    pub fn basin(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&x| self.h[x].is_finite()).collect()
    }

    pub fn is_aubry(&self, x: usize) -> bool {
        self.aubry.binary_search(&x).is_ok()
    }

    /// `max |T u + c - u|` over entries where `u` is finite.
    pub fn fixed_point_residual(&self, u: &Potential) -> Result<f64> {
        let tu = backward_apply(&self.cost, u)?;
        Ok((0..self.dim())
            .filter(|&x| u[x].is_finite())
            .map(|x| {
                let lhs = tu[x] + ExtReal::from_f64(self.c);
                lhs.distance(u[x])
            })
            .fold(0.0, f64::max))
    }

    pub fn verify(&self) -> Result<BundleChecks> {
        let tol = self.tol;
        let n = self.dim();
        let fixed_point = self.fixed_point_residual(&self.h)?;
        let idempotence = convolve(&self.peierls, &self.peierls)?.max_distance(&self.peierls)?;
        let reduced = self.cost.shift(-self.c);
        let absorption_left = convolve(&reduced, &self.peierls)?.max_distance(&self.peierls)?;
        let absorption_right = convolve(&self.peierls, &reduced)?.max_distance(&self.peierls)?;
        let aubry_diagonal = self
            .aubry
            .iter()
            .map(|&x| self.peierls.get(x, x).value().abs())
            .fold(0.0, f64::max);
        let non_aubry_ok = (0..n)
            .filter(|x| !self.is_aubry(*x))
            .all(|x| self.peierls.get(x, x).value() > tol);

        let mather_set = (0..n).all(|x| {
            (0..n).all(|y| {
                let (axy, back) = (self.cost.get(x, y), self.peierls.get(y, x));
                let tight = axy.is_finite()
                    && back.is_finite()
                    && (axy.value() + back.value() - self.c).abs() <= tol;
                tight == self.mather_d.contains(&(x, y))
            })
        });

        let conjugate_on_aubry = self
            .aubry
            .iter()
            .map(|&x| self.psi0[x].distance(self.psi1[x]))
            .fold(0.0, f64::max);

        let mut null_factorization: f64 = 0.0;
        for x in 0..n {
            for y in 0..n {
                let through = ExtReal::min_of(self.aubry.iter().filter_map(|&z| {
                    let (u, v) = (self.peierls.get(x, z), self.peierls.get(z, y));
                    (u.is_finite() && v.is_finite()).then(|| u + v)
                }));
                null_factorization = null_factorization.max(through.distance(self.peierls.get(x, y)));
            }
        }

        let passes = fixed_point <= tol
            && idempotence <= tol
            && absorption_left <= tol
            && absorption_right <= tol
            && aubry_diagonal <= tol
            && non_aubry_ok
            && mather_set
            && conjugate_on_aubry <= tol
            && null_factorization <= tol;
        Ok(BundleChecks {
            fixed_point,
            idempotence,
            absorption_left,
            absorption_right,
            aubry_diagonal,
            mather_set,
            conjugate_on_aubry,
            null_factorization,
            passes,
        })
    }

    /// A finite `g` with `T g + c <= g` and equality on the Aubry set:
    /// `h` where finite, extended by a shifted shortest-walk subsolution.
    pub fn finite_certificate(&self) -> Result<Potential> {
        if self.aubry.is_empty() {
            return Err(Error::CertificateUnavailable("empty Aubry set".into()));
        }
        let cm = mather_constant_cycle(&self.cost)?;
        let sub = finite_subsolution(&self.cost, &cm)?;
        let shift = self
            .aubry
            .iter()
            .map(|&x| (sub[x] - self.h[x]).value())
            .fold(0.0, f64::max);
        let lowered = sub.add_scalar(-shift);
        let g = self.h.pointwise_max(&lowered)?;
        if !g.is_finite() {
            return Err(Error::CertificateUnavailable("no finite extension".into()));
        }
        Ok(g)
    }
}

/// `(T∞⁻f, T∞⁺f)` for the weak KAM operators of the bundle.
pub fn weak_kam_ops(bundle: &WeakKamBundle, f: &Potential) -> Result<(Potential, Potential)> {
    check_dim(bundle.dim(), f.len())?;
    f.require_finite()?;
    Ok((backward_apply(&bundle.peierls, f)?, forward_apply(&bundle.peierls, f)?))
}

#[derive(Clone, Debug, Serialize)]
pub struct ConjugatePair {
    pub psi0: Potential,
    pub psi1: Potential,
    /// `‖T∞⁻ψ₁ - ψ₀‖`.
    pub backward_residual: f64,
    /// `T∞⁺ T∞⁻ f >= f`.
    pub lower_envelope_ok: bool,
    /// `T∞⁻ T∞⁺ ψ₁ <= ψ₁`.
    pub upper_envelope_ok: bool,
    /// `‖T∞⁻ T∞⁺ T∞⁻ f - T∞⁻ f‖`.
    pub triple_collapse: f64,
    /// `max |ψ₀ - ψ₁|` on the Aubry set.
    pub aubry_gap: f64,
    pub passes: bool,
}

fn dominated(lo: &Potential, hi: &Potential, tol: f64) -> bool {
    lo.iter().zip(hi.iter()).all(|(a, b)| a <= b || a.value() <= b.value() + tol)
}

/// `ψ₀ = T∞⁻f`, `ψ₁ = T∞⁺ψ₀`, with the conjugacy certificates.
pub fn conjugate_pair(bundle: &WeakKamBundle, f: &Potential) -> Result<ConjugatePair> {
    check_dim(bundle.dim(), f.len())?;
    f.require_finite()?;
    let tol = bundle.tol;
    let a = &bundle.peierls;
    let psi0 = backward_apply(a, f)?;
    let psi1 = forward_apply(a, &psi0)?;
    let back = backward_apply(a, &psi1)?;
    let backward_residual = back.sup_distance(&psi0)?;
    let lower_envelope_ok = dominated(f, &psi1, tol);
    let upper = backward_apply(a, &forward_apply(a, &psi1)?)?;
    let upper_envelope_ok = dominated(&upper, &psi1, tol);
    let triple_collapse = back.sup_distance(&psi0)?;
    let aubry_gap = bundle
        .aubry
        .iter()
        .map(|&x| psi0[x].distance(psi1[x]))
        .fold(0.0, f64::max);
    let passes = backward_residual <= tol
        && lower_envelope_ok
        && upper_envelope_ok
        && triple_collapse <= tol
        && aubry_gap <= tol;
    Ok(ConjugatePair {
        psi0,
        psi1,
        backward_residual,
        lower_envelope_ok,
        upper_envelope_ok,
        triple_collapse,
        aubry_gap,
        passes,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SubsolutionPhi {
    pub phi: Potential,
    /// `max (T φ + c - φ)⁺`.
    pub residual: f64,
    pub is_subsolution: bool,
    /// Every node has some `n <= N` with `T^n g + n c < g`.
    pub dichotomy_holds: bool,
    /// Nodes where `T^n g + n c` is still strictly decreasing at `n = N`.
    pub diverging: Vec<usize>,
}

/// `φ_N = min_{1 <= n <= N} (T^n g + n c)`.
pub fn subsolution_phi(a: &CostMatrix, c: f64, g: &Potential, big_n: usize) -> Result<SubsolutionPhi> {
    check_dim(a.dim(), g.len())?;
    g.require_finite()?;
    if big_n == 0 {
        return Err(Error::InvalidInput("N must be at least 1".into()));
    }
    let n = a.dim();
    let tol = 1e-9 * (1.0 + a.max_abs_finite());
    let mut cur = g.clone();
    let mut phi = Potential::constant(n, f64::INFINITY);
    let mut below = vec![false; n];
    let mut prev = g.clone();
    for k in 1..=big_n {
        prev = cur.clone();
        cur = backward_apply(a, &cur)?.add_scalar(c);
        phi = phi.pointwise_min(&cur)?;
        for x in 0..n {
            below[x] |= cur[x] < g[x];
        }
        let _ = k;
    }
    let tphi = backward_apply(a, &phi)?.add_scalar(c);
    let residual = tphi
        .iter()
        .zip(phi.iter())
        .map(|(l, r)| if l <= r { 0.0 } else { l.distance(r) })
        .fold(0.0, f64::max);
    let diverging = (0..n)
        .filter(|&x| big_n > 1 && cur[x].value() < prev[x].value() - tol && cur[x] == phi[x])
        .collect();
    Ok(SubsolutionPhi {
        phi,
        residual,
        is_subsolution: residual <= tol,
        dichotomy_holds: below.iter().all(|&b| b),
        diverging,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PowerBoundedReport {
    /// `sup_x (T^n g + n c)`, n = 1..=N.
    pub sups: Vec<f64>,
    /// Bound `K` with `|min A_n - n c| <= K`.
    pub k_bound: f64,
    /// `Some(ok)` for strongly connected costs: every sup lies in `[min g - K, max g + K]`.
    pub plateau_ok: Option<bool>,
    /// Fixed point obtained from the decreasing sup scheme.
    pub h: Potential,
    pub residual: f64,
    pub converged: bool,
}

/// Power-boundedness report and a weak KAM solution from
/// `S = max_{N/2 <= m <= N} (T^m g + m c)` on the Aubry basin, refined by iteration.
pub fn power_bounded_check(a: &CostMatrix, g: &Potential, big_n: usize, c: f64) -> Result<PowerBoundedReport> {
    check_dim(a.dim(), g.len())?;
    g.require_finite()?;
    if big_n < 2 {
        return Err(Error::InvalidInput("N must be at least 2".into()));
    }
    let n = a.dim();
    let bundle = WeakKamBundle::compute(a, 1e-9)?;
    let diag = crate::mather::convergence_diagnostics(a, g, 2)?;
    let k_bound = diag.k_bound;
    let (gmin, gmax) = (g.min().value(), g.max().value());

    let mut sups = Vec::with_capacity(big_n);
    let mut cur = g.clone();
    let mut window = Potential::constant(n, f64::NEG_INFINITY);
    for m in 1..=big_n {
        cur = backward_apply(a, &cur)?.add_scalar(c);
        sups.push(cur.max().value());
        if m >= big_n / 2 {
            window = window.pointwise_max(&cur)?;
        }
    }
    let slack = 1e-9 * (1.0 + a.max_abs_finite()) * big_n as f64;
    let plateau_ok = is_strongly_connected(&a.adjacency()).then(|| {
        sups.iter()
            .all(|&s| s >= gmin - k_bound - slack && s <= gmax + k_bound + slack)
    });

    // Off the basin the decreasing limit is -inf.
    let mut h: Potential = (0..n)
        .map(|x| if bundle.h[x].is_finite() { window[x] } else { ExtReal::NEG_INF })
        .collect();
    let tol = 1e-9 * (1.0 + a.max_abs_finite());
    let mut residual = bundle_residual(a, c, &h)?;
    let mut iters = 0;
    while residual > tol && iters < 4 * big_n {
        let next = backward_apply(a, &h)?.add_scalar(c);
        h = next;
        residual = bundle_residual(a, c, &h)?;
        iters += 1;
    }
    Ok(PowerBoundedReport { sups, k_bound, plateau_ok, h, residual, converged: residual <= tol })
}

fn bundle_residual(a: &CostMatrix, c: f64, u: &Potential) -> Result<f64> {
    let tu = backward_apply(a, u)?.add_scalar(c);
    Ok((0..u.len())
        .filter(|&x| u[x].is_finite() || tu[x].is_finite())
        .map(|x| tu[x].distance(u[x]))
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, Serialize)]
pub struct RecessionEnvelope {
    /// `T_r g(x) = max {g(y) : A(x, y) < +inf}`.
    pub recession: Potential,
    /// `ĝ(x) = max` of g over everything reachable from x.
    pub envelope: Potential,
    /// `T g + inf A <= T_r g <= ĝ`.
    pub sandwich_ok: bool,
    /// `(ĝ)^ = ĝ`.
    pub idempotent: bool,
    /// When `c = inf A`: the decreasing limit of `T^n ĝ + n c`.
    pub weak_kam: Option<Potential>,
    pub weak_kam_residual: Option<f64>,
}

pub fn recession_envelope(a: &CostMatrix, g: &Potential, max_iter: usize) -> Result<RecessionEnvelope> {
    check_dim(a.dim(), g.len())?;
    g.require_finite()?;
    let n = a.dim();
    let op = crate::operator::KantorovichOp::Recession(a.clone());
    let recession = op.apply(g)?;
    let reach = reflexive_transitive_closure(&a.adjacency());
    let hat = |u: &Potential| -> Potential {
        (0..n)
            .map(|x| ExtReal::max_of((0..n).filter(|&y| reach[x][y]).map(|y| u[y])))
            .collect()
    };
    let envelope = hat(g);
    let idempotent = hat(&envelope) == envelope;

    let inf_a = a.min_entry();
    let tg = backward_apply(a, g)?;
    let sandwich_ok = (0..n).all(|x| {
        let lower = if tg[x].is_finite() { tg[x] + inf_a } else { tg[x] };
        lower <= recession[x] && recession[x] <= envelope[x]
    });

    let mut weak_kam = None;
    let mut weak_kam_residual = None;
    let cm = mather_constant_cycle(a)?;
    if cm.c.is_finite() && (cm.c.value() - inf_a.value()).abs() <= 1e-12 * (1.0 + inf_a.value().abs()) {
        let c = cm.c.value();
        let bundle = WeakKamBundle::compute(a, 1e-9)?;
        let mut cur: Potential = (0..n)
            .map(|x| if bundle.h[x].is_finite() { envelope[x] } else { ExtReal::NEG_INF })
            .collect();
        for _ in 0..max_iter {
            let next = backward_apply(a, &cur)?.add_scalar(c);
            let done = next.sup_distance(&cur)? <= 1e-12;
            cur = next;
            if done {
                break;
            }
        }
        weak_kam_residual = Some(bundle_residual(a, c, &cur)?);
        weak_kam = Some(cur);
    }
    Ok(RecessionEnvelope { recession, envelope, sandwich_ok, idempotent, weak_kam, weak_kam_residual })
}

/// For distance-like costs (`A ⋆ A >= A`) with `c = 0`, the decreasing limit
/// `lim T^n g`; `None` when the hypotheses fail.
pub fn distance_like_limit(a: &CostMatrix, g: &Potential, max_iter: usize) -> Result<Option<Potential>> {
    g.require_finite()?;
    let aa = convolve(a, a)?;
    if !aa.dominates(a, 0.0) {
        return Ok(None);
    }
    let cm = mather_constant_cycle(a)?;
    if !cm.c.is_finite() || cm.c.value() != 0.0 {
        return Ok(None);
    }
    let mut cur = g.clone();
    for _ in 0..max_iter {
        let next = backward_apply(a, &cur)?;
        if next == cur {
            return Ok(Some(cur));
        }
        cur = next;
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: f64::NAN })
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

    fn grid_cost(m: usize, p: f64) -> CostMatrix {
        CostMatrix::from_fn(m + 1, |i, j| ((i as f64 - j as f64).abs() / m as f64).powf(p)).unwrap()
    }

    #[test]
    fn barrier_three_node_is_zero() {
        let pb = peierls_barrier(&three_node(), 1.0).unwrap();
        assert!(pb.entries().iter().all(|e| e.value() == 0.0));
        let oracle = peierls_oracle(&three_node(), 1.0, 60).unwrap();
        assert_eq!(oracle, pb);
    }

    #[test]
    fn barrier_diagonal_example() {
        let a = CostMatrix::diagonal(&[3.0, 1.0, 2.0]);
        let pb = peierls_barrier(&a, 1.0).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                let expect = if (x, y) == (1, 1) { 0.0 } else { INF };
                assert_eq!(pb.get(x, y).value(), expect);
            }
        }
        assert_eq!(peierls_oracle(&a, 1.0, 40).unwrap(), pb);
    }

    #[test]
    fn barrier_of_idempotent_distance_cost() {
        let a = grid_cost(4, 1.0);
        assert_eq!(peierls_barrier(&a, 0.0).unwrap(), a);
        for big_n in [4, 7, 20] {
            assert_eq!(peierls_oracle(&a, 0.0, big_n).unwrap(), a);
        }
    }

    #[test]
    fn barrier_at_wrong_level() {
        assert!(matches!(
            peierls_barrier(&three_node(), 1.5),
            Err(Error::NegativeCycle { .. })
        ));
        let below = peierls_barrier(&three_node(), 0.5).unwrap();
        assert!(below.entries().iter().all(|e| e.is_pos_inf()));
    }

    #[test]
    fn bundle_three_node() {
        let b = WeakKamBundle::compute(&three_node(), 1e-9).unwrap();
        assert_eq!(b.c, 1.0);
        assert_eq!(b.aubry, vec![0, 1, 2]);
        assert_eq!(b.h, Potential::zeros(3));
        assert_eq!(b.mather_d, vec![(0, 1), (1, 2), (2, 0)]);
        assert!(b.verify().unwrap().passes);
    }

    #[test]
    fn bundle_diagonal_example() {
        let b = WeakKamBundle::compute(&CostMatrix::diagonal(&[3.0, 1.0, 2.0]), 1e-9).unwrap();
        assert_eq!(b.c, 1.0);
        assert_eq!(b.aubry, vec![1]);
        assert_eq!(b.basin(), vec![1]);
        assert_eq!(b.h[1].value(), 0.0);
        assert!(b.h[0].is_neg_inf() && b.h[2].is_neg_inf());
        assert!(b.verify().unwrap().passes);
    }

    #[test]
    fn weak_kam_ops_examples() {
        let b = WeakKamBundle::compute(&three_node(), 1e-9).unwrap();
        let f = Potential::from_f64s(&[0.0, 2.0, 1.0]);
        let (minus, plus) = weak_kam_ops(&b, &f).unwrap();
        assert_eq!(minus, Potential::constant(3, 2.0));
        assert_eq!(plus, Potential::constant(3, 0.0));
        assert_eq!(b.fixed_point_residual(&minus).unwrap(), 0.0);

        let d = WeakKamBundle::compute(&CostMatrix::diagonal(&[3.0, 1.0, 2.0]), 1e-9).unwrap();
        let g = Potential::from_f64s(&[4.0, -1.5, 2.0]);
        let (minus, _) = weak_kam_ops(&d, &g).unwrap();
        assert_eq!(minus[1].value(), -1.5);
        assert!(minus[0].is_neg_inf() && minus[2].is_neg_inf());

        let id = WeakKamBundle::compute(&grid_cost(3, 1.0), 1e-9).unwrap();
        let (zero, _) = weak_kam_ops(&id, &Potential::zeros(4)).unwrap();
        assert_eq!(zero, Potential::zeros(4));
    }

    #[test]
    fn conjugate_pair_examples() {
        let b = WeakKamBundle::compute(&three_node(), 1e-9).unwrap();
        let cp = conjugate_pair(&b, &Potential::from_f64s(&[0.0, 2.0, 1.0])).unwrap();
        assert_eq!(cp.psi0, Potential::constant(3, 2.0));
        assert_eq!(cp.psi1, Potential::constant(3, 2.0));
        assert!(cp.passes);

        let d = WeakKamBundle::compute(&CostMatrix::diagonal(&[3.0, 1.0, 2.0]), 1e-9).unwrap();
        let cp = conjugate_pair(&d, &Potential::from_f64s(&[5.0, 7.0, 6.0])).unwrap();
        assert_eq!(cp.psi0[1].value(), 7.0);
        assert_eq!(cp.psi1[1].value(), 7.0);
        assert!(cp.psi0[0].is_neg_inf() && cp.psi0[2].is_neg_inf());
        assert!(cp.passes);

        let cp = conjugate_pair(&b, &Potential::constant(3, -4.0)).unwrap();
        assert_eq!(cp.psi0, Potential::constant(3, -4.0));
        assert_eq!(cp.psi1, Potential::constant(3, -4.0));
    }

    #[test]
    fn subsolution_examples() {
        let s = subsolution_phi(&three_node(), 1.0, &Potential::zeros(3), 3).unwrap();
        assert_eq!(s.phi, Potential::zeros(3));
        assert!(s.is_subsolution);
        assert_eq!(s.residual, 0.0);

        let b = WeakKamBundle::compute(&three_node(), 1e-9).unwrap();
        let s = subsolution_phi(&three_node(), 1.0, &b.h, 7).unwrap();
        assert_eq!(s.phi, b.h);

        let diag = CostMatrix::diagonal(&[3.0, 1.0, 2.0]);
        let s = subsolution_phi(&diag, 1.0, &Potential::zeros(3), 6).unwrap();
        assert_eq!(s.phi[0].value(), 6.0 * (1.0 - 3.0));
        assert_eq!(s.phi[2].value(), 6.0 * (1.0 - 2.0));
        assert_eq!(s.phi[1].value(), 0.0);
        assert_eq!(s.diverging, vec![0, 2]);
        assert!(!s.dichotomy_holds);
    }

    #[test]
    fn power_bounded_examples() {
        let g = Potential::from_f64s(&[0.0, 2.0, 1.0]);
        let r = power_bounded_check(&three_node(), &g, 30, 1.0).unwrap();
        assert_eq!(r.plateau_ok, Some(true));
        assert!(r.converged, "{r:?}");

        let r = power_bounded_check(&three_node(), &Potential::constant(3, 2.0), 10, 1.0).unwrap();
        assert!(r.sups.iter().all(|&s| s == 2.0));

        // Quadratic cost on the grid {k/8}: T^n g rises toward max g.
        let a = grid_cost(8, 2.0);
        let g = Potential::from_f64s(&[0.0, 0.3, -1.0, 0.9, 0.1, 0.5, 0.2, -0.4, 0.6]);
        let r = power_bounded_check(&a, &g, 40, 0.0).unwrap();
        assert!(r.converged);
        let max_g = 0.9;
        for x in 0..9 {
            assert!(r.h[x].value() <= max_g);
            assert!(r.h[x].value() >= max_g - 1.0 / 8.0 - 1e-12);
        }
    }

    #[test]
    fn recession_examples() {
        let g = Potential::from_f64s(&[0.0, 2.0, 1.0]);
        let full = CostMatrix::constant(3, 1.0);
        let r = recession_envelope(&full, &g, 100).unwrap();
        assert_eq!(r.envelope, Potential::constant(3, 2.0));
        assert!(r.sandwich_ok && r.idempotent);

        let cyc = CostMatrix::from_rows(&[
            vec![INF, 1.0, INF],
            vec![INF, INF, 1.0],
            vec![1.0, INF, INF],
        ])
        .unwrap();
        let r = recession_envelope(&cyc, &g, 100).unwrap();
        assert_eq!(r.envelope, Potential::constant(3, 2.0));
        // c = inf A = 1 here, so the weak KAM limit is produced.
        assert_eq!(r.weak_kam_residual, Some(0.0));

        let r = recession_envelope(&CostMatrix::identity(3), &g, 100).unwrap();
        assert_eq!(r.envelope, g);
        assert_eq!(r.weak_kam, Some(g.clone()));

        let diag = CostMatrix::diagonal(&[3.0, 1.0, 2.0]);
        let r = recession_envelope(&diag, &g, 100).unwrap();
        let h = r.weak_kam.unwrap();
        assert_eq!(h[1].value(), 2.0);
        assert!(h[0].is_neg_inf() && h[2].is_neg_inf());
    }

    #[test]
    fn distance_like_shortcut() {
        let a = grid_cost(5, 1.0);
        let g = Potential::from_f64s(&[0.0, 0.9, 0.1, 0.0, 0.7, 0.2]);
        let h = distance_like_limit(&a, &g, 100).unwrap().unwrap();
        let b = WeakKamBundle::compute(&a, 1e-9).unwrap();
        assert!(b.fixed_point_residual(&h).unwrap() <= 1e-12);
        assert!(distance_like_limit(&grid_cost(5, 2.0), &g, 100).unwrap().is_none());
    }

    #[test]
    fn finite_certificate_extends_h() {
        let a = CostMatrix::from_rows(&[
            vec![2.0, 0.0, INF],
            vec![INF, 3.0, 5.0],
            vec![INF, INF, 1.0],
        ])
        .unwrap();
        let b = WeakKamBundle::compute(&a, 1e-9).unwrap();
        let g = b.finite_certificate().unwrap();
        assert!(g.is_finite());
        let tg = backward_apply(&a, &g).unwrap();
        let m = g.iter().zip(tg.iter()).map(|(x, y)| (x - y).value()).fold(INF, f64::min);
        assert!((m - b.c).abs() < 1e-12);
    }
}
