//! Linear transfers between probability vectors: optimal transport values,
//! Kantorovich duality, transfer convolution and the small constructor zoo.

use serde::Serialize;

use crate::entropic::relative_entropy;
use crate::error::{check_dim, Error, Result};
use crate::ext::ExtReal;
use crate::graph::reflexive_transitive_closure;
use crate::lp::LinearProgram;
use crate::measure::{Coupling, ProbVector};
use crate::minplus::CostMatrix;
use crate::operator::KantorovichOp;
use crate::potential::Potential;

const PUSH_FORWARD_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub enum TransferProblem {
    /// `𝒯(μ, ν) = min <A, π>` over couplings of `μ` and `ν`.
    CostOt(CostMatrix),
    /// `𝒯(μ, ν) = KL(ν | m) - k`.
    ConvexEnergyKl { reference: ProbVector, offset: f64 },
    /// `0` when a coupling lives on the allowed pairs, `+inf` otherwise.
    TransferSet(Vec<Vec<bool>>),
    /// `0` when `ν = F#μ`, `+inf` otherwise.
    PointMap(Vec<usize>),
}

impl TransferProblem {
    pub fn cost_ot(a: CostMatrix) -> Result<Self> {
        if !a.is_standard() {
            return Err(Error::InvalidInput(format!(
                "cost rows {:?} have no finite entry",
                a.infinite_rows()
            )));
        }
        Ok(TransferProblem::CostOt(a))
    }

    pub fn convex_energy_kl(reference: ProbVector, offset: f64) -> Result<Self> {
        if !reference.has_full_support() {
            return Err(Error::InvalidInput("reference measure needs full support".into()));
        }
        Ok(TransferProblem::ConvexEnergyKl { reference, offset })
    }

    pub fn transfer_set(allowed: Vec<Vec<bool>>) -> Result<Self> {
        let n = allowed.len();
        for row in &allowed {
            check_dim(n, row.len())?;
        }
        Ok(TransferProblem::TransferSet(allowed))
    }

    pub fn point_map(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        if let Some(&bad) = map.iter().find(|&&y| y >= n) {
            return Err(Error::InvalidInput(format!("map target {bad} out of range")));
        }
        Ok(TransferProblem::PointMap(map))
    }

    pub fn dim(&self) -> usize {
        match self {
            TransferProblem::CostOt(a) => a.dim(),
            TransferProblem::ConvexEnergyKl { reference, .. } => reference.len(),
            TransferProblem::TransferSet(allowed) => allowed.len(),
            TransferProblem::PointMap(map) => map.len(),
        }
    }

    /// Feasibility pattern of a transfer set as a 0 / `+inf` cost.
    fn set_cost(allowed: &[Vec<bool>]) -> CostMatrix {
        let n = allowed.len();
        CostMatrix::from_fn(n, |x, y| if allowed[x][y] { 0.0 } else { f64::INFINITY })
            .expect("0 and +inf entries are valid costs")
    }

    /// The backward Kantorovich operator whose integral is the Legendre transform.
    pub fn operator(&self) -> Result<KantorovichOp> {
        Ok(match self {
            TransferProblem::CostOt(a) => KantorovichOp::MaxPlusCost(a.clone()),
            TransferProblem::ConvexEnergyKl { reference, offset } => {
                KantorovichOp::convex_energy(reference.clone(), *offset)?
            }
            TransferProblem::TransferSet(allowed) => KantorovichOp::Recession(Self::set_cost(allowed)),
            TransferProblem::PointMap(map) => {
                KantorovichOp::affine_shift(map.clone(), vec![0.0; map.len()])?
            }
        })
    }
}

/// Optimal coupling of `μ` and `ν` for a cost, `None` when no coupling has finite cost.
pub fn optimal_coupling(a: &CostMatrix, mu: &ProbVector, nu: &ProbVector) -> Result<Option<(f64, Coupling, Vec<f64>)>> {
    let n = a.dim();
    check_dim(n, mu.len())?;
    check_dim(n, nu.len())?;
    let edges: Vec<(usize, usize, f64)> = a.finite_edges().collect();
    let mut lp = LinearProgram::new(edges.iter().map(|e| e.2).collect());
    for x in 0..n {
        let terms: Vec<(usize, f64)> =
            edges.iter().enumerate().filter(|(_, e)| e.0 == x).map(|(j, _)| (j, 1.0)).collect();
        lp.add_sparse_equality(&terms, mu.weights()[x])?;
    }
    for y in 0..n {
        let terms: Vec<(usize, f64)> =
            edges.iter().enumerate().filter(|(_, e)| e.1 == y).map(|(j, _)| (j, 1.0)).collect();
        lp.add_sparse_equality(&terms, nu.weights()[y])?;
    }
    let sol = match lp.solve() {
        Ok(sol) => sol,
        Err(Error::Infeasible) => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut matrix = vec![0.0; n * n];
    for (&(x, y, _), &v) in edges.iter().zip(&sol.x) {
        matrix[x * n + y] = v;
    }
    Ok(Some((sol.objective, Coupling::new(n, n, matrix)?, sol.duals)))
}

/// `𝒯(μ, ν)`.
pub fn transfer_value(p: &TransferProblem, mu: &ProbVector, nu: &ProbVector) -> Result<ExtReal> {
    check_dim(p.dim(), mu.len())?;
    check_dim(p.dim(), nu.len())?;
    Ok(match p {
        TransferProblem::CostOt(a) => match optimal_coupling(a, mu, nu)? {
            Some((v, _, _)) => ExtReal::from_f64(v),
            None => ExtReal::INF,
        },
        TransferProblem::ConvexEnergyKl { reference, offset } => {
            ExtReal::from_f64(relative_entropy(nu.weights(), reference.weights()) - offset)
        }
        TransferProblem::TransferSet(allowed) => {
            match optimal_coupling(&TransferProblem::set_cost(allowed), mu, nu)? {
                Some(_) => ExtReal::ZERO,
                None => ExtReal::INF,
            }
        }
        TransferProblem::PointMap(map) => {
            if push_forward(map, mu).total_variation(nu)? <= PUSH_FORWARD_TOL {
                ExtReal::ZERO
            } else {
                ExtReal::INF
            }
        }
    })
}

/// `F#μ`.
pub fn push_forward(map: &[usize], mu: &ProbVector) -> ProbVector {
    let mut out = vec![0.0; map.len()];
    for (x, &w) in mu.weights().iter().enumerate() {
        out[map[x]] += w;
    }
    ProbVector::normalized(out).expect("push-forward of a probability vector")
}

/// `<ν, g> - <μ, T g>` for the transfer's backward operator.
pub fn dual_objective(p: &TransferProblem, mu: &ProbVector, nu: &ProbVector, g: &Potential) -> Result<f64> {
    let tg = p.operator()?.apply(g)?;
    let a = g.integrate(nu.weights());
    let b = tg.integrate(mu.weights());
    Ok(a.checked_sub(b)?.value())
}

#[derive(Clone, Debug, Serialize)]
pub struct DualSolution {
    pub value: f64,
    pub potential: Potential,
    /// `|primal - dual|`.
    pub gap: f64,
}

/// Dual value `sup_g <ν, g> - <μ, T g>` with a maximizing `g`, evaluated
/// independently of the primal objective.
pub fn dual_value(p: &TransferProblem, mu: &ProbVector, nu: &ProbVector) -> Result<DualSolution> {
    let primal = transfer_value(p, mu, nu)?;
    if !primal.is_finite() {
        return Err(Error::PrimalInfinite);
    }
    let n = p.dim();
    let potential = match p {
        TransferProblem::CostOt(a) => {
            let (_, _, duals) = optimal_coupling(a, mu, nu)?.ok_or(Error::PrimalInfinite)?;
            let v = &duals[n..2 * n];
            let shift = v[0];
            Potential::from_f64s(&v.iter().map(|y| y - shift).collect::<Vec<_>>())
        }
        TransferProblem::ConvexEnergyKl { reference, .. } => nu
            .weights()
            .iter()
            .zip(reference.weights())
            .map(|(&q, &m)| if q > 0.0 { ExtReal::from_f64((q / m).ln()) } else { ExtReal::NEG_INF })
            .collect(),
        TransferProblem::TransferSet(_) | TransferProblem::PointMap(_) => Potential::zeros(n),
    };
    let value = dual_objective(p, mu, nu, &potential)?;
    Ok(DualSolution { value, potential, gap: (primal.value() - value).abs() })
}

/// `max_σ {<σ, g> - 𝒯(μ, σ)}` by an LP over couplings with first marginal `μ`.
pub fn legendre_value(a: &CostMatrix, mu: &ProbVector, g: &Potential) -> Result<f64> {
    let n = a.dim();
    check_dim(n, mu.len())?;
    g.require_finite()?;
    let edges: Vec<(usize, usize, f64)> = a.finite_edges().collect();
    let mut lp = LinearProgram::new(edges.iter().map(|&(_, y, c)| c - g[y].value()).collect());
    for x in 0..n {
        let terms: Vec<(usize, f64)> =
            edges.iter().enumerate().filter(|(_, e)| e.0 == x).map(|(j, _)| (j, 1.0)).collect();
        lp.add_sparse_equality(&terms, mu.weights()[x])?;
    }
    Ok(-lp.solve()?.objective)
}

/// `inf_σ 𝒯₁(μ, σ) + 𝒯₂(σ, ν)` as one LP over both couplings.
pub fn transfer_convolve(
    p1: &TransferProblem,
    p2: &TransferProblem,
    mu: &ProbVector,
    nu: &ProbVector,
) -> Result<ExtReal> {
    let (TransferProblem::CostOt(a1), TransferProblem::CostOt(a2)) = (p1, p2) else {
        return Err(Error::InvalidInput("joint convolution needs two cost transfers".into()));
    };
    let n = a1.dim();
    check_dim(n, a2.dim())?;
    check_dim(n, mu.len())?;
    check_dim(n, nu.len())?;
    let e1: Vec<(usize, usize, f64)> = a1.finite_edges().collect();
    let e2: Vec<(usize, usize, f64)> = a2.finite_edges().collect();
    let off = e1.len();
    let mut lp = LinearProgram::new(e1.iter().chain(&e2).map(|e| e.2).collect());
    for x in 0..n {
        let terms: Vec<(usize, f64)> =
            e1.iter().enumerate().filter(|(_, e)| e.0 == x).map(|(j, _)| (j, 1.0)).collect();
        lp.add_sparse_equality(&terms, mu.weights()[x])?;
    }
    for z in 0..n {
        let mut terms: Vec<(usize, f64)> =
            e1.iter().enumerate().filter(|(_, e)| e.1 == z).map(|(j, _)| (j, 1.0)).collect();
        terms.extend(e2.iter().enumerate().filter(|(_, e)| e.0 == z).map(|(j, _)| (off + j, -1.0)));
        lp.add_sparse_equality(&terms, 0.0)?;
    }
    for y in 0..n {
        let terms: Vec<(usize, f64)> =
            e2.iter().enumerate().filter(|(_, e)| e.1 == y).map(|(j, _)| (off + j, 1.0)).collect();
        lp.add_sparse_equality(&terms, nu.weights()[y])?;
    }
    match lp.solve() {
        Ok(sol) => Ok(ExtReal::from_f64(sol.objective)),
        Err(Error::Infeasible) => Ok(ExtReal::INF),
        Err(e) => Err(e),
    }
}

/// Whether the allowed pairs of a transfer set form a transitive relation.
pub fn is_transitive(allowed: &[Vec<bool>]) -> bool {
    let n = allowed.len();
    (0..n).all(|x| {
        (0..n).all(|z| !allowed[x][z] || (0..n).all(|y| !allowed[z][y] || allowed[x][y]))
    })
}

/// Weak KAM solution of the point-map transfer: the value of
/// `ĝ(x) = max_k g(F^k x)` along the cycle that the orbit of `x` enters.
pub fn point_map_weak_kam(map: &[usize], g: &Potential) -> Result<Potential> {
    let n = map.len();
    check_dim(n, g.len())?;
    if let Some(&bad) = map.iter().find(|&&y| y >= n) {
        return Err(Error::InvalidInput(format!("map target {bad} out of range")));
    }
    let adj: Vec<Vec<usize>> = map.iter().map(|&y| vec![y]).collect();
    let reach = reflexive_transitive_closure(&adj);
    let hat: Vec<ExtReal> = (0..n)
        .map(|x| ExtReal::max_of((0..n).filter(|&y| reach[x][y]).map(|y| g[y])))
        .collect();
    // After n steps every orbit sits on its limit cycle, where ĝ is constant.
    Ok((0..n)
        .map(|x| {
            let mut y = x;
            for _ in 0..n {
                y = map[y];
            }
            hat[y]
        })
        .collect())
}

/// Orbit envelope `ĝ` of a point map.
pub fn point_map_envelope(map: &[usize], g: &Potential) -> Result<Potential> {
    check_dim(map.len(), g.len())?;
    let adj: Vec<Vec<usize>> = map.iter().map(|&y| vec![y]).collect();
    let reach = reflexive_transitive_closure(&adj);
    Ok((0..map.len())
        .map(|x| ExtReal::max_of((0..map.len()).filter(|&y| reach[x][y]).map(|y| g[y])))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minplus::backward_apply;

    fn swap_cost() -> CostMatrix {
        CostMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn ot_dirac_and_forced_plan() {
        let a = CostMatrix::from_rows(&[vec![0.0, 4.0, 2.5], vec![1.0, 0.0, 7.0], vec![3.0, 6.0, 0.0]])
            .unwrap();
        let p = TransferProblem::cost_ot(a.clone()).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                let v = transfer_value(&p, &ProbVector::dirac(3, x), &ProbVector::dirac(3, y)).unwrap();
                assert!((v.value() - a.get(x, y).value()).abs() < 1e-12);
            }
        }
        let p = TransferProblem::cost_ot(swap_cost()).unwrap();
        let (mu, nu) = (ProbVector::dirac(2, 0), ProbVector::dirac(2, 1));
        assert_eq!(transfer_value(&p, &mu, &nu).unwrap().value(), 1.0);
        let d = dual_value(&p, &mu, &nu).unwrap();
        assert!((d.value - 1.0).abs() < 1e-12);
        assert!(d.potential[1].value() - d.potential[0].value() >= 1.0 - 1e-12);
    }

    #[test]
    fn identity_cost_equal_marginals() {
        let p = TransferProblem::cost_ot(CostMatrix::identity(3)).unwrap();
        let mu = ProbVector::new(vec![0.2, 0.5, 0.3]).unwrap();
        assert_eq!(transfer_value(&p, &mu, &mu).unwrap().value(), 0.0);
        let d = dual_value(&p, &mu, &mu).unwrap();
        assert!(d.value.abs() < 1e-12);
        let other = ProbVector::uniform(3);
        assert!(transfer_value(&p, &mu, &other).unwrap().is_pos_inf());
        assert!(matches!(dual_value(&p, &mu, &other), Err(Error::PrimalInfinite)));
    }

    #[test]
    fn convex_energy_closed_form() {
        let p = TransferProblem::convex_energy_kl(ProbVector::uniform(2), 0.0).unwrap();
        let (mu, nu) = (ProbVector::uniform(2), ProbVector::dirac(2, 0));
        let v = transfer_value(&p, &mu, &nu).unwrap().value();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        let d = dual_value(&p, &mu, &nu).unwrap();
        assert!(d.gap < 1e-12);
        assert!(d.potential[1].is_neg_inf());

        let p = TransferProblem::convex_energy_kl(ProbVector::new(vec![0.25, 0.75]).unwrap(), 0.5).unwrap();
        let nu = ProbVector::new(vec![0.6, 0.4]).unwrap();
        let d = dual_value(&p, &mu, &nu).unwrap();
        let kl = 0.6 * (0.6f64 / 0.25).ln() + 0.4 * (0.4f64 / 0.75).ln();
        assert!((d.value - (kl - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn transfer_sets_and_point_maps() {
        let allowed = vec![vec![true, true], vec![false, true]];
        assert!(is_transitive(&allowed));
        let p = TransferProblem::transfer_set(allowed).unwrap();
        let mu = ProbVector::uniform(2);
        assert_eq!(transfer_value(&p, &mu, &ProbVector::dirac(2, 1)).unwrap(), ExtReal::ZERO);
        assert!(transfer_value(&p, &mu, &ProbVector::dirac(2, 0)).unwrap().is_pos_inf());
        assert!(p.operator().unwrap().is_homogeneous());

        let p = TransferProblem::point_map(vec![1, 0, 0]).unwrap();
        let mu = ProbVector::new(vec![0.5, 0.25, 0.25]).unwrap();
        let nu = ProbVector::new(vec![0.5, 0.5, 0.0]).unwrap();
        assert_eq!(transfer_value(&p, &mu, &nu).unwrap(), ExtReal::ZERO);
        assert!(transfer_value(&p, &mu, &mu).unwrap().is_pos_inf());
        assert_eq!(dual_value(&p, &mu, &nu).unwrap().value, 0.0);
    }

    #[test]
    fn convolution_examples() {
        let pts = [0.0, 0.5, 1.0];
        let quad = CostMatrix::from_fn(3, |i, j| (pts[i] - pts[j]) * (pts[i] - pts[j])).unwrap();
        let p = TransferProblem::cost_ot(quad).unwrap();
        let v = transfer_convolve(&p, &p, &ProbVector::dirac(3, 0), &ProbVector::dirac(3, 2)).unwrap();
        assert!((v.value() - 0.5).abs() < 1e-12);

        let lin = TransferProblem::cost_ot(CostMatrix::from_fn(3, |i, j| (pts[i] - pts[j]).abs()).unwrap())
            .unwrap();
        let (mu, nu) = (ProbVector::new(vec![0.7, 0.2, 0.1]).unwrap(), ProbVector::new(vec![0.1, 0.3, 0.6]).unwrap());
        let joint = transfer_convolve(&lin, &lin, &mu, &nu).unwrap();
        let single = transfer_value(&lin, &mu, &nu).unwrap();
        assert!((joint.value() - single.value()).abs() < 1e-12);

        let id = TransferProblem::cost_ot(CostMatrix::identity(3)).unwrap();
        let joint = transfer_convolve(&id, &lin, &mu, &nu).unwrap();
        assert!((joint.value() - single.value()).abs() < 1e-12);
    }

    #[test]
    fn legendre_matches_operator_integral() {
        let a = CostMatrix::from_rows(&[vec![0.0, 2.0, 1.0], vec![3.0, 0.5, 1.0], vec![1.0, 1.0, 0.0]]).unwrap();
        let mu = ProbVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        let g = Potential::from_f64s(&[0.5, 2.0, -1.0]);
        let lhs = backward_apply(&a, &g).unwrap().integrate(mu.weights()).value();
        assert!((lhs - legendre_value(&a, &mu, &g).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn point_map_examples() {
        let g = Potential::from_f64s(&[0.0, 3.0]);
        assert_eq!(point_map_weak_kam(&[0, 1], &g).unwrap(), g);
        assert_eq!(point_map_weak_kam(&[1, 0], &g).unwrap(), Potential::constant(2, 3.0));

        // Everything flows into the fixed point 0.
        let map = [0, 0, 1, 2, 2, 4];
        let g = Potential::from_f64s(&[1.0, 5.0, -2.0, 7.0, 0.0, 9.0]);
        let h = point_map_weak_kam(&map, &g).unwrap();
        assert_eq!(h, Potential::constant(6, 1.0));
        let hat = point_map_envelope(&map, &g).unwrap();
        assert_eq!(hat.to_f64s(), vec![1.0, 5.0, 5.0, 7.0, 5.0, 9.0]);
        for x in 0..6 {
            assert_eq!(h[map[x]], h[x]);
            assert!(h[x] <= hat[x]);
        }
    }
}
