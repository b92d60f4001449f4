//! Kantorovich operators on a finite space, their combinators and an
//! empirical axiom checker.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::entropic::EntropicOp;
use crate::error::{check_dim, Error, Result};
use crate::ext::ExtReal;
use crate::measure::{ProbVector, StochasticMatrix};
use crate::minplus::{backward_apply, forward_apply, CostMatrix};
use crate::potential::Potential;

/// Shape of the operator's nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Curvature {
    /// Backward operators.
    Convex,
    /// Forward operators.
    Concave,
    /// Linear (Markov-like) operators, both backward and forward.
    Affine,
}

#[derive(Clone, Debug)]
pub enum KantorovichOp {
    /// `Tg(x) = max_y {g(y) - A(x, y)}`.
    MaxPlusCost(CostMatrix),
    /// `T⁺f(y) = min_x {f(x) + A(x, y)}`.
    ForwardCost(CostMatrix),
    Entropic(EntropicOp),
    /// `Sg = P g`.
    Markov(StochasticMatrix),
    /// `Tg = g ∨ P g`, whose iterates converge to the réduite.
    Reduite(StochasticMatrix),
    /// `Tg = P g⁺ - g⁻`.
    FillingScheme(StochasticMatrix),
    /// `Tg(x) = g(σ(x)) - Ā(x)` for a point map σ.
    AffineShift { map: Vec<usize>, potential: Vec<f64> },
    /// `Tg ≡ log <m, e^g> + k`, the Legendre transform of `KL(· | m)` shifted by `k`.
    ConvexEnergy { reference: ProbVector, offset: f64 },
    /// `T_r g(x) = max {g(y) : A(x, y) < +inf}`.
    Recession(CostMatrix),
    /// `λ T₁ + (1 - λ) T₂`.
    ConvexMix { lambda: f64, first: Box<KantorovichOp>, second: Box<KantorovichOp> },
    /// `T₁ ∨ T₂`.
    Max(Box<KantorovichOp>, Box<KantorovichOp>),
    /// `(λ·T) g = T(λ g) / λ`.
    Scaled { lambda: f64, op: Box<KantorovichOp> },
}

impl KantorovichOp {
    pub fn affine_shift(map: Vec<usize>, potential: Vec<f64>) -> Result<Self> {
        check_dim(map.len(), potential.len())?;
        let n = map.len();
        if let Some(&bad) = map.iter().find(|&&y| y >= n) {
            return Err(Error::InvalidInput(format!("map target {bad} out of range")));
        }
        if potential.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput("shift potential must be finite".into()));
        }
        Ok(KantorovichOp::AffineShift { map, potential })
    }

    pub fn convex_energy(reference: ProbVector, offset: f64) -> Result<Self> {
        if !reference.has_full_support() {
            return Err(Error::InvalidInput("reference measure needs full support".into()));
        }
        Ok(KantorovichOp::ConvexEnergy { reference, offset })
    }

    pub fn name(&self) -> &'static str {
        match self {
            KantorovichOp::MaxPlusCost(_) => "max_plus_cost",
            KantorovichOp::ForwardCost(_) => "forward_cost",
            KantorovichOp::Entropic(_) => "entropic",
            KantorovichOp::Markov(_) => "markov",
            KantorovichOp::Reduite(_) => "reduite",
            KantorovichOp::FillingScheme(_) => "filling_scheme",
            KantorovichOp::AffineShift { .. } => "affine_shift",
            KantorovichOp::ConvexEnergy { .. } => "convex_energy",
            KantorovichOp::Recession(_) => "recession",
            KantorovichOp::ConvexMix { .. } => "convex_mix",
            KantorovichOp::Max(..) => "max",
            KantorovichOp::Scaled { .. } => "scaled",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            KantorovichOp::MaxPlusCost(a)
            | KantorovichOp::ForwardCost(a)
            | KantorovichOp::Recession(a) => a.dim(),
            KantorovichOp::Entropic(op) => op.dim(),
            KantorovichOp::Markov(p) | KantorovichOp::Reduite(p) | KantorovichOp::FillingScheme(p) => {
                p.dim()
            }
            KantorovichOp::AffineShift { map, .. } => map.len(),
            KantorovichOp::ConvexEnergy { reference, .. } => reference.len(),
            KantorovichOp::ConvexMix { first, .. } => first.dim(),
            KantorovichOp::Max(a, _) => a.dim(),
            KantorovichOp::Scaled { op, .. } => op.dim(),
        }
    }

    pub fn curvature(&self) -> Curvature {
        match self {
            KantorovichOp::ForwardCost(_) => Curvature::Concave,
            KantorovichOp::Markov(_) | KantorovichOp::AffineShift { .. } => Curvature::Affine,
            KantorovichOp::ConvexMix { first, second, .. } => {
                match (first.curvature(), second.curvature()) {
                    (Curvature::Affine, c) | (c, Curvature::Affine) => c,
                    (c, _) => c,
                }
            }
            KantorovichOp::Scaled { op, .. } => op.curvature(),
            _ => Curvature::Convex,
        }
    }

    /// True when `T(0)` is finite, which makes the operator a sup-norm contraction.
    pub fn is_standard(&self) -> bool {
        match self {
            KantorovichOp::MaxPlusCost(a)
            | KantorovichOp::ForwardCost(a)
            | KantorovichOp::Recession(a) => a.is_standard(),
            KantorovichOp::ConvexMix { first, second, .. } | KantorovichOp::Max(first, second) => {
                first.is_standard() && second.is_standard()
            }
            KantorovichOp::Scaled { op, .. } => op.is_standard(),
            _ => true,
        }
    }

    /// Positively 1-homogeneous kinds, on which [`scale`] acts trivially.
    pub fn is_homogeneous(&self) -> bool {
        match self {
            KantorovichOp::Markov(_)
            | KantorovichOp::Reduite(_)
            | KantorovichOp::FillingScheme(_)
            | KantorovichOp::Recession(_) => true,
            KantorovichOp::ConvexMix { first, second, .. } | KantorovichOp::Max(first, second) => {
                first.is_homogeneous() && second.is_homogeneous()
            }
            KantorovichOp::Scaled { op, .. } => op.is_homogeneous(),
            _ => false,
        }
    }

    pub fn apply(&self, g: &Potential) -> Result<Potential> {
        check_dim(self.dim(), g.len())?;
        match self {
            KantorovichOp::MaxPlusCost(a) => backward_apply(a, g),
            KantorovichOp::ForwardCost(a) => forward_apply(a, g),
            KantorovichOp::Entropic(op) => op.apply(g),
            KantorovichOp::Markov(p) => {
                g.require_finite()?;
                Ok(Potential::from_f64s(&p.apply(&g.to_f64s())))
            }
            KantorovichOp::Reduite(p) => {
                g.require_finite()?;
                let pg = Potential::from_f64s(&p.apply(&g.to_f64s()));
                g.pointwise_max(&pg)
            }
            KantorovichOp::FillingScheme(p) => {
                g.require_finite()?;
                Ok(filling_step(p, &g.to_f64s()))
            }
            KantorovichOp::AffineShift { map, potential } => Ok(map
                .iter()
                .zip(potential)
                .map(|(&y, &a)| g[y] - ExtReal::from_f64(a))
                .collect()),
            KantorovichOp::ConvexEnergy { reference, offset } => {
                if !g.is_bounded_above() || !g.is_proper() {
                    return Err(Error::InvalidInput("potential must be proper and bounded above".into()));
                }
                let v = log_mean_exp(reference.weights(), &g.to_f64s()) + offset;
                Ok(Potential::constant(g.len(), v))
            }
            KantorovichOp::Recession(a) => Ok((0..a.dim())
                .map(|x| {
                    ExtReal::max_of(
                        a.row(x)
                            .iter()
                            .zip(g.iter())
                            .filter(|(c, _)| c.is_finite())
                            .map(|(_, gy)| gy),
                    )
                })
                .collect()),
            KantorovichOp::ConvexMix { lambda, first, second } => {
                let t1 = first.apply(g)?;
                let t2 = second.apply(g)?;
                t1.zip_with(&t2, |a, b| mix(*lambda, a, b))
            }
            KantorovichOp::Max(first, second) => first.apply(g)?.pointwise_max(&second.apply(g)?),
            KantorovichOp::Scaled { lambda, op } => {
                Ok(op.apply(&g.scale(*lambda))?.scale(1.0 / lambda))
            }
        }
    }

    /// `n`-fold application.
    pub fn iterate(&self, g: &Potential, n: usize) -> Result<Potential> {
        let mut cur = g.clone();
        for _ in 0..n {
            cur = self.apply(&cur)?;
        }
        Ok(cur)
    }
}

fn mix(lambda: f64, a: ExtReal, b: ExtReal) -> ExtReal {
    if lambda == 1.0 {
        a
    } else if lambda == 0.0 {
        b
    } else {
        a.scale(lambda) + b.scale(1.0 - lambda)
    }
}

/// `log sum_i w_i e^{v_i}` over positive weights, max-shifted.
pub(crate) fn log_mean_exp(weights: &[f64], values: &[f64]) -> f64 {
    let shift = values
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&v, _)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = values
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&v, &w)| w * (v - shift).exp())
        .sum();
    shift + s.ln()
}

fn filling_step(p: &StochasticMatrix, g: &[f64]) -> Potential {
    let pos: Vec<f64> = g.iter().map(|v| v.max(0.0)).collect();
    let ppos = p.apply(&pos);
    ppos.iter()
        .zip(g)
        .map(|(a, v)| ExtReal::from_f64(a + v.min(0.0)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineMode {
    Convex,
    Max,
}

/// `λ T₁ + (1 - λ) T₂` or `T₁ ∨ T₂`.
///
/// Two max-plus costs under `Max` collapse to the cost `min(A, B)`.
pub fn combine(
    op1: &KantorovichOp,
    op2: &KantorovichOp,
    mode: CombineMode,
    lambda: f64,
) -> Result<KantorovichOp> {
    check_dim(op1.dim(), op2.dim())?;
    match mode {
        CombineMode::Convex => {
            if !(0.0..=1.0).contains(&lambda) {
                return Err(Error::InvalidInput(format!("mixing weight {lambda} not in [0, 1]")));
            }
            let (c1, c2) = (op1.curvature(), op2.curvature());
            if (c1 == Curvature::Convex && c2 == Curvature::Concave)
                || (c1 == Curvature::Concave && c2 == Curvature::Convex)
            {
                return Err(Error::InvalidInput(
                    "cannot mix a backward and a forward operator".into(),
                ));
            }
            Ok(KantorovichOp::ConvexMix {
                lambda,
                first: Box::new(op1.clone()),
                second: Box::new(op2.clone()),
            })
        }
        CombineMode::Max => {
            if op1.curvature() == Curvature::Concave || op2.curvature() == Curvature::Concave {
                return Err(Error::InvalidInput(
                    "the maximum of forward operators is not a forward operator".into(),
                ));
            }
            if let (KantorovichOp::MaxPlusCost(a), KantorovichOp::MaxPlusCost(b)) = (op1, op2) {
                return Ok(KantorovichOp::MaxPlusCost(a.entrywise_min(b)?));
            }
            Ok(KantorovichOp::Max(Box::new(op1.clone()), Box::new(op2.clone())))
        }
    }
}

/// `(λ·T) g = T(λ g) / λ`, simplified where a closed form exists.
pub fn scale(op: &KantorovichOp, lambda: f64) -> Result<KantorovichOp> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::NonpositiveScale(lambda));
    }
    if lambda == 1.0 || op.is_homogeneous() {
        return Ok(op.clone());
    }
    Ok(match op {
        KantorovichOp::MaxPlusCost(a) => KantorovichOp::MaxPlusCost(a.scale(1.0 / lambda)),
        KantorovichOp::ForwardCost(a) => KantorovichOp::ForwardCost(a.scale(1.0 / lambda)),
        KantorovichOp::Entropic(e) => KantorovichOp::Entropic(e.scaled(lambda)?),
        KantorovichOp::Scaled { lambda: inner, op } => {
            let total = inner * lambda;
            if total == 1.0 {
                (**op).clone()
            } else {
                KantorovichOp::Scaled { lambda: total, op: op.clone() }
            }
        }
        other => KantorovichOp::Scaled { lambda, op: Box::new(other.clone()) },
    })
}

/// Largest violation of each axiom over the sampled potentials.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomReport {
    pub operator: String,
    pub curvature: Curvature,
    pub trials: usize,
    pub monotonicity: f64,
    pub constant_affinity: f64,
    pub convexity: f64,
    /// `None` when the operator is not standard and no contraction is expected.
    pub lipschitz: Option<f64>,
    pub tol: f64,
    pub passes: bool,
}

impl AxiomReport {
    pub fn max_violation(&self) -> f64 {
        self.monotonicity
            .max(self.constant_affinity)
            .max(self.convexity)
            .max(self.lipschitz.unwrap_or(0.0))
    }
}

/// Entries on a `2^-32` grid so that sums with dyadic costs are exact.
fn sample_value(rng: &mut ChaCha8Rng) -> f64 {
    const GRID: f64 = 4294967296.0;
    let v: f64 = rng.random_range(-10.0..=10.0);
    (v * GRID).round() / GRID
}

/// Draws a potential with entries uniform in `[-10, 10]`.
pub fn sample_potential(rng: &mut ChaCha8Rng, n: usize) -> Potential {
    (0..n).map(|_| ExtReal::from_f64(sample_value(rng))).collect()
}

/// Amount by which `a <= b` fails, with equal infinities and `a = -inf` or `b = +inf` counting as 0.
fn excess(a: ExtReal, b: ExtReal) -> f64 {
    if a <= b {
        0.0
    } else if a.is_finite() && b.is_finite() {
        a.value() - b.value()
    } else {
        f64::INFINITY
    }
}

fn max_excess(a: &Potential, b: &Potential) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| excess(x, y)).fold(0.0, f64::max)
}

/// Samples `trials` triples `(g₁, g₂, λ)` and records the worst violation of
/// monotonicity, affinity on constants, convexity (concavity for forward
/// operators) and the sup-norm 1-Lipschitz bound.
pub fn check_axioms(op: &KantorovichOp, trials: usize, seed: u64, tol: f64) -> Result<AxiomReport> {
    if trials == 0 {
        return Err(Error::InvalidInput("at least one trial is required".into()));
    }
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const LAMBDAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
    let curvature = op.curvature();
    let standard = op.is_standard();

    let (mut mono, mut affine, mut convex, mut lip) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for trial in 0..trials {
        let g1 = sample_potential(&mut rng, n);
        let g2 = sample_potential(&mut rng, n);
        check_dim(n, g1.len())?;
        let t1 = op.apply(&g1)?;
        let t2 = op.apply(&g2)?;

        let lo = g1.pointwise_min(&g2)?;
        let hi = g1.pointwise_max(&g2)?;
        mono = mono.max(max_excess(&op.apply(&lo)?, &op.apply(&hi)?));

        let c = sample_value(&mut rng);
        let shifted = op.apply(&g1.add_scalar(c))?;
        let expected = t1.add_scalar(c);
        affine = affine.max(shifted.sup_distance(&expected)?);

        let random_lambda = (rng.random_range(0.0..=1.0) * 256.0_f64).round() / 256.0;
        for lambda in [LAMBDAS[trial % LAMBDAS.len()], random_lambda] {
            let mixed_in = g1.zip_with(&g2, |a, b| mix(lambda, a, b))?;
            let lhs = op.apply(&mixed_in)?;
            let rhs = t1.zip_with(&t2, |a, b| mix(lambda, a, b))?;
            let v = match curvature {
                Curvature::Convex => max_excess(&lhs, &rhs),
                Curvature::Concave => max_excess(&rhs, &lhs),
                Curvature::Affine => lhs.sup_distance(&rhs)?,
            };
            convex = convex.max(v);
        }

        if standard {
            let dist_in = g1.sup_distance(&g2)?;
            let dist_out = t1.sup_distance(&t2)?;
            lip = lip.max((dist_out - dist_in).max(0.0));
        }
    }

    let lipschitz = standard.then_some(lip);
    let passes = mono <= tol && affine <= tol && convex <= tol && lip <= tol;
    Ok(AxiomReport {
        operator: op.name().to_string(),
        curvature,
        trials,
        monotonicity: mono,
        constant_affinity: affine,
        convexity: convex,
        lipschitz,
        tol,
        passes,
    })
}

/// Iterates `g ↦ g ∨ P g` to the least `P`-superharmonic majorant of `g`.
pub fn reduite_fixed_point(
    p: &StochasticMatrix,
    g: &Potential,
    tol: f64,
    max_iter: usize,
) -> Result<Potential> {
    check_dim(p.dim(), g.len())?;
    g.require_finite()?;
    let op = KantorovichOp::Reduite(p.clone());
    let mut cur = g.clone();
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let next = op.apply(&cur)?;
        residual = next.sup_distance(&cur)?;
        cur = next;
        if residual <= tol {
            return Ok(cur);
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual })
}

/// `(T^k g)_{k = 0..=n}` for the filling scheme `Tg = P g⁺ - g⁻`.
pub fn filling_scheme_iterate(p: &StochasticMatrix, g: &Potential, n: usize) -> Result<Vec<Potential>> {
    check_dim(p.dim(), g.len())?;
    g.require_finite()?;
    let mut out = Vec::with_capacity(n + 1);
    out.push(g.clone());
    for _ in 0..n {
        let last = out.last().expect("non-empty").to_f64s();
        out.push(filling_step(p, &last));
    }
    Ok(out)
}
