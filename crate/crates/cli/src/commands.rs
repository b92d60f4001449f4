//! One function per subcommand: solve, certify, and fill a report.

use kantorovich_core::entropic::{schrodinger_duality, semigroup_convergence, sinkhorn_solve};
use kantorovich_core::ergopt::{
    build_sft, ergodic_value, holonomic_lp, stochastic_holonomic_lp, subaction, Sense,
};
use kantorovich_core::mather::{mather_certificate, mather_constant_cycle};
use kantorovich_core::transfers::{dual_value, optimal_coupling, TransferProblem};
use kantorovich_core::{
    check_axioms, EntropicOp, Error, KantorovichOp, MarkovSemigroup, WeakKamBundle,
};
use serde_json::{json, Value};

use crate::problem::{schema_error, ProblemFile, SchemaError};
use crate::report::{dense, matrix, num, nums, Certificates};

/// Accuracy of the dense simplex; equalities that pass through an LP are
/// checked to this level rather than to `--tol`.
pub const LP_TOL: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct Settings {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub steps: usize,
    pub trials: usize,
}

#[derive(Debug)]
pub enum Failure {
    Input(SchemaError),
    Numeric(Error),
}

impl From<SchemaError> for Failure {
    fn from(e: SchemaError) -> Self {
        Failure::Input(e)
    }
}

/// Core errors that describe malformed input are reported against the field
/// they come from; everything else is a numerical failure.
fn classify(field: &str) -> impl Fn(Error) -> Failure + '_ {
    move |e| match e {
        Error::InvalidInput(_)
        | Error::DimensionMismatch { .. }
        | Error::NonpositiveScale(_)
        | Error::AbsoluteContinuityViolated(_)
        | Error::DeadState(_) => Failure::Input(schema_error(field, e.to_string())),
        other => Failure::Numeric(other),
    }
}

pub type Outcome = Result<(Value, Certificates), Failure>;

pub fn mather(p: &ProblemFile, s: &Settings) -> Outcome {
    let a = p.cost_matrix()?;
    let g = p.potential_or_zero()?;
    let mut cert = Certificates::default();
    let cycle = mather_constant_cycle(&a).map_err(classify("cost"))?;
    if cycle.c.is_pos_inf() {
        // No finite cycle: T^n g is eventually -inf and c = +inf.
        return Ok((json!({ "c": "inf", "c_cycle": "inf", "cycle": [] }), cert));
    }
    if !a.is_standard() {
        // Rows with no finite entry: only the cycle route applies.
        let c = cycle.c.value();
        return Ok((json!({ "c": num(c), "c_cycle": num(c), "cycle": cycle.cycle, "c_lp": null }), cert));
    }
    let m = mather_certificate(&a, &g, s.steps.max(1)).map_err(classify("cost"))?;
    let d = &m.diagnostics;
    let c_limit = *d.estimates.last().expect("at least one step");
    cert.check("cycle = lp", (m.c - m.c_lp).abs(), LP_TOL * m.c.abs().max(1.0));
    cert.residual("dual potential: T u + c = u", m.dual_residual, s.tol.max(LP_TOL));
    let limit_err = (c_limit - m.c).abs();
    match d.bounded_oscillation {
        Some(ok) => {
            cert.check("|m_N/N - c| <= K/N", limit_err, d.k_bound / d.estimates.len() as f64);
            cert.flag("bounded oscillation", ok);
        }
        None => cert.flag("cesaro averages", d.cesaro_ok),
    }
    let results = json!({
        "c": num(m.c),
        "c_cycle": num(m.c),
        "c_lp": num(m.c_lp),
        "c_limit": num(c_limit),
        "steps": d.estimates.len(),
        "cycle": m.cycle,
        "minimal_measure": dense(m.measure.rows, m.measure.cols, &m.measure.matrix),
        "dual_potential": m.potentials,
        "k_bound": num(d.k_bound),
        "fitted_k": num(d.fitted_k),
        "strongly_connected": d.strongly_connected,
        "estimates": nums(&d.estimates),
    });
    Ok((results, cert))
}

pub fn weakkam(p: &ProblemFile, s: &Settings) -> Outcome {
    let a = p.cost_matrix()?;
    let b = WeakKamBundle::compute(&a, s.tol).map_err(classify("cost"))?;
    let v = b.verify().map_err(classify("cost"))?;
    let mut cert = Certificates::default();
    cert.residual("T h + c = h", v.fixed_point, s.tol);
    cert.check("A_inf * A_inf = A_inf", v.idempotence, s.tol);
    cert.check("(A - c) * A_inf = A_inf", v.absorption_left, s.tol);
    cert.check("A_inf * (A - c) = A_inf", v.absorption_right, s.tol);
    cert.check("A_inf(z, z) = 0 on Aubry", v.aubry_diagonal, s.tol);
    cert.flag("minimal measure supported in D", v.mather_set);
    cert.check("psi0 = psi1 on Aubry", v.conjugate_on_aubry, s.tol);
    cert.check("A_inf factors through Aubry", v.null_factorization, s.tol);
    cert.flag("bundle", v.passes);
    let results = json!({
        "c": num(b.c),
        "peierls": matrix(&b.peierls),
        "aubry": b.aubry,
        "mather_d": b.mather_d,
        "h": b.h,
        "psi0": b.psi0,
        "psi1": b.psi1,
    });
    Ok((results, cert))
}

pub fn transfer(p: &ProblemFile, _s: &Settings) -> Outcome {
    let a = p.cost_matrix()?;
    let mu = p.measure("mu")?;
    let nu = p.measure("nu")?;
    let mut cert = Certificates::default();
    let problem = TransferProblem::cost_ot(a.clone()).map_err(classify("cost"))?;
    let Some((value, coupling, _)) = optimal_coupling(&a, &mu, &nu).map_err(classify("cost"))? else {
        // No coupling avoids the infinite entries.
        return Ok((json!({ "value": "inf" }), cert));
    };
    let dual = dual_value(&problem, &mu, &nu).map_err(classify("cost"))?;
    let scale = value.abs().max(1.0);
    cert.gap("transport", dual.gap, LP_TOL * scale);
    cert.check(
        "coupling marginals",
        coupling.marginal_residual(mu.weights(), nu.weights()),
        LP_TOL,
    );
    let results = json!({
        "value": num(value),
        "dual_value": num(dual.value),
        "coupling": dense(coupling.rows, coupling.cols, &coupling.matrix),
        "dual_potential": dual.potential,
    });
    Ok((results, cert))
}

pub fn sinkhorn(p: &ProblemFile, s: &Settings) -> Outcome {
    let a = p.cost_matrix()?;
    let mu = p.measure("mu")?;
    let nu = p.measure("nu")?;
    let eps = p.epsilon()?;
    let r = sinkhorn_solve(&a, &mu, &nu, eps, s.tol, s.max_iter).map_err(classify("cost"))?;
    let op = EntropicOp::new(a, nu, eps).map_err(classify("cost"))?;
    let g = p.potential_or_zero()?;
    let smooth = op.apply(&g).map_err(classify("potential"))?;
    let hard = op.max_plus_limit(&g).map_err(classify("potential"))?;
    let sandwich = smooth.sup_distance(&hard).map_err(classify("potential"))?;
    let width = eps * (1.0 / op.min_support_weight()).ln();
    // `T^ε g <= max-plus limit` holds exactly; the slack covers rounding.
    let below = smooth
        .iter()
        .zip(hard.iter())
        .map(|(x, y)| (x.value() - y.value()).max(0.0))
        .fold(0.0, f64::max);
    let mut cert = Certificates::default();
    cert.check("marginal residual", r.residual, s.tol);
    cert.check("contraction kappa < 1", r.kappa, 1.0 - f64::EPSILON);
    cert.check("epsilon sandwich", sandwich, width + 1e-12 * width.max(1.0));
    cert.check("T^eps g <= max-plus limit", below, 1e-12);
    let results = json!({
        "phi": nums(&r.phi),
        "psi": nums(&r.psi),
        "coupling": dense(r.coupling.rows, r.coupling.cols, &r.coupling.matrix),
        "iterations": r.iterations,
        "residual": num(r.residual),
        "kappa": num(r.kappa),
        "sandwich_width": num(width),
        "entropic_image": smooth,
        "max_plus_limit": hard,
    });
    Ok((results, cert))
}

pub fn schrodinger(p: &ProblemFile, s: &Settings) -> Outcome {
    let chain = p.stochastic()?;
    let nu = p.measure("nu")?;
    let f = p.potential_or_zero()?;
    let sg = MarkovSemigroup::new(chain).map_err(classify("transition_matrix"))?;
    let (dual, kl) = schrodinger_duality(&sg, &nu).map_err(classify("nu"))?;
    let mut cert = Certificates::default();
    cert.gap("schrodinger", (dual - kl).abs(), s.tol.max(1e-12 * kl.abs()));
    let limit = sg.limit_apply(&f).map_err(classify("potential"))?;
    let mut results = json!({
        "dual_value": num(dual),
        "relative_entropy": num(kl),
        "stationary": nums(sg.stationary()),
        "period": sg.period(),
        "limit": limit,
    });
    cert.flag("irreducible and aperiodic", sg.is_ergodic());
    if sg.is_ergodic() {
        let conv = semigroup_convergence(&sg, &f, s.tol, s.max_iter.min(1 << 20))
            .map_err(classify("transition_matrix"))?;
        cert.residual("|T_t f - limit|", *conv.errors.last().expect("nonempty"), s.tol);
        results["t_star"] = json!(conv.t_star);
    }
    Ok((results, cert))
}

pub fn ergopt(p: &ProblemFile, s: &Settings) -> Outcome {
    let transitions = p.transitions()?;
    let depth = p.depth.ok_or_else(|| schema_error("depth", "required by this command"))?;
    let table = p
        .potential_table
        .clone()
        .ok_or_else(|| schema_error("potential_table", "required by this command"))?;
    let sense = p.sense.unwrap_or(Sense::Min);
    let g = build_sft(transitions, depth, table).map_err(classify("potential_table"))?;
    let cyc = ergodic_value(&g, sense).map_err(classify("potential_table"))?;
    let lp = holonomic_lp(&g, sense).map_err(classify("potential_table"))?;
    let sub = subaction(&g, sense).map_err(classify("potential_table"))?;
    let scale = cyc.value.abs().max(1.0);
    let mut cert = Certificates::default();
    cert.check("cycle = holonomic lp", (cyc.value - lp.value).abs(), LP_TOL * scale);
    cert.gap("holonomic", (lp.value - lp.dual_value).abs(), LP_TOL * scale);
    cert.residual("calibration, sigma form", sub.sigma_residual, s.tol);
    cert.residual("calibration, tau form", sub.tau_residual, s.tol);
    let mut results = json!({
        "value": num(cyc.value),
        "sense": sense,
        "cycle": cyc.cycle,
        "period_word": cyc.period_word,
        "nodes": g.nodes,
        "holonomic_value": num(lp.value),
        "holonomic_measure": nums(&lp.measure),
        "dual_value": num(lp.dual_value),
        "dual_potential": nums(&lp.dual_potential),
        "subaction": sub.h,
        "forward_subaction": sub.forward,
    });
    if sense == Sense::Min {
        let st = stochastic_holonomic_lp(&g).map_err(classify("potential_table"))?;
        cert.gap("stochastic holonomic", st.gap, LP_TOL * scale);
        cert.check("stochastic <= deterministic", (st.primal - lp.value).max(0.0), 1e-9 * scale);
        results["stochastic_value"] = num(st.primal);
        results["stochastic_dual"] = num(st.dual);
    }
    Ok((results, cert))
}

/// Runs the axiom suite on every operator the problem file describes.
pub fn axioms(p: &ProblemFile, s: &Settings) -> Outcome {
    let mut ops: Vec<KantorovichOp> = Vec::new();
    if p.cost.is_some() {
        let a = p.cost_matrix()?;
        ops.push(KantorovichOp::MaxPlusCost(a.clone()));
        ops.push(KantorovichOp::ForwardCost(a.clone()));
        ops.push(KantorovichOp::Recession(a.clone()));
        if let (Some(eps), Some(_)) = (p.epsilon, &p.nu) {
            let op = EntropicOp::new(a, p.measure("nu")?, eps).map_err(classify("cost"))?;
            ops.push(KantorovichOp::Entropic(op));
        }
    }
    if p.transition_matrix.is_some() && p.kind != "sft" {
        let chain = p.stochastic()?;
        ops.push(KantorovichOp::Markov(chain.clone()));
        ops.push(KantorovichOp::Reduite(chain.clone()));
        ops.push(KantorovichOp::FillingScheme(chain));
    }
    if p.cost.is_none() {
        if let Some(nu) = &p.nu {
            let m = kantorovich_core::ProbVector::new(nu.clone()).map_err(|e| schema_error("nu", e.to_string()))?;
            ops.push(KantorovichOp::convex_energy(m, 0.0).map_err(classify("nu"))?);
        }
    }
    if ops.is_empty() {
        return Err(schema_error("cost", "axioms needs a cost, a transition_matrix or nu").into());
    }
    let mut cert = Certificates::default();
    let mut reports = Vec::new();
    for op in &ops {
        let r = check_axioms(op, s.trials, s.seed, s.tol).map_err(classify("cost"))?;
        let name = r.operator.clone();
        cert.check(&format!("{name} monotone"), r.monotonicity, r.tol);
        cert.check(&format!("{name} constant-affine"), r.constant_affinity, r.tol);
        cert.check(&format!("{name} curvature"), r.convexity, r.tol);
        if let Some(l) = r.lipschitz {
            cert.check(&format!("{name} sup-norm 1-Lipschitz"), l, r.tol);
        }
        reports.push(json!({
            "operator": name,
            "curvature": r.curvature,
            "trials": r.trials,
            "monotonicity": num(r.monotonicity),
            "constant_affinity": num(r.constant_affinity),
            "convexity": num(r.convexity),
            "lipschitz": r.lipschitz.map(num),
            "passes": r.passes,
        }));
    }
    Ok((json!({ "operators": reports }), cert))
}

