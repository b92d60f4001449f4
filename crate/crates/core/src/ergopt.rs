//! Ergodic optimization on subshifts of finite type, truncated to cylinders.
//!
//! A potential of depth `k` is a table over admissible words of length
//! `k + 1`, indexed in base `r` with the first symbol most significant. The
//! graph has the admissible `k`-words as nodes and one edge per admissible
//! `(k + 1)`-word `w`, from `w[..k]` to `w[1..]`, weighted by the table.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::lp::LinearProgram;
use crate::mather::mather_constant_cycle;
use crate::minplus::{backward_apply, CostMatrix};
use crate::potential::Potential;
use crate::weakkam::scaled_solution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Min,
    Max,
}

#[derive(Clone, Debug, Serialize)]
pub struct SftEdge {
    pub from: usize,
    pub to: usize,
    pub word: Vec<usize>,
    pub weight: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SftGraph {
    pub alphabet: usize,
    pub transitions: Vec<Vec<bool>>,
    pub depth: usize,
    pub nodes: Vec<Vec<usize>>,
    pub edges: Vec<SftEdge>,
    /// The potential table this graph was built from.
    pub table: Vec<f64>,
}

/// All admissible words of length `len`, in lexicographic order.
fn admissible_words(m: &[Vec<bool>], len: usize) -> Vec<Vec<usize>> {
    let r = m.len();
    let mut words: Vec<Vec<usize>> = (0..r).map(|s| vec![s]).collect();
    for _ in 1..len {
        words = words
            .into_iter()
            .flat_map(|w| {
                let last = *w.last().expect("words are nonempty");
                (0..r).filter(move |&s| m[last][s]).map(move |s| {
                    let mut v = w.clone();
                    v.push(s);
                    v
                })
            })
            .collect();
    }
    words
}

fn word_index(r: usize, w: &[usize]) -> usize {
    w.iter().fold(0, |acc, &s| acc * r + s)
}

pub fn build_sft(m: Vec<Vec<bool>>, depth: usize, table: Vec<f64>) -> Result<SftGraph> {
    let r = m.len();
    if r == 0 || m.iter().any(|row| row.len() != r) {
        return Err(Error::InvalidInput("transition matrix must be square and nonempty".into()));
    }
    if depth == 0 {
        return Err(Error::InvalidInput("depth must be at least 1".into()));
    }
    let expected = r.pow(depth as u32 + 1);
    if table.len() != expected {
        return Err(Error::DimensionMismatch { expected, found: table.len() });
    }
    let nodes = admissible_words(&m, depth);
    let index = |w: &[usize]| nodes.binary_search_by(|n| n.as_slice().cmp(w)).ok();
    let mut edges = Vec::new();
    for word in admissible_words(&m, depth + 1) {
        let weight = table[word_index(r, &word)];
        if !weight.is_finite() {
            return Err(Error::InvalidInput(format!("potential on admissible word {word:?} is not finite")));
        }
        let from = index(&word[..depth]).expect("prefix of an admissible word");
        let to = index(&word[1..]).expect("suffix of an admissible word");
        edges.push(SftEdge { from, to, word, weight });
    }
    let mut out_deg = vec![0; nodes.len()];
    let mut in_deg = vec![0; nodes.len()];
    for e in &edges {
        out_deg[e.from] += 1;
        in_deg[e.to] += 1;
    }
    let dead: Vec<Vec<usize>> = (0..nodes.len())
        .filter(|&i| out_deg[i] == 0 || in_deg[i] == 0)
        .map(|i| nodes[i].clone())
        .collect();
    if !dead.is_empty() {
        return Err(Error::DeadState(dead));
    }
    Ok(SftGraph { alphabet: r, transitions: m, depth, nodes, edges, table })
}

impl SftGraph {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Edge weights as a cost on the nodes, negated for `Max`.
    pub fn cost(&self, sense: Sense) -> CostMatrix {
        let n = self.num_nodes();
        let mut w = vec![f64::INFINITY; n * n];
        for e in &self.edges {
            w[e.from * n + e.to] = match sense {
                Sense::Min => e.weight,
                Sense::Max => -e.weight,
            };
        }
        CostMatrix::from_fn(n, |x, y| w[x * n + y]).expect("finite weights")
    }

    /// The same potential viewed at depth `k + 1`.
    pub fn refine(&self) -> Result<SftGraph> {
        let r = self.alphabet;
        let table = (0..r.pow(self.depth as u32 + 2)).map(|i| self.table[i / r]).collect();
        build_sft(self.transitions.clone(), self.depth + 1, table)
    }
}

fn orient(sense: Sense, v: f64) -> f64 {
    match sense {
        Sense::Min => v,
        Sense::Max => -v,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ErgodicValue {
    pub value: f64,
    /// Optimal cycle as node indices.
    pub cycle: Vec<usize>,
    /// The periodic word the cycle spells.
    pub period_word: Vec<usize>,
}

/// Optimal mean cycle of the cylinder graph.
pub fn ergodic_value(g: &SftGraph, sense: Sense) -> Result<ErgodicValue> {
    let cm = mather_constant_cycle(&g.cost(sense))?;
    let value = orient(sense, cm.value()?);
    let period_word = cm.cycle.iter().map(|&v| g.nodes[v][0]).collect();
    Ok(ErgodicValue { value, cycle: cm.cycle, period_word })
}

#[derive(Clone, Debug, Serialize)]
pub struct HolonomicSolution {
    pub value: f64,
    /// Mass on each edge of the graph.
    pub measure: Vec<f64>,
    pub dual_value: f64,
    /// Maximizing (for `Min`) node function of the dual.
    pub dual_potential: Vec<f64>,
    pub gap: f64,
}

/// `sup_{f, t} t` subject to `t <= f(a_j) - f(b_j) + w_j` for every row `j`,
/// with `f` free. Returns `(t, f)`.
fn cut_dual(nodes: usize, rows: &[(usize, usize, f64)]) -> Result<(f64, Vec<f64>)> {
    // Variables: f⁺ (nodes), f⁻ (nodes), t⁺, t⁻, one slack per row.
    let nv = 2 * nodes + 2 + rows.len();
    let mut costs = vec![0.0; nv];
    costs[2 * nodes] = -1.0;
    costs[2 * nodes + 1] = 1.0;
    let mut lp = LinearProgram::new(costs);
    for (j, &(a, b, w)) in rows.iter().enumerate() {
        // t - f(a) + f(b) + s_j = w
        let mut terms = vec![(2 * nodes, 1.0), (2 * nodes + 1, -1.0), (2 * nodes + 2 + j, 1.0)];
        terms.extend([(a, -1.0), (nodes + a, 1.0), (b, 1.0), (nodes + b, -1.0)]);
        lp.add_sparse_equality(&terms, w)?;
    }
    let sol = lp.solve()?;
    let t = sol.x[2 * nodes] - sol.x[2 * nodes + 1];
    let f = (0..nodes).map(|v| sol.x[v] - sol.x[nodes + v]).collect();
    Ok((t, f))
}

/// Holonomic measures on the edges: flow balance at every node and unit mass.
pub fn holonomic_lp(g: &SftGraph, sense: Sense) -> Result<HolonomicSolution> {
    let n = g.num_nodes();
    let weights: Vec<f64> = g.edges.iter().map(|e| orient(sense, e.weight)).collect();
    let mut lp = LinearProgram::new(weights.clone());
    lp.add_sparse_equality(&(0..g.edges.len()).map(|j| (j, 1.0)).collect::<Vec<_>>(), 1.0)?;
    for v in 0..n {
        let mut terms = Vec::new();
        for (j, e) in g.edges.iter().enumerate() {
            if e.from == v {
                terms.push((j, 1.0));
            }
            if e.to == v {
                terms.push((j, -1.0));
            }
        }
        lp.add_sparse_equality(&terms, 0.0)?;
    }
    let sol = lp.solve()?;
    let rows: Vec<(usize, usize, f64)> =
        g.edges.iter().zip(&weights).map(|(e, &w)| (e.to, e.from, w)).collect();
    let (t, f) = cut_dual(n, &rows)?;
    let value = orient(sense, sol.objective);
    let dual_value = orient(sense, t);
    Ok(HolonomicSolution {
        value,
        measure: sol.x,
        dual_value,
        dual_potential: f,
        gap: (value - dual_value).abs(),
    })
}

/// For `Max` the identities hold with `A` replaced by `-A` and `c` by `-β`.
#[derive(Clone, Debug, Serialize)]
pub struct Subaction {
    pub c: f64,
    /// `h(w) = max_{w -> w'} {h(w') - A(e)} + c` where finite, `-inf` off the basin.
    pub h: Potential,
    /// `ψ(w') = min_{w -> w'} {ψ(w) + A(e)} - c` where finite.
    pub forward: Potential,
    /// Largest violation of the σ-form over finite nodes.
    pub sigma_residual: f64,
    /// Largest violation of the τ-form over finite nodes.
    pub tau_residual: f64,
}

/// Calibrated subaction and its forward counterpart, both certified by
/// substitution. Residuals are computed in units of the optimal cycle length
/// and vanish exactly for integer weights.
pub fn subaction(g: &SftGraph, sense: Sense) -> Result<Subaction> {
    let a = g.cost(sense);
    let n = a.dim();
    let s = scaled_solution(&a)?;
    let (len, total) = (s.len, s.total);
    let scaled = a.map_finite(|v| len * v);

    let th = backward_apply(&scaled, &s.h)?;
    let sigma_scaled = (0..n)
        .filter(|&x| s.h[x].is_finite())
        .map(|x| (th[x] + ExtReal::from_f64(total)).distance(s.h[x]))
        .fold(0.0, f64::max);

    let psi = &s.psi1;
    let tau_scaled = (0..n)
        .filter(|&y| psi[y].is_finite())
        .map(|y| {
            let best = ExtReal::min_of(
                (0..n)
                    .filter(|&x| scaled.get(x, y).is_finite() && psi[x].is_finite())
                    .map(|x| psi[x] + scaled.get(x, y)),
            );
            (best - ExtReal::from_f64(total)).distance(psi[y])
        })
        .fold(0.0, f64::max);

    let unscale = |u: &Potential| u.map(|v| if v.is_finite() { ExtReal::from_f64(v.value() / len) } else { v });
    let (h, forward) = (unscale(&s.h), unscale(psi));
    Ok(Subaction {
        c: orient(sense, total / len),
        h,
        forward,
        sigma_residual: sigma_scaled / len,
        tau_residual: tau_scaled / len,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct StochasticHolonomic {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    /// Words of length `k + 2` carrying the primal measure.
    pub words: Vec<Vec<usize>>,
    pub measure: Vec<f64>,
}

/// The relaxed holonomic LP over words `w = (y, x_0, ..., x_k)`: the law of
/// `w[..k]` (the `k`-prefix of `τ_y x`) must equal the law of `w[2..]` (the
/// `k`-prefix of `σ x`). The objective charges `A(w[..k + 1])`.
pub fn stochastic_holonomic_lp(g: &SftGraph) -> Result<StochasticHolonomic> {
    let k = g.depth;
    let r = g.alphabet;
    let words = admissible_words(&g.transitions, k + 2);
    let node = |w: &[usize]| g.nodes.binary_search_by(|v| v.as_slice().cmp(w)).expect("admissible k-word");
    let costs: Vec<f64> = words.iter().map(|w| g.table[word_index(r, &w[..k + 1])]).collect();
    let mut lp = LinearProgram::new(costs.clone());
    lp.add_sparse_equality(&(0..words.len()).map(|j| (j, 1.0)).collect::<Vec<_>>(), 1.0)?;
    let n = g.num_nodes();
    let mut balance: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut rows = Vec::with_capacity(words.len());
    for (j, w) in words.iter().enumerate() {
        let (a, b) = (node(&w[..k]), node(&w[2..]));
        balance[a].push((j, 1.0));
        balance[b].push((j, -1.0));
        rows.push((a, b, costs[j]));
    }
    for terms in &balance {
        lp.add_sparse_equality(terms, 0.0)?;
    }
    let sol = lp.solve()?;
    let (dual, _) = cut_dual(n, &rows)?;
    Ok(StochasticHolonomic {
        primal: sol.objective,
        dual,
        gap: (sol.objective - dual).abs(),
        words,
        measure: sol.x,
    })
}
