//! Exact reference values: the minimal cost of a whole problem and the gamma
//! costs of subtrees under a fixed context.
//!
//! ```text
//! γ(a, X, d) = δ(a, X, d) + Σ_{c ∈ C(a)} γ(c, X ∪ {(a,d)})
//! γ(a, X)    = min_d γ(a, X, d)
//! ```
//!
//! [`GammaOracle`] evaluates this by recursion over the pseudo-tree, with a
//! cache keyed by the SCP values. [`gamma_flat`] enumerates every assignment
//! of the subtree instead and shares no code with the recursion.

use std::collections::HashMap;

use crate::context::{Context, ContextEntry};
use crate::cost::Cost;
use crate::error::{Error, Result};
use crate::model::{delta_cost, Assignment, Problem};
use crate::pseudotree::PseudoTree;

pub const DEFAULT_SEARCH_CAP: f64 = 1e8;

pub struct GammaOracle<'a> {
    problem: &'a Problem,
    tree: &'a PseudoTree,
    cache: HashMap<(usize, Vec<usize>, usize), Cost>,
}

impl<'a> GammaOracle<'a> {
    pub fn new(problem: &'a Problem, tree: &'a PseudoTree) -> Self {
        GammaOracle { problem, tree, cache: HashMap::new() }
    }

    /// γ(a, X, d). `ctx` must cover SCP(a); other entries are ignored.
    pub fn gamma_value(&mut self, agent: usize, ctx: &Context, d: usize) -> Result<Cost> {
        let key_values = self
            .tree
            .scp(agent)
            .iter()
            .map(|&p| ctx.value_of(p).ok_or(Error::MissingContextEntry { agent, missing: p }))
            .collect::<Result<Vec<_>>>()?;
        let key = (agent, key_values, d);
        if let Some(&g) = self.cache.get(&key) {
            return Ok(g);
        }
        let mut scratch = 0;
        let mut total = delta_cost(self.problem, self.tree, agent, ctx, d, &mut scratch)?;
        let mut below = ctx.restricted_to(self.tree.scp(agent));
        below.insert(ContextEntry::new(agent, d, 0));
        for &c in self.tree.children(agent) {
            total += self.gamma(c, &below)?;
        }
        self.cache.insert(key, total);
        Ok(total)
    }

    /// γ(a, X) = min over a's values.
    pub fn gamma(&mut self, agent: usize, ctx: &Context) -> Result<Cost> {
        let mut best = Cost::INFINITY;
        for d in 0..self.problem.domain_size(agent) {
            best = best.min(self.gamma_value(agent, ctx, d)?);
        }
        Ok(best)
    }

    /// γ at the root with the empty context: the optimal solution cost.
    pub fn optimum(&mut self) -> Result<Cost> {
        self.gamma(self.tree.root(), &Context::new())
    }
}

/// γ by enumerating every assignment of `agent`'s subtree (with `agent`
/// pinned to `d` when given). Exponential; meant for cross-checking.
pub fn gamma_flat(problem: &Problem, tree: &PseudoTree, agent: usize, ctx: &Context, d: Option<usize>) -> Result<Cost> {
    let sub = tree.subtree(agent);
    let sizes: Vec<usize> = sub
        .iter()
        .map(|&b| if b == agent && d.is_some() { 1 } else { problem.domain_size(b) })
        .collect();
    let outside: Vec<(usize, usize)> = ctx.iter().filter(|e| !sub.contains(&e.agent)).map(|e| (e.agent, e.value)).collect();
    let mut idx = vec![0usize; sub.len()];
    let mut best = Cost::INFINITY;
    let mut scratch = 0;
    loop {
        let value_of = |b: usize| -> Option<usize> {
            if let Some(k) = sub.iter().position(|&x| x == b) {
                Some(if b == agent { d.unwrap_or(idx[k]) } else { idx[k] })
            } else {
                outside.iter().find(|&&(x, _)| x == b).map(|&(_, v)| v)
            }
        };
        // every constraint with at least one endpoint inside the subtree
        let mut cost = Cost::ZERO;
        for c in problem.constraints() {
            let (ia, ib) = (sub.contains(&c.a), sub.contains(&c.b));
            if !ia && !ib {
                continue;
            }
            let va = value_of(c.a).ok_or(Error::MissingContextEntry { agent, missing: c.a })?;
            let vb = value_of(c.b).ok_or(Error::MissingContextEntry { agent, missing: c.b })?;
            cost += problem.constraint_cost(c.a, c.b, va, vb, &mut scratch)?;
        }
        best = best.min(cost);
        if !advance(&mut idx, &sizes) {
            break;
        }
    }
    Ok(best)
}

/// Odometer increment, last position fastest. False once it wraps.
fn advance(idx: &mut [usize], sizes: &[usize]) -> bool {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < sizes[k] {
            return true;
        }
        idx[k] = 0;
    }
    false
}

/// Exhaustive minimum over all complete assignments. Ties go to the
/// lexicographically smallest assignment.
pub fn exact_solve(problem: &Problem) -> Result<(Cost, Assignment)> {
    exact_solve_with_cap(problem, DEFAULT_SEARCH_CAP)
}

pub fn exact_solve_with_cap(problem: &Problem, cap: f64) -> Result<(Cost, Assignment)> {
    let size = problem.search_space_size();
    if size > cap {
        return Err(Error::SearchSpaceTooLarge { size, cap });
    }
    let n = problem.num_agents();
    let sizes: Vec<usize> = (0..n).map(|a| problem.domain_size(a)).collect();
    let mut idx = vec![0usize; n];
    let mut best = (Cost::INFINITY, Assignment(idx.clone()));
    let mut scratch = 0;
    loop {
        let mut cost = Cost::ZERO;
        for c in problem.constraints() {
            cost += problem.constraint_cost(c.a, c.b, idx[c.a], idx[c.b], &mut scratch)?;
        }
        if cost < best.0 {
            best = (cost, Assignment(idx.clone()));
        }
        if !advance(&mut idx, &sizes) {
            break;
        }
    }
    Ok(best)
}
