//! Problem representation: agents with finite ordered domains and binary
//! constraints stored as dense cost tables.
//!
//! Values are always handled as domain indices. The integer labels in
//! [`Problem::domain`] only matter for file round-trips and display.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::context::Context;
use crate::cost::Cost;
use crate::error::{Error, Result};
use crate::pseudotree::PseudoTree;

/// Sentinel used by the generators for "cannot happen at the same time".
/// It is an ordinary finite cost.
pub const INFEASIBLE: u32 = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub a: usize,
    pub b: usize,
    /// Row-indexed by `a`'s value index, column-indexed by `b`'s.
    pub costs: Vec<Vec<Cost>>,
}

impl Constraint {
    pub fn new(a: usize, b: usize, costs: Vec<Vec<Cost>>) -> Self {
        Constraint { a, b, costs }
    }

    pub fn from_table<T: Copy + Into<Cost>>(a: usize, b: usize, table: &[&[T]]) -> Self {
        let costs = table.iter().map(|row| row.iter().map(|&c| c.into()).collect()).collect();
        Constraint { a, b, costs }
    }

    /// Cost for `(x, y)` where `x` is the value of agent `first`.
    fn oriented(&self, first: usize, x: usize, y: usize) -> Cost {
        if first == self.a {
            self.costs[x][y]
        } else {
            self.costs[y][x]
        }
    }

    pub fn other(&self, agent: usize) -> usize {
        if agent == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// A complete assignment: one value index per agent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(pub Vec<usize>);

impl Assignment {
    pub fn values(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for Assignment {
    type Output = usize;

    fn index(&self, agent: usize) -> &usize {
        &self.0[agent]
    }
}

#[derive(Clone, Debug)]
pub struct Problem {
    domains: Vec<Vec<i64>>,
    val_init: Vec<usize>,
    constraints: Vec<Constraint>,
    /// (min, max) agent pair -> index into `constraints`
    by_pair: HashMap<(usize, usize), usize>,
    neighbors: Vec<Vec<usize>>,
}

impl Problem {
    /// Validates every invariant of the model: non-empty domains, in-range
    /// initial values, at most one constraint per pair, table shapes matching
    /// the domains and finite non-negative costs.
    pub fn new(domains: Vec<Vec<i64>>, val_init: Option<Vec<usize>>, constraints: Vec<Constraint>) -> Result<Self> {
        let n = domains.len();
        for (agent, dom) in domains.iter().enumerate() {
            if dom.is_empty() {
                return Err(Error::EmptyDomain { agent });
            }
        }
        let val_init = match val_init {
            Some(v) => {
                if v.len() != n {
                    return Err(Error::Format(format!("val_init has {} entries, expected {n}", v.len())));
                }
                for (agent, &value) in v.iter().enumerate() {
                    if value >= domains[agent].len() {
                        return Err(Error::OutOfDomain { agent, value, size: domains[agent].len() });
                    }
                }
                v
            }
            None => vec![0; n],
        };

        let mut by_pair = HashMap::new();
        let mut neighbors = vec![Vec::new(); n];
        for (idx, c) in constraints.iter().enumerate() {
            for agent in [c.a, c.b] {
                if agent >= n {
                    return Err(Error::UnknownAgent { agent, agents: n });
                }
            }
            if c.a == c.b {
                return Err(Error::SelfConstraint(c.a));
            }
            let key = (c.a.min(c.b), c.a.max(c.b));
            if by_pair.insert(key, idx).is_some() {
                return Err(Error::DuplicateConstraint(key.0, key.1));
            }
            let (rows, cols) = (domains[c.a].len(), domains[c.b].len());
            if c.costs.len() != rows || c.costs.iter().any(|r| r.len() != cols) {
                return Err(Error::BadCostTable {
                    a: c.a,
                    b: c.b,
                    reason: format!("expected a {rows}x{cols} table"),
                });
            }
            if let Some(bad) = c.costs.iter().flatten().find(|x| !x.is_finite() || x.value() < 0.0) {
                return Err(Error::BadCostTable {
                    a: c.a,
                    b: c.b,
                    reason: format!("cost {bad} is not a finite non-negative number"),
                });
            }
            neighbors[c.a].push(c.b);
            neighbors[c.b].push(c.a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Problem { domains, val_init, constraints, by_pair, neighbors })
    }

    /// Convenience constructor for domains `0..size` with default initial values.
    pub fn with_domain_sizes(sizes: &[usize], constraints: Vec<Constraint>) -> Result<Self> {
        let domains = sizes.iter().map(|&s| (0..s as i64).collect()).collect();
        Problem::new(domains, None, constraints)
    }

    pub fn num_agents(&self) -> usize {
        self.domains.len()
    }

    pub fn domain(&self, agent: usize) -> &[i64] {
        &self.domains[agent]
    }

    pub fn domains(&self) -> &[Vec<i64>] {
        &self.domains
    }

    pub fn domain_size(&self, agent: usize) -> usize {
        self.domains[agent].len()
    }

    pub fn val_init(&self, agent: usize) -> usize {
        self.val_init[agent]
    }

    pub fn val_inits(&self) -> &[usize] {
        &self.val_init
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint_between(&self, a: usize, b: usize) -> Option<&Constraint> {
        self.by_pair.get(&(a.min(b), a.max(b))).map(|&i| &self.constraints[i])
    }

    pub fn is_constrained(&self, a: usize, b: usize) -> bool {
        self.by_pair.contains_key(&(a.min(b), a.max(b)))
    }

    pub fn neighbors(&self, agent: usize) -> &[usize] {
        &self.neighbors[agent]
    }

    pub fn degree(&self, agent: usize) -> usize {
        self.neighbors[agent].len()
    }

    /// Number of complete assignments, as a float to survive overflow.
    pub fn search_space_size(&self) -> f64 {
        self.domains.iter().map(|d| d.len() as f64).product()
    }

    fn check_value(&self, agent: usize, value: usize) -> Result<()> {
        let n = self.num_agents();
        if agent >= n {
            return Err(Error::UnknownAgent { agent, agents: n });
        }
        let size = self.domains[agent].len();
        if value >= size {
            return Err(Error::OutOfDomain { agent, value, size });
        }
        Ok(())
    }

    /// Cost of the constraint between `a` and `b` at `(da, db)`, or zero when
    /// the pair is unconstrained. Each existing constraint evaluated counts as
    /// one constraint check.
    pub fn constraint_cost(&self, a: usize, b: usize, da: usize, db: usize, checks: &mut u64) -> Result<Cost> {
        self.check_value(a, da)?;
        self.check_value(b, db)?;
        match self.constraint_between(a, b) {
            Some(c) => {
                *checks += 1;
                Ok(c.oriented(a, da, db))
            }
            None => Ok(Cost::ZERO),
        }
    }

    /// Sum of all constraint costs under a complete assignment.
    pub fn solution_cost(&self, asg: &Assignment) -> Result<Cost> {
        if asg.len() != self.num_agents() {
            return Err(Error::IncompleteAssignment { got: asg.len(), expected: self.num_agents() });
        }
        for (agent, &v) in asg.0.iter().enumerate() {
            self.check_value(agent, v)?;
        }
        Ok(self.constraints.iter().map(|c| c.costs[asg[c.a]][asg[c.b]]).sum())
    }
}

/// δ: cost of the constraints between `agent` (taking value `d`) and its
/// parent/pseudo-parents, evaluated at their values in `ctx`. Performs exactly
/// |CP(agent)| constraint checks.
pub fn delta_cost(
    problem: &Problem,
    tree: &PseudoTree,
    agent: usize,
    ctx: &Context,
    d: usize,
    checks: &mut u64,
) -> Result<Cost> {
    let mut total = Cost::ZERO;
    for &p in tree.cp(agent) {
        let dp = ctx.value_of(p).ok_or(Error::MissingContextEntry { agent, missing: p })?;
        total += problem.constraint_cost(agent, p, d, dp, checks)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::ContextEntry;
    use crate::fixtures;

    #[test]
    fn fig1_constraint_cost_at_one_one() {
        let p = fixtures::example_problem();
        let mut checks = 0;
        assert_eq!(p.constraint_cost(0, 1, 1, 1, &mut checks).unwrap(), Cost::from(3));
        assert_eq!(checks, 1);
        // orientation does not matter
        assert_eq!(p.constraint_cost(3, 1, 1, 1, &mut checks).unwrap(), Cost::from(3));
    }

    #[test]
    fn unconstrained_pair_costs_nothing_and_is_not_a_check() {
        let p = fixtures::example_problem();
        let mut checks = 0;
        assert_eq!(p.constraint_cost(0, 3, 1, 0, &mut checks).unwrap(), Cost::ZERO);
        assert_eq!(checks, 0);
    }

    #[test]
    fn out_of_domain_is_an_error() {
        let p = fixtures::example_problem();
        let mut checks = 0;
        assert!(matches!(
            p.constraint_cost(0, 1, 2, 0, &mut checks),
            Err(Error::OutOfDomain { agent: 0, value: 2, size: 2 })
        ));
    }

    #[test]
    fn infeasible_sentinel_is_finite() {
        let c = Constraint::from_table(0, 1, &[&[INFEASIBLE, 0], &[0, INFEASIBLE]]);
        let p = Problem::with_domain_sizes(&[2, 2], vec![c]).unwrap();
        let mut checks = 0;
        let cost = p.constraint_cost(0, 1, 1, 1, &mut checks).unwrap();
        assert_eq!(cost, Cost::from(1_000_000));
        assert!(cost.is_finite());
    }

    #[test]
    fn fig1_delta_costs() {
        let p = fixtures::example_problem();
        let t = fixtures::example_tree(&p);
        let mut checks = 0;
        let ctx3: Context = [ContextEntry::new(0, 0, 0), ContextEntry::new(1, 0, 0)].into_iter().collect();
        assert_eq!(delta_cost(&p, &t, 2, &ctx3, 0, &mut checks).unwrap(), Cost::from(10));
        assert_eq!(delta_cost(&p, &t, 2, &ctx3, 1, &mut checks).unwrap(), Cost::from(14));
        assert_eq!(checks, 4);
        let ctx4: Context = [ContextEntry::new(1, 0, 0)].into_iter().collect();
        assert_eq!(delta_cost(&p, &t, 3, &ctx4, 1, &mut checks).unwrap(), Cost::from(8));
        assert_eq!(delta_cost(&p, &t, 0, &Context::new(), 1, &mut checks).unwrap(), Cost::ZERO);
    }

    #[test]
    fn delta_cost_requires_cp_entries() {
        let p = fixtures::example_problem();
        let t = fixtures::example_tree(&p);
        let ctx: Context = [ContextEntry::new(1, 0, 0)].into_iter().collect();
        let mut checks = 0;
        assert!(matches!(
            delta_cost(&p, &t, 2, &ctx, 0, &mut checks),
            Err(Error::MissingContextEntry { agent: 2, missing: 0 })
        ));
    }

    #[test]
    fn fig1_solution_costs() {
        let p = fixtures::example_problem();
        assert_eq!(p.solution_cost(&Assignment(vec![1, 1, 1, 1])).unwrap(), Cost::from(12));
        // f12(0,0) + f13(0,0) + f23(0,0) + f24(0,0) = 5 + 5 + 5 + 3
        assert_eq!(p.solution_cost(&Assignment(vec![0, 0, 0, 0])).unwrap(), Cost::from(18));
    }

    #[test]
    fn solution_cost_rejects_incomplete_assignment() {
        let p = fixtures::example_problem();
        assert!(matches!(
            p.solution_cost(&Assignment(vec![1, 1])),
            Err(Error::IncompleteAssignment { got: 2, expected: 4 })
        ));
    }

    #[test]
    fn empty_constraint_problem_costs_zero() {
        let p = Problem::with_domain_sizes(&[3, 3, 2], vec![]).unwrap();
        assert_eq!(p.solution_cost(&Assignment(vec![2, 1, 0])).unwrap(), Cost::ZERO);
    }

    #[test]
    fn model_invariants_are_enforced() {
        let dup = vec![
            Constraint::from_table(0, 1, &[&[1u32, 2], &[3, 4]]),
            Constraint::from_table(1, 0, &[&[1u32, 2], &[3, 4]]),
        ];
        assert!(matches!(Problem::with_domain_sizes(&[2, 2], dup), Err(Error::DuplicateConstraint(0, 1))));
        let selfc = vec![Constraint::from_table(1, 1, &[&[1u32, 2], &[3, 4]])];
        assert!(matches!(Problem::with_domain_sizes(&[2, 2], selfc), Err(Error::SelfConstraint(1))));
        let shape = vec![Constraint::from_table(0, 1, &[&[1u32, 2]])];
        assert!(matches!(Problem::with_domain_sizes(&[2, 2], shape), Err(Error::BadCostTable { .. })));
        let neg = vec![Constraint::from_table(0, 1, &[&[1i32, -2], &[3, 4]])];
        assert!(matches!(Problem::with_domain_sizes(&[2, 2], neg), Err(Error::BadCostTable { .. })));
        assert!(matches!(Problem::new(vec![vec![0, 1]], Some(vec![2]), vec![]), Err(Error::OutOfDomain { .. })));
    }
}
