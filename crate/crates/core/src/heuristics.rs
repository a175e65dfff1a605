//! Admissible heuristic tables h(a, c, d): a lower bound on the minimal cost
//! of the subtree rooted at child `c` once `a` takes value `d`.
//!
//! Tables are context-independent. The weight of the weighted-heuristics
//! variant is applied by the agent when it initializes its bounds, so one
//! table serves every variant.

use std::collections::BTreeMap;

use crate::cost::Cost;
use crate::error::{Error, Result};
use crate::model::Problem;
use crate::pseudotree::PseudoTree;

#[derive(Clone, Debug, PartialEq)]
pub struct HeuristicTable {
    /// (parent, child) -> one value per parent domain value
    values: BTreeMap<(usize, usize), Vec<Cost>>,
}

impl HeuristicTable {
    /// All entries zero.
    pub fn zero(problem: &Problem, tree: &PseudoTree) -> Self {
        let mut values = BTreeMap::new();
        for a in 0..problem.num_agents() {
            for &c in tree.children(a) {
                values.insert((a, c), vec![Cost::ZERO; problem.domain_size(a)]);
            }
        }
        HeuristicTable { values }
    }

    /// Dynamic programming over tree edges only. Backedge constraints are
    /// dropped from the problem, which can only lower the optimum since all
    /// costs are non-negative:
    ///
    /// h(a,c,d) = min_{d'} [ f_{a,c}(d,d') + Σ_{c' ∈ C(c)} h(c,c',d') ]
    pub fn dp2(problem: &Problem, tree: &PseudoTree) -> Self {
        let mut table = HeuristicTable::zero(problem, tree);
        let mut order = tree.top_down_order();
        order.reverse();
        // scratch counter; preprocessing is not part of the NCCC metric
        let mut checks = 0u64;
        for c in order {
            let Some(a) = tree.parent(c) else { continue };
            let below: Vec<Cost> = (0..problem.domain_size(c))
                .map(|dc| tree.children(c).iter().map(|&gc| table.get(c, gc, dc)).sum())
                .collect();
            let row: Vec<Cost> = (0..problem.domain_size(a))
                .map(|da| {
                    (0..problem.domain_size(c))
                        .map(|dc| {
                            problem.constraint_cost(a, c, da, dc, &mut checks).expect("indices in range") + below[dc]
                        })
                        .min()
                        .unwrap_or(Cost::ZERO)
                })
                .collect();
            table.values.insert((a, c), row);
        }
        table
    }

    /// Multiplies every entry by `factor` and rounds down.
    pub fn scale(&self, factor: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&factor) {
            return Err(Error::InvalidParameter(format!("heuristic scale {factor} is outside [0, 1]")));
        }
        let values = self
            .values
            .iter()
            .map(|(&k, row)| (k, row.iter().map(|h| h.scale(factor).floor()).collect()))
            .collect();
        Ok(HeuristicTable { values })
    }

    /// h(a, c, d); zero for pairs that are not tree edges.
    pub fn get(&self, a: usize, c: usize, d: usize) -> Cost {
        self.values.get(&(a, c)).map_or(Cost::ZERO, |row| row[d])
    }

    /// Overrides the row for tree edge `(a, c)`.
    pub fn set(&mut self, a: usize, c: usize, row: Vec<Cost>) -> Result<()> {
        let slot = self
            .values
            .get_mut(&(a, c))
            .ok_or_else(|| Error::InvalidHeuristic(format!("({a},{c}) is not a tree edge")))?;
        if row.len() != slot.len() {
            return Err(Error::InvalidHeuristic(format!(
                "({a},{c}) needs {} values, got {}",
                slot.len(),
                row.len()
            )));
        }
        if let Some(bad) = row.iter().find(|h| !h.is_finite() || h.value() < 0.0) {
            return Err(Error::InvalidHeuristic(format!("({a},{c}) has invalid value {bad}")));
        }
        *slot = row;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &[Cost])> {
        self.values.iter().map(|(&(a, c), row)| (a, c, row.as_slice()))
    }
}
